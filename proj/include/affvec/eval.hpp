#pragma once

// Word-similarity evaluation: benchmark loading, Spearman correlation, and
// cosine scoring in the sparse space, a truncated-SVD space, or the
// concatenation of the L2-normalized sparse and dense vectors.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "affvec/association.hpp"
#include "affvec/core.hpp"
#include "affvec/inference.hpp"

namespace affvec {

struct BenchmarkPair {
    std::string w1;
    std::string w2;
    double gold;
};

inline std::vector<BenchmarkPair> load_benchmark(std::istream& in) {
    std::vector<BenchmarkPair> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto f = split(line, '\t');
        std::optional<double> gold = f.size() == 3 ? parse_double(f[2]) : std::nullopt;
        if (!gold || !std::isfinite(*gold) || f[0].empty() || f[1].empty()) {
            throw FormatError("benchmark: malformed line " + std::to_string(n));
        }
        out.push_back({to_lower(f[0]), to_lower(f[1]), *gold});
    }
    return out;
}

inline std::vector<BenchmarkPair> load_benchmark(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read benchmark " + path);
    return load_benchmark(in);
}

/// 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw UndefinedCorrelationError("spearman: length mismatch");
    if (xs.size() < 2) throw UndefinedCorrelationError("spearman: fewer than two points");
    auto rx = average_ranks(xs), ry = average_ranks(ys);
    double n = static_cast<double>(rx.size());
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("spearman: constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// SVD

struct SvdEmbedding {
    Eigen::MatrixXd word_vectors;  // |V| x k, U_k Σ_k
    Eigen::MatrixXd right;         // |R| x k, V_k
    Eigen::VectorXd singular_values;

    /// Coordinates of an arbitrary sparse row in the reduced space (row · V_k).
    Eigen::VectorXd project(SparseRow row) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(right.cols());
        for (std::size_t i = 0; i < row.size(); ++i) out += row.values[i] * right.row(row.roles[i]).transpose();
        return out;
    }
};

inline Eigen::MatrixXd to_dense(const SparseRoleMatrix& m) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.rows()),
                                              static_cast<Eigen::Index>(m.cols()));
    for (const auto& t : m.triples()) d(t.word, t.role) = t.value;
    return d;
}

/// Rank-k truncated SVD. Each right singular vector is oriented so that its
/// largest-magnitude component is positive.
inline SvdEmbedding svd_reduce(const SparseRoleMatrix& m, std::size_t k) {
    std::size_t max_rank = std::min(m.rows(), m.cols());
    if (k < 1 || k > max_rank) {
        throw ContractError("svd rank " + std::to_string(k) + " outside [1, " +
                            std::to_string(max_rank) + "]");
    }
    Eigen::MatrixXd dense = to_dense(m);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
    auto kk = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd u = svd.matrixU().leftCols(kk);
    Eigen::MatrixXd v = svd.matrixV().leftCols(kk);
    for (Eigen::Index j = 0; j < kk; ++j) {
        Eigen::Index arg = 0;
        v.col(j).cwiseAbs().maxCoeff(&arg);
        if (v(arg, j) < 0.0) {
            v.col(j) *= -1.0;
            u.col(j) *= -1.0;
        }
    }
    Eigen::VectorXd s = svd.singularValues().head(kk);
    return {u * s.asDiagonal(), v, s};
}

// ---------------------------------------------------------------------------
// evaluate

enum class EvalMode { sparse, svd, concat };

/// Relative norm below which a reduced vector counts as zero.
inline constexpr double kSvdDegenerate = 1e-10;
/// SVD-space cosines are snapped to this grid before ranking so that pairs
/// tied in exact arithmetic stay tied despite decomposition noise.
inline constexpr double kSvdCosineGrid = 1e-9;

inline std::string_view to_string(EvalMode m) {
    switch (m) {
        case EvalMode::sparse: return "sparse";
        case EvalMode::svd: return "svd";
        case EvalMode::concat: return "concat";
    }
    return "?";
}

inline EvalMode parse_eval_mode(std::string_view s) {
    if (s == "sparse") return EvalMode::sparse;
    if (s == "svd") return EvalMode::svd;
    if (s == "concat") return EvalMode::concat;
    throw FormatError("unknown eval mode '" + std::string(s) + "'");
}

struct EvalReport {
    std::optional<double> spearman;
    std::size_t pairs_used = 0;
    std::size_t oov_failures = 0;
    EvalMode mode = EvalMode::sparse;
};

/// Raised when too few pairs survive (or scores are constant); carries the
/// accounting gathered so far.
struct UndefinedEvalError : UndefinedCorrelationError {
    UndefinedEvalError(const std::string& what, EvalReport r)
        : UndefinedCorrelationError(what), report(r) {}
    EvalReport report;
};

struct EvalOptions {
    EvalMode mode = EvalMode::sparse;
    std::optional<std::size_t> svd_rank;
    bool synthesize_oov = false;
};

/// Cosine of [x/|x| ; y/|y|] and [u/|u| ; v/|v|], computed on the concatenated
/// vectors.
inline double concat_cosine(SparseRow x, std::span<const double> y, SparseRow u,
                            std::span<const double> v) {
    double nx = sparse_norm(x), nu = sparse_norm(u);
    double ny = 0.0, nv = 0.0;
    for (double t : y) ny += t * t;
    for (double t : v) nv += t * t;
    ny = std::sqrt(ny);
    nv = std::sqrt(nv);
    double dot = sparse_dot(x, u) / (nx * nu);
    double sq1 = 0.0, sq2 = 0.0;
    for (double t : x.values) sq1 += (t / nx) * (t / nx);
    for (double t : u.values) sq2 += (t / nu) * (t / nu);
    for (std::size_t i = 0; i < y.size(); ++i) {
        dot += (y[i] / ny) * (v[i] / nv);
        sq1 += (y[i] / ny) * (y[i] / ny);
        sq2 += (v[i] / nv) * (v[i] / nv);
    }
    return dot / (std::sqrt(sq1) * std::sqrt(sq2));
}

/// Spearman between gold scores and model cosines. A pair is an OOV failure
/// when either word has no usable vector in the evaluated space.
inline EvalReport evaluate(const QueryModel& m, const DenseEmbeddings* a,
                           std::span<const BenchmarkPair> pairs, const EvalOptions& opt) {
    if (opt.mode == EvalMode::concat && !a) throw ContractError("concat mode requires embeddings");
    if (opt.mode == EvalMode::svd && !opt.svd_rank) throw ContractError("svd mode requires a rank");

    std::optional<SvdEmbedding> svd;
    if (opt.mode == EvalMode::svd) svd = svd_reduce(m.matrix(), *opt.svd_rank);

    auto sparse_of = [&](const std::string& w) -> std::optional<OwnedRow> {
        if (auto id = m.vocab().find(w)) {
            OwnedRow r = m.matrix().owned_row(*id);
            if (r.roles.empty()) return std::nullopt;
            return r;
        }
        if (!opt.synthesize_oov || !m.has_row(w)) return std::nullopt;
        try {
            OwnedRow r = m.resolve(w);
            if (r.roles.empty()) return std::nullopt;
            return r;
        } catch (const LookupError&) {
            return std::nullopt;
        }
    };

    EvalReport report;
    report.mode = opt.mode;
    std::vector<double> gold, model;
    for (const auto& p : pairs) {
        auto r1 = sparse_of(p.w1);
        auto r2 = sparse_of(p.w2);
        if (!r1 || !r2) {
            ++report.oov_failures;
            continue;
        }
        double score = 0.0;
        if (opt.mode == EvalMode::sparse) {
            score = sparse_cosine(r1->view(), r2->view());
        } else if (opt.mode == EvalMode::svd) {
            auto dense_of = [&](const std::string& w, const OwnedRow& r) -> Eigen::VectorXd {
                if (auto id = m.vocab().find(w)) return svd->word_vectors.row(*id).transpose();
                return svd->project(r.view());
            };
            Eigen::VectorXd v1 = dense_of(p.w1, *r1), v2 = dense_of(p.w2, *r2);
            // A row orthogonal to the top-k subspace has no direction there.
            if (v1.norm() <= kSvdDegenerate * sparse_norm(r1->view()) ||
                v2.norm() <= kSvdDegenerate * sparse_norm(r2->view())) {
                ++report.oov_failures;
                continue;
            }
            score = v1.dot(v2) / (v1.norm() * v2.norm());
            score = std::nearbyint(score / kSvdCosineGrid) * kSvdCosineGrid;
        } else {
            auto i1 = a->find(p.w1), i2 = a->find(p.w2);
            if (!i1 || !i2) {
                ++report.oov_failures;
                continue;
            }
            score = concat_cosine(r1->view(), a->row(*i1), r2->view(), a->row(*i2));
        }
        gold.push_back(p.gold);
        model.push_back(score);
        ++report.pairs_used;
    }
    try {
        report.spearman = spearman(gold, model);
    } catch (const UndefinedCorrelationError& e) {
        throw UndefinedEvalError(e.what(), report);
    }
    return report;
}

}  // namespace affvec

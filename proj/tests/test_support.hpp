#pragma once

// Fixture paths, random toy generators and dense brute-force references used
// by the unit suites and the acceptance runner. Nothing here calls into the
// library's numeric code; the references are written from the definitions.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "affvec/affvec.hpp"

namespace affvec::testing {

namespace fs = std::filesystem;

inline std::string data_path(const std::string& name) {
    return std::string(AFFVEC_TEST_DATA) + "/" + name;
}

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("affvec-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

using Dense = std::vector<std::vector<double>>;

inline Dense dense_of(const SparseRoleMatrix& m) {
    Dense d(m.rows(), std::vector<double>(m.cols(), 0.0));
    for (const auto& t : m.triples()) d[t.word][t.role] = t.value;
    return d;
}

inline SparseRoleMatrix sparse_of(const Dense& d, std::size_t cols, Stage stage) {
    std::vector<Triple> t;
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (d[i][j] != 0.0) t.push_back({static_cast<WordId>(i), static_cast<RoleId>(j), d[i][j]});
        }
    }
    return SparseRoleMatrix::from_triples(d.size(), cols, stage, t);
}

inline double max_abs_diff(const Dense& a, const Dense& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a[i].size(); ++j) worst = std::max(worst, std::abs(a[i][j] - b[i][j]));
    }
    return worst;
}

inline std::vector<double> dense_row(const OwnedRow& r, std::size_t cols) {
    std::vector<double> out(cols, 0.0);
    for (std::size_t i = 0; i < r.roles.size(); ++i) out[r.roles[i]] = r.values[i];
    return out;
}

/// Reads `i\tj\tvalue` lines as written by the Python reference.
inline std::map<std::pair<std::size_t, std::size_t>, double> read_oracle_matrix(const std::string& name) {
    std::map<std::pair<std::size_t, std::size_t>, double> out;
    std::ifstream in(data_path("oracle/" + name));
    std::size_t i = 0, j = 0;
    double v = 0.0;
    while (in >> i >> j >> v) out[{i, j}] = v;
    return out;
}

// ---------------------------------------------------------------------------
// Random toys

inline const std::vector<std::string>& toy_labels() {
    static const std::vector<std::string> labels = {"ARG0", "ARG1", "ARG2", "ARGM-LOC"};
    return labels;
}

struct ToyCounts {
    Vocabulary vocab;
    RoleIndex roles;
    SparseRoleMatrix counts;
    Dense w;
    std::vector<std::string> label_of;  // per column
};

/// Random W with |V| <= max_v and |R| <= max_r. With `one_label`, every role
/// shares the same argument label.
inline ToyCounts random_counts(std::mt19937_64& rng, std::size_t max_v = 20, std::size_t max_r = 10,
                               bool one_label = false) {
    std::uniform_int_distribution<std::size_t> nv_d(1, max_v), nr_d(1, max_r);
    std::uniform_int_distribution<int> label_d(0, static_cast<int>(toy_labels().size()) - 1);
    std::uniform_int_distribution<int> count_d(1, 20);
    std::bernoulli_distribution fill(0.4);
    std::size_t nv = nv_d(rng), nr = nr_d(rng);

    ToyCounts t;
    t.w.assign(nv, std::vector<double>(nr, 0.0));
    for (auto& row : t.w) {
        for (auto& x : row) x = fill(rng) ? count_d(rng) : 0.0;
    }
    std::string fixed = toy_labels()[static_cast<std::size_t>(label_d(rng))];
    for (std::size_t j = 0; j < nr; ++j) {
        t.label_of.push_back(one_label ? fixed : toy_labels()[static_cast<std::size_t>(label_d(rng))]);
        double mass = 0.0;
        for (std::size_t i = 0; i < nv; ++i) mass += t.w[i][j];
        t.roles.add(make_role("p" + std::to_string(j), t.label_of[j]), static_cast<std::uint64_t>(mass));
    }
    for (std::size_t i = 0; i < nv; ++i) {
        double mass = 0.0;
        for (double x : t.w[i]) mass += x;
        t.vocab.add("w" + std::to_string(i), static_cast<std::uint64_t>(mass));
    }
    t.counts = sparse_of(t.w, nr, Stage::counts);
    return t;
}

/// PPMI from probabilities, segment by segment.
inline Dense dense_ppmi(const Dense& w, const std::vector<std::string>& label_of, bool per_arg,
                        double (*log_fn)(double) = [](double x) { return std::log(x); }) {
    std::size_t nv = w.size(), nr = label_of.size();
    Dense out(nv, std::vector<double>(nr, 0.0));
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t j = 0; j < nr; ++j) groups[per_arg ? label_of[j] : "*"].push_back(j);
    for (const auto& [label, cols] : groups) {
        double total = 0.0;
        for (std::size_t i = 0; i < nv; ++i) {
            for (auto j : cols) total += w[i][j];
        }
        if (total == 0.0) continue;
        for (std::size_t i = 0; i < nv; ++i) {
            double pw = 0.0;
            for (auto j : cols) pw += w[i][j] / total;
            for (auto j : cols) {
                if (w[i][j] == 0.0) continue;
                double pr = 0.0;
                for (std::size_t k = 0; k < nv; ++k) pr += w[k][j] / total;
                double pmi = log_fn((w[i][j] / total) / (pw * pr));
                out[i][j] = std::max(0.0, pmi);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Embeddings and refinement

using EmbTable = std::map<std::string, std::vector<double>>;

inline double dense_cos(const std::vector<double>& u, const std::vector<double>& v) {
    long double dot = 0, nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += static_cast<long double>(u[i]) * v[i];
        nu += static_cast<long double>(u[i]) * u[i];
        nv += static_cast<long double>(v[i]) * v[i];
    }
    return static_cast<double>(dot / std::sqrt(nu * nv));
}

inline DenseEmbeddings embeddings_of(const EmbTable& table, std::size_t dim) {
    DenseEmbeddings a(dim);
    for (const auto& [w, v] : table) a.add(w, v);
    return a;
}

/// Clustered random vectors for `words`; each word is present with
/// probability `coverage`.
inline EmbTable random_embeddings(std::mt19937_64& rng, const std::vector<std::string>& words,
                                  std::size_t dim = 3, double coverage = 0.85) {
    std::normal_distribution<double> noise(0.0, 0.35);
    std::normal_distribution<double> centre(0.0, 1.0);
    std::bernoulli_distribution keep(coverage);
    std::vector<std::vector<double>> centres(3, std::vector<double>(dim));
    for (auto& c : centres) {
        for (auto& x : c) x = centre(rng);
    }
    std::uniform_int_distribution<std::size_t> pick(0, centres.size() - 1);
    EmbTable t;
    for (const auto& w : words) {
        if (!keep(rng)) continue;
        std::vector<double> v = centres[pick(rng)];
        for (auto& x : v) x += noise(rng);
        double n = 0.0;
        for (double x : v) n += x * x;
        if (n == 0.0) v[0] = 1.0;
        t[w] = v;
    }
    return t;
}

/// Random PPMI-stage values with a share of exact halves.
inline Dense random_ppmi_values(std::mt19937_64& rng, std::size_t nv, std::size_t nr) {
    std::bernoulli_distribution fill(0.45), half(0.2);
    std::uniform_real_distribution<double> real(0.0, 4.0);
    std::uniform_int_distribution<int> whole(0, 3);
    Dense d(nv, std::vector<double>(nr, 0.0));
    for (auto& row : d) {
        for (auto& x : row) {
            if (!fill(rng)) continue;
            x = half(rng) ? whole(rng) + 0.5 : real(rng);
        }
    }
    return d;
}

inline double ref_round(double x) { return std::ceil(x - 0.5); }

/// Interpolated row of `target` over the snapshot `rows` (indexed like
/// `words`), or nullopt when nothing qualifies.
inline std::optional<std::vector<double>> dense_interpolate(const Dense& rows,
                                                            const std::vector<std::string>& words,
                                                            const EmbTable& emb,
                                                            const std::string& target, double threshold,
                                                            bool include_target) {
    std::size_t nr = rows.empty() ? 0 : rows[0].size();
    std::vector<double> acc(nr, 0.0);
    double wsum = 0.0;
    const auto& tv = emb.at(target);
    for (std::size_t i = 0; i < words.size(); ++i) {
        auto it = emb.find(words[i]);
        if (it == emb.end()) continue;
        bool self = words[i] == target;
        if (self && !include_target) continue;
        double alpha = self ? 1.0 : dense_cos(tv, it->second);
        if (!(alpha > threshold)) continue;
        for (std::size_t j = 0; j < nr; ++j) acc[j] += alpha * rows[i][j];
        wsum += alpha;
    }
    if (wsum == 0.0) return std::nullopt;
    for (auto& x : acc) x /= wsum;
    return acc;
}

struct RefineRef {
    double threshold = 0.5;
    bool rounding = true;
    bool square = true;
    bool include_self = true;
};

inline std::vector<double> finish_ref(std::vector<double> row, const RefineRef& cfg) {
    for (auto& x : row) {
        if (cfg.rounding) x = ref_round(x);
        if (cfg.square) x = x * x;
    }
    return row;
}

/// round -> snapshot interpolate -> round -> square, row by row.
inline Dense dense_refine(const Dense& m, const std::vector<std::string>& words, const EmbTable& emb,
                          const RefineRef& cfg) {
    Dense snap = m;
    if (cfg.rounding) {
        for (auto& row : snap) {
            for (auto& x : row) x = ref_round(x);
        }
    }
    Dense out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        std::vector<double> row = snap[i];
        if (emb.count(words[i])) {
            if (auto r = dense_interpolate(snap, words, emb, words[i], cfg.threshold, cfg.include_self)) row = *r;
        }
        out[i] = finish_ref(row, cfg);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Query models

/// A refined-stage model over predicates p0..p{np-1} and a subset of labels,
/// with small integer values so that ties are frequent.
inline Model random_refined_model(std::mt19937_64& rng, std::size_t nv, std::size_t np,
                                  const std::vector<std::string>& labels) {
    Model m;
    m.meta.stage = Stage::refined;
    std::bernoulli_distribution has_role(0.6), fill(0.5);
    std::uniform_int_distribution<int> val(1, 4);
    std::vector<RoleContext> roles;
    for (std::size_t p = 0; p < np; ++p) {
        for (const auto& l : labels) {
            if (has_role(rng)) roles.push_back(make_role("p" + std::to_string(p), l));
        }
    }
    std::sort(roles.begin(), roles.end());
    for (auto& r : roles) m.roles.add(r, 1);
    for (std::size_t i = 0; i < nv; ++i) m.vocab.add("w" + std::to_string(i), 1);
    Dense d(nv, std::vector<double>(roles.size(), 0.0));
    for (auto& row : d) {
        for (auto& x : row) {
            if (fill(rng)) x = std::pow(val(rng), 2);
        }
    }
    m.matrix = sparse_of(d, roles.size(), Stage::refined);
    return m;
}

struct RefMesh {
    std::string predicate;
    double score;
};

/// The nested loop over both rows' features.
inline std::vector<RefMesh> naive_mesh(const Model& m, const std::string& w1, const std::string& w2,
                                       const std::string& a1, const std::string& a2) {
    auto d = dense_of(m.matrix);
    const auto& r1 = d[m.vocab.index(w1)];
    const auto& r2 = d[m.vocab.index(w2)];
    std::vector<RefMesh> out;
    for (std::size_t i = 0; i < r1.size(); ++i) {
        if (r1[i] == 0.0) continue;
        for (std::size_t j = 0; j < r2.size(); ++j) {
            if (r2[j] == 0.0) continue;
            const auto& f1 = m.roles.role(static_cast<RoleId>(i));
            const auto& f2 = m.roles.role(static_cast<RoleId>(j));
            if (f1.arg.str() == a1 && f2.arg.str() == a2 && f1.predicate == f2.predicate) {
                out.push_back({f1.predicate, r1[i] * r2[j]});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const RefMesh& x, const RefMesh& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.predicate < y.predicate;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Rank correlation

/// Rank of each value: 1 + (#smaller) + (#equal - 1) / 2.
inline std::vector<double> counting_ranks(const std::vector<double>& xs) {
    std::vector<double> r(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double smaller = 0, equal = 0;
        for (double y : xs) {
            if (y < xs[i]) ++smaller;
            if (y == xs[i]) ++equal;
        }
        r[i] = 1.0 + smaller + (equal - 1.0) / 2.0;
    }
    return r;
}

inline double ref_spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    auto rx = counting_ranks(xs), ry = counting_ranks(ys);
    long double n = static_cast<long double>(rx.size());
    long double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sx += rx[i];
        sy += ry[i];
        sxy += static_cast<long double>(rx[i]) * ry[i];
        sxx += static_cast<long double>(rx[i]) * rx[i];
        syy += static_cast<long double>(ry[i]) * ry[i];
    }
    long double cov = sxy - sx * sy / n;
    long double vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
    return static_cast<double>(cov / std::sqrt(vx * vy));
}

// ---------------------------------------------------------------------------
// Symmetric eigenvalues (cyclic Jacobi)

inline std::vector<double> jacobi_eigenvalues(Dense a) {
    std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        }
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

/// Singular values of `m` as square roots of the eigenvalues of mᵀm.
inline std::vector<double> gram_singular_values(const Dense& m) {
    std::size_t c = m[0].size();
    Dense g(c, std::vector<double>(c, 0.0));
    for (const auto& row : m) {
        for (std::size_t i = 0; i < c; ++i) {
            for (std::size_t j = 0; j < c; ++j) g[i][j] += row[i] * row[j];
        }
    }
    auto ev = jacobi_eigenvalues(g);
    for (auto& x : ev) x = std::sqrt(std::max(0.0, x));
    return ev;
}

// ---------------------------------------------------------------------------
// Mini-corpus pipeline (in memory)

inline IngestConfig mini_ingest_config() {
    IngestConfig cfg;
    cfg.verb_whitelist = read_whitelist(data_path("verbs.txt"));
    cfg.min_count = 2;
    return cfg;
}

struct MiniPipeline {
    CountsResult counts;
    SparseRoleMatrix ppmi;
    DenseEmbeddings emb;
    SparseRoleMatrix refined;
};

inline MiniPipeline run_mini_pipeline(std::size_t workers = 1) {
    MiniPipeline p;
    p.counts = build_counts(data_path("mini_corpus.jsonl"), mini_ingest_config(), workers);
    p.ppmi = ppmi(p.counts.matrix, p.counts.roles, PpmiConfig{});
    p.emb = load_embeddings(data_path("mini_embeddings.vec"));
    p.refined = refine(p.ppmi, p.counts.vocab, p.emb, RefineConfig{}, workers);
    return p;
}

inline Model model_of(const CountsResult& c, SparseRoleMatrix m, Stage stage) {
    Model out;
    out.meta.stage = stage;
    out.meta.min_count = 2;
    if (stage == Stage::refined) {
        out.meta.threshold = 0.5;
        out.meta.rounding = true;
        out.meta.squared = true;
    }
    out.vocab = c.vocab;
    out.roles = c.roles;
    out.matrix = std::move(m);
    return out;
}

}  // namespace affvec::testing

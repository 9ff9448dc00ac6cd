#pragma once

// Turns the PPMI matrix M into M+: half-down rounding, association-weighted
// interpolation over a frozen snapshot, rounding again, elementwise squaring.
// Also synthesizes rows for words that only exist in the embedding table.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "affvec/association.hpp"
#include "affvec/core.hpp"
#include "affvec/parallel.hpp"

namespace affvec {

struct RefineConfig {
    double threshold = 0.5;
    bool rounding = true;
    bool square = true;
    bool include_self = true;
    std::optional<std::size_t> neighbor_cap;

    void validate() const {
        check_threshold(threshold);
        if (neighbor_cap && *neighbor_cap == 0) throw ContractError("neighbor cap must be >= 1");
    }
};

/// Nearest integer with exact halves rounded down: ceil(x - 0.5).
inline std::uint64_t round_half_down(double x) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ContractError("round_half_down expects finite x >= 0");
    return static_cast<std::uint64_t>(std::ceil(x - 0.5));
}

inline SparseRoleMatrix round_matrix(const SparseRoleMatrix& m, Stage stage) {
    std::vector<Triple> out;
    out.reserve(m.nnz());
    for (const auto& t : m.triples()) {
        auto v = round_half_down(t.value);
        if (v != 0) out.push_back({t.word, t.role, static_cast<double>(v)});
    }
    return SparseRoleMatrix::from_triples(m.rows(), m.cols(), stage, out);
}

namespace detail {

inline void finish_row(OwnedRow& row, const RefineConfig& cfg) {
    std::size_t keep = 0;
    for (std::size_t i = 0; i < row.roles.size(); ++i) {
        double v = row.values[i];
        if (cfg.rounding) v = static_cast<double>(round_half_down(v));
        if (cfg.square) v = v * v;
        if (v == 0.0) continue;
        row.roles[keep] = row.roles[i];
        row.values[keep] = v;
        ++keep;
    }
    row.roles.resize(keep);
    row.values.resize(keep);
}

}  // namespace detail

/// Interpolates rows of a frozen snapshot (M, rounded when configured).
/// Holds per-instance scratch space; use one instance per thread.
class Interpolator {
public:
    Interpolator(const SparseRoleMatrix& snapshot, const DenseEmbeddings& a,
                 const CandidatePool& pool, const RefineConfig& cfg)
        : snapshot_(snapshot), a_(a), pool_(pool), cfg_(cfg),
          acc_(snapshot.cols(), 0.0), touched_(snapshot.cols(), 0) {}

    /// Neighbor set of `w` used for interpolation (self removed when
    /// include_self is off).
    NeighborSet neighbor_set(std::string_view w) const {
        NeighborSet set = neighbors(a_, w, pool_, cfg_.threshold, std::nullopt);
        if (!cfg_.include_self) {
            std::erase_if(set.members, [&](const Neighbor& n) { return n.text == w; });
        }
        if (cfg_.neighbor_cap && set.members.size() > *cfg_.neighbor_cap) {
            set.members.resize(*cfg_.neighbor_cap);
        }
        return set;
    }

    /// α-weighted average of the neighbors' snapshot rows.
    OwnedRow combine(const NeighborSet& set) {
        if (set.empty()) throw UninterpolatableError("uninterpolatable word '" + set.target + "'");
        double weight_sum = 0.0;
        std::vector<RoleId> support;
        for (const auto& n : set.members) {
            weight_sum += n.weight;
            auto row = snapshot_.row(n.word);
            for (std::size_t k = 0; k < row.size(); ++k) {
                RoleId r = row.roles[k];
                if (!touched_[r]) {
                    touched_[r] = 1;
                    support.push_back(r);
                }
                acc_[r] += n.weight * row.values[k];
            }
        }
        std::sort(support.begin(), support.end());
        OwnedRow out;
        out.roles.reserve(support.size());
        out.values.reserve(support.size());
        for (RoleId r : support) {
            double v = acc_[r] / weight_sum;
            acc_[r] = 0.0;
            touched_[r] = 0;
            if (v > 0.0) {
                out.roles.push_back(r);
                out.values.push_back(v);
            }
        }
        return out;
    }

    OwnedRow interpolate(std::string_view w) { return combine(neighbor_set(w)); }

private:
    const SparseRoleMatrix& snapshot_;
    const DenseEmbeddings& a_;
    const CandidatePool& pool_;
    const RefineConfig& cfg_;
    std::vector<double> acc_;
    std::vector<char> touched_;
};

/// Interpolated row of `w` over M itself (no rounding).
inline OwnedRow interpolate_row(const SparseRoleMatrix& m, const Vocabulary& vocab,
                                const DenseEmbeddings& a, std::string_view w,
                                const RefineConfig& cfg) {
    cfg.validate();
    auto pool = CandidatePool::build(vocab, a);
    Interpolator interp(m, a, pool, cfg);
    return interp.interpolate(w);
}

/// M+ from M. Rows are computed independently from the rounded snapshot, so
/// the result does not depend on row order or worker count. Words without an
/// embedding keep their rounded row; so do in-vocabulary words whose neighbor
/// set is empty (possible only with include_self off).
inline SparseRoleMatrix refine(const SparseRoleMatrix& m, const Vocabulary& vocab,
                               const DenseEmbeddings& a, const RefineConfig& cfg,
                               std::size_t workers = 1) {
    require_stage(m, Stage::ppmi);
    cfg.validate();
    if (vocab.size() != m.rows()) throw ContractError("vocabulary does not match matrix");
    SparseRoleMatrix snapshot = cfg.rounding ? round_matrix(m, Stage::ppmi) : m;
    auto pool = CandidatePool::build(vocab, a);

    std::vector<OwnedRow> rows(m.rows());
    parallel_blocks(m.rows(), std::max<std::size_t>(workers, 1),
                    [&](std::size_t b, std::size_t e, std::size_t) {
                        Interpolator interp(snapshot, a, pool, cfg);
                        for (std::size_t w = b; w < e; ++w) {
                            auto id = static_cast<WordId>(w);
                            OwnedRow row;
                            if (a.find(vocab.word(id))) {
                                auto set = interp.neighbor_set(vocab.word(id));
                                row = set.empty() ? snapshot.owned_row(id) : interp.combine(set);
                            } else {
                                row = snapshot.owned_row(id);
                            }
                            detail::finish_row(row, cfg);
                            rows[w] = std::move(row);
                        }
                    });
    return SparseRoleMatrix::from_rows(m.cols(), Stage::refined, rows);
}

/// Builds rows for words in the embedding table but outside the model
/// vocabulary, with the same rounding and squaring as refine.
class OovSynthesizer {
public:
    OovSynthesizer(const SparseRoleMatrix& m, const Vocabulary& vocab, const DenseEmbeddings& a,
                   RefineConfig cfg)
        : vocab_(vocab), a_(a), cfg_(std::move(cfg)) {
        require_stage(m, Stage::ppmi);
        cfg_.validate();
        snapshot_ = cfg_.rounding ? round_matrix(m, Stage::ppmi) : m;
        pool_ = CandidatePool::build(vocab_, a_);
    }

    bool can_try(std::string_view w) const {
        return !vocab_.contains(w) && a_.find(w).has_value();
    }

    OwnedRow synthesize(std::string_view w) const {
        if (vocab_.contains(w)) {
            throw ContractError("'" + std::string(w) + "' is in the model vocabulary");
        }
        Interpolator interp(snapshot_, a_, pool_, cfg_);
        OwnedRow row = interp.interpolate(w);
        detail::finish_row(row, cfg_);
        return row;
    }

    const DenseEmbeddings& embeddings() const noexcept { return a_; }

private:
    const Vocabulary& vocab_;
    const DenseEmbeddings& a_;
    RefineConfig cfg_;
    SparseRoleMatrix snapshot_;
    CandidatePool pool_;
};

inline OwnedRow synthesize_oov(const SparseRoleMatrix& m, const Vocabulary& vocab,
                               const DenseEmbeddings& a, std::string_view w,
                               const RefineConfig& cfg) {
    return OovSynthesizer(m, vocab, a, cfg).synthesize(w);
}

}  // namespace affvec

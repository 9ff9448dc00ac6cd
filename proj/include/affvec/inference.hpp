#pragma once

// Read-only queries over a refined model: affordance meshing, top role
// contexts of a word, top words of a role, contrast between two words, and
// nearest neighbors by sparse cosine.

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "affvec/association.hpp"
#include "affvec/core.hpp"
#include "affvec/model_io.hpp"
#include "affvec/refine.hpp"

namespace affvec {

struct MeshRelation {
    std::string predicate;
    double score;
    std::pair<RoleContext, RoleContext> role_pair;
    std::pair<double, double> feature_values;
};

struct RoleScore {
    RoleContext role;
    double value;
};

struct WordScore {
    std::string word;
    double value;
};

enum class Dominant { first, second };

struct ContrastEntry {
    RoleContext role;
    double difference;
    Dominant dominant;
};

/// A refined model with row and column access, optionally able to synthesize
/// rows for words outside its vocabulary.
class QueryModel {
public:
    explicit QueryModel(Model refined) : model_(std::move(refined)) {
        require_stage(model_.matrix, Stage::refined);
        build_columns();
        norms_.resize(model_.matrix.rows());
        for (WordId w = 0; w < model_.matrix.rows(); ++w) norms_[w] = sparse_norm(model_.matrix.row(w));
    }

    /// Enables OOV synthesis from the PPMI-stage model the refined one was
    /// derived from, using the refine settings recorded in its metadata.
    void enable_synthesis(Model ppmi, DenseEmbeddings embeddings) {
        require_stage(ppmi.matrix, Stage::ppmi);
        base_ = std::make_unique<Model>(std::move(ppmi));
        embeddings_ = std::make_unique<DenseEmbeddings>(std::move(embeddings));
        RefineConfig cfg;
        cfg.threshold = model_.meta.threshold.value_or(0.5);
        cfg.rounding = model_.meta.rounding;
        cfg.square = model_.meta.squared;
        cfg.include_self = model_.meta.include_self;
        cfg.neighbor_cap = model_.meta.neighbor_cap;
        synth_ = std::make_unique<OovSynthesizer>(base_->matrix, base_->vocab, *embeddings_, cfg);
    }

    const Model& model() const noexcept { return model_; }
    const Vocabulary& vocab() const noexcept { return model_.vocab; }
    const RoleIndex& roles() const noexcept { return model_.roles; }
    const SparseRoleMatrix& matrix() const noexcept { return model_.matrix; }
    const DenseEmbeddings* embeddings() const noexcept { return embeddings_.get(); }

    bool has_row(std::string_view w) const {
        return model_.vocab.contains(w) || (synth_ && synth_->can_try(w));
    }

    /// Row of `w`, synthesized when `w` is outside the vocabulary and
    /// synthesis is enabled.
    OwnedRow resolve(std::string_view w) const {
        if (auto id = model_.vocab.find(w)) return model_.matrix.owned_row(*id);
        if (synth_ && synth_->can_try(w)) return synth_->synthesize(w);
        throw LookupError("unknown word '" + std::string(w) + "'");
    }

    /// Column of role `r`: word ids ascending with their values.
    std::pair<std::span<const WordId>, std::span<const double>> column(RoleId r) const {
        auto b = col_offsets_.at(r), e = col_offsets_.at(r + 1);
        return {std::span<const WordId>(col_words_).subspan(b, e - b),
                std::span<const double>(col_values_).subspan(b, e - b)};
    }

    double row_norm(WordId w) const { return norms_.at(w); }

private:
    void build_columns() {
        const auto& m = model_.matrix;
        col_offsets_.assign(m.cols() + 1, 0);
        for (WordId w = 0; w < m.rows(); ++w) {
            for (RoleId r : m.row(w).roles) ++col_offsets_[r + 1];
        }
        for (std::size_t c = 0; c < m.cols(); ++c) col_offsets_[c + 1] += col_offsets_[c];
        col_words_.resize(m.nnz());
        col_values_.resize(m.nnz());
        std::vector<std::size_t> fill(col_offsets_.begin(), col_offsets_.end() - 1);
        for (WordId w = 0; w < m.rows(); ++w) {
            auto row = m.row(w);
            for (std::size_t k = 0; k < row.size(); ++k) {
                auto pos = fill[row.roles[k]]++;
                col_words_[pos] = w;
                col_values_[pos] = row.values[k];
            }
        }
    }

    Model model_;
    std::vector<std::size_t> col_offsets_;
    std::vector<WordId> col_words_;
    std::vector<double> col_values_;
    std::vector<double> norms_;
    std::unique_ptr<Model> base_;
    std::unique_ptr<DenseEmbeddings> embeddings_;
    std::unique_ptr<OovSynthesizer> synth_;
};

/// Affordance meshing: for every feature of w1 labelled a1 and feature of w2
/// labelled a2 that share a predicate, one relation scored by the product of
/// the two feature values. Sorted by score descending, then predicate.
inline std::vector<MeshRelation> mesh(const QueryModel& m, std::string_view w1,
                                      std::string_view w2, const ArgumentLabel& a1,
                                      const ArgumentLabel& a2) {
    OwnedRow r1 = m.resolve(w1);
    OwnedRow r2 = m.resolve(w2);
    const auto& roles = m.roles();
    std::vector<MeshRelation> out;
    for (std::size_t i = 0; i < r1.roles.size(); ++i) {
        const RoleContext& f1 = roles.role(r1.roles[i]);
        if (f1.arg != a1) continue;
        RoleContext partner{f1.predicate, a2};
        auto id = roles.find(partner);
        if (!id) continue;
        double v2 = r2.view().at(*id);
        if (v2 <= 0.0) continue;
        out.push_back({f1.predicate, r1.values[i] * v2, {f1, partner}, {r1.values[i], v2}});
    }
    std::sort(out.begin(), out.end(), [](const MeshRelation& x, const MeshRelation& y) {
        return x.score != y.score ? x.score > y.score : x.predicate < y.predicate;
    });
    return out;
}

inline std::vector<RoleScore> top_roles(const QueryModel& m, std::string_view w, std::size_t k) {
    OwnedRow row = m.resolve(w);
    std::vector<std::pair<std::string, RoleScore>> all;
    for (std::size_t i = 0; i < row.roles.size(); ++i) {
        const auto& role = m.roles().role(row.roles[i]);
        all.push_back({render_role(role), {role, row.values[i]}});
    }
    auto less = [](const auto& x, const auto& y) {
        return x.second.value != y.second.value ? x.second.value > y.second.value
                                                : x.first < y.first;
    };
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
    std::vector<RoleScore> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].second);
    return out;
}

inline std::vector<WordScore> top_words(const QueryModel& m, const RoleContext& r, std::size_t k) {
    RoleId id = m.roles().index(r);
    auto [words, values] = m.column(id);
    std::vector<WordScore> all;
    for (std::size_t i = 0; i < words.size(); ++i) all.push_back({m.vocab().word(words[i]), values[i]});
    auto less = [](const WordScore& x, const WordScore& y) {
        return x.value != y.value ? x.value > y.value : x.word < y.word;
    };
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
    all.resize(k);
    return all;
}

/// Roles maximizing |row(w1)[r] - row(w2)[r]| over the union of supports;
/// zero differences are omitted.
inline std::vector<ContrastEntry> contrast(const QueryModel& m, std::string_view w1,
                                           std::string_view w2, std::size_t k) {
    OwnedRow a = m.resolve(w1);
    OwnedRow b = m.resolve(w2);
    std::vector<std::pair<std::string, ContrastEntry>> all;
    auto emit = [&](RoleId r, double va, double vb) {
        if (va == vb) return;
        const auto& role = m.roles().role(r);
        all.push_back({render_role(role),
                       {role, std::abs(va - vb), va > vb ? Dominant::first : Dominant::second}});
    };
    std::size_t i = 0, j = 0;
    while (i < a.roles.size() || j < b.roles.size()) {
        if (j == b.roles.size() || (i < a.roles.size() && a.roles[i] < b.roles[j])) {
            emit(a.roles[i], a.values[i], 0.0);
            ++i;
        } else if (i == a.roles.size() || b.roles[j] < a.roles[i]) {
            emit(b.roles[j], 0.0, b.values[j]);
            ++j;
        } else {
            emit(a.roles[i], a.values[i], b.values[j]);
            ++i;
            ++j;
        }
    }
    auto less = [](const auto& x, const auto& y) {
        return x.second.difference != y.second.difference
                   ? x.second.difference > y.second.difference
                   : x.first < y.first;
    };
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
    std::vector<ContrastEntry> out;
    for (std::size_t n = 0; n < k; ++n) out.push_back(all[n].second);
    return out;
}

/// The k vocabulary words with the highest sparse cosine to `w` (excluding
/// `w`). Words with empty rows have no defined cosine and are skipped.
inline std::vector<WordScore> similar_words(const QueryModel& m, std::string_view w,
                                            std::size_t k) {
    OwnedRow q = m.resolve(w);
    double qn = sparse_norm(q.view());
    auto self = m.vocab().find(w);
    std::vector<double> dots(m.vocab().size(), 0.0);
    for (std::size_t i = 0; i < q.roles.size(); ++i) {
        auto [words, values] = m.column(q.roles[i]);
        for (std::size_t n = 0; n < words.size(); ++n) dots[words[n]] += q.values[i] * values[n];
    }
    std::vector<WordScore> all;
    for (WordId v = 0; v < m.vocab().size(); ++v) {
        if (self && *self == v) continue;
        double vn = m.row_norm(v);
        if (vn == 0.0) continue;
        double c = qn == 0.0 ? 0.0 : dots[v] / (qn * vn);
        all.push_back({m.vocab().word(v), c});
    }
    auto less = [](const WordScore& x, const WordScore& y) {
        return x.value != y.value ? x.value > y.value : x.word < y.word;
    };
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
    all.resize(k);
    return all;
}

}  // namespace affvec

#pragma once

// External dense embedding table A (word2vec text format) and the cosine
// neighbor sets used to weight interpolation.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "affvec/core.hpp"

namespace affvec {

class DenseEmbeddings {
public:
    DenseEmbeddings() = default;
    explicit DenseEmbeddings(std::size_t dim) : dim_(dim) {}

    /// Appends a row. Rejects arity mismatches, duplicates and zero-norm rows.
    void add(std::string word, std::span<const double> values) {
        if (values.size() != dim_) {
            throw FormatError("row for '" + word + "' has " + std::to_string(values.size()) +
                              " values, expected " + std::to_string(dim_));
        }
        double sq = 0.0;
        for (double v : values) sq += v * v;
        if (!(sq > 0.0) || !std::isfinite(sq)) {
            throw FormatError("row for '" + word + "' has zero or non-finite norm");
        }
        if (!index_.emplace(word, words_.size()).second) {
            throw FormatError("duplicate embedding word '" + word + "'");
        }
        words_.push_back(std::move(word));
        data_.insert(data_.end(), values.begin(), values.end());
        norms_.push_back(std::sqrt(sq));
    }

    std::size_t size() const noexcept { return words_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::string& word(std::size_t i) const { return words_.at(i); }

    std::optional<std::size_t> find(std::string_view w) const {
        auto it = index_.find(std::string(w));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t index(std::string_view w) const {
        if (auto i = find(w)) return *i;
        throw LookupError("word '" + std::string(w) + "' is not in the embedding table");
    }

    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(data_).subspan(i * dim_, dim_);
    }

    double norm(std::size_t i) const { return norms_.at(i); }

    /// Cosine between two stored rows; exactly 1 for a row with itself.
    double cosine(std::size_t i, std::size_t j) const {
        if (i == j) return 1.0;
        auto a = row(i), b = row(j);
        double dot = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) dot += a[k] * b[k];
        return std::clamp(dot / (norms_[i] * norms_[j]), -1.0, 1.0);
    }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> words_;
    std::vector<double> data_;
    std::vector<double> norms_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Parses word2vec text format: a `<count> <dim>` header, then one
/// `<word> <v1> ... <vd>` row per line. Errors carry the 1-based line number.
inline DenseEmbeddings load_embeddings(std::istream& in) {
    std::string line;
    std::size_t n = 0;
    auto fields = [](std::string_view s) {
        std::vector<std::string_view> out;
        std::size_t i = 0;
        while (i < s.size()) {
            while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
            std::size_t b = i;
            while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
            if (i > b) out.push_back(s.substr(b, i - b));
        }
        return out;
    };
    if (!std::getline(in, line)) throw FormatError("embeddings: missing header at line 1");
    ++n;
    auto header = fields(line);
    auto count = header.size() == 2 ? parse_int<std::size_t>(header[0]) : std::nullopt;
    auto dim = header.size() == 2 ? parse_int<std::size_t>(header[1]) : std::nullopt;
    if (!count || !dim || *dim == 0) throw FormatError("embeddings: malformed header at line 1");

    DenseEmbeddings table(*dim);
    std::vector<double> values(*dim);
    while (std::getline(in, line)) {
        ++n;
        auto f = fields(line);
        if (f.empty()) continue;
        if (f.size() != *dim + 1) {
            throw FormatError("embeddings: expected " + std::to_string(*dim) + " values at line " +
                              std::to_string(n) + ", found " + std::to_string(f.size() - 1));
        }
        for (std::size_t k = 0; k < *dim; ++k) {
            auto v = parse_double(f[k + 1]);
            if (!v) throw FormatError("embeddings: bad number at line " + std::to_string(n));
            values[k] = *v;
        }
        try {
            table.add(std::string(f[0]), values);
        } catch (const FormatError& e) {
            throw FormatError(std::string("embeddings: ") + e.what() + " at line " +
                              std::to_string(n));
        }
    }
    if (table.size() != *count) {
        throw FormatError("embeddings: header declares " + std::to_string(*count) + " rows, found " +
                          std::to_string(table.size()));
    }
    return table;
}

inline DenseEmbeddings load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read embeddings " + path);
    return load_embeddings(in);
}

inline double cos_a(const DenseEmbeddings& a, std::string_view w1, std::string_view w2) {
    return a.cosine(a.index(w1), a.index(w2));
}

struct Neighbor {
    WordId word;
    std::string text;
    double weight;
};

/// Above-threshold neighbors of a target, sorted by weight descending then
/// word ascending.
struct NeighborSet {
    std::string target;
    std::vector<Neighbor> members;

    bool empty() const noexcept { return members.empty(); }
    std::size_t size() const noexcept { return members.size(); }
};

/// Words of the model vocabulary that also have an embedding row
/// (V_M ∩ V_A), paired with that row.
struct CandidatePool {
    std::vector<WordId> words;
    std::vector<std::size_t> rows;
    const Vocabulary* vocab = nullptr;

    static CandidatePool build(const Vocabulary& vocab, const DenseEmbeddings& a) {
        CandidatePool pool;
        pool.vocab = &vocab;
        for (WordId w = 0; w < vocab.size(); ++w) {
            if (auto r = a.find(vocab.word(w))) {
                pool.words.push_back(w);
                pool.rows.push_back(*r);
            }
        }
        return pool;
    }
};

inline void check_threshold(double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ContractError("threshold must lie in (0, 1)");
    }
}

/// All pool words with cos_A(target, ·) strictly above `threshold`, optionally
/// truncated to the `cap` highest. The target itself qualifies (weight 1)
/// whenever it is in the pool.
inline NeighborSet neighbors(const DenseEmbeddings& a, std::string_view target,
                             const CandidatePool& pool, double threshold,
                             std::optional<std::size_t> cap = std::nullopt) {
    check_threshold(threshold);
    std::size_t t = a.index(target);
    NeighborSet set{std::string(target), {}};
    for (std::size_t i = 0; i < pool.words.size(); ++i) {
        double c = a.cosine(t, pool.rows[i]);
        if (c > threshold) set.members.push_back({pool.words[i], pool.vocab->word(pool.words[i]), c});
    }
    std::sort(set.members.begin(), set.members.end(), [](const Neighbor& x, const Neighbor& y) {
        return x.weight != y.weight ? x.weight > y.weight : x.text < y.text;
    });
    if (cap && set.members.size() > *cap) set.members.resize(*cap);
    return set;
}

inline NeighborSet neighbors(const DenseEmbeddings& a, std::string_view target,
                             const Vocabulary& candidates, double threshold,
                             std::optional<std::size_t> cap = std::nullopt) {
    return neighbors(a, target, CandidatePool::build(candidates, a), threshold, cap);
}

}  // namespace affvec

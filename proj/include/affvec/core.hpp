#pragma once

// Domain types shared by every stage of the pipeline: argument labels, role
// contexts, the word and role indices, and the word-by-role sparse matrix.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

namespace affvec {

using WordId = std::uint32_t;
using RoleId = std::uint32_t;

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed text: role strings, labels, benchmark lines, embedding rows.
struct FormatError : Error {
    using Error::Error;
};

/// A word or role that is not present in the queried space.
struct LookupError : Error {
    using Error::Error;
};

/// A word with no above-threshold neighbors to interpolate from.
struct UninterpolatableError : LookupError {
    using LookupError::LookupError;
};

/// Violated preconditions (stage mismatch, rank out of range, bad config).
struct ContractError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

/// Every pair was removed by frequency trimming.
struct EmptyModelError : Error {
    using Error::Error;
};

/// Spearman over fewer than two points or over a constant vector.
struct UndefinedCorrelationError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Text helpers

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

inline bool has_space(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    });
}

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw FormatError("cannot format value");
    return std::string(buf.data(), end);
}

/// Locale-independent full-string parse.
inline std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
    Int v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(s.substr(start));
            return parts;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

// ---------------------------------------------------------------------------
// ArgumentLabel

/// A PropBank argument type: core ARG0..ARG5 or a whitelisted ARGM-<FUNC>
/// adjunct. Reference (R-) and continuation (C-) labels are not representable.
class ArgumentLabel {
public:
    static constexpr std::array<std::string_view, 17> kAdjunctFunctions = {
        "LOC", "TMP", "MNR", "ADV", "DIS", "DIR", "CAU", "EXT", "PRP",
        "PRD", "GOL", "COM", "NEG", "MOD", "LVB", "REC", "ADJ"};

    static std::optional<ArgumentLabel> try_parse(std::string_view text) {
        if (text.size() == 4 && text.substr(0, 3) == "ARG" && text[3] >= '0' && text[3] <= '5') {
            return ArgumentLabel(std::string(text));
        }
        if (text.size() == 8 && text.substr(0, 5) == "ARGM-") {
            auto func = text.substr(5);
            if (std::find(kAdjunctFunctions.begin(), kAdjunctFunctions.end(), func) !=
                kAdjunctFunctions.end()) {
                return ArgumentLabel(std::string(text));
            }
        }
        return std::nullopt;
    }

    static ArgumentLabel parse(std::string_view text) {
        if (auto label = try_parse(text)) return *label;
        throw FormatError("invalid argument label '" + std::string(text) + "'");
    }

    /// Every accepted label, core first.
    static std::vector<ArgumentLabel> all() {
        std::vector<ArgumentLabel> out;
        for (char d = '0'; d <= '5'; ++d) out.push_back(ArgumentLabel(std::string("ARG") + d));
        for (auto f : kAdjunctFunctions) out.push_back(ArgumentLabel("ARGM-" + std::string(f)));
        return out;
    }

    const std::string& str() const noexcept { return text_; }
    bool is_core() const noexcept { return text_.size() == 4; }

    friend auto operator<=>(const ArgumentLabel&, const ArgumentLabel&) = default;
    friend bool operator==(const ArgumentLabel&, const ArgumentLabel&) = default;

private:
    explicit ArgumentLabel(std::string text) : text_(std::move(text)) {}
    std::string text_;
};

// ---------------------------------------------------------------------------
// RoleContext

/// A predicate lemma specialized by argument label, e.g. eat|ARG0.
struct RoleContext {
    std::string predicate;
    ArgumentLabel arg;

    friend auto operator<=>(const RoleContext&, const RoleContext&) = default;
    friend bool operator==(const RoleContext&, const RoleContext&) = default;
};

inline bool valid_predicate(std::string_view p) {
    return !p.empty() && p.find('|') == std::string_view::npos && !has_space(p);
}

inline RoleContext make_role(std::string_view predicate, std::string_view label) {
    if (!valid_predicate(predicate)) {
        throw FormatError("invalid predicate '" + std::string(predicate) + "'");
    }
    return RoleContext{std::string(predicate), ArgumentLabel::parse(label)};
}

inline std::string render_role(const RoleContext& role) {
    return role.predicate + "|" + role.arg.str();
}

inline RoleContext parse_role(std::string_view text) {
    auto bar = text.find('|');
    if (bar == std::string_view::npos || text.find('|', bar + 1) != std::string_view::npos) {
        throw FormatError("role must contain exactly one '|': '" + std::string(text) + "'");
    }
    auto predicate = text.substr(0, bar);
    auto label = ArgumentLabel::try_parse(text.substr(bar + 1));
    if (!valid_predicate(predicate) || !label) {
        throw FormatError("malformed role '" + std::string(text) + "'");
    }
    return RoleContext{std::string(predicate), *label};
}

// ---------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
public:
    /// Appends a word; indices are assigned densely in insertion order.
    WordId add(std::string word, std::uint64_t count) {
        auto id = static_cast<WordId>(words_.size());
        auto [it, inserted] = index_.emplace(word, id);
        if (!inserted) throw ContractError("duplicate vocabulary word '" + word + "'");
        words_.push_back(std::move(word));
        counts_.push_back(count);
        return id;
    }

    std::size_t size() const noexcept { return words_.size(); }
    bool contains(std::string_view w) const { return index_.count(std::string(w)) != 0; }

    std::optional<WordId> find(std::string_view w) const {
        auto it = index_.find(std::string(w));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    WordId index(std::string_view w) const {
        if (auto id = find(w)) return *id;
        throw LookupError("unknown word '" + std::string(w) + "'");
    }

    const std::string& word(WordId id) const { return words_.at(id); }
    std::uint64_t count(WordId id) const { return counts_.at(id); }
    const std::vector<std::string>& words() const noexcept { return words_; }

private:
    std::vector<std::string> words_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, WordId> index_;
};

// ---------------------------------------------------------------------------
// RoleIndex

/// Roles with their counts, partitioned into one segment per argument label.
/// A segment's total is the pair mass |C_ARG| of that argument type.
class RoleIndex {
public:
    RoleId add(RoleContext role, std::uint64_t count) {
        auto id = static_cast<RoleId>(roles_.size());
        auto key = render_role(role);
        if (!index_.emplace(key, id).second) {
            throw ContractError("duplicate role '" + key + "'");
        }
        auto& seg = segments_[role.arg];
        seg.roles.push_back(id);
        seg.total += count;
        roles_.push_back(std::move(role));
        counts_.push_back(count);
        return id;
    }

    std::size_t size() const noexcept { return roles_.size(); }
    const RoleContext& role(RoleId id) const { return roles_.at(id); }
    std::uint64_t count(RoleId id) const { return counts_.at(id); }

    std::optional<RoleId> find(const RoleContext& r) const { return find(render_role(r)); }

    std::optional<RoleId> find(std::string_view rendered) const {
        auto it = index_.find(std::string(rendered));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    RoleId index(const RoleContext& r) const {
        if (auto id = find(r)) return *id;
        throw LookupError("unknown role '" + render_role(r) + "'");
    }

    struct Segment {
        std::vector<RoleId> roles;
        std::uint64_t total = 0;
    };

    const std::map<ArgumentLabel, Segment>& segments() const noexcept { return segments_; }

    std::uint64_t segment_total(const ArgumentLabel& a) const {
        auto it = segments_.find(a);
        return it == segments_.end() ? 0 : it->second.total;
    }

private:
    std::vector<RoleContext> roles_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, RoleId> index_;
    std::map<ArgumentLabel, Segment> segments_;
};

// ---------------------------------------------------------------------------
// SparseRoleMatrix

enum class Stage { counts, ppmi, refined };

inline std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::counts: return "counts";
        case Stage::ppmi: return "ppmi";
        case Stage::refined: return "refined";
    }
    return "?";
}

inline Stage parse_stage(std::string_view s) {
    if (s == "counts") return Stage::counts;
    if (s == "ppmi") return Stage::ppmi;
    if (s == "refined") return Stage::refined;
    throw FormatError("unknown stage '" + std::string(s) + "'");
}

struct Triple {
    WordId word;
    RoleId role;
    double value;
};

/// Read-only view of one matrix row: role ids strictly ascending, values > 0.
struct SparseRow {
    std::span<const RoleId> roles;
    std::span<const double> values;

    std::size_t size() const noexcept { return roles.size(); }
    bool empty() const noexcept { return roles.empty(); }

    double at(RoleId r) const {
        auto it = std::lower_bound(roles.begin(), roles.end(), r);
        if (it == roles.end() || *it != r) return 0.0;
        return values[static_cast<std::size_t>(it - roles.begin())];
    }
};

/// Owning sparse row, used for rows synthesized outside the stored matrix.
struct OwnedRow {
    std::vector<RoleId> roles;
    std::vector<double> values;

    SparseRow view() const noexcept { return {roles, values}; }
};

/// Word-by-role matrix in compressed row form. Entries are strictly positive
/// and sorted by (word, role); explicit zeros are never stored.
class SparseRoleMatrix {
public:
    SparseRoleMatrix() = default;

    SparseRoleMatrix(std::size_t rows, std::size_t cols, Stage stage)
        : rows_(rows), cols_(cols), stage_(stage), offsets_(rows + 1, 0) {}

    /// Builds from triples that must already be strictly sorted. Zero values
    /// are dropped; negative or non-finite values are rejected.
    static SparseRoleMatrix from_triples(std::size_t rows, std::size_t cols, Stage stage,
                                         std::span<const Triple> triples) {
        SparseRoleMatrix m(rows, cols, stage);
        m.roles_.reserve(triples.size());
        m.values_.reserve(triples.size());
        const Triple* prev = nullptr;
        for (const auto& t : triples) {
            if (t.word >= rows || t.role >= cols) throw ContractError("matrix entry out of range");
            if (prev && (t.word < prev->word || (t.word == prev->word && t.role <= prev->role))) {
                throw ContractError("matrix entries not strictly sorted");
            }
            prev = &t;
            if (!(t.value >= 0.0) || t.value == std::numeric_limits<double>::infinity()) {
                throw ContractError("matrix values must be finite and non-negative");
            }
            if (t.value == 0.0) continue;
            ++m.offsets_[t.word + 1];
            m.roles_.push_back(t.role);
            m.values_.push_back(t.value);
        }
        for (std::size_t i = 0; i < rows; ++i) m.offsets_[i + 1] += m.offsets_[i];
        return m;
    }

    /// Builds from per-row sparse vectors (roles ascending within each row).
    static SparseRoleMatrix from_rows(std::size_t cols, Stage stage,
                                      const std::vector<OwnedRow>& rows) {
        SparseRoleMatrix m(rows.size(), cols, stage);
        for (std::size_t w = 0; w < rows.size(); ++w) {
            const auto& row = rows[w];
            for (std::size_t i = 0; i < row.roles.size(); ++i) {
                if (row.values[i] == 0.0) continue;
                if (row.values[i] < 0.0) throw ContractError("negative matrix value");
                m.roles_.push_back(row.roles[i]);
                m.values_.push_back(row.values[i]);
            }
            m.offsets_[w + 1] = m.roles_.size();
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }
    Stage stage() const noexcept { return stage_; }

    SparseRow row(WordId w) const {
        auto b = offsets_.at(w), e = offsets_.at(w + 1);
        return {std::span<const RoleId>(roles_).subspan(b, e - b),
                std::span<const double>(values_).subspan(b, e - b)};
    }

    OwnedRow owned_row(WordId w) const {
        auto r = row(w);
        return {{r.roles.begin(), r.roles.end()}, {r.values.begin(), r.values.end()}};
    }

    double at(WordId w, RoleId r) const { return row(w).at(r); }

    std::vector<Triple> triples() const {
        std::vector<Triple> out;
        out.reserve(nnz());
        for (WordId w = 0; w < rows_; ++w) {
            auto r = row(w);
            for (std::size_t i = 0; i < r.size(); ++i) out.push_back({w, r.roles[i], r.values[i]});
        }
        return out;
    }

    double total() const {
        double s = 0.0;
        for (double v : values_) s += v;
        return s;
    }

    /// Percentage of zero cells.
    double sparsity_percent() const {
        double cells = static_cast<double>(rows_) * static_cast<double>(cols_);
        if (cells == 0.0) return 100.0;
        return 100.0 * (1.0 - static_cast<double>(nnz()) / cells);
    }

    friend bool operator==(const SparseRoleMatrix& a, const SparseRoleMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.stage_ == b.stage_ &&
               a.offsets_ == b.offsets_ && a.roles_ == b.roles_ && a.values_ == b.values_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Stage stage_ = Stage::counts;
    std::vector<std::size_t> offsets_{0};
    std::vector<RoleId> roles_;
    std::vector<double> values_;
};

inline void require_stage(const SparseRoleMatrix& m, Stage expected) {
    if (m.stage() != expected) {
        throw ContractError("expected a " + std::string(to_string(expected)) +
                            "-stage matrix, got " + std::string(to_string(m.stage())));
    }
}

// ---------------------------------------------------------------------------
// Sparse vector helpers

inline double sparse_dot(SparseRow a, SparseRow b) {
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a.roles[i] < b.roles[j]) {
            ++i;
        } else if (b.roles[j] < a.roles[i]) {
            ++j;
        } else {
            s += a.values[i++] * b.values[j++];
        }
    }
    return s;
}

inline double sparse_norm(SparseRow a) {
    double s = 0.0;
    for (double v : a.values) s += v * v;
    return std::sqrt(s);
}

/// Cosine of two sparse rows; 0 when either row is empty.
inline double sparse_cosine(SparseRow a, SparseRow b) {
    double na = sparse_norm(a), nb = sparse_norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return sparse_dot(a, b) / (na * nb);
}

}  // namespace affvec

template <>
struct std::hash<affvec::ArgumentLabel> {
    std::size_t operator()(const affvec::ArgumentLabel& a) const noexcept {
        return std::hash<std::string>{}(a.str());
    }
};

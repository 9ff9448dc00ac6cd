#pragma once

// Positive PMI weighting of the count matrix, either over the whole pair set
// or independently within each argument-label segment.

#include <cmath>
#include <string>
#include <vector>

#include "affvec/core.hpp"

namespace affvec {

enum class PpmiMode { plain, arg_specific };
enum class LogBase { e, two, ten };

inline std::string_view to_string(PpmiMode m) { return m == PpmiMode::plain ? "plain" : "arg"; }

inline PpmiMode parse_ppmi_mode(std::string_view s) {
    if (s == "plain") return PpmiMode::plain;
    if (s == "arg" || s == "arg_specific") return PpmiMode::arg_specific;
    throw FormatError("unknown ppmi mode '" + std::string(s) + "'");
}

inline std::string_view to_string(LogBase b) {
    switch (b) {
        case LogBase::e: return "e";
        case LogBase::two: return "2";
        case LogBase::ten: return "10";
    }
    return "?";
}

inline LogBase parse_log_base(std::string_view s) {
    if (s == "e") return LogBase::e;
    if (s == "2") return LogBase::two;
    if (s == "10") return LogBase::ten;
    throw FormatError("unknown log base '" + std::string(s) + "'");
}

struct PpmiConfig {
    PpmiMode mode = PpmiMode::arg_specific;
    LogBase log_base = LogBase::e;
};

inline double log_in_base(double x, LogBase b) {
    switch (b) {
        case LogBase::e: return std::log(x);
        case LogBase::two: return std::log2(x);
        case LogBase::ten: return std::log10(x);
    }
    return std::log(x);
}

/// PPMI(w, r) = max(0, log(#(w,r)·|C_a| / (#_a(w)·#(r)))) where a is the
/// segment of r. Marginals are taken from W itself: #_a(w) is w's mass within
/// segment a, #(r) the column mass, |C_a| the segment mass. Plain mode uses a
/// single segment. Entries with PMI <= 0 are not stored.
inline SparseRoleMatrix ppmi(const SparseRoleMatrix& counts, const RoleIndex& roles,
                             const PpmiConfig& cfg) {
    require_stage(counts, Stage::counts);
    if (roles.size() != counts.cols()) throw ContractError("role index does not match matrix");

    // Segment id per column.
    std::vector<std::size_t> seg_of(counts.cols(), 0);
    std::size_t n_segments = 1;
    if (cfg.mode == PpmiMode::arg_specific) {
        n_segments = 0;
        for (const auto& [label, seg] : roles.segments()) {
            for (RoleId r : seg.roles) seg_of[r] = n_segments;
            ++n_segments;
        }
        if (n_segments == 0) n_segments = 1;
    }

    std::vector<double> col_mass(counts.cols(), 0.0);
    std::vector<double> seg_mass(n_segments, 0.0);
    for (WordId w = 0; w < counts.rows(); ++w) {
        auto row = counts.row(w);
        for (std::size_t k = 0; k < row.size(); ++k) {
            col_mass[row.roles[k]] += row.values[k];
            seg_mass[seg_of[row.roles[k]]] += row.values[k];
        }
    }

    std::vector<Triple> out;
    std::vector<double> row_seg_mass(n_segments, 0.0);
    for (WordId w = 0; w < counts.rows(); ++w) {
        auto row = counts.row(w);
        std::fill(row_seg_mass.begin(), row_seg_mass.end(), 0.0);
        for (std::size_t k = 0; k < row.size(); ++k) row_seg_mass[seg_of[row.roles[k]]] += row.values[k];
        for (std::size_t k = 0; k < row.size(); ++k) {
            RoleId r = row.roles[k];
            std::size_t s = seg_of[r];
            // Integer-valued products are exact in double for realistic corpora,
            // so independence yields exactly ratio 1.
            double num = row.values[k] * seg_mass[s];
            double den = row_seg_mass[s] * col_mass[r];
            if (num <= den) continue;
            double v = log_in_base(num / den, cfg.log_base);
            if (v > 0.0) out.push_back({w, r, v});
        }
    }
    return SparseRoleMatrix::from_triples(counts.rows(), counts.cols(), Stage::ppmi, out);
}

}  // namespace affvec

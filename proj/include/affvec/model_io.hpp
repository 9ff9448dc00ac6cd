#pragma once

// Persisted model directories: meta.json, vocab.tsv, roles.tsv, matrix.tsv.
// Each stage directory may nest the model it was derived from under a
// subdirectory named after that stage (refined/ppmi, ppmi/counts).

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "affvec/core.hpp"

namespace affvec {

namespace fs = std::filesystem;

struct ModelMeta {
    Stage stage = Stage::counts;
    std::string log_base = "e";
    std::uint64_t min_count = 100;
    std::string ppmi_mode = "arg";
    std::optional<double> threshold;
    bool rounding = false;
    bool squared = false;
    bool include_self = true;
    std::optional<std::size_t> neighbor_cap;
    int version = 1;
};

struct Model {
    ModelMeta meta;
    Vocabulary vocab;
    RoleIndex roles;
    SparseRoleMatrix matrix;
};

inline nlohmann::ordered_json meta_to_json(const ModelMeta& m) {
    nlohmann::ordered_json j;
    j["stage"] = std::string(to_string(m.stage));
    j["log_base"] = m.log_base;
    j["min_count"] = m.min_count;
    j["ppmi_mode"] = m.ppmi_mode;
    if (m.threshold) {
        j["threshold"] = *m.threshold;
    } else {
        j["threshold"] = nullptr;
    }
    j["rounding"] = m.rounding;
    j["squared"] = m.squared;
    j["include_self"] = m.include_self;
    if (m.neighbor_cap) {
        j["neighbor_cap"] = *m.neighbor_cap;
    } else {
        j["neighbor_cap"] = nullptr;
    }
    j["version"] = m.version;
    return j;
}

inline ModelMeta meta_from_json(const nlohmann::json& j) {
    try {
        ModelMeta m;
        m.stage = parse_stage(j.at("stage").get<std::string>());
        m.log_base = j.at("log_base").get<std::string>();
        m.min_count = j.at("min_count").get<std::uint64_t>();
        m.ppmi_mode = j.at("ppmi_mode").get<std::string>();
        if (j.contains("threshold") && !j["threshold"].is_null()) {
            m.threshold = j["threshold"].get<double>();
        }
        m.rounding = j.at("rounding").get<bool>();
        m.squared = j.at("squared").get<bool>();
        m.include_self = j.value("include_self", true);
        if (j.contains("neighbor_cap") && !j["neighbor_cap"].is_null()) {
            m.neighbor_cap = j["neighbor_cap"].get<std::size_t>();
        }
        m.version = j.at("version").get<int>();
        if (m.version != 1) throw FormatError("unsupported model version");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed meta.json: ") + e.what());
    }
}

namespace detail {

inline std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

inline std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    return in;
}

inline std::string where(const fs::path& p, std::size_t line) {
    return p.filename().string() + ":" + std::to_string(line);
}

inline void write_files(const fs::path& dir, const Model& m) {
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "meta.json");
        out << meta_to_json(m.meta).dump(2) << '\n';
    }
    {
        auto out = open_out(dir / "vocab.tsv");
        for (WordId i = 0; i < m.vocab.size(); ++i) {
            out << i << '\t' << m.vocab.word(i) << '\t' << m.vocab.count(i) << '\n';
        }
    }
    {
        auto out = open_out(dir / "roles.tsv");
        for (RoleId i = 0; i < m.roles.size(); ++i) {
            const auto& r = m.roles.role(i);
            out << i << '\t' << r.predicate << '\t' << r.arg.str() << '\t' << m.roles.count(i)
                << '\n';
        }
    }
    {
        auto out = open_out(dir / "matrix.tsv");
        std::string line;
        for (WordId w = 0; w < m.matrix.rows(); ++w) {
            auto row = m.matrix.row(w);
            for (std::size_t k = 0; k < row.size(); ++k) {
                line.clear();
                line += std::to_string(w);
                line += '\t';
                line += std::to_string(row.roles[k]);
                line += '\t';
                line += format_double(row.values[k]);
                line += '\n';
                out << line;
            }
        }
        if (!out) throw IoError("failed writing " + (dir / "matrix.tsv").string());
    }
}

}  // namespace detail

/// Writes `m` to `dir` via a temporary sibling directory and a rename, so a
/// failure never leaves a partial model behind. `predecessor`, when given, is
/// written under `dir/<its stage>/`.
inline void write_model(const fs::path& dir, const Model& m, const Model* predecessor = nullptr) {
    fs::path target = fs::absolute(dir).lexically_normal();
    if (target.filename().empty()) target = target.parent_path();
    fs::path tmp = target;
    tmp += ".tmp-" + std::to_string(::getpid());
    std::error_code ec;
    fs::remove_all(tmp, ec);
    try {
        detail::write_files(tmp, m);
        if (predecessor) {
            detail::write_files(tmp / std::string(to_string(predecessor->meta.stage)), *predecessor);
        }
        if (fs::exists(target)) fs::remove_all(target);
        fs::rename(tmp, target);
    } catch (const fs::filesystem_error& e) {
        fs::remove_all(tmp, ec);
        throw IoError(e.what());
    } catch (...) {
        fs::remove_all(tmp, ec);
        throw;
    }
}

inline Model read_model(const fs::path& dir) {
    Model m;
    {
        auto in = detail::open_in(dir / "meta.json");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("malformed meta.json in " + dir.string() + ": " + e.what());
        }
        m.meta = meta_from_json(j);
    }
    std::string line;
    {
        fs::path p = dir / "vocab.tsv";
        auto in = detail::open_in(p);
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            auto f = split(line, '\t');
            auto idx = f.size() == 3 ? parse_int<std::uint64_t>(f[0]) : std::nullopt;
            auto count = f.size() == 3 ? parse_int<std::uint64_t>(f[2]) : std::nullopt;
            if (!idx || !count || *idx != m.vocab.size() || f[1].empty()) {
                throw FormatError("malformed vocabulary line at " + detail::where(p, n));
            }
            m.vocab.add(std::string(f[1]), *count);
        }
    }
    {
        fs::path p = dir / "roles.tsv";
        auto in = detail::open_in(p);
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            auto f = split(line, '\t');
            auto idx = f.size() == 4 ? parse_int<std::uint64_t>(f[0]) : std::nullopt;
            auto count = f.size() == 4 ? parse_int<std::uint64_t>(f[3]) : std::nullopt;
            if (!idx || !count || *idx != m.roles.size()) {
                throw FormatError("malformed role line at " + detail::where(p, n));
            }
            m.roles.add(make_role(f[1], f[2]), *count);
        }
    }
    {
        fs::path p = dir / "matrix.tsv";
        auto in = detail::open_in(p);
        std::vector<Triple> triples;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            auto f = split(line, '\t');
            auto w = f.size() == 3 ? parse_int<WordId>(f[0]) : std::nullopt;
            auto r = f.size() == 3 ? parse_int<RoleId>(f[1]) : std::nullopt;
            auto v = f.size() == 3 ? parse_double(f[2]) : std::nullopt;
            if (!w || !r || !v || *v <= 0.0) {
                throw FormatError("malformed matrix line at " + detail::where(p, n));
            }
            triples.push_back({*w, *r, *v});
        }
        try {
            m.matrix = SparseRoleMatrix::from_triples(m.vocab.size(), m.roles.size(), m.meta.stage,
                                                      triples);
        } catch (const ContractError& e) {
            throw FormatError("invalid matrix.tsv in " + dir.string() + ": " + e.what());
        }
    }
    return m;
}

inline Model read_model(const fs::path& dir, Stage expected) {
    Model m = read_model(dir);
    if (m.meta.stage != expected) {
        throw ContractError(dir.string() + " holds a " + std::string(to_string(m.meta.stage)) +
                            "-stage model, expected " + std::string(to_string(expected)));
    }
    return m;
}

}  // namespace affvec

#pragma once

// Streams PAS-annotated sentences (JSON Lines), applies the predicate
// whitelist and label filters, and accumulates the word-by-role count
// matrix W in two passes: frequencies first, then surviving pairs.

#include <algorithm>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "affvec/core.hpp"
#include "affvec/parallel.hpp"

namespace affvec {

struct PasArgument {
    std::string label;  // raw label text; validated during extraction
    std::vector<std::string> head_tokens;
};

struct PasFrame {
    std::string predicate_lemma;
    std::optional<std::size_t> predicate_index;
    std::vector<PasArgument> args;
};

struct SentenceRecord {
    std::vector<std::string> tokens;
    std::vector<PasFrame> frames;
};

struct IngestConfig {
    std::optional<std::set<std::string>> verb_whitelist;
    std::uint64_t min_count = 100;
    std::optional<std::set<ArgumentLabel>> accepted_labels;

    void validate() const {
        if (min_count < 1) throw ContractError("min_count must be >= 1");
        if (verb_whitelist && verb_whitelist->empty()) {
            throw ContractError("verb whitelist is empty");
        }
    }
};

struct IngestStats {
    std::uint64_t sentences = 0;
    std::uint64_t malformed_lines = 0;
    std::uint64_t frames_kept = 0;
    std::uint64_t frames_dropped = 0;
    std::uint64_t rejected_labels = 0;
    std::uint64_t skipped_tokens = 0;
    std::uint64_t pairs_extracted = 0;
    std::uint64_t pairs_kept = 0;

    IngestStats& operator+=(const IngestStats& o) {
        sentences += o.sentences;
        malformed_lines += o.malformed_lines;
        frames_kept += o.frames_kept;
        frames_dropped += o.frames_dropped;
        rejected_labels += o.rejected_labels;
        skipped_tokens += o.skipped_tokens;
        pairs_extracted += o.pairs_extracted;
        pairs_kept += o.pairs_kept;
        return *this;
    }
};

/// Loads a whitelist: one lemma per line, `#` starts a comment.
inline std::set<std::string> read_whitelist(std::istream& in) {
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        out.insert(to_lower(std::string_view(line).substr(b, e - b + 1)));
    }
    return out;
}

inline std::set<std::string> read_whitelist(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read whitelist " + path);
    return read_whitelist(in);
}

/// Parses one JSONL record. Throws FormatError when the line is not a JSON
/// object with `tokens` and `frames` arrays of the documented shape.
inline SentenceRecord parse_record(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("invalid JSON: ") + e.what());
    }
    try {
        SentenceRecord rec;
        rec.tokens = j.at("tokens").get<std::vector<std::string>>();
        for (const auto& jf : j.at("frames")) {
            PasFrame f;
            f.predicate_lemma = jf.at("predicate_lemma").get<std::string>();
            if (jf.contains("predicate_index") && !jf["predicate_index"].is_null()) {
                f.predicate_index = jf["predicate_index"].get<std::size_t>();
            }
            for (const auto& ja : jf.at("args")) {
                f.args.push_back({ja.at("label").get<std::string>(),
                                  ja.at("head_tokens").get<std::vector<std::string>>()});
            }
            rec.frames.push_back(std::move(f));
        }
        return rec;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("record does not match schema: ") + e.what());
    }
}

inline std::string to_json_line(const SentenceRecord& rec) {
    nlohmann::ordered_json j;
    j["tokens"] = rec.tokens;
    j["frames"] = nlohmann::ordered_json::array();
    for (const auto& f : rec.frames) {
        nlohmann::ordered_json jf;
        jf["predicate_lemma"] = f.predicate_lemma;
        if (f.predicate_index) jf["predicate_index"] = *f.predicate_index;
        jf["args"] = nlohmann::ordered_json::array();
        for (const auto& a : f.args) {
            jf["args"].push_back({{"label", a.label}, {"head_tokens", a.head_tokens}});
        }
        j["frames"].push_back(std::move(jf));
    }
    return j.dump();
}

using ContextPair = std::pair<RoleContext, std::string>;

/// One (role, word) pair per accepted argument token, in frame, argument,
/// token order. Frames outside the whitelist and arguments with rejected
/// labels contribute nothing; `stats` (optional) records what was dropped.
inline std::vector<ContextPair> extract_contexts(const SentenceRecord& record,
                                                 const IngestConfig& cfg,
                                                 IngestStats* stats = nullptr) {
    IngestStats local;
    std::vector<ContextPair> out;
    for (const auto& frame : record.frames) {
        std::string predicate = to_lower(frame.predicate_lemma);
        if (!valid_predicate(predicate) ||
            (cfg.verb_whitelist && !cfg.verb_whitelist->count(predicate))) {
            ++local.frames_dropped;
            continue;
        }
        ++local.frames_kept;
        for (const auto& arg : frame.args) {
            auto label = ArgumentLabel::try_parse(arg.label);
            if (!label) {
                ++local.rejected_labels;
                continue;
            }
            if (cfg.accepted_labels && !cfg.accepted_labels->count(*label)) continue;
            for (const auto& tok : arg.head_tokens) {
                if (tok.empty() || has_space(tok)) {
                    ++local.skipped_tokens;
                    continue;
                }
                out.emplace_back(RoleContext{predicate, *label}, to_lower(tok));
            }
        }
    }
    local.pairs_extracted = out.size();
    if (stats) *stats += local;
    return out;
}

struct CountsResult {
    Vocabulary vocab;
    RoleIndex roles;
    SparseRoleMatrix matrix;
    IngestStats stats;
};

namespace detail {

/// Replays a record source. `visit(batch)` is called with successive batches
/// of records; sources must replay identically on every call.
using RecordSource = std::function<void(const std::function<void(std::vector<SentenceRecord>&)>&,
                                        IngestStats&)>;

inline constexpr std::size_t kBatchLines = 4096;

inline RecordSource jsonl_source(std::string path, std::size_t workers) {
    return [path = std::move(path), workers](
               const std::function<void(std::vector<SentenceRecord>&)>& visit, IngestStats& stats) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read corpus " + path);
        std::vector<std::string> lines;
        std::vector<SentenceRecord> batch;
        auto flush = [&] {
            std::vector<std::optional<SentenceRecord>> parsed(lines.size());
            parallel_blocks(lines.size(), workers, [&](std::size_t b, std::size_t e, std::size_t) {
                for (std::size_t i = b; i < e; ++i) {
                    try {
                        parsed[i] = parse_record(lines[i]);
                    } catch (const FormatError&) {
                    }
                }
            });
            batch.clear();
            for (auto& p : parsed) {
                if (p) {
                    batch.push_back(std::move(*p));
                } else {
                    ++stats.malformed_lines;
                }
            }
            lines.clear();
            visit(batch);
        };
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            lines.push_back(std::move(line));
            if (lines.size() == kBatchLines) flush();
        }
        if (in.bad()) throw IoError("read failure on corpus " + path);
        if (!lines.empty()) flush();
    };
}

inline RecordSource memory_source(std::vector<SentenceRecord> records) {
    return [records = std::move(records)](
               const std::function<void(std::vector<SentenceRecord>&)>& visit, IngestStats&) {
        for (std::size_t b = 0; b < records.size(); b += kBatchLines) {
            std::vector<SentenceRecord> batch(
                records.begin() + static_cast<std::ptrdiff_t>(b),
                records.begin() + static_cast<std::ptrdiff_t>(std::min(records.size(), b + kBatchLines)));
            visit(batch);
        }
    };
}

inline CountsResult build_counts(const RecordSource& source, const IngestConfig& cfg,
                                 std::size_t workers) {
    cfg.validate();
    workers = std::max<std::size_t>(workers, 1);
    CountsResult result;

    // Pass 1: frequencies on the untrimmed pair stream.
    using FreqMap = std::unordered_map<std::string, std::uint64_t>;
    std::vector<FreqMap> word_freq(workers), role_freq(workers);
    std::vector<IngestStats> shard_stats(workers);
    source(
        [&](std::vector<SentenceRecord>& batch) {
            parallel_blocks(batch.size(), workers, [&](std::size_t b, std::size_t e, std::size_t t) {
                for (std::size_t i = b; i < e; ++i) {
                    ++shard_stats[t].sentences;
                    for (auto& [role, word] : extract_contexts(batch[i], cfg, &shard_stats[t])) {
                        ++word_freq[t][word];
                        ++role_freq[t][render_role(role)];
                    }
                }
            });
        },
        result.stats);
    for (std::size_t t = 1; t < workers; ++t) {
        for (auto& [k, v] : word_freq[t]) word_freq[0][k] += v;
        for (auto& [k, v] : role_freq[t]) role_freq[0][k] += v;
    }
    for (auto& s : shard_stats) result.stats += s;

    std::vector<std::pair<std::string, std::uint64_t>> words;
    for (auto& [w, c] : word_freq[0]) {
        if (c >= cfg.min_count) words.emplace_back(w, c);
    }
    std::sort(words.begin(), words.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    for (auto& [w, c] : words) result.vocab.add(w, c);

    std::vector<RoleContext> kept_roles;
    for (auto& [k, c] : role_freq[0]) {
        if (c >= cfg.min_count) kept_roles.push_back(parse_role(k));
    }
    std::sort(kept_roles.begin(), kept_roles.end());
    std::unordered_map<std::string, RoleId> role_id;
    for (RoleId i = 0; i < kept_roles.size(); ++i) role_id.emplace(render_role(kept_roles[i]), i);

    // Pass 2: count pairs whose word and role both survived.
    std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> cells(workers);
    IngestStats ignored;
    source(
        [&](std::vector<SentenceRecord>& batch) {
            parallel_blocks(batch.size(), workers, [&](std::size_t b, std::size_t e, std::size_t t) {
                for (std::size_t i = b; i < e; ++i) {
                    for (auto& [role, word] : extract_contexts(batch[i], cfg)) {
                        auto w = result.vocab.find(word);
                        if (!w) continue;
                        auto r = role_id.find(render_role(role));
                        if (r == role_id.end()) continue;
                        ++cells[t][(std::uint64_t{*w} << 32) | r->second];
                    }
                }
            });
        },
        ignored);
    for (std::size_t t = 1; t < workers; ++t) {
        for (auto& [k, v] : cells[t]) cells[0][k] += v;
    }
    if (cells[0].empty()) {
        throw EmptyModelError("empty model: no (word, role) pair survives min_count=" +
                              std::to_string(cfg.min_count));
    }

    std::vector<std::pair<std::uint64_t, std::uint64_t>> sorted(cells[0].begin(), cells[0].end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<Triple> triples;
    triples.reserve(sorted.size());
    std::vector<std::uint64_t> role_mass(kept_roles.size(), 0);
    for (auto& [key, c] : sorted) {
        auto w = static_cast<WordId>(key >> 32);
        auto r = static_cast<RoleId>(key & 0xffffffffu);
        triples.push_back({w, r, static_cast<double>(c)});
        role_mass[r] += c;
        result.stats.pairs_kept += c;
    }
    for (RoleId i = 0; i < kept_roles.size(); ++i) result.roles.add(kept_roles[i], role_mass[i]);
    result.matrix = SparseRoleMatrix::from_triples(result.vocab.size(), result.roles.size(),
                                                   Stage::counts, triples);
    return result;
}

}  // namespace detail

/// Builds W from a JSONL corpus file (read twice).
inline CountsResult build_counts(const std::string& corpus_path, const IngestConfig& cfg,
                                 std::size_t workers = 1) {
    return detail::build_counts(detail::jsonl_source(corpus_path, workers), cfg, workers);
}

/// Builds W from in-memory records.
inline CountsResult build_counts(std::vector<SentenceRecord> records, const IngestConfig& cfg,
                                 std::size_t workers = 1) {
    return detail::build_counts(detail::memory_source(std::move(records)), cfg, workers);
}

}  // namespace affvec

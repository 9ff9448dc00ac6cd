#pragma once

// Command-line front end: build, refine, query, eval.
//
// Exit codes: 0 success, 1 generic failure, 2 lookup or usage error.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "affvec/affvec.hpp"

namespace affvec::cli {

inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

struct UsageError : Error {
    using Error::Error;
};

namespace detail {

inline std::string pct(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v << '%';
    return os.str();
}

inline std::set<ArgumentLabel> parse_labels(const std::string& csv) {
    std::set<ArgumentLabel> out;
    for (auto part : split(csv, ',')) {
        if (!part.empty()) out.insert(ArgumentLabel::parse(part));
    }
    if (out.empty()) throw UsageError("--labels lists no labels");
    return out;
}

inline nlohmann::ordered_json role_json(const RoleContext& r) { return render_role(r); }

struct BuildOptions {
    std::string corpus;
    std::string whitelist;
    std::uint64_t min_count = 100;
    std::string ppmi_mode = "arg";
    std::string log_base = "e";
    std::string labels;
    std::string out;
    std::size_t workers = 1;
};

inline int cmd_build(const BuildOptions& o, std::ostream& out) {
    IngestConfig cfg;
    cfg.min_count = o.min_count;
    if (!o.whitelist.empty()) cfg.verb_whitelist = read_whitelist(o.whitelist);
    if (!o.labels.empty()) cfg.accepted_labels = parse_labels(o.labels);
    PpmiConfig pcfg{parse_ppmi_mode(o.ppmi_mode), parse_log_base(o.log_base)};

    CountsResult counts = build_counts(o.corpus, cfg, o.workers);

    Model counts_model;
    counts_model.meta.stage = Stage::counts;
    counts_model.meta.min_count = cfg.min_count;
    counts_model.meta.ppmi_mode = std::string(to_string(pcfg.mode));
    counts_model.meta.log_base = std::string(to_string(pcfg.log_base));
    counts_model.vocab = counts.vocab;
    counts_model.roles = counts.roles;
    counts_model.matrix = counts.matrix;

    Model ppmi_model;
    ppmi_model.meta = counts_model.meta;
    ppmi_model.meta.stage = Stage::ppmi;
    ppmi_model.vocab = counts.vocab;
    ppmi_model.roles = counts.roles;
    ppmi_model.matrix = ppmi(counts.matrix, counts.roles, pcfg);

    write_model(o.out, ppmi_model, &counts_model);

    const auto& s = counts.stats;
    out << "sentences: " << s.sentences << '\n'
        << "malformed lines: " << s.malformed_lines << '\n'
        << "frames kept: " << s.frames_kept << '\n'
        << "frames dropped: " << s.frames_dropped << '\n'
        << "rejected labels: " << s.rejected_labels << '\n'
        << "pairs extracted: " << s.pairs_extracted << '\n'
        << "pairs kept: " << s.pairs_kept << '\n'
        << "vocabulary: " << counts.vocab.size() << '\n'
        << "roles: " << counts.roles.size() << '\n'
        << "count entries: " << counts.matrix.nnz() << '\n'
        << "count sparsity: " << pct(counts.matrix.sparsity_percent()) << '\n'
        << "ppmi mode: " << to_string(pcfg.mode) << '\n'
        << "ppmi entries: " << ppmi_model.matrix.nnz() << '\n'
        << "ppmi sparsity: " << pct(ppmi_model.matrix.sparsity_percent()) << '\n';
    return kOk;
}

struct RefineOptions {
    std::string model;
    std::string embeddings;
    double threshold = 0.5;
    bool no_rounding = false;
    bool no_square = false;
    bool include_self = true;
    std::optional<std::size_t> neighbor_cap;
    std::string out;
    std::size_t workers = 1;
};

inline int cmd_refine(const RefineOptions& o, std::ostream& out) {
    RefineConfig cfg;
    cfg.threshold = o.threshold;
    cfg.rounding = !o.no_rounding;
    cfg.square = !o.no_square;
    cfg.include_self = o.include_self;
    cfg.neighbor_cap = o.neighbor_cap;
    cfg.validate();

    Model base = read_model(o.model, Stage::ppmi);
    DenseEmbeddings a = load_embeddings(o.embeddings);

    Model refined;
    refined.meta = base.meta;
    refined.meta.stage = Stage::refined;
    refined.meta.threshold = cfg.threshold;
    refined.meta.rounding = cfg.rounding;
    refined.meta.squared = cfg.square;
    refined.meta.include_self = cfg.include_self;
    refined.meta.neighbor_cap = cfg.neighbor_cap;
    refined.vocab = base.vocab;
    refined.roles = base.roles;
    refined.matrix = refine(base.matrix, base.vocab, a, cfg, o.workers);

    std::size_t shared = CandidatePool::build(base.vocab, a).words.size();
    write_model(o.out, refined, &base);

    out << "vocabulary: " << base.vocab.size() << '\n'
        << "with embeddings: " << shared << '\n'
        << "threshold: " << format_double(cfg.threshold) << '\n'
        << "rounding: " << (cfg.rounding ? "half-down" : "off") << '\n'
        << "squared: " << (cfg.square ? "yes" : "no") << '\n'
        << "include self: " << (cfg.include_self ? "yes" : "no") << '\n'
        << "ppmi entries: " << base.matrix.nnz() << '\n'
        << "refined entries: " << refined.matrix.nnz() << '\n'
        << "sparsity: " << pct(refined.matrix.sparsity_percent()) << '\n';
    return kOk;
}

inline QueryModel open_query_model(const std::string& dir, const std::string& embeddings) {
    QueryModel m(read_model(dir, Stage::refined));
    if (!embeddings.empty()) {
        Model base = read_model(fs::path(dir) / "ppmi", Stage::ppmi);
        m.enable_synthesis(std::move(base), load_embeddings(embeddings));
    }
    return m;
}

struct QueryOptions {
    std::string model;
    std::string kind;
    std::vector<std::string> terms;
    std::string arg1 = "ARG0";
    std::string arg2 = "ARG1";
    std::size_t k = 10;
    std::string embeddings;
    bool json = false;
};

inline int cmd_query(const QueryOptions& o, std::ostream& out) {
    auto need = [&](std::size_t n) {
        if (o.terms.size() != n) {
            throw UsageError("query " + o.kind + " expects " + std::to_string(n) + " argument(s)");
        }
    };
    std::optional<ArgumentLabel> a1, a2;
    std::optional<RoleContext> role;
    if (o.kind == "mesh") {
        need(2);
        a1 = ArgumentLabel::try_parse(o.arg1);
        a2 = ArgumentLabel::try_parse(o.arg2);
        if (!a1) throw UsageError("invalid --arg1 label '" + o.arg1 + "'");
        if (!a2) throw UsageError("invalid --arg2 label '" + o.arg2 + "'");
    } else if (o.kind == "top-roles" || o.kind == "similar") {
        need(1);
    } else if (o.kind == "top-words") {
        need(1);
        try {
            role = parse_role(o.terms[0]);
        } catch (const FormatError& e) {
            throw UsageError(e.what());
        }
    } else if (o.kind == "contrast") {
        need(2);
    } else {
        throw UsageError("unknown query kind '" + o.kind + "'");
    }

    QueryModel m = open_query_model(o.model, o.embeddings);
    std::vector<std::string> terms;
    for (const auto& t : o.terms) terms.push_back(o.kind == "top-words" ? t : to_lower(t));

    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    std::ostringstream text;
    if (o.kind == "mesh") {
        auto rel = mesh(m, terms[0], terms[1], *a1, *a2);
        if (rel.size() > o.k) rel.erase(rel.begin() + static_cast<std::ptrdiff_t>(o.k), rel.end());
        for (const auto& r : rel) {
            text << r.predicate << '\t' << format_double(r.score) << '\t'
                 << render_role(r.role_pair.first) << '=' << format_double(r.feature_values.first)
                 << '\t' << render_role(r.role_pair.second) << '='
                 << format_double(r.feature_values.second) << '\n';
            j.push_back({{"predicate", r.predicate},
                         {"score", r.score},
                         {"role1", role_json(r.role_pair.first)},
                         {"role2", role_json(r.role_pair.second)},
                         {"value1", r.feature_values.first},
                         {"value2", r.feature_values.second}});
        }
    } else if (o.kind == "top-roles") {
        for (const auto& r : top_roles(m, terms[0], o.k)) {
            text << render_role(r.role) << '\t' << format_double(r.value) << '\n';
            j.push_back({{"role", role_json(r.role)}, {"value", r.value}});
        }
    } else if (o.kind == "top-words") {
        for (const auto& w : top_words(m, *role, o.k)) {
            text << w.word << '\t' << format_double(w.value) << '\n';
            j.push_back({{"word", w.word}, {"value", w.value}});
        }
    } else if (o.kind == "contrast") {
        for (const auto& c : contrast(m, terms[0], terms[1], o.k)) {
            const std::string& who = c.dominant == Dominant::first ? terms[0] : terms[1];
            text << render_role(c.role) << '\t' << format_double(c.difference) << '\t' << who << '\n';
            j.push_back({{"role", role_json(c.role)}, {"difference", c.difference}, {"dominant", who}});
        }
    } else {
        for (const auto& w : similar_words(m, terms[0], o.k)) {
            text << w.word << '\t' << format_double(w.value) << '\n';
            j.push_back({{"word", w.word}, {"cosine", w.value}});
        }
    }
    if (o.json) {
        out << j.dump() << '\n';
    } else {
        out << text.str();
    }
    return kOk;
}

struct EvalCliOptions {
    std::string model;
    std::string bench;
    std::string mode = "sparse";
    std::string embeddings;
    std::optional<std::size_t> svd_rank;
    bool synthesize_oov = false;
    bool json = false;
};

inline nlohmann::ordered_json report_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    if (r.spearman) {
        j["spearman"] = *r.spearman;
    } else {
        j["spearman"] = nullptr;
    }
    j["pairs_used"] = r.pairs_used;
    j["oov_failures"] = r.oov_failures;
    j["mode"] = std::string(to_string(r.mode));
    return j;
}

inline void print_report(const EvalReport& r, bool json, std::ostream& out) {
    if (!json) {
        out << "mode: " << to_string(r.mode) << '\n'
            << "spearman: " << (r.spearman ? format_double(*r.spearman) : "undefined") << '\n'
            << "pairs used: " << r.pairs_used << '\n'
            << "oov failures: " << r.oov_failures << '\n';
    }
    out << report_json(r).dump() << '\n';
}

inline int cmd_eval(const EvalCliOptions& o, std::ostream& out) {
    EvalOptions opt;
    opt.mode = parse_eval_mode(o.mode);
    opt.svd_rank = o.svd_rank;
    opt.synthesize_oov = o.synthesize_oov;
    if (opt.mode == EvalMode::concat && o.embeddings.empty()) {
        throw UsageError("--mode concat requires --embeddings");
    }
    if (opt.mode == EvalMode::svd && !opt.svd_rank) throw UsageError("--mode svd requires --svd-rank");
    if (opt.synthesize_oov && o.embeddings.empty()) {
        throw UsageError("--synthesize-oov requires --embeddings");
    }
    auto pairs = load_benchmark(o.bench);
    QueryModel m = open_query_model(o.model, o.embeddings);
    try {
        print_report(evaluate(m, m.embeddings(), pairs, opt), o.json, out);
    } catch (const UndefinedEvalError& e) {
        print_report(e.report, o.json, out);
        throw;
    }
    return kOk;
}

}  // namespace detail

/// Runs the CLI with the given arguments (argv[0] is the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Affordance-based explicit word representations from role-labelled corpora"};
    app.require_subcommand(1);
    std::size_t workers = default_workers();

    detail::BuildOptions b;
    auto* build = app.add_subcommand("build", "Count role contexts and weight them with PPMI");
    build->add_option("--corpus", b.corpus, "PAS JSON-Lines corpus")->required()->check(CLI::ExistingFile);
    build->add_option("--whitelist", b.whitelist, "Predicate whitelist (one lemma per line)")
        ->check(CLI::ExistingFile);
    build->add_option("--min-count", b.min_count, "Minimum word and role frequency")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    build->add_option("--ppmi", b.ppmi_mode, "PPMI variant")
        ->capture_default_str()
        ->check(CLI::IsMember({"arg", "plain"}));
    build->add_option("--log-base", b.log_base, "Logarithm base")
        ->capture_default_str()
        ->check(CLI::IsMember({"e", "2", "10"}));
    build->add_option("--labels", b.labels, "Comma-separated accepted argument labels");
    build->add_option("--out", b.out, "Output model directory")->required();
    build->add_option("--workers", workers, "Worker threads (env AFFVEC_WORKERS)")->check(CLI::PositiveNumber);

    detail::RefineOptions r;
    auto* refine_cmd = app.add_subcommand("refine", "Interpolate, round and square a PPMI model");
    refine_cmd->add_option("--model", r.model, "PPMI-stage model directory")->required();
    refine_cmd->add_option("--embeddings", r.embeddings, "word2vec text embeddings")
        ->required()
        ->check(CLI::ExistingFile);
    refine_cmd->add_option("--threshold", r.threshold, "Cosine threshold for neighbors")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    refine_cmd->add_flag("--no-rounding", r.no_rounding, "Disable half-down rounding");
    refine_cmd->add_flag("--no-square", r.no_square, "Disable elementwise squaring");
    refine_cmd->add_option("--include-self", r.include_self, "Include the word itself at weight 1")
        ->capture_default_str();
    refine_cmd->add_option("--neighbor-cap", r.neighbor_cap, "Keep at most N neighbors")
        ->check(CLI::PositiveNumber);
    refine_cmd->add_option("--out", r.out, "Output model directory")->required();
    refine_cmd->add_option("--workers", workers, "Worker threads (env AFFVEC_WORKERS)")
        ->check(CLI::PositiveNumber);

    detail::QueryOptions q;
    auto* query = app.add_subcommand("query", "Query a refined model");
    query->add_option("kind", q.kind, "mesh | top-roles | top-words | contrast | similar")
        ->required()
        ->check(CLI::IsMember({"mesh", "top-roles", "top-words", "contrast", "similar"}));
    query->add_option("terms", q.terms, "Words or role");
    query->add_option("--model", q.model, "Refined model directory")->required();
    query->add_option("--arg1", q.arg1, "Argument label of the first word (mesh)")->capture_default_str();
    query->add_option("--arg2", q.arg2, "Argument label of the second word (mesh)")->capture_default_str();
    query->add_option("-k", q.k, "Number of results")->capture_default_str();
    query->add_option("--embeddings", q.embeddings, "Embeddings enabling OOV synthesis")
        ->check(CLI::ExistingFile);
    query->add_flag("--json", q.json, "Emit JSON");

    detail::EvalCliOptions e;
    auto* eval_cmd = app.add_subcommand("eval", "Word-similarity evaluation");
    eval_cmd->add_option("--model", e.model, "Refined model directory")->required();
    eval_cmd->add_option("--bench", e.bench, "Benchmark TSV")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--mode", e.mode, "sparse | svd | concat")
        ->capture_default_str()
        ->check(CLI::IsMember({"sparse", "svd", "concat"}));
    eval_cmd->add_option("--embeddings", e.embeddings, "word2vec text embeddings")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--svd-rank", e.svd_rank, "Rank for svd mode")->check(CLI::PositiveNumber);
    eval_cmd->add_flag("--synthesize-oov", e.synthesize_oov, "Synthesize rows for OOV words");
    eval_cmd->add_flag("--json", e.json, "Emit only the JSON report");

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& pe) {
        int code = app.exit(pe, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*build) {
            b.workers = workers;
            return detail::cmd_build(b, out);
        }
        if (*refine_cmd) {
            r.workers = workers;
            return detail::cmd_refine(r, out);
        }
        if (*query) return detail::cmd_query(q, out);
        if (*eval_cmd) return detail::cmd_eval(e, out);
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << '\n';
        return kUsage;
    } catch (const LookupError& ex) {
        err << "error: " << ex.what() << '\n';
        return kUsage;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kFailure;
    }
    return kFailure;
}

}  // namespace affvec::cli

#pragma once

// Command implementations behind the `cfair` tool. Each writes its outputs
// plus a `<output>.meta.json` sidecar carrying input digests and a timestamp;
// the outputs themselves are byte-stable across runs and thread counts.

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cfair/concurrency.hpp"
#include "cfair/config.hpp"
#include "cfair/corpus.hpp"
#include "cfair/evalset.hpp"
#include "cfair/generate.hpp"
#include "cfair/io.hpp"
#include "cfair/lexicon.hpp"
#include "cfair/llm.hpp"
#include "cfair/predictions.hpp"
#include "cfair/report.hpp"
#include "cfair/scorer.hpp"
#include "cfair/scorer_client.hpp"

namespace cfair::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline json input_record(const fs::path &p) { return {{"path", p.string()}, {"sha256", io::file_digest(p)}}; }

inline json make_meta(std::string_view command, const std::vector<std::pair<std::string, fs::path>> &inputs,
                      json params = json::object()) {
    json in = json::object();
    for (const auto &[name, path] : inputs) in[name] = input_record(path);
    return {{"command", command}, {"inputs", in}, {"params", std::move(params)}, {"timestamp", io::utc_timestamp()}};
}

inline fs::path meta_path(const fs::path &out) { return fs::path(out.string() + ".meta.json"); }

inline void write_with_meta(const fs::path &out, std::string_view content, const json &meta) {
    io::write_file(out, content);
    io::write_file(meta_path(out), meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// lexicon validate

struct LexiconSummary {
    std::size_t terms = 0;
    std::size_t categories = 0;
    std::map<std::pair<Category, Pos>, std::size_t> buckets;
};

inline LexiconSummary lexicon_validate(const RunConfig &cfg, std::ostream &out) {
    const auto lex = load_lexicon(cfg.lexicon);
    const auto dict = build_dictionary(lex);
    LexiconSummary s;
    s.terms = lex.size();
    std::set<Category> cats;
    for (const auto &t : lex.terms()) cats.insert(t.category);
    s.categories = cats.size();
    for (const auto &[key, bucket] : dict.buckets()) s.buckets[key] = bucket.size();

    out << cfg.lexicon.string() << ": " << s.terms << " terms, " << s.categories << " categories\n";
    for (const auto c : all_categories) {
        if (!cats.count(c)) continue;
        const auto nouns = s.buckets.count({c, Pos::noun}) ? s.buckets.at({c, Pos::noun}) : 0;
        const auto adjs = s.buckets.count({c, Pos::adjective}) ? s.buckets.at({c, Pos::adjective}) : 0;
        out << "  " << std::left << std::setw(12) << to_string(c) << " noun " << std::right << std::setw(3) << nouns
            << "   adjective " << std::setw(3) << adjs << '\n';
    }
    return s;
}

// ---------------------------------------------------------------------------
// corpus prep / stats

struct PrepResult {
    std::size_t read = 0;
    std::size_t kept = 0;
};

inline PrepResult corpus_prep(const RunConfig &cfg, const fs::path &in, const fs::path &out, bool keep_all,
                              std::ostream &log) {
    const auto lex = load_lexicon(cfg.lexicon);
    auto posts = load_posts(in);
    for (auto &p : posts) p.text = preprocess(p.text);
    const auto kept = keep_all ? posts : filter_corpus(posts, lex);
    write_with_meta(out, posts_to_jsonl(kept),
                    make_meta("corpus prep", {{"posts", in}, {"lexicon", cfg.lexicon}}, {{"keep_all", keep_all}}));
    log << "read " << posts.size() << " posts, kept " << kept.size() << " with at least one social group term\n";
    return {posts.size(), kept.size()};
}

/// Posts or counterfactual records; only text and label are needed for stats.
inline std::vector<Post> load_labeled_texts(const fs::path &path) {
    std::vector<Post> out;
    io::for_each_jsonl_file(path, [&](const json &j, std::size_t line) {
        Post p;
        p.id = j.contains("id") ? j["id"].get<std::string>() : std::to_string(line);
        p.text = j.at("text").get<std::string>();
        p.label = require_label(j.at("label").get<std::string>());
        out.push_back(std::move(p));
    });
    return out;
}

/// Lexicon extended with terms of `extra` whose surface is not yet present.
inline Lexicon merge_lexicons(const Lexicon &base, const Lexicon &extra) {
    std::vector<SocialGroupTerm> terms(base.terms().begin(), base.terms().end());
    for (const auto &t : extra.terms()) {
        if (base.find(t.surface) == Lexicon::npos) terms.push_back(t);
    }
    return Lexicon(std::move(terms), base.language());
}

inline json corpus_stats(const RunConfig &cfg, const fs::path &in, const std::optional<fs::path> &out,
                         const std::optional<fs::path> &extra_lexicon, std::ostream &log) {
    auto lex = load_lexicon(cfg.lexicon);
    std::vector<std::pair<std::string, fs::path>> inputs{{"posts", in}, {"lexicon", cfg.lexicon}};
    if (extra_lexicon) {
        lex = merge_lexicons(lex, load_lexicon(*extra_lexicon));
        inputs.emplace_back("extra_lexicon", *extra_lexicon);
    }
    const auto stats = cfair::corpus_stats(load_labeled_texts(in), lex);
    json doc = to_json(stats);
    if (out) {
        json meta = make_meta("corpus stats", inputs,
                              {{"avg_len_unit", "whitespace tokens"}, {"entropy_unit", "bits"},
                               {"entropy_counts", "every term occurrence"}});
        write_with_meta(*out, doc.dump(2) + "\n", meta);
    }
    log << std::left << std::setw(14) << "label" << std::right << std::setw(8) << "cnt" << std::setw(8) << "len"
        << std::setw(8) << "ent" << '\n';
    for (const auto &[label, s] : stats.per_label) {
        std::ostringstream ent;
        if (s.sgt_entropy) {
            ent << std::fixed << std::setprecision(2) << *s.sgt_entropy;
        } else {
            ent << "-";
        }
        log << std::left << std::setw(14) << to_string(label) << std::right << std::setw(8) << s.count << std::setw(8)
            << std::fixed << std::setprecision(1) << s.avg_len << std::setw(8) << ent.str() << '\n';
    }
    return doc;
}

// ---------------------------------------------------------------------------
// generate

inline std::unique_ptr<ScorerBackend> make_scorer(const ScorerConfig &cfg, const std::vector<Post> &corpus) {
    validate_scorer(cfg);
    if (cfg.backend == "ngram") {
        std::vector<std::string> sentences;
        if (cfg.train) {
            if (cfg.train->extension() == ".jsonl") {
                for (const auto &p : load_labeled_texts(*cfg.train)) sentences.push_back(p.text);
            } else {
                auto in = io::open_input(*cfg.train);
                for (std::string line; std::getline(in, line);) sentences.push_back(line);
            }
        } else {
            for (const auto &p : corpus) sentences.push_back(p.text);
        }
        return std::make_unique<NgramScorer>(ngram_train(sentences, cfg.order, cfg.alpha));
    }
    if (cfg.backend == "stdio") return std::make_unique<StdioScorerClient>(cfg.command);
    if (cfg.backend == "http") return std::make_unique<HttpScorerClient>(cfg.endpoint);
    return std::make_unique<ConstantScorer>(cfg.value);
}

struct GenerateOptions {
    Method method = Method::mgs;
    fs::path in;
    fs::path out;
    std::optional<fs::path> replay;  // recorded LLM replies instead of a live client
    std::optional<fs::path> record;  // save live LLM replies here
    std::size_t max_in_flight = 4;
};

struct GenerateResult {
    std::size_t posts = 0;
    std::size_t failed = 0;
    std::size_t candidates = 0;  // sll: substitutions scored
    std::size_t counterfactuals = 0;
    std::optional<ExitCode> failure_class;  // set when every post failed
};

namespace detail {
struct PostOutcome {
    std::vector<Counterfactual> cfs;
    std::size_t candidates = 0;
    std::optional<std::string> raw;
    std::optional<std::string> error;
    ExitCode code = ExitCode::ok;
};

inline json generation_summary(Method method, const std::vector<Counterfactual> &cfs, const Lexicon &lex,
                               const GenerateResult &r) {
    std::map<Label, std::pair<std::size_t, std::map<Category, std::size_t>>> per_label;
    for (const auto &cf : cfs) {
        auto &[count, cats] = per_label[cf.label];
        ++count;
        for (const auto &m : find_sgts(cf.text, lex)) ++cats[m.term.category];
    }
    json labels = json::object();
    for (const auto &[label, entry] : per_label) {
        json cats = json::object();
        for (const auto c : all_categories) cats[std::string(to_string(c))] = entry.second.count(c) ? entry.second.at(c) : 0;
        labels[std::string(to_string(label))] = {{"count", entry.first}, {"categories", cats}};
    }
    json s = {{"method", to_string(method)},
              {"posts", r.posts},
              {"posts_failed", r.failed},
              {"counterfactuals", r.counterfactuals},
              {"per_label", labels}};
    if (method == Method::sll) s["candidates_scored"] = r.candidates;
    return s;
}
}  // namespace detail

inline GenerateResult generate(const RunConfig &cfg, const GenerateOptions &opts, std::ostream &log) {
    const auto lex = load_lexicon(cfg.lexicon);
    const auto posts = load_posts(opts.in);
    std::vector<std::pair<std::string, fs::path>> inputs{{"posts", opts.in}, {"lexicon", cfg.lexicon}};
    json params = {{"method", to_string(opts.method)}};

    std::optional<SubstitutionDictionary> dict;
    std::unique_ptr<ScorerBackend> scorer;
    std::unique_ptr<llm::ReplySource> replies;
    switch (opts.method) {
        case Method::mgs:
            dict = build_dictionary(lex);
            break;
        case Method::sll:
            scorer = make_scorer(cfg.scorer, posts);
            params["scorer"] = scorer->name();
            if (cfg.scorer.train) inputs.emplace_back("scorer_train", *cfg.scorer.train);
            break;
        case Method::llmdef:
        case Method::llmlist:
            if (opts.replay) {
                replies = std::make_unique<llm::ReplayFile>(*opts.replay);
                inputs.emplace_back("replay", *opts.replay);
            } else {
                if (cfg.llm.endpoint.empty()) throw ValidationError("llm endpoint not configured and no replay file given");
                replies = std::make_unique<llm::ChatClient>(cfg.llm);
                params["llm_model"] = cfg.llm.model;
                params["llm_temperature"] = cfg.llm.temperature;
            }
            break;
    }

    const auto limit = (opts.method == Method::llmdef || opts.method == Method::llmlist) && !opts.replay
                           ? std::min(opts.max_in_flight, cfg.llm.max_in_flight)
                           : opts.max_in_flight;
    auto outcomes = parallel_map(posts.size(), limit, [&](std::size_t i) {
        detail::PostOutcome o;
        const auto &post = posts[i];
        try {
            switch (opts.method) {
                case Method::mgs:
                    o.cfs = mgs_generate(post, *dict, lex);
                    break;
                case Method::sll: {
                    auto cands = sll_candidates(post, lex);
                    o.candidates = cands.size();
                    o.cfs = sll_filter(post, std::move(cands), *scorer);
                    break;
                }
                default: {
                    const auto prompt = llm::build_prompt(opts.method, post, lex);
                    o.raw = replies->reply(post, opts.method, prompt);
                    o.cfs = llm::parse_llm_response(*o.raw, opts.method, post);
                    break;
                }
            }
        } catch (const Error &e) {
            o.error = e.what();
            o.code = e.exit_code();
        } catch (const std::exception &e) {
            o.error = e.what();
            o.code = ExitCode::failure;
        }
        return o;
    });

    GenerateResult r;
    r.posts = posts.size();
    std::vector<Counterfactual> all;
    std::vector<json> errors;
    std::vector<json> recorded;
    std::optional<ExitCode> first_failure;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto &o = outcomes[i];
        if (o.error) {
            ++r.failed;
            if (!first_failure) first_failure = o.code;
            errors.push_back({{"parent_id", posts[i].id}, {"error", *o.error}});
            continue;
        }
        r.candidates += o.candidates;
        if (o.raw) recorded.push_back(llm::replay_record(posts[i].id, opts.method, *o.raw));
        for (auto &cf : o.cfs) all.push_back(std::move(cf));
    }
    r.counterfactuals = all.size();
    if (r.posts > 0 && r.failed == r.posts) r.failure_class = first_failure;

    const auto meta = make_meta("generate " + std::string(to_string(opts.method)), inputs, params);
    write_with_meta(opts.out, counterfactuals_to_jsonl(all), meta);
    const auto summary = detail::generation_summary(opts.method, all, lex, r);
    io::write_file(fs::path(opts.out.string() + ".summary.json"), summary.dump(2) + "\n");
    io::write_file(fs::path(opts.out.string() + ".errors.jsonl"), io::to_jsonl(errors));
    if (opts.record && !opts.replay) io::write_file(*opts.record, io::to_jsonl(recorded));

    log << to_string(opts.method) << ": " << r.counterfactuals << " counterfactuals from " << (r.posts - r.failed) << "/"
        << r.posts << " posts";
    if (opts.method == Method::sll) log << " (" << r.candidates << " candidates scored)";
    log << '\n';
    for (const auto &e : errors) log << "  failed " << e["parent_id"].get<std::string>() << ": " << e["error"].get<std::string>() << '\n';
    return r;
}

// ---------------------------------------------------------------------------
// evalset build

inline std::size_t evalset_build(const RunConfig &cfg, const fs::path &out, std::ostream &log) {
    const auto lex = load_lexicon(cfg.lexicon);
    const auto templates = load_templates(cfg.templates);
    const auto sentences = build_evalset(templates, lex);
    write_with_meta(out, evalset_to_jsonl(sentences),
                    make_meta("evalset build", {{"templates", cfg.templates}, {"lexicon", cfg.lexicon}}));
    std::size_t toxic = 0;
    for (const auto &t : templates) toxic += t.toxicity == Toxicity::toxic ? 1 : 0;
    log << templates.size() << " templates (" << toxic << " toxic, " << templates.size() - toxic << " non-toxic) x "
        << lex.size() << " terms = " << sentences.size() << " sentences\n";
    return sentences.size();
}

// ---------------------------------------------------------------------------
// predict fetch

/// Items to classify from an evalset or a posts file (detected per record).
inline std::vector<ClassifyItem> load_classify_items(const fs::path &path) {
    std::vector<ClassifyItem> items;
    io::for_each_jsonl_file(path, [&](const json &j, std::size_t) {
        if (j.contains("template_id")) {
            items.push_back({j.at("template_id").get<std::string>() + ":" + j.at("sgt").get<std::string>(),
                             j.at("text").get<std::string>()});
        } else {
            items.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>()});
        }
    });
    return items;
}

inline std::vector<Prediction> predict_fetch(const RunConfig &cfg, const fs::path &in, const fs::path &out,
                                             const std::optional<fs::path> &from_file, std::ostream &log) {
    const auto items = load_classify_items(in);
    std::vector<Prediction> preds;
    std::vector<std::pair<std::string, fs::path>> inputs{{"items", in}};
    json params = json::object();
    if (from_file) {
        std::vector<std::string> ids;
        for (const auto &i : items) ids.push_back(i.id);
        preds = match_predictions(ids, load_predictions(*from_file), from_file->string());
        inputs.emplace_back("predictions", *from_file);
    } else {
        if (cfg.classifier.endpoint.empty()) throw ValidationError("classifier endpoint not configured");
        preds = fetch_predictions(items, ClassifierClient(cfg.classifier));
        params["classifier"] = cfg.classifier.endpoint;
    }
    write_with_meta(out, predictions_to_jsonl(preds), make_meta("predict fetch", inputs, params));
    log << preds.size() << " predictions written to " << out.string() << '\n';
    return preds;
}

// ---------------------------------------------------------------------------
// audit / report

struct AuditOptions {
    fs::path evalset;
    fs::path predictions;
    std::optional<fs::path> posts;             // 4-class gold
    std::optional<fs::path> post_predictions;  // 4-class predictions for those posts
    CtfMode ctf_mode = CtfMode::label;
    fs::path out_dir;
};

inline json audit(const RunConfig &cfg, const AuditOptions &opts, std::ostream &log) {
    if (opts.posts.has_value() != opts.post_predictions.has_value()) {
        throw ValidationError("classification report needs both --posts and --post-predictions");
    }
    AuditInputs in;
    in.evalset = load_evalset(opts.evalset);
    in.predictions = load_predictions(opts.predictions);
    in.ctf_mode = opts.ctf_mode;
    std::vector<std::pair<std::string, fs::path>> inputs{{"evalset", opts.evalset}, {"predictions", opts.predictions}};
    if (opts.posts) {
        in.gold_posts = load_posts(*opts.posts);
        in.post_predictions = load_predictions(*opts.post_predictions);
        inputs.emplace_back("posts", *opts.posts);
        inputs.emplace_back("post_predictions", *opts.post_predictions);
    }
    const auto report = cfair::audit(in);
    json doc = to_json(report);
    json meta = make_meta("audit", inputs);
    meta["model_id"] = cfg.model_id;
    meta.update(doc["meta"]);
    doc["meta"] = meta;

    const auto table = render_table(doc);
    io::write_file(opts.out_dir / "report.json", doc.dump(2) + "\n");
    io::write_file(opts.out_dir / "report.txt", table);
    io::write_file(opts.out_dir / "ctf_templates.csv", render_template_csv(doc));
    log << table;
    return doc;
}

inline std::string report_render(const fs::path &in, const std::string &format) {
    json doc;
    try {
        doc = json::parse(io::read_file(in));
    } catch (const json::parse_error &e) {
        throw ParseError(in.string() + ": " + e.what());
    }
    try {
        if (format == "table") return render_table(doc);
        if (format == "csv") return render_template_csv(doc);
        if (format == "json") return doc.dump(2) + "\n";
    } catch (const json::exception &e) {
        throw ShapeError(in.string() + ": not a fairness report (" + e.what() + ")");
    }
    throw ValidationError("unknown report format '" + format + "'");
}

}  // namespace cfair::pipeline

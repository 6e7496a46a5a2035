#pragma once

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfair/config.hpp"
#include "cfair/error.hpp"
#include "cfair/pipeline.hpp"

namespace cfair::cli {

/// Entry point of the `cfair` tool; returns the process exit status.
inline int run(std::vector<std::string> args, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
    CLI::App app{"Counterfactual generation and fairness auditing for Dutch hate speech classifiers", "cfair"};
    app.require_subcommand(1);

    std::string config_path;
    std::string lexicon, templates, output_dir, model_id;
    std::size_t max_in_flight = 0;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--lexicon", lexicon, "social group term CSV (overrides config)");
    app.add_option("--templates", templates, "evaluation template CSV (overrides config)");
    app.add_option("--model-id", model_id, "model identifier recorded in reports");
    app.add_option("--max-in-flight", max_in_flight, "concurrency limit (overrides config)");

    // lexicon validate
    auto *lexicon_cmd = app.add_subcommand("lexicon", "social group term list")->require_subcommand(1);
    auto *lexicon_validate = lexicon_cmd->add_subcommand("validate", "load and check the lexicon");

    // corpus prep|stats
    auto *corpus_cmd = app.add_subcommand("corpus", "labeled post corpora")->require_subcommand(1);
    std::string prep_in, prep_out;
    bool keep_all = false;
    auto *corpus_prep = corpus_cmd->add_subcommand("prep", "preprocess and keep posts with a social group term");
    corpus_prep->add_option("--in", prep_in, "raw posts JSONL")->required();
    corpus_prep->add_option("--out", prep_out, "output posts JSONL")->required();
    corpus_prep->add_flag("--keep-all", keep_all, "preprocess only, do not filter");
    std::string stats_in, stats_out, extra_lexicon;
    auto *corpus_stats = corpus_cmd->add_subcommand("stats", "per-label count, length and term entropy");
    corpus_stats->add_option("--in", stats_in, "posts or counterfactuals JSONL")->required();
    corpus_stats->add_option("--out", stats_out, "stats JSON");
    corpus_stats->add_option("--extra-lexicon", extra_lexicon, "additional terms counted for entropy");

    // generate <method>
    auto *generate_cmd = app.add_subcommand("generate", "generate counterfactual posts")->require_subcommand(1);
    pipeline::GenerateOptions gen;
    std::string gen_in, gen_out, replay, record;
    std::string scorer_backend, scorer_endpoint, scorer_train;
    std::vector<std::string> scorer_command;
    std::optional<int> scorer_order;
    std::optional<double> scorer_alpha;
    std::string llm_endpoint, llm_model;
    std::optional<double> llm_temperature;
    std::vector<CLI::App *> method_cmds;
    for (const auto m : {Method::mgs, Method::sll, Method::llmdef, Method::llmlist}) {
        auto *sub = generate_cmd->add_subcommand(std::string(to_string(m)));
        sub->add_option("--in", gen_in, "posts JSONL (preprocessed)")->required();
        sub->add_option("--out", gen_out, "counterfactuals JSONL")->required();
        if (m == Method::sll) {
            sub->add_option("--scorer", scorer_backend, "ngram | stdio | http | constant");
            sub->add_option("--scorer-endpoint", scorer_endpoint, "HTTP scorer base URL");
            sub->add_option("--scorer-command", scorer_command, "stdio scorer argv");
            sub->add_option("--ngram-train", scorer_train, "n-gram training text (lines) or JSONL");
            sub->add_option("--ngram-order", scorer_order, "n-gram order");
            sub->add_option("--ngram-alpha", scorer_alpha, "add-alpha smoothing");
        }
        if (m == Method::llmdef || m == Method::llmlist) {
            sub->add_option("--replay", replay, "recorded replies JSONL");
            sub->add_option("--record", record, "write live replies to this JSONL");
            sub->add_option("--llm-endpoint", llm_endpoint, "chat completions URL");
            sub->add_option("--llm-model", llm_model, "model id");
            sub->add_option("--llm-temperature", llm_temperature, "sampling temperature");
        }
        sub->callback([&gen, m] { gen.method = m; });
        method_cmds.push_back(sub);
    }

    // evalset build
    auto *evalset_cmd = app.add_subcommand("evalset", "template evaluation dataset")->require_subcommand(1);
    std::string evalset_out;
    auto *evalset_build = evalset_cmd->add_subcommand("build", "instantiate templates with every term");
    evalset_build->add_option("--out", evalset_out, "evalset JSONL")->required();

    // predict fetch
    auto *predict_cmd = app.add_subcommand("predict", "classifier predictions")->require_subcommand(1);
    std::string predict_in, predict_out, predict_file, classifier_endpoint;
    auto *predict_fetch = predict_cmd->add_subcommand("fetch", "query a classifier or validate a predictions file");
    predict_fetch->add_option("--in", predict_in, "evalset or posts JSONL")->required();
    predict_fetch->add_option("--out", predict_out, "predictions JSONL")->required();
    predict_fetch->add_option("--from-file", predict_file, "existing predictions to validate and reorder");
    predict_fetch->add_option("--classifier-endpoint", classifier_endpoint, "classifier base URL");

    // audit
    pipeline::AuditOptions audit_opts;
    std::string audit_evalset, audit_preds, audit_posts, audit_post_preds, audit_out, ctf_mode = "label";
    auto *audit_cmd = app.add_subcommand("audit", "fairness and performance report");
    audit_cmd->add_option("--evalset", audit_evalset, "evalset JSONL")->required();
    audit_cmd->add_option("--predictions", audit_preds, "predictions for the evalset")->required();
    audit_cmd->add_option("--posts", audit_posts, "posts JSONL with 4-class gold labels");
    audit_cmd->add_option("--post-predictions", audit_post_preds, "predictions for --posts");
    audit_cmd->add_option("--ctf-mode", ctf_mode, "label | probability")->check(CLI::IsMember({"label", "probability"}));
    audit_cmd->add_option("--out-dir", audit_out, "report directory (default: output_dir)");

    // report render
    auto *report_cmd = app.add_subcommand("report", "fairness report files")->require_subcommand(1);
    std::string render_in, render_format = "table";
    auto *report_render = report_cmd->add_subcommand("render", "print a report JSON");
    report_render->add_option("--in", render_in, "report JSON")->required();
    report_render->add_option("--format", render_format, "table | csv | json")->check(CLI::IsMember({"table", "csv", "json"}));

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (!lexicon.empty()) cfg.lexicon = lexicon;
        if (!templates.empty()) cfg.templates = templates;
        if (!model_id.empty()) cfg.model_id = model_id;
        if (max_in_flight > 0) cfg.max_in_flight = max_in_flight;

        if (lexicon_validate->parsed()) {
            pipeline::lexicon_validate(cfg, out);
        } else if (corpus_prep->parsed()) {
            pipeline::corpus_prep(cfg, prep_in, prep_out, keep_all, out);
        } else if (corpus_stats->parsed()) {
            pipeline::corpus_stats(cfg, stats_in,
                                   stats_out.empty() ? std::nullopt : std::optional<fs::path>(stats_out),
                                   extra_lexicon.empty() ? std::nullopt : std::optional<fs::path>(extra_lexicon), out);
        } else if (generate_cmd->parsed()) {
            if (!scorer_backend.empty()) {
                cfg.scorer.backend = scorer_backend;
                // a flag-selected backend replaces the config's backend settings
                cfg.scorer.command.clear();
                cfg.scorer.endpoint.clear();
            }
            if (!scorer_endpoint.empty()) cfg.scorer.endpoint = scorer_endpoint;
            if (!scorer_command.empty()) cfg.scorer.command = scorer_command;
            if (!scorer_train.empty()) cfg.scorer.train = fs::path(scorer_train);
            if (scorer_order) cfg.scorer.order = *scorer_order;
            if (scorer_alpha) cfg.scorer.alpha = *scorer_alpha;
            if (!llm_endpoint.empty()) cfg.llm.endpoint = llm_endpoint;
            if (!llm_model.empty()) cfg.llm.model = llm_model;
            if (llm_temperature) cfg.llm.temperature = *llm_temperature;
            gen.in = gen_in;
            gen.out = gen_out;
            if (!replay.empty()) {
                gen.replay = fs::path(replay);
            } else if (cfg.llm_replay) {
                gen.replay = cfg.llm_replay;
            }
            if (!record.empty()) gen.record = fs::path(record);
            gen.max_in_flight = cfg.max_in_flight;
            const auto r = pipeline::generate(cfg, gen, out);
            if (r.failure_class) {
                err << "error: every post failed\n";
                return static_cast<int>(*r.failure_class);
            }
        } else if (evalset_build->parsed()) {
            pipeline::evalset_build(cfg, evalset_out, out);
        } else if (predict_fetch->parsed()) {
            if (!classifier_endpoint.empty()) cfg.classifier.endpoint = classifier_endpoint;
            cfg.classifier.max_in_flight = std::min(cfg.classifier.max_in_flight, cfg.max_in_flight);
            pipeline::predict_fetch(cfg, predict_in, predict_out,
                                    predict_file.empty() ? std::nullopt : std::optional<fs::path>(predict_file), out);
        } else if (audit_cmd->parsed()) {
            audit_opts.evalset = audit_evalset;
            audit_opts.predictions = audit_preds;
            if (!audit_posts.empty()) audit_opts.posts = fs::path(audit_posts);
            if (!audit_post_preds.empty()) audit_opts.post_predictions = fs::path(audit_post_preds);
            audit_opts.ctf_mode = ctf_mode == "probability" ? CtfMode::probability : CtfMode::label;
            audit_opts.out_dir = audit_out.empty() ? cfg.output_dir : fs::path(audit_out);
            pipeline::audit(cfg, audit_opts, out);
        } else if (report_render->parsed()) {
            out << pipeline::report_render(render_in, render_format);
        }
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(e.exit_code());
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::failure);
    }
    return 0;
}

inline int run(int argc, char **argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

}  // namespace cfair::cli

#pragma once

// Run configuration: one JSON file, with command-line flags layered on top.
//
// {
//   "lexicon": "data/sgt_nl.csv",
//   "templates": "data/templates_nl.csv",
//   "corpus": "posts.jsonl",
//   "output_dir": "out",
//   "model_id": "bertje-baseline",
//   "seed": 0,
//   "max_in_flight": 4,
//   "scorer": {"backend": "ngram", "order": 2, "alpha": 1.0, "train": "sentences.txt"},
//   "llm": {"endpoint": "https://host/v1/chat/completions", "model": "...", "temperature": 0.7,
//           "max_in_flight": 4, "api_key_env": "LLM_API_KEY", "replay": "replies.jsonl"},
//   "classifier": {"endpoint": "http://host:8080", "batch_size": 32, "max_in_flight": 4,
//                  "api_key_env": "CLASSIFIER_API_KEY"}
// }
//
// Scorer backends: "ngram" (order, alpha, optional train file), "stdio"
// (command: argv list), "http" (endpoint), "constant" (value).

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfair/error.hpp"
#include "cfair/io.hpp"
#include "cfair/llm.hpp"
#include "cfair/predictions.hpp"

namespace cfair {

namespace fs = std::filesystem;

struct ScorerConfig {
    std::string backend = "ngram";
    int order = 2;
    double alpha = 1.0;
    std::optional<fs::path> train;  // text file (one sentence per line) or posts JSONL
    std::vector<std::string> command;
    std::string endpoint;
    double value = 0.0;
};

struct RunConfig {
    fs::path lexicon = "data/sgt_nl.csv";
    fs::path templates = "data/templates_nl.csv";
    std::optional<fs::path> corpus;
    fs::path output_dir = "out";
    std::string model_id;
    std::int64_t seed = 0;  // reserved; every command is deterministic
    std::size_t max_in_flight = 4;
    ScorerConfig scorer;
    llm::ChatConfig llm;
    std::optional<fs::path> llm_replay;
    ClassifierClient::Options classifier;
};

namespace detail {
template <typename T>
void read_opt(const nlohmann::json &j, const char *key, T &dst) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) dst = it->get<T>();
}
inline void read_path(const nlohmann::json &j, const char *key, fs::path &dst) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) dst = it->get<std::string>();
}
inline void read_path(const nlohmann::json &j, const char *key, std::optional<fs::path> &dst) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) dst = fs::path(it->get<std::string>());
}
}  // namespace detail

inline RunConfig parse_config(const nlohmann::json &j) {
    static const std::vector<std::string> known{"lexicon",       "templates", "corpus", "output_dir", "model_id", "seed",
                                                "max_in_flight", "scorer",    "llm",    "classifier"};
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto &[k, v] : j.items()) {
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ValidationError("unknown config key '" + k + "'");
    }
    RunConfig c;
    try {
        detail::read_path(j, "lexicon", c.lexicon);
        detail::read_path(j, "templates", c.templates);
        detail::read_path(j, "corpus", c.corpus);
        detail::read_path(j, "output_dir", c.output_dir);
        detail::read_opt(j, "model_id", c.model_id);
        detail::read_opt(j, "seed", c.seed);
        detail::read_opt(j, "max_in_flight", c.max_in_flight);
        if (auto s = j.find("scorer"); s != j.end()) {
            detail::read_opt(*s, "backend", c.scorer.backend);
            detail::read_opt(*s, "order", c.scorer.order);
            detail::read_opt(*s, "alpha", c.scorer.alpha);
            detail::read_path(*s, "train", c.scorer.train);
            detail::read_opt(*s, "command", c.scorer.command);
            detail::read_opt(*s, "endpoint", c.scorer.endpoint);
            detail::read_opt(*s, "value", c.scorer.value);
        }
        if (auto l = j.find("llm"); l != j.end()) {
            detail::read_opt(*l, "endpoint", c.llm.endpoint);
            detail::read_opt(*l, "model", c.llm.model);
            detail::read_opt(*l, "temperature", c.llm.temperature);
            detail::read_opt(*l, "max_in_flight", c.llm.max_in_flight);
            detail::read_opt(*l, "api_key_env", c.llm.api_key_env);
            detail::read_opt(*l, "max_retries", c.llm.retry.max_attempts);
            detail::read_path(*l, "replay", c.llm_replay);
        }
        if (auto k = j.find("classifier"); k != j.end()) {
            detail::read_opt(*k, "endpoint", c.classifier.endpoint);
            detail::read_opt(*k, "batch_size", c.classifier.batch_size);
            detail::read_opt(*k, "max_in_flight", c.classifier.max_in_flight);
            detail::read_opt(*k, "api_key_env", c.classifier.api_key_env);
            detail::read_opt(*k, "max_retries", c.classifier.retry.max_attempts);
        }
    } catch (const nlohmann::json::exception &e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

inline RunConfig load_config(const fs::path &path) {
    try {
        return parse_config(nlohmann::json::parse(io::read_file(path)));
    } catch (const nlohmann::json::parse_error &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

/// Exactly one scorer backend, fully specified, and no settings belonging to another.
inline void validate_scorer(const ScorerConfig &s) {
    const bool has_command = !s.command.empty();
    const bool has_endpoint = !s.endpoint.empty();
    if (s.backend == "ngram") {
        if (has_command || has_endpoint) throw ValidationError("scorer: ngram backend selected but command/endpoint also set");
        if (s.order < 1) throw ValidationError("scorer: order must be >= 1");
        if (!(s.alpha > 0.0)) throw ValidationError("scorer: alpha must be positive");
        if (s.train && !fs::exists(*s.train)) throw FileNotFound(s.train->string());
    } else if (s.backend == "stdio") {
        if (!has_command) throw ValidationError("scorer: stdio backend needs a command");
        if (has_endpoint) throw ValidationError("scorer: stdio backend selected but endpoint also set");
    } else if (s.backend == "http") {
        if (!has_endpoint) throw ValidationError("scorer: http backend needs an endpoint");
        if (has_command) throw ValidationError("scorer: http backend selected but command also set");
    } else if (s.backend == "constant") {
        if (has_command || has_endpoint) throw ValidationError("scorer: constant backend selected but command/endpoint also set");
    } else {
        throw ValidationError("scorer: unknown backend '" + s.backend + "'");
    }
}

inline void require_exists(const fs::path &p) {
    if (!fs::exists(p)) throw FileNotFound(p.string());
}

}  // namespace cfair

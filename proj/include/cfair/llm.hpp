#pragma once

// Prompt construction and reply parsing for LLM-based counterfactual
// generation, plus the chat-completion client and the replay source that
// stands in for it offline.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cfair/concurrency.hpp"
#include "cfair/corpus.hpp"
#include "cfair/error.hpp"
#include "cfair/generate.hpp"
#include "cfair/http.hpp"
#include "cfair/io.hpp"
#include "cfair/lexicon.hpp"

namespace cfair::llm {

using json = nlohmann::json;

inline constexpr std::string_view input_placeholder = "$input_sentence$";
inline constexpr std::string_view terms_placeholder = "$social_group_terms$";

inline constexpr std::string_view llmdef_template =
    "Your task is to generate five counterfactual sentences for a given input sentence in Dutch. "
    "Identify social group terms in the input sentence and modify the input sentence by changing the social "
    "group(s) with other social group terms.\n"
    "Each counterfactual sentence should differ from the original while preserving the original meaning.\n"
    "Social group terms are terms that signify social groups based on characteristics like gender, race, class, "
    "sexuality, political leaning, religion, education, age, profession etc.\n"
    "Please generate five distinct counterfactual sentences for the input sentence: $input_sentence$\n"
    "Your response should be a JSON list of five dictionaries where each dictionary contains:\n"
    "- 'input sentence': the original sentence.\n"
    "- 'counterfactual sentence': the generated counterfactual sentence.\n";

inline constexpr std::string_view llmlist_template =
    "Your task is to generate seven counterfactual sentences for a given input sentence in Dutch language.\n"
    "Identify and modify the input sentence by changing the social group term(s) with other social group "
    "term(s) and change other words without changing the level of toxicity expressed in input sentence based "
    "on $input_sentence$.\n"
    "The generated sentence should make contextual sense.\n"
    "Some social group terms in Dutch context are: $social_group_terms$. Input sentence is: $input_sentence$.\n"
    "Give your response as a dictionary of \"counterfactual sentences\" with consistent formatting.\n";

/// Single-pass placeholder substitution; inserted values are never rescanned,
/// so a `$` in the post text is kept as is.
inline std::string fill(std::string_view tmpl, const std::vector<std::pair<std::string_view, std::string_view>> &vars) {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        bool replaced = false;
        for (const auto &[key, value] : vars) {
            if (tmpl.compare(i, key.size(), key) == 0) {
                out += value;
                i += key.size();
                replaced = true;
                break;
            }
        }
        if (!replaced) out.push_back(tmpl[i++]);
    }
    return out;
}

/// `"a", "b", and "c"`: each surface quoted, comma separated, with a final "and".
inline std::string render_term_list(const Lexicon &lex) {
    std::string out;
    const auto n = lex.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out += (n == 2) ? " and " : (i + 1 == n ? ", and " : ", ");
        out += '"' + lex[i].surface + '"';
    }
    return out;
}

inline std::string build_llmdef_prompt(const Post &post) {
    return fill(llmdef_template, {{input_placeholder, post.text}});
}

inline std::string build_llmlist_prompt(const Post &post, const Lexicon &lex) {
    const auto terms = render_term_list(lex);
    return fill(llmlist_template, {{input_placeholder, post.text}, {terms_placeholder, terms}});
}

inline std::string build_prompt(Method method, const Post &post, const Lexicon &lex) {
    switch (method) {
        case Method::llmdef:
            return build_llmdef_prompt(post);
        case Method::llmlist:
            return build_llmlist_prompt(post, lex);
        default:
            throw Error("no prompt for method " + std::string(to_string(method)));
    }
}

// ---------------------------------------------------------------------------
// reply parsing

namespace detail {

/// End (exclusive) of the bracketed value starting at `start`, honoring JSON
/// strings; npos when unbalanced.
inline std::size_t balanced_end(std::string_view s, std::size_t start) {
    std::vector<char> stack;
    bool in_string = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_string = true;
                break;
            case '[':
                stack.push_back(']');
                break;
            case '{':
                stack.push_back('}');
                break;
            case ']':
            case '}':
                if (stack.empty() || stack.back() != c) return std::string_view::npos;
                stack.pop_back();
                if (stack.empty()) return i + 1;
                break;
            default:
                break;
        }
    }
    return std::string_view::npos;
}

}  // namespace detail

/// First well-formed JSON array or object embedded in `raw` (code fences and
/// surrounding prose are skipped). `want_array` restricts the search to arrays.
inline std::optional<json> extract_json(std::string_view raw, std::optional<bool> want_array = std::nullopt) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (c != '[' && c != '{') continue;
        if (want_array && (*want_array != (c == '['))) continue;
        const auto end = detail::balanced_end(raw, i);
        if (end == std::string_view::npos) continue;
        try {
            return json::parse(raw.substr(i, end - i));
        } catch (const json::parse_error &) {
            continue;
        }
    }
    return std::nullopt;
}

namespace detail {

inline void collect_strings(const json &collection, std::vector<std::string> &out, const std::string &parent_id) {
    auto take = [&](const json &v) {
        if (v.is_string()) {
            out.push_back(v.get<std::string>());
        } else if (v.is_object()) {
            // {"counterfactual sentence": "..."} or a single-string object
            if (auto it = v.find("counterfactual sentence"); it != v.end() && it->is_string()) {
                out.push_back(it->get<std::string>());
                return;
            }
            for (const auto &[k, inner] : v.items()) {
                if (inner.is_string()) {
                    out.push_back(inner.get<std::string>());
                    return;
                }
            }
            throw ShapeError("reply for " + parent_id + ": counterfactual entry holds no string");
        } else {
            throw ShapeError("reply for " + parent_id + ": counterfactual entry is not a string");
        }
    };
    if (collection.is_array()) {
        for (const auto &v : collection) take(v);
    } else if (collection.is_object()) {
        for (const auto &[k, v] : collection.items()) take(v);
    } else if (collection.is_string()) {
        out.push_back(collection.get<std::string>());
    } else {
        throw ShapeError("reply for " + parent_id + ": 'counterfactual sentences' is not a collection");
    }
}

}  // namespace detail

/// Turns an LLM reply into counterfactuals of `parent`. Empty entries, entries
/// equal to the parent text, and repeats are dropped.
inline std::vector<Counterfactual> parse_llm_response(std::string_view raw, Method method, const Post &parent) {
    std::vector<std::string> sentences;
    if (method == Method::llmdef) {
        auto value = extract_json(raw, true);
        if (!value) value = extract_json(raw);
        if (!value) throw ParseError("no JSON value in reply for " + parent.id);
        const json items = value->is_array() ? *value : json::array({*value});
        for (const auto &item : items) {
            const auto it = item.is_object() ? item.find("counterfactual sentence") : item.end();
            if (it == item.end()) {
                throw ShapeError("reply for " + parent.id + ": missing key 'counterfactual sentence'");
            }
            if (!it->is_string()) throw ShapeError("reply for " + parent.id + ": 'counterfactual sentence' is not a string");
            sentences.push_back(it->get<std::string>());
        }
    } else if (method == Method::llmlist) {
        std::optional<json> value;
        // prefer the first object carrying the expected key
        for (std::size_t from = 0; from < raw.size();) {
            const auto pos = raw.find('{', from);
            if (pos == std::string_view::npos) break;
            auto v = extract_json(raw.substr(pos), false);
            if (v && v->contains("counterfactual sentences")) {
                value = std::move(v);
                break;
            }
            from = pos + 1;
        }
        if (!value) {
            if (!extract_json(raw)) throw ParseError("no JSON value in reply for " + parent.id);
            throw ShapeError("reply for " + parent.id + ": missing key 'counterfactual sentences'");
        }
        detail::collect_strings(value->at("counterfactual sentences"), sentences, parent.id);
    } else {
        throw Error("parse_llm_response called for method " + std::string(to_string(method)));
    }

    std::vector<Counterfactual> out;
    std::unordered_set<std::string> seen;
    for (auto &s : sentences) {
        const auto trimmed = csv::trim(s);
        if (trimmed.empty() || trimmed == csv::trim(parent.text)) continue;
        if (!seen.insert(trimmed).second) continue;
        out.push_back({parent.id, trimmed, parent.label, method, std::nullopt});
    }
    return out;
}

// ---------------------------------------------------------------------------
// reply sources

struct ChatConfig {
    std::string endpoint;  // full chat-completions URL
    std::string model;
    double temperature = 0.7;
    std::size_t max_in_flight = 4;
    std::string api_key_env = "LLM_API_KEY";
    std::chrono::seconds timeout{120};
    RetryPolicy retry;
};

/// Raw reply text for one prompt.
class ReplySource {
public:
    virtual ~ReplySource() = default;
    [[nodiscard]] virtual std::string reply(const Post &post, Method method, const std::string &prompt) const = 0;
};

/// OpenAI-style chat completion client (`choices[0].message.content`).
class ChatClient final : public ReplySource {
public:
    explicit ChatClient(ChatConfig cfg)
        : cfg_(std::move(cfg)), endpoint_(http::parse_endpoint(cfg_.endpoint)) {
        opts_.timeout = cfg_.timeout;
        opts_.bearer_token = http::env_secret(cfg_.api_key_env);
    }

    [[nodiscard]] std::string reply(const Post &post, Method method, const std::string &prompt) const override {
        const json req{{"model", cfg_.model},
                       {"temperature", cfg_.temperature},
                       {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
        const auto id = post.id + "/" + std::string(to_string(method));
        const auto res = with_retries(cfg_.retry, [&] { return http::post_json(endpoint_, "", req, opts_, id); });
        try {
            return res.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception &) {
            throw TransportError("chat reply lacks choices[0].message.content", id);
        }
    }

    [[nodiscard]] const ChatConfig &config() const noexcept { return cfg_; }

private:
    ChatConfig cfg_;
    http::Endpoint endpoint_;
    http::ClientOptions opts_;
};

/// Recorded replies keyed by (parent_id, method), read from a JSONL file of
/// {"parent_id", "method", "raw"}.
class ReplayFile final : public ReplySource {
public:
    explicit ReplayFile(const std::filesystem::path &path) {
        io::for_each_jsonl_file(path, [&](const json &j, std::size_t) {
            const auto method = parse_method(j.at("method").get<std::string>());
            if (!method) throw ValidationError("unknown method in replay record");
            replies_[{j.at("parent_id").get<std::string>(), *method}] = j.at("raw").get<std::string>();
        });
    }

    [[nodiscard]] std::string reply(const Post &post, Method method, const std::string &) const override {
        const auto it = replies_.find({post.id, method});
        if (it == replies_.end()) {
            throw CompletenessError("replay file", {post.id + "/" + std::string(to_string(method))});
        }
        return it->second;
    }

    [[nodiscard]] std::size_t size() const noexcept { return replies_.size(); }

private:
    std::map<std::pair<std::string, Method>, std::string> replies_;
};

inline json replay_record(const std::string &parent_id, Method method, const std::string &raw) {
    return {{"parent_id", parent_id}, {"method", to_string(method)}, {"raw", raw}};
}

}  // namespace cfair::llm

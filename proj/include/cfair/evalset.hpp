#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cfair/corpus.hpp"
#include "cfair/csv.hpp"
#include "cfair/error.hpp"
#include "cfair/io.hpp"
#include "cfair/lexicon.hpp"
#include "cfair/types.hpp"

namespace cfair {

inline constexpr std::string_view slot_marker = "{sgt}";
inline constexpr std::size_t max_template_tokens = 4;

struct Template {
    std::string id;
    std::string pattern;  // exactly one `{sgt}`
    Toxicity toxicity = Toxicity::nontoxic;
};

struct EvalSentence {
    std::string template_id;
    SocialGroupTerm sgt;
    std::string text;
    Toxicity gold = Toxicity::nontoxic;

    /// Key used to join predictions: `<template_id>:<surface>`.
    [[nodiscard]] std::string id() const { return template_id + ":" + sgt.surface; }
};

inline std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + needle.size()))
        ++n;
    return n;
}

inline void validate_template(const Template &t) {
    if (t.id.empty()) throw ValidationError("template with empty id");
    const auto slots = count_occurrences(t.pattern, slot_marker);
    if (slots == 0) throw ValidationError("template '" + t.id + "': missing slot marker {sgt}");
    if (slots > 1) throw ValidationError("template '" + t.id + "': slot marker {sgt} appears " + std::to_string(slots) + " times");
    if (split_tokens(t.pattern).size() > max_template_tokens) {
        throw ValidationError("template '" + t.id + "': more than " + std::to_string(max_template_tokens) + " tokens");
    }
}

inline std::vector<Template> parse_templates(std::istream &in) {
    const auto rows = csv::read(in, {"id", "pattern", "toxicity"});
    std::vector<Template> out;
    std::unordered_set<std::string> ids;
    for (const auto &row : rows) {
        const auto where = "line " + std::to_string(row.line) + ": ";
        const auto tox = parse_toxicity(row.fields[2]);
        if (!tox) throw ValidationError(where + "unknown toxicity '" + row.fields[2] + "'");
        Template t{row.fields[0], row.fields[1], *tox};
        try {
            validate_template(t);
        } catch (const ValidationError &e) {
            throw ValidationError(where + e.what());
        }
        if (!ids.insert(t.id).second) throw ValidationError(where + "duplicate template id '" + t.id + "'");
        out.push_back(std::move(t));
    }
    if (out.empty()) throw ValidationError("template file contains no templates");
    return out;
}

inline std::vector<Template> load_templates(const std::filesystem::path &path) {
    auto in = io::open_input(path);
    try {
        return parse_templates(in);
    } catch (const ValidationError &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

/// Cartesian product of templates and lexicon terms, template-major.
inline std::vector<EvalSentence> build_evalset(const std::vector<Template> &templates, const Lexicon &lex) {
    std::vector<EvalSentence> out;
    out.reserve(templates.size() * lex.size());
    for (const auto &t : templates) {
        const auto slot = t.pattern.find(slot_marker);
        for (const auto &term : lex.terms()) {
            auto text = t.pattern;
            text.replace(slot, slot_marker.size(), term.surface);
            out.push_back({t.id, term, std::move(text), t.toxicity});
        }
    }
    return out;
}

inline io::json to_json(const EvalSentence &s) {
    return {{"template_id", s.template_id},
            {"sgt", s.sgt.surface},
            {"category", to_string(s.sgt.category)},
            {"text", s.text},
            {"gold", to_string(s.gold)}};
}

inline std::string evalset_to_jsonl(const std::vector<EvalSentence> &sentences) {
    std::vector<io::json> records;
    records.reserve(sentences.size());
    for (const auto &s : sentences) records.push_back(to_json(s));
    return io::to_jsonl(records);
}

/// Reads an evalset file. The file is self-contained: category travels with
/// each row, so no lexicon is needed to audit it.
inline std::vector<EvalSentence> load_evalset(const std::filesystem::path &path) {
    std::vector<EvalSentence> out;
    std::unordered_set<std::string> ids;
    io::for_each_jsonl_file(path, [&](const io::json &j, std::size_t) {
        EvalSentence s;
        s.template_id = j.at("template_id").get<std::string>();
        s.sgt.surface = j.at("sgt").get<std::string>();
        const auto cat = parse_category(j.at("category").get<std::string>());
        if (!cat) throw ValidationError("unknown category '" + j.at("category").get<std::string>() + "'");
        s.sgt.category = *cat;
        s.text = j.at("text").get<std::string>();
        s.gold = require_toxicity(j.at("gold").get<std::string>());
        if (!ids.insert(s.id()).second) throw ValidationError("duplicate evalset sentence '" + s.id() + "'");
        out.push_back(std::move(s));
    });
    return out;
}

}  // namespace cfair

#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "cfair/corpus.hpp"
#include "cfair/error.hpp"
#include "cfair/io.hpp"
#include "cfair/lexicon.hpp"
#include "cfair/scorer.hpp"
#include "cfair/types.hpp"
#include "cfair/unicode.hpp"

namespace cfair {

/// Which occurrence was replaced, by what. Offsets are code points into the parent text.
struct SubstitutionRecord {
    SocialGroupTerm original;
    SocialGroupTerm replacement;
    std::size_t start = 0;
    std::size_t end = 0;

    friend bool operator==(const SubstitutionRecord &, const SubstitutionRecord &) = default;
};

struct Counterfactual {
    std::string parent_id;
    std::string text;
    Label label = Label::appropriate;
    Method method = Method::mgs;
    std::optional<SubstitutionRecord> sub;

    friend bool operator==(const Counterfactual &, const Counterfactual &) = default;
};

namespace detail {

inline std::string splice(std::u32string_view text, std::size_t start, std::size_t end, std::string_view repl) {
    std::u32string out(text.substr(0, start));
    out += unicode::decode(repl);
    out += text.substr(end);
    return unicode::encode(out);
}

/// Collects single-occurrence substitutions; `replacements(match)` yields the
/// candidate terms for one match. Identical texts keep their first record.
template <typename ReplacementsFn>
std::vector<Counterfactual> substitute_each(const Post &post, const Lexicon &lex, Method method,
                                            ReplacementsFn &&replacements) {
    const auto text = unicode::decode(post.text);
    std::vector<Counterfactual> out;
    std::unordered_set<std::string> seen{post.text};
    for (const auto &m : find_sgts(std::u32string_view(text), lex)) {
        for (const SocialGroupTerm &r : replacements(m)) {
            if (r.surface == m.term.surface) continue;
            auto cf_text = splice(text, m.start, m.end, r.surface);
            if (!seen.insert(cf_text).second) continue;
            out.push_back({post.id, std::move(cf_text), post.label, method, SubstitutionRecord{m.term, r, m.start, m.end}});
        }
    }
    return out;
}

}  // namespace detail

/// Dictionary substitution: each SGT occurrence is replaced, one at a time, by
/// every other term of the same category and grammatical form. A `both` term
/// draws from its noun bucket and then its adjective bucket.
inline std::vector<Counterfactual> mgs_generate(const Post &post, const SubstitutionDictionary &dict,
                                                const Lexicon &lex) {
    return detail::substitute_each(post, lex, Method::mgs, [&](const SgtMatch &m) {
        std::vector<SocialGroupTerm> candidates;
        for (const auto *bucket : dict.buckets_of(m.term)) candidates.insert(candidates.end(), bucket->begin(), bucket->end());
        return candidates;
    });
}

/// Every single-occurrence substitution by any other lexicon term, ignoring
/// category and grammatical form.
inline std::vector<Counterfactual> sll_candidates(const Post &post, const Lexicon &lex) {
    return detail::substitute_each(post, lex, Method::sll, [&](const SgtMatch &) { return lex.terms(); });
}

/// Keeps the candidates whose log-likelihood is at least the original's.
/// The original and all candidates go to the scorer as one batch.
template <typename Scorer>
    requires SentenceScorer<Scorer>
std::vector<Counterfactual> sll_filter(const Post &post, std::vector<Counterfactual> candidates, const Scorer &scorer) {
    if (candidates.empty()) return candidates;
    std::vector<std::string> texts;
    texts.reserve(candidates.size() + 1);
    texts.push_back(post.text);
    for (const auto &c : candidates) texts.push_back(c.text);
    const auto scores = scorer.score_batch(texts);
    if (scores.size() != texts.size()) throw TransportError("scorer returned a short batch", post.id);
    std::vector<Counterfactual> kept;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (scores[i + 1] >= scores[0]) kept.push_back(std::move(candidates[i]));
    }
    return kept;
}

template <typename Scorer>
    requires SentenceScorer<Scorer>
std::vector<Counterfactual> sll_generate(const Post &post, const Lexicon &lex, const Scorer &scorer) {
    return sll_filter(post, sll_candidates(post, lex), scorer);
}

// ---------------------------------------------------------------------------
// JSONL counterfactuals files

inline io::json to_json(const Counterfactual &cf) {
    io::json j = {{"parent_id", cf.parent_id},
                  {"text", cf.text},
                  {"label", to_string(cf.label)},
                  {"method", to_string(cf.method)}};
    if (cf.sub) {
        j["sub"] = {{"original", cf.sub->original.surface},
                    {"replacement", cf.sub->replacement.surface},
                    {"start", cf.sub->start},
                    {"end", cf.sub->end}};
    }
    return j;
}

/// Parses one counterfactual record; substitution surfaces are resolved against `lex`.
inline Counterfactual counterfactual_from_json(const io::json &j, const Lexicon &lex) {
    Counterfactual cf;
    cf.parent_id = j.at("parent_id").get<std::string>();
    cf.text = j.at("text").get<std::string>();
    cf.label = require_label(j.at("label").get<std::string>());
    const auto method = parse_method(j.at("method").get<std::string>());
    if (!method) throw ValidationError("unknown method '" + j.at("method").get<std::string>() + "'");
    cf.method = *method;
    if (auto it = j.find("sub"); it != j.end() && !it->is_null()) {
        auto term = [&](const char *key) {
            const auto s = it->at(key).get<std::string>();
            const auto idx = lex.find(s);
            if (idx == Lexicon::npos) throw ValidationError("substitution term '" + s + "' not in lexicon");
            return lex[idx];
        };
        cf.sub = SubstitutionRecord{term("original"), term("replacement"), it->at("start").get<std::size_t>(),
                                    it->at("end").get<std::size_t>()};
    }
    return cf;
}

inline std::string counterfactuals_to_jsonl(std::span<const Counterfactual> cfs) {
    std::string out;
    for (const auto &cf : cfs) out += to_json(cf).dump(-1, ' ', false, io::json::error_handler_t::replace) + "\n";
    return out;
}

}  // namespace cfair

#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "cfair/error.hpp"
#include "cfair/io.hpp"
#include "cfair/lexicon.hpp"
#include "cfair/types.hpp"
#include "cfair/unicode.hpp"

namespace cfair {

struct Post {
    std::string id;
    std::string text;
    Label label = Label::appropriate;
    std::optional<std::string> source;

    friend bool operator==(const Post &, const Post &) = default;
};

/// Strips emoji and symbols (anything but letters, digits, whitespace,
/// apostrophes and hyphens), collapses whitespace runs and trims. Case is kept.
inline std::string preprocess(std::string_view text) {
    const auto cps = unicode::decode(text);
    std::u32string out;
    out.reserve(cps.size());
    bool pending_space = false;
    for (const char32_t c : cps) {
        if (unicode::is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (!unicode::is_letter(c) && !unicode::is_digit(c) && !unicode::is_apostrophe(c) && !unicode::is_hyphen(c)) {
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return unicode::encode(out);
}

/// Whitespace-delimited tokens.
inline std::vector<std::string_view> split_tokens(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        const auto start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.push_back(text.substr(start, i - start));
    }
    return out;
}

inline std::vector<Post> filter_corpus(const std::vector<Post> &posts, const Lexicon &lex) {
    std::vector<Post> out;
    for (const auto &p : posts) {
        if (!find_sgts(p.text, lex).empty()) out.push_back(p);
    }
    return out;
}

/// Shannon entropy in bits over the nonzero counts.
template <typename Map>
double shannon_entropy(const Map &counts) {
    std::uint64_t total = 0;
    for (const auto &[key, c] : counts) total += static_cast<std::uint64_t>(c);
    if (total == 0) throw DomainError("entropy of an empty distribution");
    double h = 0.0;
    for (const auto &[key, c] : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

struct LabelStats {
    std::uint64_t count = 0;
    double avg_len = 0.0;               // whitespace tokens per post
    std::optional<double> sgt_entropy;  // absent when no SGT occurs under the label
    std::map<std::string, std::uint64_t> sgt_counts;
    std::map<Category, std::uint64_t> category_counts;
};

struct CorpusStats {
    std::map<Label, LabelStats> per_label;  // only labels that occur
};

/// Per-label count, mean token length and SGT entropy. Every find_sgts match
/// counts once. Lengths are summed as integers so chunked aggregation is exact.
inline CorpusStats corpus_stats(const std::vector<Post> &posts, const Lexicon &lex) {
    struct Acc {
        std::uint64_t count = 0;
        std::uint64_t tokens = 0;
        std::map<std::string, std::uint64_t> sgts;
        std::map<Category, std::uint64_t> cats;
    };
    std::map<Label, Acc> acc;
    for (const auto &p : posts) {
        auto &a = acc[p.label];
        ++a.count;
        a.tokens += split_tokens(p.text).size();
        for (const auto &m : find_sgts(p.text, lex)) {
            ++a.sgts[m.term.surface];
            ++a.cats[m.term.category];
        }
    }
    CorpusStats stats;
    for (auto &[label, a] : acc) {
        LabelStats s;
        s.count = a.count;
        s.avg_len = static_cast<double>(a.tokens) / static_cast<double>(a.count);
        if (!a.sgts.empty()) s.sgt_entropy = shannon_entropy(a.sgts);
        s.sgt_counts = std::move(a.sgts);
        s.category_counts = std::move(a.cats);
        stats.per_label.emplace(label, std::move(s));
    }
    return stats;
}

inline io::json to_json(const CorpusStats &stats) {
    io::json out = io::json::object();
    for (const auto &[label, s] : stats.per_label) {
        io::json cats = io::json::object();
        for (const auto c : all_categories) {
            const auto it = s.category_counts.find(c);
            cats[std::string(to_string(c))] = it == s.category_counts.end() ? 0 : it->second;
        }
        out[std::string(to_string(label))] = {
            {"count", s.count},
            {"avg_len", s.avg_len},
            {"sgt_entropy", s.sgt_entropy ? io::json(*s.sgt_entropy) : io::json(nullptr)},
            {"distinct_sgts", s.sgt_counts.size()},
            {"category_counts", std::move(cats)},
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSONL posts files

inline Post post_from_json(const io::json &j) {
    Post p;
    p.id = j.at("id").get<std::string>();
    p.text = j.at("text").get<std::string>();
    p.label = require_label(j.at("label").get<std::string>());
    if (auto it = j.find("source"); it != j.end() && !it->is_null()) p.source = it->get<std::string>();
    return p;
}

inline io::json to_json(const Post &p) {
    io::json j = {{"id", p.id}, {"text", p.text}, {"label", to_string(p.label)}};
    if (p.source) j["source"] = *p.source;
    return j;
}

/// Reads a posts JSONL file; ids must be unique.
inline std::vector<Post> load_posts(const std::filesystem::path &path) {
    std::vector<Post> posts;
    std::unordered_set<std::string> seen;
    io::for_each_jsonl_file(path, [&](const io::json &j, std::size_t) {
        auto p = post_from_json(j);
        if (!seen.insert(p.id).second) throw ValidationError("duplicate post id '" + p.id + "'");
        posts.push_back(std::move(p));
    });
    return posts;
}

inline std::string posts_to_jsonl(const std::vector<Post> &posts) {
    std::vector<io::json> records;
    records.reserve(posts.size());
    for (const auto &p : posts) records.push_back(to_json(p));
    return io::to_jsonl(records);
}

}  // namespace cfair

#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cfair/csv.hpp"
#include "cfair/error.hpp"
#include "cfair/io.hpp"
#include "cfair/types.hpp"
#include "cfair/unicode.hpp"

namespace cfair {

/// One lexicon entry. `surface` is lowercase and a single token.
struct SocialGroupTerm {
    std::string surface;
    Category category = Category::nationality;
    Pos pos = Pos::noun;

    friend bool operator==(const SocialGroupTerm &, const SocialGroupTerm &) = default;
};

/// A word-bounded occurrence of a lexicon term. Offsets are code point
/// offsets into the (UTF-8 decoded) text, end exclusive.
struct SgtMatch {
    SocialGroupTerm term;
    std::size_t start = 0;
    std::size_t end = 0;

    friend bool operator==(const SgtMatch &, const SgtMatch &) = default;
};

/// Returns an empty string when `surface` is a valid lexicon surface, else the reason.
///
/// Surfaces are lowercase letter runs; internal hyphens and apostrophes are
/// allowed because the Dutch list contains "non-binair".
inline std::string surface_problem(std::string_view surface) {
    if (surface.empty()) return "empty surface";
    const auto cps = unicode::decode(surface);
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t c = cps[i];
        if (unicode::is_space(c)) return "surface contains whitespace";
        const bool joiner = unicode::is_hyphen(c) || unicode::is_apostrophe(c);
        if (joiner && (i == 0 || i + 1 == cps.size())) return "surface starts or ends with punctuation";
        if (!unicode::is_letter(c) && !joiner) return "surface contains punctuation or symbols";
        if (unicode::to_lower(c) != c) return "surface is not lowercase";
    }
    return {};
}

/// Immutable, validated list of social group terms in file order.
class Lexicon {
public:
    Lexicon() = default;

    explicit Lexicon(std::vector<SocialGroupTerm> terms, std::string language = "nl")
        : terms_(std::move(terms)), language_(std::move(language)) {
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            const auto &t = terms_[i];
            if (auto problem = surface_problem(t.surface); !problem.empty()) {
                throw ValidationError("term '" + t.surface + "': " + problem);
            }
            auto key = unicode::decode(t.surface);
            max_len_ = std::max(max_len_, key.size());
            if (!index_.emplace(std::move(key), i).second) {
                throw ValidationError("duplicate surface '" + t.surface + "'");
            }
        }
    }

    [[nodiscard]] std::span<const SocialGroupTerm> terms() const noexcept { return terms_; }
    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
    [[nodiscard]] bool empty() const noexcept { return terms_.empty(); }
    [[nodiscard]] const std::string &language() const noexcept { return language_; }
    [[nodiscard]] const SocialGroupTerm &operator[](std::size_t i) const { return terms_[i]; }

    /// Index of the term with this (lowercase) surface, or npos.
    [[nodiscard]] std::size_t find(std::u32string_view surface) const {
        const auto it = index_.find(std::u32string(surface));
        return it == index_.end() ? npos : it->second;
    }
    [[nodiscard]] std::size_t find(std::string_view surface) const { return find(unicode::decode(surface)); }
    [[nodiscard]] std::size_t max_surface_length() const noexcept { return max_len_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<SocialGroupTerm> terms_;
    std::string language_ = "nl";
    std::unordered_map<std::u32string, std::size_t> index_;
    std::size_t max_len_ = 0;
};

/// Parses the `surface,category,pos` CSV format. Errors name the offending line.
inline Lexicon parse_lexicon(std::istream &in, std::string language = "nl") {
    const auto rows = csv::read(in, {"surface", "category", "pos"});
    std::vector<SocialGroupTerm> terms;
    std::unordered_map<std::string, std::size_t> first_seen;
    for (const auto &row : rows) {
        const auto where = "line " + std::to_string(row.line) + ": ";
        const auto &surface = row.fields[0];
        if (auto problem = surface_problem(surface); !problem.empty()) {
            throw ValidationError(where + problem + " ('" + surface + "')");
        }
        const auto category = parse_category(row.fields[1]);
        if (!category) throw ValidationError(where + "unknown category '" + row.fields[1] + "'");
        const auto pos = parse_pos(row.fields[2]);
        if (!pos) throw ValidationError(where + "unknown pos '" + row.fields[2] + "'");
        if (auto [it, inserted] = first_seen.emplace(surface, row.line); !inserted) {
            throw ValidationError(where + "duplicate surface '" + surface + "' (first seen on line " +
                                  std::to_string(it->second) + ")");
        }
        terms.push_back({surface, *category, *pos});
    }
    return Lexicon(std::move(terms), std::move(language));
}

inline Lexicon load_lexicon(const std::filesystem::path &path, std::string language = "nl") {
    auto in = io::open_input(path);
    try {
        return parse_lexicon(in, std::move(language));
    } catch (const ValidationError &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

/// Lexicon terms grouped by (category, grammatical form). Terms marked `both`
/// sit in the noun and the adjective bucket of their category.
class SubstitutionDictionary {
public:
    using Key = std::pair<Category, Pos>;

    [[nodiscard]] const std::vector<SocialGroupTerm> *bucket(Category c, Pos p) const {
        const auto it = buckets_.find({c, p});
        return it == buckets_.end() ? nullptr : &it->second;
    }
    [[nodiscard]] const std::map<Key, std::vector<SocialGroupTerm>> &buckets() const noexcept { return buckets_; }

    /// Buckets that contain `term`, noun bucket first.
    [[nodiscard]] std::vector<const std::vector<SocialGroupTerm> *> buckets_of(const SocialGroupTerm &term) const {
        std::vector<const std::vector<SocialGroupTerm> *> out;
        for (const Pos p : {Pos::noun, Pos::adjective}) {
            if (term.pos != Pos::both && term.pos != p) continue;
            const auto *b = bucket(term.category, p);
            if (b == nullptr || std::find(b->begin(), b->end(), term) == b->end()) {
                throw Error("internal consistency: term '" + term.surface + "' missing from bucket " +
                            std::string(to_string(term.category)) + "/" + std::string(to_string(p)));
            }
            out.push_back(b);
        }
        return out;
    }

private:
    friend SubstitutionDictionary build_dictionary(const Lexicon &lex);
    std::map<Key, std::vector<SocialGroupTerm>> buckets_;
};

inline SubstitutionDictionary build_dictionary(const Lexicon &lex) {
    SubstitutionDictionary dict;
    for (const auto &t : lex.terms()) {
        if (t.pos == Pos::noun || t.pos == Pos::both) dict.buckets_[{t.category, Pos::noun}].push_back(t);
        if (t.pos == Pos::adjective || t.pos == Pos::both) dict.buckets_[{t.category, Pos::adjective}].push_back(t);
    }
    return dict;
}

/// All word-bounded, case-insensitive, non-overlapping lexicon occurrences,
/// ordered by start; the longest surface wins at a shared start.
inline std::vector<SgtMatch> find_sgts(std::u32string_view text, const Lexicon &lex) {
    std::vector<SgtMatch> out;
    if (lex.empty()) return out;
    const auto lower = unicode::to_lower(text);
    const auto n = lower.size();
    const auto max_len = lex.max_surface_length();
    std::size_t i = 0;
    while (i < n) {
        if (!unicode::is_letter(lower[i]) || (i > 0 && unicode::is_letter(lower[i - 1]))) {
            ++i;
            continue;
        }
        bool matched = false;
        for (std::size_t len = std::min(max_len, n - i); len > 0; --len) {
            const auto end = i + len;
            if (end < n && unicode::is_letter(lower[end])) continue;
            const auto idx = lex.find(std::u32string_view(lower).substr(i, len));
            if (idx == Lexicon::npos) continue;
            out.push_back({lex[idx], i, end});
            i = end;
            matched = true;
            break;
        }
        if (!matched) ++i;
    }
    return out;
}

inline std::vector<SgtMatch> find_sgts(std::string_view text, const Lexicon &lex) {
    return find_sgts(std::u32string_view(unicode::decode(text)), lex);
}

}  // namespace cfair

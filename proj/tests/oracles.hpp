#pragma once

// Independent reference computations used by the unit tests and the
// acceptance binary. None of these call into the metric or generator code
// they check; they only share the plain data types.

#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <set>
#include <string>
#include <vector>

#include "cfair/corpus.hpp"
#include "cfair/evalset.hpp"
#include "cfair/generate.hpp"
#include "cfair/lexicon.hpp"
#include "cfair/unicode.hpp"

namespace oracle {

struct CtfPair {
    std::optional<double> toxic;
    std::optional<double> nontoxic;
};

/// Enumerates every ordered index pair i < j and averages |g_i - g_j| per
/// template, then per toxicity class.
inline CtfPair brute_force_ctf(const std::vector<cfair::EvalSentence> &s, const std::vector<double> &g,
                               bool within_category = false) {
    std::map<std::string, std::pair<double, double>> per_template;  // sum, pairs
    std::map<std::string, bool> is_toxic;
    for (std::size_t i = 0; i < s.size(); ++i) {
        is_toxic[s[i].template_id] = s[i].gold == cfair::Toxicity::toxic;
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            if (s[i].template_id != s[j].template_id) continue;
            if (within_category && s[i].sgt.category != s[j].sgt.category) continue;
            auto &t = per_template[s[i].template_id];
            t.first += std::fabs(g[i] - g[j]);
            t.second += 1.0;
        }
    }
    double sum[2] = {0, 0};
    int n[2] = {0, 0};
    for (const auto &[id, t] : per_template) {
        const int k = is_toxic[id] ? 1 : 0;
        sum[k] += t.first / t.second;
        ++n[k];
    }
    CtfPair out;
    if (n[1]) out.toxic = sum[1] / n[1];
    if (n[0]) out.nontoxic = sum[0] / n[0];
    return out;
}

/// Grammatical forms a term can fill.
inline std::set<cfair::Pos> forms(cfair::Pos p) {
    if (p == cfair::Pos::both) return {cfair::Pos::noun, cfair::Pos::adjective};
    return {p};
}

/// Lists MGS rule violations for the counterfactuals of one parent post.
inline std::vector<std::string> mgs_violations(const cfair::Post &parent, const std::vector<cfair::Counterfactual> &cfs,
                                               const cfair::Lexicon &lex) {
    std::map<std::string, cfair::SocialGroupTerm> by_surface;
    for (const auto &t : lex.terms()) by_surface[t.surface] = t;
    std::vector<std::string> v;
    const auto p = cfair::unicode::decode(parent.text);
    for (const auto &cf : cfs) {
        const auto tag = parent.id + " -> '" + cf.text + "': ";
        if (cf.label != parent.label) v.push_back(tag + "label not inherited");
        if (cf.parent_id != parent.id) v.push_back(tag + "wrong parent id");
        if (!cf.sub) {
            v.push_back(tag + "no substitution record");
            continue;
        }
        const auto &sub = *cf.sub;
        const auto orig = by_surface.find(sub.original.surface);
        const auto repl = by_surface.find(sub.replacement.surface);
        if (orig == by_surface.end() || repl == by_surface.end()) {
            v.push_back(tag + "term outside lexicon");
            continue;
        }
        if (orig->second.category != repl->second.category) v.push_back(tag + "category changed");
        const auto fo = forms(orig->second.pos), fr = forms(repl->second.pos);
        bool shared = false;
        for (const auto f : fo) shared = shared || fr.count(f) > 0;
        if (!shared) v.push_back(tag + "no shared grammatical form");
        if (sub.original.surface == sub.replacement.surface) v.push_back(tag + "identity substitution");

        // single edit: the text is the parent with exactly [start, end) rewritten
        if (sub.end > p.size() || sub.start >= sub.end) {
            v.push_back(tag + "offsets out of range");
            continue;
        }
        std::u32string span = p.substr(sub.start, sub.end - sub.start);
        for (auto &c : span) c = cfair::unicode::to_lower(c);
        if (cfair::unicode::encode(span) != sub.original.surface) v.push_back(tag + "span is not the original term");
        const bool left_ok = sub.start == 0 || !cfair::unicode::is_letter(p[sub.start - 1]);
        const bool right_ok = sub.end == p.size() || !cfair::unicode::is_letter(p[sub.end]);
        if (!left_ok || !right_ok) v.push_back(tag + "span is not word bounded");
        const auto expected = cfair::unicode::encode(p.substr(0, sub.start)) + sub.replacement.surface +
                              cfair::unicode::encode(p.substr(sub.end));
        if (expected != cf.text) v.push_back(tag + "text is not a single edit of the parent");

        const auto c = cfair::unicode::decode(cf.text);
        std::size_t lcp = 0;
        while (lcp < p.size() && lcp < c.size() && p[lcp] == c[lcp]) ++lcp;
        std::size_t lcs = 0;
        while (lcs < p.size() - lcp && lcs < c.size() - lcp && p[p.size() - 1 - lcs] == c[c.size() - 1 - lcs]) ++lcs;
        if (lcp < sub.start || p.size() - lcs > sub.end) v.push_back(tag + "differs outside the substituted span");
    }
    return v;
}

/// Splices `repl` over code points [start, end).
inline std::string replace_span(const std::string &text, std::size_t start, std::size_t end, const std::string &repl) {
    const auto cps = cfair::unicode::decode(text);
    return cfair::unicode::encode(cps.substr(0, start)) + repl + cfair::unicode::encode(cps.substr(end));
}

/// Texts SLL should keep: every other-term substitution at every match whose
/// individually computed score is >= the parent's.
template <typename Scorer>
std::set<std::string> sll_expected(const cfair::Post &post, const cfair::Lexicon &lex, const Scorer &scorer,
                                   std::size_t *scored = nullptr) {
    const double base = scorer.score(post.text).logprob;
    std::set<std::string> keep;
    std::size_t n = 0;
    for (const auto &m : cfair::find_sgts(post.text, lex)) {
        for (const auto &t : lex.terms()) {
            if (t.surface == m.term.surface) continue;
            ++n;
            const auto text = replace_span(post.text, m.start, m.end, t.surface);
            if (text != post.text && scorer.score(text).logprob >= base) keep.insert(text);
        }
    }
    if (scored) *scored = n;
    return keep;
}

/// Max-min spread of per-group positive rates.
template <typename G>
double dpd(const std::vector<G> &group, const std::vector<int> &pred) {
    std::map<G, std::pair<int, int>> c;
    for (std::size_t i = 0; i < group.size(); ++i) {
        c[group[i]].first += pred[i];
        c[group[i]].second += 1;
    }
    double lo = 2, hi = -1;
    for (const auto &[g, pc] : c) {
        const double r = static_cast<double>(pc.first) / pc.second;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    return hi - lo;
}

/// Equalized odds difference from explicit per-group confusion matrices.
template <typename G>
double eod(const std::vector<G> &group, const std::vector<int> &pred, const std::vector<int> &gold) {
    std::map<G, std::array<int, 4>> cm;  // tp fn fp tn
    for (std::size_t i = 0; i < group.size(); ++i) {
        auto &m = cm[group[i]];
        if (gold[i] == 1 && pred[i] == 1) ++m[0];
        if (gold[i] == 1 && pred[i] == 0) ++m[1];
        if (gold[i] == 0 && pred[i] == 1) ++m[2];
        if (gold[i] == 0 && pred[i] == 0) ++m[3];
    }
    std::vector<double> tpr, fpr;
    for (const auto &[g, m] : cm) {
        if (m[0] + m[1] > 0) tpr.push_back(static_cast<double>(m[0]) / (m[0] + m[1]));
        if (m[2] + m[3] > 0) fpr.push_back(static_cast<double>(m[2]) / (m[2] + m[3]));
    }
    auto spread = [](const std::vector<double> &x) {
        if (x.size() < 2) return 0.0;
        return *std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end());
    };
    return std::max(spread(tpr), spread(fpr));
}

/// Unweighted mean of per-class F1 over the classes present in gold.
template <typename L>
double macro_f1(const std::vector<L> &pred, const std::vector<L> &gold) {
    std::set<L> classes(gold.begin(), gold.end());
    double total = 0;
    for (const auto &c : classes) {
        int tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            if (pred[i] == c && gold[i] == c) ++tp;
            if (pred[i] == c && gold[i] != c) ++fp;
            if (pred[i] != c && gold[i] == c) ++fn;
        }
        const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
        const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
        total += p + r == 0 ? 0.0 : 2 * p * r / (p + r);
    }
    return total / static_cast<double>(classes.size());
}

/// A random post mixing lexicon terms (some capitalised, some glued to
/// punctuation) with filler words.
inline cfair::Post random_post(std::mt19937 &rng, const cfair::Lexicon &lex, const std::string &id) {
    static const std::vector<std::string> filler{"de", "het", "een", "die", "is", "zijn", "niet", "weg", "met",
                                                 "mensen", "altijd", "hier", "en", "of", "turkse", "3"};
    std::uniform_int_distribution<int> len(1, 10);
    std::uniform_int_distribution<std::size_t> pick_term(0, lex.size() - 1), pick_filler(0, filler.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_label(0, 3);
    std::bernoulli_distribution term(0.3), capital(0.2), punct(0.1);
    std::string text;
    for (int i = len(rng); i > 0; --i) {
        std::string w = term(rng) ? lex[pick_term(rng)].surface : filler[pick_filler(rng)];
        if (capital(rng) && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
        if (punct(rng)) w += "!";
        text += (text.empty() ? "" : " ") + w;
    }
    return {id, text, cfair::all_labels[pick_label(rng)], {}};
}

// Independent recount: whitespace tokens via istringstream, terms by splitting
// each token on non-alphabetic ASCII and looking the pieces up in a set.
struct OracleLabel {
    std::uint64_t count = 0;
    std::uint64_t tokens = 0;
    std::map<std::string, std::uint64_t> terms;
};

inline std::map<cfair::Label, OracleLabel> recount(const std::vector<cfair::Post> &posts, const std::set<std::string> &surfaces) {
    std::map<cfair::Label, OracleLabel> out;
    for (const auto &p : posts) {
        auto &o = out[p.label];
        ++o.count;
        std::istringstream ss(p.text);
        std::string tok;
        while (ss >> tok) {
            ++o.tokens;
            std::string piece;
            for (const char c : tok + " ") {
                if (std::isalpha(static_cast<unsigned char>(c))) {
                    piece += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                } else {
                    if (surfaces.count(piece)) ++o.terms[piece];
                    piece.clear();
                }
            }
        }
    }
    return out;
}

inline double entropy_bits(const std::map<std::string, std::uint64_t> &counts) {
    double total = 0;
    for (const auto &[k, c] : counts) total += static_cast<double>(c);
    double h = 0;
    for (const auto &[k, c] : counts) h += -(static_cast<double>(c) / total) * std::log(static_cast<double>(c) / total);
    return h / std::log(2.0);
}

}  // namespace oracle

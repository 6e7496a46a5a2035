#pragma once

// Fairness and classification metrics. Aggregations work from exact integer
// counts wherever the inputs are hard labels, so results are bit-identical
// regardless of input chunking or thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cfair/error.hpp"
#include "cfair/evalset.hpp"
#include "cfair/predictions.hpp"
#include "cfair/types.hpp"

namespace cfair {

// ---------------------------------------------------------------------------
// Counterfactual token fairness

enum class PairScope { all, within_category };

/// How g(x) is read off a prediction: the binarized hard label (0/1) or the
/// probability mass on the toxic classes.
enum class CtfMode { label, probability };

struct CtfValue {
    std::optional<double> toxic;
    std::optional<double> nontoxic;
    std::optional<double> average;  // present when both classes are
};

struct TemplateCtf {
    std::string template_id;
    Toxicity toxicity = Toxicity::nontoxic;
    std::size_t sentences = 0;
    std::uint64_t pairs = 0;
    double disagreement = 0.0;  // sum of |g(s) - g(s')| over in-scope pairs
    [[nodiscard]] double mean() const { return disagreement / static_cast<double>(pairs); }
};

struct CtfResult {
    CtfValue value;
    std::vector<TemplateCtf> per_template;       // templates with at least one pair
    std::vector<std::string> skipped_templates;  // fewer than two sentences in scope
};

namespace detail {

inline bool is_binary(std::span<const double> g) {
    return std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

/// Sum of |g_i - g_j| over unordered pairs, and the number of pairs.
inline std::pair<double, std::uint64_t> pair_disagreement(const std::vector<double> &g) {
    const auto n = static_cast<std::uint64_t>(g.size());
    const auto pairs = n * (n - (n > 0 ? 1 : 0)) / 2;
    if (is_binary(g)) {
        const auto k = static_cast<std::uint64_t>(std::count(g.begin(), g.end(), 1.0));
        return {static_cast<double>(k * (n - k)), pairs};
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = i + 1; j < g.size(); ++j) sum += std::abs(g[i] - g[j]);
    }
    return {sum, pairs};
}

inline CtfValue summarize(const std::vector<TemplateCtf> &templates) {
    double sums[2] = {0.0, 0.0};
    std::size_t counts[2] = {0, 0};
    for (const auto &t : templates) {
        const auto k = static_cast<std::size_t>(t.toxicity);
        sums[k] += t.mean();
        ++counts[k];
    }
    CtfValue v;
    if (counts[1] > 0) v.toxic = sums[1] / static_cast<double>(counts[1]);
    if (counts[0] > 0) v.nontoxic = sums[0] / static_cast<double>(counts[0]);
    if (v.toxic && v.nontoxic) v.average = (*v.toxic + *v.nontoxic) / 2.0;
    return v;
}

}  // namespace detail

/// Within-template disagreement rate. For each template, the mean of
/// |g(s) - g(s')| over all unordered pairs of its sentences (restricted to
/// same-category pairs under `within_category`, or to one category when
/// `only` is set); then the mean of those template means per toxicity class.
/// `g[i]` belongs to `sentences[i]`.
inline CtfResult ctf(std::span<const EvalSentence> sentences, std::span<const double> g, PairScope scope,
                     std::optional<Category> only = std::nullopt) {
    if (g.size() != sentences.size()) throw CompletenessError("ctf", {}, {});
    // group sentences by template, preserving first-seen template order
    std::vector<std::string> order;
    std::map<std::string, std::pair<Toxicity, std::map<int, std::vector<double>>>> groups;
    std::map<std::string, std::size_t> sizes;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        const auto &s = sentences[i];
        auto [it, fresh] = groups.try_emplace(s.template_id);
        if (fresh) {
            order.push_back(s.template_id);
            it->second.first = s.gold;
        } else if (it->second.first != s.gold) {
            throw ValidationError("template '" + s.template_id + "' mixes gold labels");
        }
        if (only && s.sgt.category != *only) continue;
        const int bucket = (scope == PairScope::within_category || only) ? static_cast<int>(s.sgt.category) : -1;
        it->second.second[bucket].push_back(g[i]);
        ++sizes[s.template_id];
    }
    CtfResult result;
    for (const auto &id : order) {
        const auto &[tox, buckets] = groups.at(id);
        TemplateCtf t{id, tox, sizes[id], 0, 0.0};
        for (const auto &[key, values] : buckets) {
            const auto [sum, pairs] = detail::pair_disagreement(values);
            t.disagreement += sum;
            t.pairs += pairs;
        }
        if (t.pairs == 0) {
            result.skipped_templates.push_back(id);
        } else {
            result.per_template.push_back(std::move(t));
        }
    }
    result.value = detail::summarize(result.per_template);
    return result;
}

/// g values for `sentences` from predictions already aligned by index.
inline std::vector<double> ctf_scores(std::span<const Prediction> aligned, CtfMode mode) {
    std::vector<double> g;
    g.reserve(aligned.size());
    for (const auto &p : aligned) {
        g.push_back(mode == CtfMode::label ? (binarize(p.label) == Toxicity::toxic ? 1.0 : 0.0) : p.toxic_probability());
    }
    return g;
}

// ---------------------------------------------------------------------------
// Group fairness

template <typename Group>
struct GroupOutcome {
    Group group;
    bool predicted_positive = false;
    bool actual_positive = false;
};

template <typename Group>
struct DpdResult {
    double value = 0.0;
    std::map<Group, double> rates;
    std::vector<Group> excluded;  // expected groups without any sentence
};

template <typename Group>
struct EodResult {
    double value = 0.0;
    std::map<Group, double> tpr;
    std::map<Group, double> fpr;
    std::vector<Group> excluded_tpr;  // no actual positives
    std::vector<Group> excluded_fpr;  // no actual negatives
};

namespace detail {
template <typename Group>
double spread(const std::map<Group, double> &rates) {
    if (rates.size() < 2) return 0.0;
    const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end(),
                                              [](const auto &a, const auto &b) { return a.second < b.second; });
    return hi->second - lo->second;
}
}  // namespace detail

/// Demographic parity difference: spread of the predicted-positive rate across groups.
template <typename Group>
DpdResult<Group> dpd(std::span<const GroupOutcome<Group>> outcomes, std::span<const Group> expected_groups = {}) {
    std::map<Group, std::pair<std::uint64_t, std::uint64_t>> counts;  // positives, total
    for (const auto &o : outcomes) {
        auto &c = counts[o.group];
        c.first += o.predicted_positive ? 1 : 0;
        ++c.second;
    }
    if (counts.empty()) throw DomainError("demographic parity needs at least one group");
    DpdResult<Group> r;
    for (const auto &[g, c] : counts) r.rates[g] = static_cast<double>(c.first) / static_cast<double>(c.second);
    for (const auto &g : expected_groups) {
        if (!counts.count(g)) r.excluded.push_back(g);
    }
    r.value = detail::spread(r.rates);
    return r;
}

/// Equalized odds difference: the larger of the TPR spread and the FPR spread.
/// Groups without positives (negatives) drop out of the TPR (FPR) spread.
template <typename Group>
EodResult<Group> eod(std::span<const GroupOutcome<Group>> outcomes) {
    struct Confusion {
        std::uint64_t tp = 0, fn = 0, fp = 0, tn = 0;
    };
    std::map<Group, Confusion> cm;
    for (const auto &o : outcomes) {
        auto &c = cm[o.group];
        if (o.actual_positive) {
            (o.predicted_positive ? c.tp : c.fn)++;
        } else {
            (o.predicted_positive ? c.fp : c.tn)++;
        }
    }
    EodResult<Group> r;
    std::size_t both_defined = 0;
    for (const auto &[g, c] : cm) {
        const bool has_pos = c.tp + c.fn > 0;
        const bool has_neg = c.fp + c.tn > 0;
        if (has_pos) {
            r.tpr[g] = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
        } else {
            r.excluded_tpr.push_back(g);
        }
        if (has_neg) {
            r.fpr[g] = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
        } else {
            r.excluded_fpr.push_back(g);
        }
        both_defined += (has_pos && has_neg) ? 1 : 0;
    }
    if (both_defined < 2) {
        throw DomainError("equalized odds undefined: fewer than two groups have both positives and negatives");
    }
    r.value = std::max(detail::spread(r.tpr), detail::spread(r.fpr));
    return r;
}

// ---------------------------------------------------------------------------
// Classification performance

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;    // gold count
    std::uint64_t predicted = 0;  // prediction count
};

template <typename L>
struct ClassificationReport {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::uint64_t total = 0;
    std::map<L, ClassMetrics> per_class;  // every class seen in gold or predictions
};

/// One-vs-rest precision/recall/F1 per class; macro averages are unweighted
/// means over the classes present in gold. Zero denominators yield 0.
template <typename L>
ClassificationReport<L> classification_report(std::span<const L> predicted, std::span<const L> gold) {
    if (predicted.size() != gold.size()) {
        throw CompletenessError("classification report: " + std::to_string(predicted.size()) + " predictions for " +
                                    std::to_string(gold.size()) + " gold labels",
                                {});
    }
    if (gold.empty()) throw DomainError("classification report over an empty set");
    struct Counts {
        std::uint64_t tp = 0, gold = 0, pred = 0;
    };
    std::map<L, Counts> counts;
    std::uint64_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        ++counts[gold[i]].gold;
        ++counts[predicted[i]].pred;
        if (predicted[i] == gold[i]) {
            ++counts[gold[i]].tp;
            ++correct;
        }
    }
    ClassificationReport<L> r;
    r.total = gold.size();
    r.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
    std::size_t in_gold = 0;
    for (const auto &[label, c] : counts) {
        ClassMetrics m;
        m.support = c.gold;
        m.predicted = c.pred;
        m.precision = c.pred == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.pred);
        m.recall = c.gold == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.gold);
        m.f1 = (m.precision + m.recall) == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        if (c.gold > 0) {
            r.macro_precision += m.precision;
            r.macro_recall += m.recall;
            r.macro_f1 += m.f1;
            ++in_gold;
        }
        r.per_class.emplace(label, m);
    }
    r.macro_precision /= static_cast<double>(in_gold);
    r.macro_recall /= static_cast<double>(in_gold);
    r.macro_f1 /= static_cast<double>(in_gold);
    return r;
}

}  // namespace cfair

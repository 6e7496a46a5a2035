#pragma once

#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cfair/corpus.hpp"
#include "cfair/evalset.hpp"
#include "cfair/io.hpp"
#include "cfair/metrics.hpp"
#include "cfair/predictions.hpp"

namespace cfair {

struct AuditInputs {
    std::vector<EvalSentence> evalset;
    std::vector<Prediction> predictions;  // any order; matched by id
    CtfMode ctf_mode = CtfMode::label;
    // optional 4-class performance data
    std::optional<std::vector<Post>> gold_posts;
    std::optional<std::vector<Prediction>> post_predictions;
};

struct FairnessReport {
    CtfResult ctf;
    std::map<Category, CtfResult> ctf_by_category;
    DpdResult<Category> dpd;
    std::optional<EodResult<Category>> eod;
    std::optional<std::string> eod_error;
    std::optional<ClassificationReport<Label>> classification;
    io::json meta = io::json::object();
};

namespace detail {
inline io::json opt(const std::optional<double> &v) { return v ? io::json(*v) : io::json(nullptr); }

inline io::json ctf_json(const CtfValue &v) {
    return {{"toxic", opt(v.toxic)}, {"nontoxic", opt(v.nontoxic)}, {"average", opt(v.average)}};
}

template <typename G>
io::json names(const std::vector<G> &groups) {
    io::json out = io::json::array();
    for (const auto &g : groups) out.push_back(to_string(g));
    return out;
}

template <typename G>
io::json rates(const std::map<G, double> &m) {
    io::json out = io::json::object();
    for (const auto &[g, v] : m) out[std::string(to_string(g))] = v;
    return out;
}
}  // namespace detail

/// Runs every metric over the inputs. Predictions must cover the evalset exactly.
inline FairnessReport audit(const AuditInputs &in) {
    std::vector<std::string> ids;
    ids.reserve(in.evalset.size());
    for (const auto &s : in.evalset) ids.push_back(s.id());
    const auto aligned = match_predictions(ids, in.predictions, "evalset predictions");
    const auto g = ctf_scores(aligned, in.ctf_mode);

    FairnessReport r;
    r.ctf = ctf(in.evalset, g, PairScope::all);
    for (const auto c : all_categories) {
        auto res = ctf(in.evalset, g, PairScope::within_category, c);
        if (!res.per_template.empty()) r.ctf_by_category.emplace(c, std::move(res));
    }

    std::vector<GroupOutcome<Category>> outcomes;
    outcomes.reserve(in.evalset.size());
    for (std::size_t i = 0; i < in.evalset.size(); ++i) {
        outcomes.push_back({in.evalset[i].sgt.category, binarize(aligned[i].label) == Toxicity::toxic,
                            in.evalset[i].gold == Toxicity::toxic});
    }
    r.dpd = dpd<Category>(outcomes, all_categories);
    try {
        r.eod = eod<Category>(outcomes);
    } catch (const DomainError &e) {
        r.eod_error = e.what();
    }

    if (in.gold_posts && in.post_predictions) {
        std::vector<std::string> post_ids;
        for (const auto &p : *in.gold_posts) post_ids.push_back(p.id);
        const auto post_aligned = match_predictions(post_ids, *in.post_predictions, "post predictions");
        std::vector<Label> pred, gold;
        for (std::size_t i = 0; i < post_aligned.size(); ++i) {
            pred.push_back(post_aligned[i].label);
            gold.push_back((*in.gold_posts)[i].label);
        }
        r.classification = classification_report<Label>(pred, gold);
    }

    std::vector<std::string> skipped = r.ctf.skipped_templates;
    r.meta = {{"ctf_mode", in.ctf_mode == CtfMode::label ? "label" : "probability"},
              {"ctf_normalization", "mean over unordered same-template pairs, then mean over templates"},
              {"group_metrics_dataset", "evalset"},
              {"group_metrics_groups", "social group term category"},
              {"classification_averaging", "macro over classes present in gold"},
              {"evalset_sentences", in.evalset.size()},
              {"skipped_templates", skipped},
              {"dpd_excluded_groups", detail::names(r.dpd.excluded)}};
    if (r.eod) {
        r.meta["eod_excluded_tpr_groups"] = detail::names(r.eod->excluded_tpr);
        r.meta["eod_excluded_fpr_groups"] = detail::names(r.eod->excluded_fpr);
    }
    return r;
}

inline io::json to_json(const FairnessReport &r) {
    io::json j;
    j["meta"] = r.meta;
    j["ctf"] = detail::ctf_json(r.ctf.value);
    io::json by_cat = io::json::object();
    for (const auto &[c, res] : r.ctf_by_category) {
        by_cat[std::string(to_string(c))] = {{"toxic", detail::opt(res.value.toxic)},
                                             {"nontoxic", detail::opt(res.value.nontoxic)}};
    }
    j["ctf_by_category"] = by_cat;
    io::json per_template = io::json::array();
    for (const auto &t : r.ctf.per_template) {
        per_template.push_back({{"template_id", t.template_id},
                                {"toxicity", to_string(t.toxicity)},
                                {"sentences", t.sentences},
                                {"pairs", t.pairs},
                                {"disagreement", t.disagreement},
                                {"ctf", t.mean()}});
    }
    j["ctf_per_template"] = per_template;
    j["dpd"] = r.dpd.value;
    j["dpd_rates"] = detail::rates(r.dpd.rates);
    if (r.eod) {
        j["eod"] = r.eod->value;
        j["eod_tpr"] = detail::rates(r.eod->tpr);
        j["eod_fpr"] = detail::rates(r.eod->fpr);
    } else {
        j["eod"] = nullptr;
        j["eod_error"] = r.eod_error.value_or("");
    }
    if (r.classification) {
        const auto &c = *r.classification;
        io::json per_class = io::json::object();
        for (const auto &[label, m] : c.per_class) {
            per_class[std::string(to_string(label))] = {{"precision", m.precision},
                                                        {"recall", m.recall},
                                                        {"f1", m.f1},
                                                        {"support", m.support}};
        }
        j["classification"] = {{"accuracy", c.accuracy},
                               {"macro_precision", c.macro_precision},
                               {"macro_recall", c.macro_recall},
                               {"macro_f1", c.macro_f1},
                               {"total", c.total},
                               {"per_class", per_class}};
    }
    return j;
}

namespace detail {
inline std::string fmt_num(const io::json &v, int precision = 4) {
    if (v.is_null()) return "-";
    std::ostringstream ss;
    if (v.is_number_float()) {
        ss << std::fixed << std::setprecision(precision) << v.get<double>();
    } else {
        ss << v.dump();
    }
    return ss.str();
}

inline void table(std::ostringstream &out, const std::vector<std::vector<std::string>> &rows) {
    std::vector<std::size_t> width;
    for (const auto &row : rows) {
        width.resize(std::max(width.size(), row.size()), 0);
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    for (const auto &row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i == 0) {
                out << std::left << std::setw(static_cast<int>(width[i])) << row[i];
            } else {
                out << "  " << std::right << std::setw(static_cast<int>(width[i])) << row[i];
            }
        }
        out << '\n';
    }
}
}  // namespace detail

/// Aligned-column text rendering of a report JSON document.
inline std::string render_table(const io::json &report) {
    std::ostringstream out;
    const auto &meta = report.value("meta", io::json::object());
    out << "Fairness report";
    if (meta.contains("model_id")) out << " for " << meta["model_id"].get<std::string>();
    out << "\n\n";

    out << "Counterfactual token fairness (" << meta.value("ctf_mode", std::string("label")) << " mode)\n";
    std::vector<std::vector<std::string>> rows{{"scope", "toxic", "nontoxic", "average"}};
    const auto &c = report.at("ctf");
    rows.push_back({"all", detail::fmt_num(c["toxic"]), detail::fmt_num(c["nontoxic"]), detail::fmt_num(c["average"])});
    for (const auto &[cat, v] : report.at("ctf_by_category").items()) {
        rows.push_back({cat, detail::fmt_num(v["toxic"]), detail::fmt_num(v["nontoxic"]), "-"});
    }
    detail::table(out, rows);

    out << "\nGroup fairness (groups: " << meta.value("group_metrics_groups", std::string("category")) << ")\n";
    rows = {{"group", "positive_rate", "tpr", "fpr"}};
    for (const auto &[g, rate] : report.at("dpd_rates").items()) {
        const auto tpr = report.contains("eod_tpr") && report["eod_tpr"].contains(g) ? report["eod_tpr"][g] : io::json();
        const auto fpr = report.contains("eod_fpr") && report["eod_fpr"].contains(g) ? report["eod_fpr"][g] : io::json();
        rows.push_back({g, detail::fmt_num(rate), detail::fmt_num(tpr), detail::fmt_num(fpr)});
    }
    detail::table(out, rows);
    out << "DPD " << detail::fmt_num(report.at("dpd")) << "   EOD " << detail::fmt_num(report.at("eod")) << '\n';

    if (report.contains("classification")) {
        const auto &cl = report["classification"];
        out << "\nClassification (" << meta.value("classification_averaging", std::string("macro")) << ")\n";
        rows = {{"class", "precision", "recall", "f1", "support"}};
        for (const auto &[label, m] : cl.at("per_class").items()) {
            rows.push_back({label, detail::fmt_num(m["precision"]), detail::fmt_num(m["recall"]),
                            detail::fmt_num(m["f1"]), detail::fmt_num(m["support"])});
        }
        rows.push_back({"macro", detail::fmt_num(cl["macro_precision"]), detail::fmt_num(cl["macro_recall"]),
                        detail::fmt_num(cl["macro_f1"]), detail::fmt_num(cl["total"])});
        detail::table(out, rows);
        out << "accuracy " << detail::fmt_num(cl["accuracy"]) << '\n';
    }
    return out.str();
}

/// Per-template CTF contributions as CSV.
inline std::string render_template_csv(const io::json &report) {
    std::ostringstream out;
    out << "template_id,toxicity,sentences,pairs,disagreement,ctf\n";
    for (const auto &t : report.at("ctf_per_template")) {
        out << t.at("template_id").get<std::string>() << ',' << t.at("toxicity").get<std::string>() << ','
            << t.at("sentences").dump() << ',' << t.at("pairs").dump() << ',' << t.at("disagreement").dump() << ','
            << t.at("ctf").dump() << '\n';
    }
    return out.str();
}

}  // namespace cfair

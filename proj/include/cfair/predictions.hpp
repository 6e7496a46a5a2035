#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cfair/concurrency.hpp"
#include "cfair/error.hpp"
#include "cfair/http.hpp"
#include "cfair/io.hpp"
#include "cfair/types.hpp"

namespace cfair {

/// offensive and violent are toxic; appropriate and inappropriate are not.
constexpr Toxicity binarize(Label l) noexcept {
    return (l == Label::offensive || l == Label::violent) ? Toxicity::toxic : Toxicity::nontoxic;
}

struct Prediction {
    std::string id;
    Label label = Label::appropriate;
    std::optional<std::array<double, 4>> probs;  // in class order appropriate..violent

    friend bool operator==(const Prediction &, const Prediction &) = default;

    /// Probability mass on the toxic classes (offensive + violent).
    [[nodiscard]] double toxic_probability() const {
        if (!probs) throw DomainError("prediction '" + id + "' carries no probabilities");
        return (*probs)[2] + (*probs)[3];
    }
};

inline void validate_prediction(const Prediction &p) {
    if (p.id.empty()) throw ValidationError("prediction with empty id");
    if (!p.probs) return;
    double sum = 0.0;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double v = (*p.probs)[i];
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("prediction '" + p.id + "': probability outside [0,1]");
        sum += v;
        if (v > (*p.probs)[argmax]) argmax = i;  // first maximum wins ties
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ValidationError("prediction '" + p.id + "': probabilities do not sum to 1");
    if (static_cast<Label>(argmax) != p.label) {
        throw ValidationError("prediction '" + p.id + "': label '" + std::string(to_string(p.label)) +
                              "' disagrees with argmax of probs");
    }
}

inline Prediction prediction_from_json(const io::json &j) {
    Prediction p;
    p.id = j.at("id").get<std::string>();
    p.label = require_label(j.at("label").get<std::string>());
    if (auto it = j.find("probs"); it != j.end() && !it->is_null()) {
        if (!it->is_array() || it->size() != 4) throw ShapeError("prediction '" + p.id + "': probs must have 4 entries");
        std::array<double, 4> probs{};
        for (std::size_t i = 0; i < 4; ++i) probs[i] = it->at(i).get<double>();
        p.probs = probs;
    }
    validate_prediction(p);
    return p;
}

inline io::json to_json(const Prediction &p) {
    io::json j = {{"id", p.id}, {"label", to_string(p.label)}};
    if (p.probs) j["probs"] = *p.probs;
    return j;
}

inline std::vector<Prediction> load_predictions(const std::filesystem::path &path) {
    std::vector<Prediction> out;
    io::for_each_jsonl_file(path, [&](const io::json &j, std::size_t) { out.push_back(prediction_from_json(j)); });
    return out;
}

inline std::string predictions_to_jsonl(std::span<const Prediction> preds) {
    std::string out;
    for (const auto &p : preds) out += to_json(p).dump() + "\n";
    return out;
}

/// Aligns predictions with `ids`: exactly one prediction per id, no extras.
inline std::vector<Prediction> match_predictions(std::span<const std::string> ids, std::vector<Prediction> preds,
                                                 const std::string &context = "predictions") {
    std::unordered_map<std::string, std::size_t> by_id;
    std::vector<std::string> duplicated;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!by_id.emplace(preds[i].id, i).second) duplicated.push_back(preds[i].id);
    }
    if (!duplicated.empty()) throw ValidationError(context + ": duplicate prediction ids, first '" + duplicated.front() + "'");
    std::vector<std::string> missing;
    std::vector<Prediction> out;
    out.reserve(ids.size());
    std::unordered_set<std::string> wanted;
    for (const auto &id : ids) {
        wanted.insert(id);
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            missing.push_back(id);
        } else {
            out.push_back(preds[it->second]);
        }
    }
    std::vector<std::string> extra;
    for (const auto &p : preds) {
        if (!wanted.count(p.id)) extra.push_back(p.id);
    }
    if (!missing.empty() || !extra.empty()) throw CompletenessError(context, std::move(missing), std::move(extra));
    return out;
}

/// Something to classify.
struct ClassifyItem {
    std::string id;
    std::string text;
};

/// Client for `POST /classify` and `POST /classify_batch`.
class ClassifierClient {
public:
    struct Options {
        std::string endpoint;
        std::size_t batch_size = 32;  // 1 selects the single-item route
        std::size_t max_in_flight = 4;
        std::string api_key_env = "CLASSIFIER_API_KEY";
        std::chrono::seconds timeout{60};
        RetryPolicy retry;
    };

    explicit ClassifierClient(Options opts) : opts_(std::move(opts)), endpoint_(http::parse_endpoint(opts_.endpoint)) {
        http_.timeout = opts_.timeout;
        http_.bearer_token = http::env_secret(opts_.api_key_env);
    }

    /// One prediction per item, in item order.
    [[nodiscard]] std::vector<Prediction> classify(std::span<const ClassifyItem> items) const {
        const auto bs = std::max<std::size_t>(1, opts_.batch_size);
        const auto chunks = (items.size() + bs - 1) / bs;
        auto results = parallel_map(chunks, opts_.max_in_flight, [&](std::size_t c) {
            const auto chunk = items.subspan(c * bs, std::min(bs, items.size() - c * bs));
            return bs == 1 ? std::vector<Prediction>{classify_one(chunk.front())} : classify_batch(chunk);
        });
        std::vector<Prediction> out;
        out.reserve(items.size());
        for (auto &r : results) {
            for (auto &p : r) out.push_back(std::move(p));
        }
        return out;
    }

private:
    static Prediction read_reply(const io::json &r, const std::string &id) {
        if (!r.is_object()) throw TransportError("classifier reply is not an object", id);
        if (auto it = r.find("error"); it != r.end()) throw TransportError("classifier error: " + it->dump(), id);
        try {
            auto p = prediction_from_json(r);
            if (p.id != id) throw TransportError("classifier reply id does not match request", id);
            return p;
        } catch (const TransportError &) {
            throw;
        } catch (const std::exception &e) {
            throw TransportError(std::string("malformed classifier reply: ") + e.what(), id);
        }
    }

    Prediction classify_one(const ClassifyItem &item) const {
        const io::json req{{"id", item.id}, {"text", item.text}};
        const auto reply =
            with_retries(opts_.retry, [&] { return http::post_json(endpoint_, "/classify", req, http_, item.id); });
        return read_reply(reply, item.id);
    }

    std::vector<Prediction> classify_batch(std::span<const ClassifyItem> chunk) const {
        io::json items = io::json::array();
        for (const auto &it : chunk) items.push_back({{"id", it.id}, {"text", it.text}});
        const io::json req{{"items", items}};
        const auto batch_id = chunk.front().id + ".." + chunk.back().id;
        const auto reply = with_retries(
            opts_.retry, [&] { return http::post_json(endpoint_, "/classify_batch", req, http_, batch_id); });
        const auto arr = reply.is_object() ? reply.find("items") : reply.end();
        if (arr == reply.end() || !arr->is_array()) throw TransportError("batch reply lacks 'items'", batch_id);
        std::unordered_map<std::string, io::json> by_id;
        for (const auto &r : *arr) {
            if (r.is_object() && r.contains("id") && r["id"].is_string()) by_id[r["id"].get<std::string>()] = r;
        }
        std::vector<Prediction> out;
        out.reserve(chunk.size());
        for (const auto &it : chunk) {
            const auto r = by_id.find(it.id);
            if (r == by_id.end()) throw TransportError("batch reply missing item", it.id);
            out.push_back(read_reply(r->second, it.id));
        }
        return out;
    }

    Options opts_;
    http::Endpoint endpoint_;
    http::ClientOptions http_;
};

/// Classifies every item through `client`; the result is checked for completeness.
inline std::vector<Prediction> fetch_predictions(std::span<const ClassifyItem> items, const ClassifierClient &client) {
    auto preds = client.classify(items);
    std::vector<std::string> ids;
    ids.reserve(items.size());
    for (const auto &i : items) ids.push_back(i.id);
    return match_predictions(ids, std::move(preds), "classifier");
}

}  // namespace cfair

#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfair/error.hpp"
#include "cfair/unicode.hpp"

namespace cfair {

/// Natural-log sentence probability.
struct SentenceScore {
    std::string text;
    double logprob = 0.0;
};

/// Anything that maps a sentence to a chain-rule log-likelihood.
template <typename S>
concept SentenceScorer = requires(const S &s, std::string_view text, std::span<const std::string> batch) {
    { s.score(text) } -> std::convertible_to<SentenceScore>;
    { s.score_batch(batch) } -> std::convertible_to<std::vector<double>>;
};

/// Runtime-polymorphic scorer, used when the backend is picked from config.
class ScorerBackend {
public:
    virtual ~ScorerBackend() = default;
    [[nodiscard]] virtual SentenceScore score(std::string_view text) const = 0;
    [[nodiscard]] virtual std::vector<double> score_batch(std::span<const std::string> texts) const {
        std::vector<double> out;
        out.reserve(texts.size());
        for (const auto &t : texts) out.push_back(score(t).logprob);
        return out;
    }
    [[nodiscard]] virtual std::string name() const = 0;
};

/// Returns the same score for every sentence.
class ConstantScorer final : public ScorerBackend {
public:
    explicit ConstantScorer(double value = 0.0) : value_(value) {}
    [[nodiscard]] SentenceScore score(std::string_view text) const override { return {std::string(text), value_}; }
    [[nodiscard]] std::string name() const override { return "constant"; }

private:
    double value_;
};

/// Lowercased whitespace tokens, the tokenization of the n-gram scorer.
inline std::vector<std::string> scorer_tokens(std::string_view text) {
    std::vector<std::string> out;
    const auto lower = unicode::to_lower(unicode::decode(text));
    std::u32string cur;
    for (const char32_t c : lower) {
        if (unicode::is_space(c)) {
            if (!cur.empty()) out.push_back(unicode::encode(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(unicode::encode(cur));
    return out;
}

/// Add-alpha smoothed n-gram model over lowercase whitespace tokens.
///
/// Each sentence is padded with order-1 start symbols and one end symbol. The
/// predicted vocabulary is every training token plus the end symbol plus one
/// UNK slot, so for any context
///   P(w | ctx) = (c(ctx, w) + alpha) / (c(ctx) + alpha * (|V| + 1))
/// sums to one over V and UNK. Unseen contexts fall back to the uniform
/// distribution.
class NgramModel {
public:
    static constexpr std::string_view bos = "<s>";
    static constexpr std::string_view eos = "</s>";
    static constexpr std::string_view unk = "<unk>";

    using Context = std::vector<std::string>;

    [[nodiscard]] int order() const noexcept { return order_; }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] const std::set<std::string> &vocab() const noexcept { return vocab_; }

    /// Number of outcomes the smoothed distribution ranges over: |V| + UNK.
    [[nodiscard]] std::size_t outcomes() const noexcept { return vocab_.size() + 1; }

    [[nodiscard]] std::uint64_t count(const Context &ctx, std::string_view token) const {
        const auto it = counts_.find(ctx);
        if (it == counts_.end()) return 0;
        const auto jt = it->second.next.find(std::string(token));
        return jt == it->second.next.end() ? 0 : jt->second;
    }

    [[nodiscard]] std::uint64_t context_total(const Context &ctx) const {
        const auto it = counts_.find(ctx);
        return it == counts_.end() ? 0 : it->second.total;
    }

    /// Every context seen in training.
    [[nodiscard]] std::vector<Context> contexts() const {
        std::vector<Context> out;
        out.reserve(counts_.size());
        for (const auto &[ctx, row] : counts_) out.push_back(ctx);
        return out;
    }

    /// Smoothed conditional probability; tokens outside the vocabulary are UNK.
    [[nodiscard]] double prob(const Context &ctx, std::string_view token) const {
        const bool known = vocab_.count(std::string(token)) > 0;
        const double c = known ? static_cast<double>(count(ctx, token)) : 0.0;
        const double total = static_cast<double>(context_total(ctx));
        return (c + alpha_) / (total + alpha_ * static_cast<double>(outcomes()));
    }

    /// Sum of log P(token_i | preceding order-1 tokens), including the end symbol.
    [[nodiscard]] double logprob(std::string_view text) const {
        const auto tokens = scorer_tokens(text);
        if (tokens.empty()) throw DomainError("cannot score an empty sentence");
        Context ctx(static_cast<std::size_t>(order_ - 1), std::string(bos));
        double total = 0.0;
        auto step = [&](const std::string &tok) {
            total += std::log(prob(ctx, tok));
            if (!ctx.empty()) {
                ctx.erase(ctx.begin());
                ctx.push_back(tok);
            }
        };
        for (const auto &t : tokens) step(t);
        step(std::string(eos));
        return total;
    }

private:
    struct Row {
        std::unordered_map<std::string, std::uint64_t> next;
        std::uint64_t total = 0;
    };

    friend NgramModel ngram_train(std::span<const std::string> sentences, int order, double alpha);

    int order_ = 1;
    double alpha_ = 1.0;
    std::map<Context, Row> counts_;
    std::set<std::string> vocab_;
};

inline NgramModel ngram_train(std::span<const std::string> sentences, int order, double alpha) {
    if (order < 1) throw DomainError("n-gram order must be >= 1");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("smoothing alpha must be positive");
    NgramModel model;
    model.order_ = order;
    model.alpha_ = alpha;
    bool any = false;
    for (const auto &s : sentences) {
        const auto tokens = scorer_tokens(s);
        if (tokens.empty()) continue;
        any = true;
        std::vector<std::string> padded(static_cast<std::size_t>(order - 1), std::string(NgramModel::bos));
        padded.insert(padded.end(), tokens.begin(), tokens.end());
        padded.emplace_back(NgramModel::eos);
        for (std::size_t i = static_cast<std::size_t>(order - 1); i < padded.size(); ++i) {
            NgramModel::Context ctx(padded.begin() + static_cast<std::ptrdiff_t>(i - (order - 1)),
                                    padded.begin() + static_cast<std::ptrdiff_t>(i));
            auto &row = model.counts_[ctx];
            ++row.next[padded[i]];
            ++row.total;
            model.vocab_.insert(padded[i]);
        }
    }
    if (!any) throw DomainError("cannot train an n-gram model on an empty corpus");
    return model;
}

inline NgramModel ngram_train(const std::vector<std::string> &sentences, int order, double alpha) {
    return ngram_train(std::span<const std::string>(sentences), order, alpha);
}

class NgramScorer final : public ScorerBackend {
public:
    explicit NgramScorer(NgramModel model) : model_(std::make_shared<const NgramModel>(std::move(model))) {}
    [[nodiscard]] SentenceScore score(std::string_view text) const override {
        return {std::string(text), model_->logprob(text)};
    }
    [[nodiscard]] std::string name() const override { return "ngram-" + std::to_string(model_->order()); }
    [[nodiscard]] const NgramModel &model() const noexcept { return *model_; }

private:
    std::shared_ptr<const NgramModel> model_;
};

}  // namespace cfair

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "cfair/generate.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cfair;
using testing_support::lexicon_from;
using testing_support::shipped_lexicon;

namespace {

std::set<std::string> texts_of(const std::vector<Counterfactual> &cfs) {
    std::set<std::string> out;
    for (const auto &c : cfs) out.insert(c.text);
    return out;
}

Post post(std::string text, Label label = Label::offensive) { return {"p1", std::move(text), label, {}}; }

}  // namespace

TEST(Mgs, SameCategoryAndFormOnly) {
    const auto lex = lexicon_from(
        "nederlands,nationality,adjective\nbelgisch,nationality,adjective\nduits,nationality,adjective\n"
        "duitser,nationality,noun\nwit,skincolor,adjective\n");
    const auto cfs = mgs_generate(post("spreek nederlands"), build_dictionary(lex), lex);
    EXPECT_EQ(texts_of(cfs), (std::set<std::string>{"spreek belgisch", "spreek duits"}));
    for (const auto &c : cfs) {
        EXPECT_EQ(c.method, Method::mgs);
        EXPECT_EQ(c.label, Label::offensive);
        EXPECT_EQ(c.parent_id, "p1");
        EXPECT_EQ(c.sub->original.surface, "nederlands");
        EXPECT_EQ(c.sub->start, 7u);
        EXPECT_EQ(c.sub->end, 17u);
    }
}

TEST(Mgs, ShippedLexiconExamples) {
    const auto &lex = shipped_lexicon();
    const auto dict = build_dictionary(lex);
    EXPECT_EQ(texts_of(mgs_generate(post("vrouw"), dict, lex)), (std::set<std::string>{"man", "transgender"}));

    const auto nl = texts_of(mgs_generate(post("spreek nederlands"), dict, lex));
    EXPECT_TRUE(nl.count("spreek belgisch"));
    EXPECT_TRUE(nl.count("spreek duits"));
    EXPECT_FALSE(nl.count("spreek nederlander"));  // noun, other bucket
    EXPECT_EQ(nl.size(), dict.bucket(Category::nationality, Pos::adjective)->size() - 1);
}

TEST(Mgs, SingletonBucketGivesNothing) {
    const auto lex = lexicon_from("wit,skincolor,adjective\nturk,nationality,noun\n");
    EXPECT_TRUE(mgs_generate(post("die wit huis"), build_dictionary(lex), lex).empty());
    EXPECT_TRUE(mgs_generate(post("geen term hier"), build_dictionary(lex), lex).empty());
}

TEST(Mgs, BothTermUsesNounThenAdjectiveBucket) {
    const auto lex = lexicon_from(
        "homo,sexuality,both\nlesbienne,sexuality,noun\nbiseksueel,sexuality,adjective\nhetero,sexuality,both\n");
    const auto cfs = mgs_generate(post("een homo"), build_dictionary(lex), lex);
    std::vector<std::string> texts;
    for (const auto &c : cfs) texts.push_back(c.text);
    // noun bucket: homo lesbienne hetero; adjective bucket: homo biseksueel hetero (hetero deduplicated)
    EXPECT_EQ(texts, (std::vector<std::string>{"een lesbienne", "een hetero", "een biseksueel"}));
}

TEST(Mgs, EachOccurrenceReplacedSeparately) {
    const auto lex = lexicon_from("turk,nationality,noun\nbelg,nationality,noun\n");
    const auto cfs = mgs_generate(post("Turk zegt turk"), build_dictionary(lex), lex);
    EXPECT_EQ(texts_of(cfs), (std::set<std::string>{"belg zegt turk", "Turk zegt belg"}));
    EXPECT_TRUE(oracle::mgs_violations(post("Turk zegt turk"), cfs, lex).empty());
}

TEST(Mgs, ClosurePropertyOnRandomPosts) {
    const auto &lex = shipped_lexicon();
    const auto dict = build_dictionary(lex);
    std::mt19937 rng(606);
    std::size_t generated = 0;
    for (int i = 0; i < 200; ++i) {
        const auto p = oracle::random_post(rng, lex, "r" + std::to_string(i));
        const auto cfs = mgs_generate(p, dict, lex);
        generated += cfs.size();
        const auto v = oracle::mgs_violations(p, cfs, lex);
        EXPECT_TRUE(v.empty()) << v.front();
        // nothing equals the parent, nothing repeats
        EXPECT_EQ(texts_of(cfs).size(), cfs.size());
        EXPECT_FALSE(texts_of(cfs).count(p.text));
    }
    EXPECT_GT(generated, 200u);
}

TEST(Sll, ConstantScorerKeepsEveryCandidate) {
    const auto &lex = shipped_lexicon();
    const ConstantScorer scorer(-7.0);
    const auto p = post("ik haat die turk");
    const auto candidates = sll_candidates(p, lex);
    EXPECT_EQ(candidates.size(), 84u);
    EXPECT_EQ(sll_generate(p, lex, scorer).size(), candidates.size());
}

namespace {

/// Records every batch it is asked to score.
struct CountingScorer {
    mutable std::vector<std::size_t> batches;
    [[nodiscard]] SentenceScore score(std::string_view t) const { return {std::string(t), 0.0}; }
    [[nodiscard]] std::vector<double> score_batch(std::span<const std::string> texts) const {
        batches.push_back(texts.size());
        return std::vector<double>(texts.size(), 0.0);
    }
};

}  // namespace

TEST(Sll, OneBatchWithOriginalAndAllCandidates) {
    const CountingScorer scorer;
    (void)sll_generate(post("die turk"), shipped_lexicon(), scorer);
    EXPECT_EQ(scorer.batches, (std::vector<std::size_t>{85}));
    (void)sll_generate(post("niks"), shipped_lexicon(), scorer);
    EXPECT_EQ(scorer.batches.size(), 1u);  // no candidates, no scoring
}

TEST(Sll, CountAsymmetryFavoursFrequentTerm) {
    const auto lex = lexicon_from("turk,nationality,noun\nduitser,nationality,noun\nbelg,nationality,noun\n");
    std::vector<std::string> train;
    for (int i = 0; i < 5; ++i) train.push_back("die turk loopt");
    train.push_back("die duitser loopt");
    const NgramScorer scorer(ngram_train(train, 2, 1.0));
    const auto p = post("die duitser loopt");
    const auto kept = sll_generate(p, lex, scorer);
    EXPECT_EQ(texts_of(kept), (std::set<std::string>{"die turk loopt"}));
    EXPECT_EQ(texts_of(kept), oracle::sll_expected(p, lex, scorer));
}

TEST(Sll, MatchesBruteForceOracle) {
    const auto &lex = shipped_lexicon();
    const std::vector<std::string> train{"ik haat die turk", "die jood is aardig", "de vrouw loopt hier",
                                         "weg met die moslim", "de turk en de marokkaan", "een homo hier"};
    const NgramScorer scorer(ngram_train(train, 2, 0.5));
    for (const auto &text : {"die turk loopt", "de vrouw en de jood", "een moslim", "ik ken een homo hier"}) {
        const auto p = post(text);
        std::size_t scored = 0;
        const auto expected = oracle::sll_expected(p, lex, scorer, &scored);
        EXPECT_EQ(texts_of(sll_generate(p, lex, scorer)), expected) << text;
        for (const auto &c : sll_generate(p, lex, scorer)) {
            EXPECT_GE(scorer.score(c.text).logprob, scorer.score(p.text).logprob);
            EXPECT_EQ(c.label, p.label);
            EXPECT_EQ(c.method, Method::sll);
        }
    }
}

TEST(Counterfactuals, JsonRoundTrip) {
    const auto &lex = shipped_lexicon();
    const auto cfs = mgs_generate(post("die turk"), build_dictionary(lex), lex);
    ASSERT_FALSE(cfs.empty());
    const auto lines = counterfactuals_to_jsonl(cfs);
    std::istringstream in(lines);
    std::vector<Counterfactual> back;
    for (std::string line; std::getline(in, line);) back.push_back(counterfactual_from_json(io::json::parse(line), lex));
    EXPECT_EQ(back, cfs);

    Counterfactual llm{"p9", "iets anders", Label::violent, Method::llmdef, {}};
    EXPECT_EQ(counterfactual_from_json(to_json(llm), lex), llm);
    EXPECT_FALSE(to_json(llm).contains("sub"));
}

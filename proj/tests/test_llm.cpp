#include <gtest/gtest.h>

#include <regex>

#include "cfair/llm.hpp"
#include "http_server.hpp"
#include "support.hpp"

using namespace cfair;
using testing_support::lexicon_from;
using testing_support::shipped_lexicon;

namespace {

Post parent(std::string text = "ik haat die turk") { return {"p7", std::move(text), Label::offensive, {}}; }

std::size_t count(const std::string &hay, const std::string &needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

TEST(Prompts, LlmdefContainsAnchorsAndInput) {
    const auto prompt = llm::build_llmdef_prompt(parent("x"));
    EXPECT_NE(prompt.find("generate five counterfactual sentences"), std::string::npos);
    EXPECT_NE(prompt.find("a JSON list of five dictionaries"), std::string::npos);
    EXPECT_NE(prompt.find("for the input sentence: x\n"), std::string::npos);
    EXPECT_EQ(prompt.find("$input_sentence$"), std::string::npos);
}

TEST(Prompts, SubstitutionIsLiteral) {
    const auto prompt = llm::build_llmdef_prompt(parent("kost $5 en $input_sentence$"));
    EXPECT_NE(prompt.find("input sentence: kost $5 en $input_sentence$\n"), std::string::npos);
    const auto list = llm::build_llmlist_prompt(parent("$social_group_terms$"), lexicon_from("turk,nationality,noun\n"));
    EXPECT_EQ(count(list, "$social_group_terms$"), 2u);  // one from the post in each slot
}

TEST(Prompts, LlmlistEnumeratesShippedLexicon) {
    const auto &lex = shipped_lexicon();
    const auto prompt = llm::build_llmlist_prompt(parent(), lex);
    EXPECT_NE(prompt.find("generate seven counterfactual sentences"), std::string::npos);
    EXPECT_NE(prompt.find("a dictionary of \"counterfactual sentences\""), std::string::npos);
    EXPECT_NE(prompt.find("are: \"heteroseksueel\", \"hetero\""), std::string::npos);
    EXPECT_NE(prompt.find(", and \"student\". Input sentence is: ik haat die turk."), std::string::npos);
    for (const auto &t : lex.terms()) EXPECT_EQ(count(prompt, "\"" + t.surface + "\""), 1u) << t.surface;
    std::regex quoted("\"([^\"]+)\"");
    std::size_t quoted_terms = 0;
    for (std::sregex_iterator it(prompt.begin(), prompt.end(), quoted), end; it != end; ++it) {
        if (lex.find((*it)[1].str()) != Lexicon::npos) ++quoted_terms;
    }
    EXPECT_EQ(quoted_terms, 85u);
}

TEST(Prompts, TwoTermLexicon) {
    const auto prompt = llm::build_llmlist_prompt(parent(), lexicon_from("turk,nationality,noun\nbelg,nationality,noun\n"));
    EXPECT_NE(prompt.find("are: \"turk\" and \"belg\". Input"), std::string::npos);
    EXPECT_EQ(count(prompt, "\""), 6u);  // two terms plus the quoted key name
    EXPECT_THROW(llm::build_prompt(Method::mgs, parent(), shipped_lexicon()), Error);
}

TEST(ParseReply, MinimalLlmdef) {
    const auto cfs = llm::parse_llm_response(R"([{"input sentence":"a","counterfactual sentence":"b"}])",
                                             Method::llmdef, parent("a"));
    ASSERT_EQ(cfs.size(), 1u);
    EXPECT_EQ(cfs[0].text, "b");
    EXPECT_EQ(cfs[0].label, Label::offensive);
    EXPECT_EQ(cfs[0].method, Method::llmdef);
    EXPECT_FALSE(cfs[0].sub.has_value());
}

TEST(ParseReply, LlmlistDeduplicates) {
    const std::string raw =
        R"({"counterfactual sentences": ["s1", "s2", "s3", "s4", "s5", "s2", "s6"]})";
    EXPECT_EQ(llm::parse_llm_response(raw, Method::llmlist, parent()).size(), 6u);
}

TEST(ParseReply, FencedEqualsBare) {
    const std::string bare =
        R"([{"input sentence":"ik haat die turk","counterfactual sentence":"ik haat die belg"},)"
        R"({"input sentence":"ik haat die turk","counterfactual sentence":"ik haat die jood"}])";
    const auto a = llm::parse_llm_response(bare, Method::llmdef, parent());
    const auto b = llm::parse_llm_response("```json\n" + bare + "\n```", Method::llmdef, parent());
    const auto c = llm::parse_llm_response("Here you go:\n```\n" + bare + "\n```\nHope this helps [1].", Method::llmdef, parent());
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    EXPECT_EQ(a.size(), 2u);
}

TEST(ParseReply, LlmlistShapes) {
    const auto p = parent();
    EXPECT_EQ(llm::parse_llm_response(R"(Sure! {"counterfactual sentences": {"1": "a", "2": "b"}})", Method::llmlist, p).size(), 2u);
    EXPECT_EQ(llm::parse_llm_response(R"({"counterfactual sentences": [{"counterfactual sentence": "a"}, {"x": "b"}]})",
                                      Method::llmlist, p)
                  .size(),
              2u);
    // an unrelated object before the answer is skipped
    EXPECT_EQ(llm::parse_llm_response(R"({"note": 1} then {"counterfactual sentences": ["a"]})", Method::llmlist, p).size(), 1u);
}

TEST(ParseReply, DropsParentEmptyAndWhitespace) {
    const auto cfs = llm::parse_llm_response(R"({"counterfactual sentences": [" ik haat die turk ", "", "  x  ", "x"]})",
                                             Method::llmlist, parent());
    ASSERT_EQ(cfs.size(), 1u);
    EXPECT_EQ(cfs[0].text, "x");
}

TEST(ParseReply, Errors) {
    EXPECT_THROW(llm::parse_llm_response("I cannot help with that.", Method::llmdef, parent()), ParseError);
    EXPECT_THROW(llm::parse_llm_response(R"([{"sentence":"b"}])", Method::llmdef, parent()), ShapeError);
    EXPECT_THROW(llm::parse_llm_response(R"([{"counterfactual sentence": 3}])", Method::llmdef, parent()), ShapeError);
    EXPECT_THROW(llm::parse_llm_response(R"({"sentences": ["a"]})", Method::llmlist, parent()), ShapeError);
    EXPECT_THROW(llm::parse_llm_response(R"({"counterfactual sentences": 4})", Method::llmlist, parent()), ShapeError);
    EXPECT_THROW(llm::parse_llm_response("no json", Method::llmlist, parent()), ParseError);
    EXPECT_THROW(llm::parse_llm_response("[]", Method::sll, parent()), Error);
}

TEST(ExtractJson, BracketsInsideStrings) {
    const auto v = llm::extract_json(R"(x {"a": "]}[{"} y)");
    ASSERT_TRUE(v);
    EXPECT_EQ((*v)["a"], "]}[{");
    EXPECT_FALSE(llm::extract_json("[1, 2"));
}

TEST(ReplayFile, LookupAndMissingKey) {
    testing_support::TempDir dir;
    const auto path = dir.write(
        "replay.jsonl", llm::replay_record("p7", Method::llmdef, "[]").dump() + "\n" +
                            llm::replay_record("p7", Method::llmlist, R"({"counterfactual sentences": []})").dump() + "\n");
    const llm::ReplayFile replay(path);
    EXPECT_EQ(replay.size(), 2u);
    EXPECT_EQ(replay.reply(parent(), Method::llmdef, ""), "[]");
    try {
        (void)replay.reply(Post{"p8", "x", Label::violent, {}}, Method::llmdef, "");
        FAIL();
    } catch (const CompletenessError &e) {
        EXPECT_NE(std::string(e.what()).find("p8/llmdef"), std::string::npos) << e.what();
    }
}

TEST(ChatClient, SendsPromptAndReadsContent) {
    testing_support::LocalServer srv;
    std::string seen_auth, seen_prompt, seen_model;
    srv.server().Post("/v1/chat/completions", [&](const httplib::Request &req, httplib::Response &res) {
        seen_auth = req.get_header_value("Authorization");
        const auto j = nlohmann::json::parse(req.body);
        seen_prompt = j["messages"][0]["content"];
        seen_model = j["model"];
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"[]"}}]})", "application/json");
    });
    srv.start();
    ::setenv("CFAIR_TEST_LLM_KEY", "sekrit", 1);
    llm::ChatConfig cfg;
    cfg.endpoint = srv.url("/v1/chat/completions");
    cfg.model = "test-model";
    cfg.api_key_env = "CFAIR_TEST_LLM_KEY";
    const llm::ChatClient client(cfg);
    EXPECT_EQ(client.reply(parent(), Method::llmdef, "PROMPT"), "[]");
    EXPECT_EQ(seen_prompt, "PROMPT");
    EXPECT_EQ(seen_model, "test-model");
    EXPECT_EQ(seen_auth, "Bearer sekrit");
}

TEST(ChatClient, MalformedReplyIsTransportError) {
    testing_support::LocalServer srv;
    srv.server().Post("/chat", [](const httplib::Request &, httplib::Response &res) {
        res.set_content(R"({"choices":[]})", "application/json");
    });
    srv.start();
    llm::ChatConfig cfg;
    cfg.endpoint = srv.url("/chat");
    cfg.retry.max_attempts = 1;
    EXPECT_THROW((void)llm::ChatClient(cfg).reply(parent(), Method::llmlist, "x"), TransportError);
}

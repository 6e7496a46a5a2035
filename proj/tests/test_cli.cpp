#include <gtest/gtest.h>

#include <sys/wait.h>

#include "cfair/cli.hpp"
#include "support.hpp"

using namespace cfair;
using nlohmann::json;
using testing_support::fixture;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

std::string lex() { return testing_support::shipped_lexicon_path().string(); }

}  // namespace

TEST(Cli, LexiconValidate) {
    const auto r = cli_run({"--lexicon", lex(), "lexicon", "validate"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("85 terms"), std::string::npos) << r.out;
}

TEST(Cli, DuplicateRowNamesLine) {
    TempDir dir;
    const auto bad = dir.write("dup.csv", "surface,category,pos\nturk,nationality,noun\nbelg,nationality,noun\nturk,nationality,noun\n");
    const auto r = cli_run({"--lexicon", bad.string(), "lexicon", "validate"});
    EXPECT_EQ(r.code, static_cast<int>(ExitCode::validation));
    EXPECT_NE(r.err.find("line 4"), std::string::npos) << r.err;
}

TEST(Cli, MissingFileIsIoError) {
    const auto r = cli_run({"--lexicon", "/nonexistent/lex.csv", "lexicon", "validate"});
    EXPECT_EQ(r.code, static_cast<int>(ExitCode::io));
    EXPECT_NE(r.err.find("file not found"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(cli_run({}).code, static_cast<int>(ExitCode::usage));
    EXPECT_EQ(cli_run({"frobnicate"}).code, static_cast<int>(ExitCode::usage));
    EXPECT_EQ(cli_run({"generate", "mgs", "--in", "x"}).code, static_cast<int>(ExitCode::usage));
    EXPECT_EQ(cli_run({"audit", "--evalset", "e", "--predictions", "p", "--ctf-mode", "soft"}).code,
              static_cast<int>(ExitCode::usage));
    EXPECT_EQ(cli_run({"--help"}).code, 0);
}

TEST(Cli, ConfigFileAndUnknownKey) {
    TempDir dir;
    const auto good = dir.write("c.json", json{{"lexicon", lex()}}.dump());
    EXPECT_EQ(cli_run({"--config", good.string(), "lexicon", "validate"}).code, 0);
    const auto bad = dir.write("bad.json", R"({"lexicon": "x", "colour": "red"})");
    const auto r = cli_run({"--config", bad.string(), "lexicon", "validate"});
    EXPECT_EQ(r.code, static_cast<int>(ExitCode::validation));
    EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST(Cli, GenerateSllFlagsConflictWithConfig) {
    TempDir dir;
    const auto cfg = dir.write("c.json", json{{"lexicon", lex()}, {"scorer", {{"backend", "http"}, {"command", {"x"}}}}}.dump());
    const auto r = cli_run({"--config", cfg.string(), "generate", "sll", "--in", fixture("posts10.jsonl").string(), "--out",
                            (dir / "o.jsonl").string()});
    EXPECT_EQ(r.code, static_cast<int>(ExitCode::validation)) << r.err;
    const auto ok = cli_run({"--config", cfg.string(), "generate", "sll", "--scorer", "constant", "--in",
                             fixture("posts10.jsonl").string(), "--out", (dir / "o.jsonl").string()});
    EXPECT_EQ(ok.code, 0) << ok.err;
}

TEST(Cli, GenerateStdioScorer) {
    TempDir dir;
    const auto r = cli_run({"--lexicon", lex(), "generate", "sll", "--scorer", "stdio", "--scorer-command", CFAIR_FAKE_SCORER,
                            "--in", fixture("posts10.jsonl").string(), "--out", (dir / "o.jsonl").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    // the fake scorer prefers shorter texts, so every kept substitution is no longer than its parent
    const auto posts = load_posts(fixture("posts10.jsonl"));
    std::map<std::string, std::size_t> len;
    for (const auto &p : posts) len[p.id] = p.text.size();
    std::size_t n = 0;
    io::for_each_jsonl_file(dir / "o.jsonl", [&](const json &j, std::size_t) {
        ++n;
        EXPECT_LE(j["text"].get<std::string>().size(), len.at(j["parent_id"].get<std::string>())) << j.dump();
    });
    EXPECT_GT(n, 0u);
}

TEST(Cli, LlmdefReplayDeterministicAcrossRuns) {
    TempDir dir;
    std::string first;
    for (const auto *limit : {"1", "8", "1"}) {
        const auto out = (dir / (std::string("o") + limit + ".jsonl")).string();
        const auto r = cli_run({"--lexicon", lex(), "--max-in-flight", limit, "generate", "llmdef", "--in",
                                fixture("posts10.jsonl").string(), "--replay", fixture("llm_replay.jsonl").string(), "--out", out});
        EXPECT_EQ(r.code, 0) << r.err;
        if (first.empty()) first = slurp(out);
        EXPECT_EQ(slurp(out), first);
    }
    EXPECT_FALSE(first.empty());
}

TEST(Cli, LlmWithoutEndpointOrReplay) {
    TempDir dir;
    const auto r = cli_run({"--lexicon", lex(), "generate", "llmlist", "--in", fixture("posts10.jsonl").string(), "--out",
                            (dir / "o.jsonl").string()});
    EXPECT_EQ(r.code, static_cast<int>(ExitCode::validation));
}

TEST(Cli, AuditMissingPredictionExitsCompleteness) {
    TempDir dir;
    const auto templates = dir.write("t.csv", "id,pattern,toxicity\nt1,ik haat {sgt},toxic\nt2,knuffel {sgt},nontoxic\n");
    const auto evalset = (dir / "e.jsonl").string();
    ASSERT_EQ(cli_run({"--lexicon", lex(), "--templates", templates.string(), "evalset", "build", "--out", evalset}).code, 0);
    const auto es = load_evalset(evalset);
    ASSERT_EQ(es.size(), 170u);
    std::vector<Prediction> preds;
    for (std::size_t i = 0; i < es.size(); ++i) {
        if (i == 3 || i == 100) continue;
        preds.push_back({es[i].id(), Label::appropriate, {}});
    }
    const auto p = dir.write("p.jsonl", predictions_to_jsonl(preds));
    const auto r = cli_run({"audit", "--evalset", evalset, "--predictions", p.string(), "--out-dir", (dir / "r").string()});
    EXPECT_EQ(r.code, static_cast<int>(ExitCode::completeness));
    EXPECT_NE(r.err.find(es[3].id()), std::string::npos) << r.err;
    EXPECT_NE(r.err.find(es[100].id()), std::string::npos) << r.err;
}

TEST(Cli, AuditOutputsStableModuloTimestamp) {
    TempDir dir;
    const auto templates = dir.write("t.csv", "id,pattern,toxicity\nt1,ik haat {sgt},toxic\nt2,knuffel {sgt},nontoxic\n");
    const auto evalset = (dir / "e.jsonl").string();
    ASSERT_EQ(cli_run({"--lexicon", lex(), "--templates", templates.string(), "evalset", "build", "--out", evalset}).code, 0);
    std::vector<Prediction> preds;
    std::size_t i = 0;
    for (const auto &s : load_evalset(evalset)) preds.push_back({s.id(), i++ % 3 ? Label::appropriate : Label::offensive, {}});
    const auto p = dir.write("p.jsonl", predictions_to_jsonl(preds));
    std::vector<std::string> texts;
    std::vector<json> docs;
    for (const auto *sub : {"a", "b", "c"}) {
        const auto out = dir / sub;
        const auto r = cli_run({"--model-id", "m", "audit", "--evalset", evalset, "--predictions", p.string(), "--out-dir", out.string()});
        ASSERT_EQ(r.code, 0) << r.err;
        texts.push_back(slurp(out / "report.txt") + slurp(out / "ctf_templates.csv") + r.out);
        auto doc = json::parse(slurp(out / "report.json"));
        doc["meta"].erase("timestamp");
        docs.push_back(doc);
    }
    EXPECT_EQ(texts[0], texts[1]);
    EXPECT_EQ(texts[1], texts[2]);
    EXPECT_EQ(docs[0], docs[1]);
    EXPECT_EQ(docs[1], docs[2]);

    const auto render = cli_run({"report", "render", "--in", (dir / "a" / "report.json").string(), "--format", "csv"});
    EXPECT_EQ(render.code, 0);
    EXPECT_EQ(render.out, slurp(dir / "a" / "ctf_templates.csv"));
}

TEST(Cli, BinaryExitStatus) {
    const auto status = std::system((std::string(CFAIR_CLI) + " --lexicon /nonexistent.csv lexicon validate 2>/dev/null").c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), static_cast<int>(ExitCode::io));
    const auto ok = std::system((std::string(CFAIR_CLI) + " --lexicon " + lex() + " lexicon validate >/dev/null").c_str());
    ASSERT_TRUE(WIFEXITED(ok));
    EXPECT_EQ(WEXITSTATUS(ok), 0);
}

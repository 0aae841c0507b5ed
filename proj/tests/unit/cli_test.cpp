#include "fixtures.hpp"

#include "cli.hpp"
#include "hfa/text.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sstream>

using namespace hfa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

std::string fx(const std::string& rel) { return fixtures::fixture_path(rel).string(); }

}  // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"irr", "--annotations", "/no/such/file.jsonl", "/no/other.jsonl"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"evaluate"}).code, cli::kExitUsage);
}

TEST(Cli, HelpSucceeds) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, cli::kExitOk);
    EXPECT_NE(r.out.find("evaluate"), std::string::npos);
}

TEST(Cli, DataErrorExitCode) {
    const auto dir = fixtures::scratch_dir("cli-data");
    text::write_file(dir / "bad.jsonl", "{\"doc_id\":\"d\",\"idx\":0,\"concepts\":[\"99.9\"]}\n");
    const auto r = run({"--quiet", "evaluate", "--pred", (dir / "bad.jsonl").string(), "--gold", (dir / "bad.jsonl").string(),
                        "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, cli::kExitData);
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, IrrPrintsAgreement) {
    const auto dir = fixtures::scratch_dir("cli-irr");
    const auto r = run({"--quiet", "--manifest", (dir / "m.json").string(), "irr", "--annotations", fx("irr/a1.jsonl"),
                        fx("irr/a2.jsonl"), fx("irr/a3.jsonl"), "--out", (dir / "irr.csv").string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_NE(r.out.find("IRR: 80.15%"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "irr.csv"));
    const auto lit = run({"--quiet", "--manifest", (dir / "m2.json").string(), "irr", "--literal", "--annotations",
                          fx("irr/a1.jsonl"), fx("irr/a2.jsonl"), fx("irr/a3.jsonl")});
    EXPECT_NE(lit.out.find("IRR: 26.72%"), std::string::npos);
}

TEST(Cli, EvaluateWritesTablesAndManifest) {
    const auto dir = fixtures::scratch_dir("cli-eval");
    const auto out = dir / "tables";
    const auto r = run({"--quiet", "evaluate", "--pred", fx("e2e/gold.jsonl"), "--gold", fx("e2e/gold.jsonl"),
                        "--metadata", fx("e2e/metadata.csv"), "--out", out.string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    for (const char* f : {"summary.csv", "per_concept.csv", "overall.csv", "per_group.csv", "per_group_concept.csv",
                          "manifest.json"}) {
        EXPECT_TRUE(fs::exists(out / f)) << f;
    }
    EXPECT_EQ(text::read_file(out / "summary.csv").substr(0, 14), "metric,avg,sd\n");
    EXPECT_NE(text::read_file(out / "per_group.csv").find("Black,10,0,100.00"), std::string::npos);
    const auto manifest = nlohmann::json::parse(text::read_file(out / "manifest.json"));
    EXPECT_EQ(manifest.at("command"), "evaluate");
    EXPECT_EQ(manifest.at("inputs").size(), 4u);  // taxonomy, pred, gold, metadata
    EXPECT_FALSE(manifest.at("config_hash").get<std::string>().empty());
}

TEST(Cli, ManifestConfigReproducesRun) {
    const auto dir = fixtures::scratch_dir("cli-config");
    const auto out = dir / "a.csv";
    const auto first = run({"--quiet", "--seed", "5", "synth", "gen", "--input", fx("paraphrase/sentences.txt"), "--out",
                            out.string()});
    ASSERT_EQ(first.code, cli::kExitOk) << first.err;
    const auto before = text::read_file(out);
    const auto manifest = nlohmann::json::parse(text::read_file(dir / "a.csv.manifest.json"));
    text::write_file(dir / "config.toml", manifest.at("config").get<std::string>());
    fs::remove(out);
    const auto second = run({"--config", (dir / "config.toml").string(), "--manifest", (dir / "b.json").string(), "synth", "gen"});
    ASSERT_EQ(second.code, cli::kExitOk) << second.err;
    EXPECT_EQ(text::read_file(out), before);
    const auto replay = nlohmann::json::parse(text::read_file(dir / "b.json"));
    EXPECT_EQ(replay.at("config_hash"), manifest.at("config_hash"));
}

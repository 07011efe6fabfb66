#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "json.hpp"

namespace chainrec::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string fingerprint_line(const std::string& text) {
  const auto pos = text.rfind("fingerprint ");
  if (pos == std::string::npos) return "";
  return text.substr(pos + 12, 16);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = chainrec::testing::scratch_dir(
        std::string("cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    work_ = (dir_ / "work").string();
    corpus_ = chainrec::testing::fixture_path("corpus.jsonl");
    split_ = chainrec::testing::fixture_path("split.txt");
  }

  Outcome in_work(std::vector<std::string> args) {
    args.push_back("--work-dir");
    args.push_back(work_);
    return run(args);
  }

  fs::path dir_;
  std::string work_;
  std::string corpus_;
  std::string split_;
};

TEST_F(CliTest, ParseErrors) {
  EXPECT_EQ(run({"--help"}).code, kExitOk);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"ingest", "--no-such-flag"}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"show-config", "--k", "many"}).code, kExitUsage);
}

TEST_F(CliTest, UsageErrors) {
  auto r = run({"gen-synthetic"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--output"), std::string::npos);
  EXPECT_EQ(run({"gen-synthetic", "--output", (dir_ / "c.jsonl").string(), "--plant", "all"}).code,
            kExitUsage);
  EXPECT_EQ(in_work({"ingest"}).code, kExitUsage);
  EXPECT_EQ(in_work({"query", "--text", "graphs"}).code, kExitUsage);  // no store yet
  EXPECT_EQ(run({"show-config", "--method", "sparse"}).code, kExitUsage);
  EXPECT_EQ(run({"show-config", "--shortlist-size", "0"}).code, kExitUsage);
}

TEST_F(CliTest, DataErrors) {
  EXPECT_EQ(in_work({"ingest", "--corpus", (dir_ / "missing.jsonl").string()}).code, kExitData);
  const auto bad = dir_ / "bad.jsonl";
  std::ofstream(bad) << "{\"type\": \"paper\", \"id\": \"P1\"\n";
  const auto r = in_work({"ingest", "--corpus", bad.string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("data error"), std::string::npos);
}

TEST_F(CliTest, ProviderErrors) {
  ASSERT_EQ(in_work({"ingest", "--corpus", corpus_}).code, kExitOk);
  ASSERT_EQ(in_work({"build-perception"}).code, kExitOk);
  const auto r = in_work({"build-index", "--endpoint-base", "http://127.0.0.1:9", "--retries", "1",
                          "--timeout-seconds", "1"});
  EXPECT_EQ(r.code, kExitProvider);
  EXPECT_NE(r.err.find("provider error"), std::string::npos);
}

TEST_F(CliTest, GenSyntheticIsReproducible) {
  const auto a = dir_ / "a.jsonl";
  const auto b = dir_ / "b.jsonl";
  const auto split = dir_ / "split.txt";
  const std::vector<std::string> common{"--papers", "24", "--entities", "12", "--density", "0.15",
                                        "--topics", "3", "--plant", "context", "--seed", "3"};
  auto args = common;
  args.insert(args.begin(), "gen-synthetic");
  auto first = args;
  first.insert(first.end(), {"--output", a.string(), "--split-output", split.string(),
                             "--split-every", "4"});
  const auto r = run(first);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("generated 24 papers and 12 entities"), std::string::npos);
  auto second = args;
  second.insert(second.end(), {"--output", b.string()});
  ASSERT_EQ(run(second).code, kExitOk);
  EXPECT_EQ(slurp(a), slurp(b));
  // The shipped fixtures were produced by exactly this command.
  EXPECT_EQ(slurp(a), slurp(corpus_));
  EXPECT_EQ(slurp(split), slurp(split_));
}

TEST_F(CliTest, ConfigFileAndFingerprint) {
  const auto config = dir_ / "config.json";
  std::ofstream(config) << R"({"k": 3, "alpha": 0.25, "jobs": 4})";
  const auto from_file = run({"show-config", "--config", config.string()});
  ASSERT_EQ(from_file.code, kExitOk) << from_file.err;
  const auto shown = json::parse(from_file.out.substr(0, from_file.out.rfind("fingerprint")));
  EXPECT_EQ(shown["k"], 3);
  EXPECT_EQ(shown["alpha"], 0.25);

  const auto fp = fingerprint_line(from_file.out);
  ASSERT_EQ(fp.size(), 16u);
  EXPECT_EQ(fingerprint_line(run({"show-config", "--k", "3", "--alpha", "0.25"}).out), fp);
  EXPECT_EQ(fingerprint_line(run({"show-config", "--config", config.string(), "--jobs", "1",
                                  "--format", "json"})
                                 .out),
            fp);
  // Flags override the file.
  EXPECT_NE(fingerprint_line(run({"show-config", "--config", config.string(), "--k", "5"}).out), fp);
  EXPECT_NE(fingerprint_line(run({"show-config", "--config", config.string(), "--seed", "8"}).out),
            fp);

  std::ofstream(dir_ / "unknown.json") << R"({"kk": 3})";
  EXPECT_EQ(run({"show-config", "--config", (dir_ / "unknown.json").string()}).code, kExitUsage);
  std::ofstream(dir_ / "typed.json") << R"({"k": "three"})";
  EXPECT_EQ(run({"show-config", "--config", (dir_ / "typed.json").string()}).code, kExitUsage);
}

TEST_F(CliTest, FullPipeline) {
  auto r = in_work({"ingest", "--corpus", corpus_});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("ingested 24 papers"), std::string::npos);
  EXPECT_TRUE(fs::exists(fs::path(work_) / "store.jsonl"));
  EXPECT_TRUE(fs::exists(fs::path(work_) / "mentions.jsonl"));

  r = in_work({"build-perception", "--split", split_});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("excluded 6 split papers"), std::string::npos);

  r = in_work({"build-index"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(fs::path(work_) / "index_baseline.bin"));
  EXPECT_TRUE(fs::exists(fs::path(work_) / "index_dataset.bin"));

  r = in_work({"train-adapter", "--epochs", "5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(fs::path(work_) / "adapter.ckpt"));
  EXPECT_TRUE(fs::exists(fs::path(work_) / "loss_trace.jsonl"));

  r = in_work({"query", "--paper", "P0001", "--k", "3", "--kind", "baseline"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("baseline recommendations (deterministic-fallback)"), std::string::npos);
  EXPECT_EQ(r.err.find("note:"), std::string::npos) << "prebuilt indexes should be fresh";

  r = in_work({"query", "--text", "graph models on citation benchmarks", "--format", "json",
               "--k", "4", "--adapter", (fs::path(work_) / "adapter.ckpt").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto answer = json::parse(r.out);
  ASSERT_EQ(answer["results"].size(), 2u);
  for (const auto& block : answer["results"]) {
    EXPECT_LE(block["rows"].size(), 4u);
    int rank = 1;
    for (const auto& row : block["rows"]) EXPECT_EQ(row["rank"], rank++);
  }

  // Index built with CP differs from a CP-off configuration; the query still
  // works by embedding in memory.
  r = in_work({"query", "--text", "graphs", "--no-cp"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("note:"), std::string::npos);

  EXPECT_EQ(in_work({"query", "--paper", "P9999"}).code, kExitData);
  EXPECT_EQ(in_work({"query", "--text", "x", "--paper", "P0001"}).code, kExitUsage);
  EXPECT_EQ(in_work({"query", "--text", "x", "--kind", "model"}).code, kExitUsage);

  r = in_work({"emit-sft", "--split", split_});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(fs::path(work_) / "sft.jsonl"));

  EXPECT_EQ(in_work({"evaluate"}).code, kExitUsage);
  r = in_work({"evaluate", "--split", split_});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto report = fs::path(work_) / "reports" / "evaluate-dense+rerank.json";
  ASSERT_TRUE(fs::exists(report));
  const auto first = slurp(report);
  ASSERT_EQ(in_work({"evaluate", "--split", split_, "--jobs", "3"}).code, kExitOk);
  EXPECT_EQ(slurp(report), first);

  r = in_work({"evaluate", "--split", split_, "--ablation", "--format", "json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ablation = json::parse(r.out);
  EXPECT_TRUE(fs::exists(fs::path(work_) / "reports" / "ablation.json"));
  EXPECT_FALSE(ablation.empty());

  r = in_work({"analyze-chains", "--split", split_, "--with-venue"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto chains = json::parse(slurp(fs::path(work_) / "reports" / "chains.json"));
  EXPECT_TRUE(chains.contains("fingerprint"));
}

}  // namespace
}  // namespace chainrec::cli

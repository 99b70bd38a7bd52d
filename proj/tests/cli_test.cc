// tests/cli_test.cc

// Copyright 2026 The vpc Authors.

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli/commands.h"
#include "cli/config.h"
#include "test_util.h"

namespace vpc::cli {
namespace {

using vpc::testing::TempDir;
namespace fs = std::filesystem;

int Invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "vpc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return RunCli(static_cast<int>(argv.size()), argv.data());
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(KeyValueConfigTest, ParsesCommentsQuotesAndTypes) {
  const KeyValueConfig c = KeyValueConfig::Parse(
      "# header\n"
      "\n"
      "encoder.layers = 2   # trailing\n"
      "lr=1e-3\n"
      "name = \"a # b\"  # comment\n"
      "flag = true\n");
  EXPECT_EQ(c.GetInt("encoder.layers", 0), 2);
  EXPECT_DOUBLE_EQ(c.GetDouble("lr", 0.0), 1e-3);
  EXPECT_EQ(c.GetString("name", ""), "a # b");
  EXPECT_TRUE(c.GetBool("flag", false));
  EXPECT_EQ(c.GetInt("missing", 7), 7);
  EXPECT_EQ(c.values().size(), 4u);
}

TEST(KeyValueConfigTest, RejectsMalformedInput) {
  EXPECT_THROW(KeyValueConfig::Parse("novalue\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::Parse("1key = 2\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::Parse("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::Parse("a = \"open\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::Parse("a = \"x\" y\n"), ConfigError);
  const KeyValueConfig c = KeyValueConfig::Parse("n = 3.5\nb = maybe\n");
  EXPECT_THROW(c.GetInt("n", 0), ConfigError);
  EXPECT_THROW(c.GetBool("b", false), ConfigError);
  EXPECT_THROW(KeyValueConfig::Load("/nonexistent/file.cfg"), ConfigError);
}

TEST(KeyValueConfigTest, OverrideReplacesAndTakeRemoves) {
  KeyValueConfig c = KeyValueConfig::Parse("a = 1\n");
  c.Override("a=2");
  c.Override(" b = x y ");
  EXPECT_EQ(c.GetString("a", ""), "2");
  EXPECT_EQ(c.GetString("b", ""), "x y");
  EXPECT_THROW(c.Override("nothing"), ConfigError);
  EXPECT_EQ(c.Take("a"), "2");
  EXPECT_FALSE(c.Has("a"));
  EXPECT_EQ(c.ToJson()["b"], "x y");
}

TEST(CliTest, UnknownCommandAndMissingOptionsAreConfigErrors) {
  EXPECT_EQ(Invoke({"frobnicate"}), kExitConfig);
  EXPECT_EQ(Invoke({"pretrain"}), kExitConfig);
  EXPECT_EQ(Invoke({"--help"}), kExitOk);
}

TEST(CliTest, SynthIsDeterministicAndWritesManifest) {
  TempDir dir;
  const std::vector<std::string> base = {"synth", "--seed", "5", "--set", "n_sequences=6",
                                         "--set", "min_length=20", "--set", "max_length=30"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", (dir.path() / "a").string()});
  b.insert(b.end(), {"--out", (dir.path() / "b").string()});
  ASSERT_EQ(Invoke(a), kExitOk);
  ASSERT_EQ(Invoke(b), kExitOk);
  for (const auto& entry : fs::directory_iterator(dir.path() / "a")) {
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    EXPECT_EQ(Slurp(entry.path()), Slurp(dir.path() / "b" / name)) << name;
  }
  std::ifstream mf(dir.path() / "a" / "manifest.json");
  const nlohmann::json m = nlohmann::json::parse(mf);
  EXPECT_EQ(m["command"], "synth");
  EXPECT_EQ(m["seed"], 5);
  EXPECT_TRUE(m.contains("tool_version"));
  EXPECT_TRUE(m["artifacts"].contains("corpus"));
  // An existing run directory is never overwritten.
  EXPECT_EQ(Invoke(a), kExitConfig);
}

TEST(CliTest, SynthRequiresSeedAndRejectsUnknownKeys) {
  TempDir dir;
  EXPECT_EQ(Invoke({"synth", "--out", (dir.path() / "x").string()}), kExitConfig);
  EXPECT_EQ(Invoke({"synth", "--seed", "1", "--set", "bogus=1", "--out", (dir.path() / "y").string()}),
            kExitConfig);
  EXPECT_TRUE(fs::exists(dir.path() / "y" / "error.json"));
}

TEST(CliTest, PipelineFromSynthToProbe) {
  TempDir dir;
  const std::string corpus = (dir.path() / "corpus").string();
  ASSERT_EQ(Invoke({"synth", "--seed", "2", "--set", "n_sequences=12", "--set", "min_length=20",
                 "--set", "max_length=30", "--out", corpus}),
            kExitOk);
  const fs::path cfg = dir.path() / "train.cfg";
  std::ofstream(cfg) << "codebook_size = 4\nepochs = 1\nbatch_size = 4\n"
                        "encoder.layers = 1\nencoder.model_dim = 8\nencoder.heads = 2\n"
                        "encoder.ffn_dim = 16\n";
  const std::string run = (dir.path() / "run").string();
  ASSERT_EQ(Invoke({"pretrain", "--corpus", corpus, "--config", cfg.string(), "--seed", "1",
                 "--objective", "masked_vpc", "--estimator", "marginal", "--out", run}),
            kExitOk);
  EXPECT_TRUE(fs::exists(fs::path(run) / "checkpoint" / "manifest.json"));
  EXPECT_TRUE(fs::exists(fs::path(run) / "manifest.json"));

  ASSERT_EQ(Invoke({"kmeans", "--corpus", corpus, "--set", "k=3", "--seed", "1", "--out",
                 (dir.path() / "km").string()}),
            kExitOk);
  EXPECT_TRUE(fs::exists(dir.path() / "km" / "codebook" / "codebook.json"));

  ASSERT_EQ(Invoke({"probe", "--corpus", corpus, "--checkpoint", run, "--set", "epochs=1",
                 "--set", "layer=all", "--seed", "1", "--out", (dir.path() / "probe").string()}),
            kExitOk);
  EXPECT_TRUE(fs::exists(dir.path() / "probe" / "probe.json"));

  ASSERT_EQ(Invoke({"boundcheck", "--checkpoint", run, "--corpus", corpus, "--set",
                 "max_utterances=3", "--seed", "1", "--out", (dir.path() / "bound").string()}),
            kExitOk);

  ASSERT_EQ(Invoke({"compare", "--run", run, "--run", run, "--out", (dir.path() / "cmp").string()}),
            kExitOk);
  EXPECT_TRUE(fs::exists(dir.path() / "cmp" / "comparison.csv"));

  EXPECT_EQ(Invoke({"pretrain", "--corpus", corpus, "--config", cfg.string(), "--set",
                 "encoder.heads=3", "--seed", "1", "--out", (dir.path() / "bad").string()}),
            kExitConfig);
  EXPECT_EQ(Invoke({"pretrain", "--corpus", (dir.path() / "nothing").string(), "--seed", "1", "--out",
                 (dir.path() / "missing").string()}),
            kExitRuntime);
}

TEST(CliTest, GradcheckPasses) {
  TempDir dir;
  EXPECT_EQ(Invoke({"gradcheck", "--seed", "1", "--set", "coords_per_tensor=4", "--out",
                 (dir.path() / "gc").string()}),
            kExitOk);
}

}  // namespace
}  // namespace vpc::cli

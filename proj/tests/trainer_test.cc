// tests/trainer_test.cc

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

#include <cmath>
#include <fstream>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"
#include "vpc/synthdata/hmm.h"
#include "vpc/trainer/batching.h"
#include "vpc/trainer/checkpoint.h"
#include "vpc/trainer/compare.h"
#include "vpc/trainer/trainer.h"

namespace vpc {
namespace {

using vpc::testing::RandomMatrix;
using vpc::testing::TempDir;

std::vector<FrameSequence> TinyCorpus(std::uint64_t seed = 1, int n = 10) {
  const auto labeled = SampleCorpus(HmmSpec::DeskDefault(seed), n, 16, 24);
  return FramesOf(labeled);
}

TrainConfig TinyConfig() {
  TrainConfig cfg;
  cfg.codebook_size = 4;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  cfg.lr = 1e-3;
  cfg.seed = 3;
  cfg.encoder.layers = 1;
  cfg.encoder.model_dim = 8;
  cfg.encoder.heads = 2;
  cfg.encoder.ffn_dim = 16;
  cfg.smoothing_window = 3;
  cfg.nce.n_negatives = 5;
  return cfg;
}

TEST(TrainConfigTest, SetOptionParsesKeys) {
  TrainConfig cfg;
  cfg.SetOption("objective", "future_vpc");
  cfg.SetOption("estimator", "gumbel");
  cfg.SetOption("gumbel_temperature", "0.5");
  cfg.SetOption("encoder.layers", "3");
  cfg.SetOption("mask.span", "6");
  cfg.SetOption("codebook_init", "kmeans++");
  cfg.SetOption("checkpoint_dtype", "float64");
  EXPECT_EQ(cfg.objective, Objective::kFutureVpc);
  EXPECT_EQ(cfg.estimator.kind, EstimatorKind::kGumbel);
  EXPECT_EQ(cfg.estimator.gumbel_temperature, 0.5);
  EXPECT_EQ(cfg.encoder.layers, 3);
  EXPECT_EQ(cfg.mask.span_frames, 6);
  EXPECT_EQ(cfg.codebook_init, CodebookInit::kKmeansPP);
  EXPECT_EQ(cfg.checkpoint_dtype, TensorDtype::kFloat64);
  EXPECT_THROW(cfg.SetOption("no_such_key", "1"), std::invalid_argument);
  EXPECT_THROW(cfg.SetOption("epochs", "many"), std::invalid_argument);
  EXPECT_THROW(cfg.SetOption("estimator", "reinforce"), std::invalid_argument);
}

TEST(TrainConfigTest, JsonRoundTripAndLabel) {
  TrainConfig cfg = TinyConfig();
  cfg.SetOption("estimator", "gumbel");
  cfg.SetOption("codebook_init", "random");
  const TrainConfig back = TrainConfig::FromJson(cfg.ToJson());
  EXPECT_EQ(back.ToJson(), cfg.ToJson());
  EXPECT_EQ(cfg.Label(), "masked_vpc/gumbel/random");
  cfg.objective = Objective::kHubert;
  EXPECT_EQ(cfg.Label(), "hubert_obj");
}

TEST(BatchingTest, BatchesPartitionIndicesByLength) {
  const std::vector<Index> lengths = {5, 9, 3, 7, 1, 8, 2};
  const auto batches = MakeBatches(lengths, 3, 42);
  std::multiset<std::size_t> seen;
  for (const auto& b : batches) {
    EXPECT_LE(b.size(), 3u);
    seen.insert(b.begin(), b.end());
  }
  EXPECT_EQ(seen.size(), lengths.size());
  EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), lengths.size());
  EXPECT_EQ(batches, MakeBatches(lengths, 3, 42));
  // Buckets hold neighbours in length order.
  for (const auto& b : batches) {
    if (b.size() < 3) continue;
    Index lo = 100, hi = -1;
    for (std::size_t i : b) lo = std::min(lo, lengths[i]), hi = std::max(hi, lengths[i]);
    EXPECT_LE(hi - lo, 4);
  }
}

TEST(BatchingTest, TruncateKeepsPrefix) {
  Rng rng(1);
  const Matrix m = RandomMatrix(10, 2, rng);
  EXPECT_EQ(Truncate(m, 4), m.topRows(4));
  EXPECT_EQ(Truncate(m, 40), m);
}

TEST(CheckpointTest, Float64RoundTripIsBitwise) {
  TempDir dir;
  Rng rng(2);
  num::ParameterStore store;
  store.Add("a", RandomMatrix(3, 4, rng));
  store.Add("b", RandomMatrix(1, 5, rng), false);
  num::Adam adam;
  for (auto& [name, p] : store) p.grad = RandomMatrix(p.value.rows(), p.value.cols(), rng);
  adam.Step(store);
  SaveCheckpoint(dir.path(), store, {{"k", 1}}, 9, 17, 2, &adam, TensorDtype::kFloat64);
  const Checkpoint ck = LoadCheckpoint(dir.path());
  EXPECT_TRUE(ck.params.SameValues(store));
  EXPECT_FALSE(ck.params.Get("b").trainable);
  EXPECT_EQ(ck.seed, 9u);
  EXPECT_EQ(ck.step, 17);
  EXPECT_EQ(ck.epoch, 2);
  EXPECT_EQ(ck.config["k"], 1);
  ASSERT_TRUE(ck.has_optimizer);
  EXPECT_EQ(ck.optimizer.step(), 1);
  EXPECT_EQ(ck.optimizer.first_moments().at("a"), adam.first_moments().at("a"));
  EXPECT_EQ(ck.optimizer.second_moments().at("a"), adam.second_moments().at("a"));
}

TEST(CheckpointTest, Float32RoundTripRoundsValues) {
  TempDir dir;
  Rng rng(3);
  num::ParameterStore store;
  store.Add("w", RandomMatrix(2, 3, rng));
  SaveCheckpoint(dir.path(), store, {}, 0, 0, 0, nullptr);
  const Checkpoint ck = LoadCheckpoint(dir.path());
  EXPECT_EQ(ck.params.Get("w").value, store.Get("w").value.cast<float>().cast<double>());
  EXPECT_FALSE(ck.has_optimizer);
  EXPECT_THROW(LoadCheckpoint(dir.path() / "missing"), std::runtime_error);
}

TEST(PretrainTest, WritesRunArtifactsAndIsDeterministic) {
  TempDir dir;
  const auto corpus = TinyCorpus();
  const TrainConfig cfg = TinyConfig();
  const RunRecord a = Pretrain(corpus, cfg, dir.path() / "a");
  const RunRecord b = Pretrain(corpus, cfg, dir.path() / "b");
  for (const char* f : {"config.json", "feature_stats.json", "curve.jsonl", "run.json",
                        "checkpoint/manifest.json", "checkpoint/feature_stats.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "a" / f)) << f;
  }
  ASSERT_EQ(a.curve.size(), 6u);  // 10 utterances in batches of 4, two epochs
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    EXPECT_EQ(a.curve[i].loss.total, b.curve[i].loss.total);
    EXPECT_TRUE(std::isfinite(a.curve[i].loss.total));
  }
  EXPECT_EQ(a.first_total, a.curve.front().loss.total);
  EXPECT_NEAR(a.final_neg_elbo, SmoothedFinal(a.curve, 3), 1e-12);

  const RunRecord loaded = RunRecord::Load(dir.path() / "a");
  EXPECT_EQ(loaded.label, a.label);
  EXPECT_EQ(loaded.curve.size(), a.curve.size());
  EXPECT_DOUBLE_EQ(loaded.final_neg_elbo, a.final_neg_elbo);
  EXPECT_EQ(loaded.corpus_fingerprint, a.corpus_fingerprint);
}

TEST(PretrainTest, ResumeMatchesUninterruptedRun) {
  TempDir dir;
  const auto corpus = TinyCorpus();
  TrainConfig cfg = TinyConfig();
  cfg.checkpoint_dtype = TensorDtype::kFloat64;
  cfg.checkpoint_every = 1;
  Pretrain(corpus, cfg, dir.path() / "full");
  TrainConfig resumed = cfg;
  resumed.resume_from = dir.path() / "full" / "checkpoints" / "epoch_001";
  const RunRecord r = Pretrain(corpus, resumed, dir.path() / "resumed");
  EXPECT_EQ(r.curve.size(), 3u);
  EXPECT_EQ(r.curve.front().step, 3);
  const Checkpoint a = LoadCheckpoint(dir.path() / "full" / "checkpoint");
  const Checkpoint b = LoadCheckpoint(dir.path() / "resumed" / "checkpoint");
  EXPECT_TRUE(a.params.SameValues(b.params));
  EXPECT_EQ(a.step, b.step);
}

TEST(PretrainTest, ZeroEpochsSavesInitialModel) {
  TempDir dir;
  TrainConfig cfg = TinyConfig();
  cfg.epochs = 0;
  const RunRecord r = Pretrain(TinyCorpus(), cfg, dir.path());
  EXPECT_TRUE(r.curve.empty());
  EXPECT_TRUE(std::isnan(r.first_total));
  EXPECT_EQ(LoadCheckpoint(dir.path() / "checkpoint").step, 0);
}

TEST(PretrainTest, EveryObjectiveAndEstimatorTrains) {
  const auto corpus = TinyCorpus();
  const std::vector<std::vector<std::pair<std::string, std::string>>> variants = {
      {{"objective", "hubert_obj"}},
      {{"objective", "masked_vpc"}, {"estimator", "single_point"}},
      {{"objective", "masked_vpc"}, {"estimator", "gumbel"}, {"codebook_init", "kmeans++"}},
      {{"objective", "future_vpc"}},
      {{"objective", "masked_nce"}},
  };
  for (const auto& v : variants) {
    TempDir dir;
    TrainConfig cfg = TinyConfig();
    cfg.epochs = 1;
    for (const auto& [k, val] : v) cfg.SetOption(k, val);
    const RunRecord r = Pretrain(corpus, cfg, dir.path());
    ASSERT_FALSE(r.curve.empty()) << cfg.Label();
    EXPECT_TRUE(std::isfinite(r.final_neg_elbo)) << cfg.Label();
    EXPECT_GT(r.curve.front().loss.frames_counted, 0) << cfg.Label();
  }
}

TEST(PretrainTest, HubertCodebookStaysFrozen) {
  TempDir dir;
  TrainConfig cfg = TinyConfig();
  cfg.objective = Objective::kHubert;
  cfg.epochs = 1;
  cfg.checkpoint_dtype = TensorDtype::kFloat64;
  const RunRecord r = Pretrain(TinyCorpus(), cfg, dir.path());
  for (const auto& p : r.curve) EXPECT_EQ(p.loss.neg_entropy, 0.0);
  const Checkpoint ck = LoadCheckpoint(dir.path() / "checkpoint");
  EXPECT_FALSE(ck.params.Get("codebook").trainable);
}

TEST(ModelTest, ExtractLayerShapesAndNormalization) {
  TempDir dir;
  const auto corpus = TinyCorpus();
  Pretrain(corpus, TinyConfig(), dir.path());
  const Model m = LoadModel(dir.path() / "checkpoint");
  EXPECT_EQ(m.encoder.layers, 1);
  for (int layer = 0; layer <= 1; ++layer) {
    const Matrix h = ExtractLayer(m, corpus[0].frames, layer);
    EXPECT_EQ(h.rows(), corpus[0].length());
    EXPECT_EQ(h.cols(), 8);
  }
  EXPECT_EQ(ExtractLayer(m, corpus[0].frames, 1), ExtractLayer(m, corpus[0].frames, 1));
  EXPECT_THROW(ExtractLayer(m, corpus[0].frames, 2), std::invalid_argument);
}

TEST(SecondIterationTest, TrainsOnTeacherTargets) {
  TempDir dir;
  const auto corpus = TinyCorpus();
  TrainConfig cfg = TinyConfig();
  cfg.epochs = 1;
  Pretrain(corpus, cfg, dir.path() / "teacher");
  TrainConfig student = cfg;
  student.second_iteration = true;
  student.second.teacher = dir.path() / "teacher" / "checkpoint";
  student.second.teacher_layer = 1;
  const RunRecord r = Pretrain(corpus, student, dir.path() / "student");
  ASSERT_FALSE(r.curve.empty());
  EXPECT_TRUE(std::isfinite(r.final_neg_elbo));
}

TEST(CompareTest, SelfComparisonHasZeroDifferences) {
  TempDir dir;
  const auto corpus = TinyCorpus();
  TrainConfig cfg = TinyConfig();
  cfg.epochs = 1;
  const RunRecord a = Pretrain(corpus, cfg, dir.path() / "a");
  cfg.seed = 4;
  const RunRecord a2 = Pretrain(corpus, cfg, dir.path() / "a2");
  cfg.objective = Objective::kHubert;
  const RunRecord h = Pretrain(corpus, cfg, dir.path() / "h");
  const ComparisonReport rep = CompareRuns({a, a2, h});
  ASSERT_EQ(rep.rows.size(), 3u);
  ASSERT_EQ(rep.labels.size(), 2u);
  const LabelSummary& s = rep.Summary(a.label);
  EXPECT_EQ(s.seeds.size(), 2u);
  EXPECT_NEAR(s.mean_final, 0.5 * (a.final_neg_elbo + a2.final_neg_elbo), 1e-12);
  ASSERT_EQ(rep.pairs.size(), 1u);
  EXPECT_NEAR(rep.pairs[0].mean_difference,
              rep.labels[0].mean_final - rep.labels[1].mean_final, 1e-12);

  const ComparisonReport self = CompareRuns({a, a});
  for (const auto& p : self.pairs) EXPECT_EQ(p.mean_difference, 0.0);
  self.Write(dir.path() / "cmp");
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "cmp" / "comparison.json"));
  EXPECT_NE(rep.ToCsv().find(a.label), std::string::npos);
}

TEST(CompareTest, RejectsMismatchedCorpora) {
  TempDir dir;
  TrainConfig cfg = TinyConfig();
  cfg.epochs = 0;
  const RunRecord a = Pretrain(TinyCorpus(1), cfg, dir.path() / "a");
  const RunRecord b = Pretrain(TinyCorpus(2), cfg, dir.path() / "b");
  EXPECT_THROW(CompareRuns({a, b}), std::invalid_argument);
}

}  // namespace
}  // namespace vpc

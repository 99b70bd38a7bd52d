// tests/probe_test.cc

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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"
#include "vpc/probe/probe.h"

namespace vpc {
namespace {

using vpc::testing::RandomMatrix;
using vpc::testing::TempDir;

// Features are a noisy one-hot code of the label.
void SeparableData(int n_seq, int classes, Rng& rng, std::vector<Matrix>* feats,
                   ProbeLabels* labels) {
  labels->num_classes = classes;
  for (int s = 0; s < n_seq; ++s) {
    const Index len = 20 + s % 5;
    Matrix f = RandomMatrix(len, classes + 2, rng, 0.1);
    std::vector<int> y(static_cast<std::size_t>(len));
    std::vector<double> v(static_cast<std::size_t>(len));
    for (Index t = 0; t < len; ++t) {
      const int c = static_cast<int>(rng.UniformInt(static_cast<std::uint64_t>(classes)));
      f(t, c) += 1.0;
      y[static_cast<std::size_t>(t)] = c;
      v[static_cast<std::size_t>(t)] = 3.0 * f(t, 0) - 2.0 * f(t, classes + 1) + 5.0;
    }
    feats->push_back(f);
    labels->classes.push_back(y);
    labels->values.push_back(v);
  }
}

TEST(ProbeConfigTest, ParseAndValidate) {
  EXPECT_EQ(ParseProbeTask("frame_classify"), ProbeTask::kClassify);
  EXPECT_EQ(ParseProbeTask("frame_regress"), ProbeTask::kRegress);
  EXPECT_EQ(ToString(ProbeTask::kRegress), "frame_regress");
  EXPECT_THROW(ParseProbeTask("phone"), std::invalid_argument);
  ProbeConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.heldout_fraction = 1.0;
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
}

TEST(HeldoutSplitTest, SeededDisjointAndSized) {
  const auto a = HeldoutSplit(100, 0.1, 7);
  EXPECT_EQ(a, HeldoutSplit(100, 0.1, 7));
  EXPECT_NE(a, HeldoutSplit(100, 0.1, 8));
  EXPECT_EQ(a.size(), 10u);
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), a.size());
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_LT(a.back(), 100u);
  EXPECT_GE(HeldoutSplit(3, 0.1, 1).size(), 1u);
}

TEST(ProbeFeaturesTest, SeparableClassesAreLearned) {
  Rng rng(1);
  std::vector<Matrix> feats;
  ProbeLabels labels;
  SeparableData(40, 4, rng, &feats, &labels);
  ProbeConfig cfg;
  cfg.lr = 1e-2;
  cfg.epochs = 20;
  cfg.heldout_fraction = 0.25;
  const LayerResult r = ProbeFeatures(feats, labels, cfg);
  EXPECT_LT(r.error, 0.01);
  EXPECT_LT(r.train_error, 0.01);
  EXPECT_GT(r.heldout_frames, 0);
  EXPECT_GT(r.train_frames, r.heldout_frames);
}

TEST(ProbeFeaturesTest, RandomLabelsStayNearChance) {
  Rng rng(2);
  std::vector<Matrix> feats;
  ProbeLabels labels;
  SeparableData(40, 4, rng, &feats, &labels);
  for (auto& y : labels.classes) {
    for (int& c : y) c = static_cast<int>(rng.UniformInt(4));
  }
  ProbeConfig cfg;
  cfg.heldout_fraction = 0.25;
  EXPECT_GT(ProbeFeatures(feats, labels, cfg).error, 0.6);
}

TEST(ProbeFeaturesTest, LinearTargetsRegressExactly) {
  Rng rng(3);
  std::vector<Matrix> feats;
  ProbeLabels labels;
  SeparableData(40, 3, rng, &feats, &labels);
  ProbeConfig cfg;
  cfg.task = ProbeTask::kRegress;
  cfg.lr = 5e-2;
  cfg.epochs = 200;
  cfg.heldout_fraction = 0.25;
  const LayerResult r = ProbeFeatures(feats, labels, cfg);
  // Targets have a standard deviation near 1.5 in original units.
  EXPECT_LT(r.error, 0.05);
}

TEST(ProbeFeaturesTest, MismatchedLengthsThrow) {
  Rng rng(4);
  std::vector<Matrix> feats;
  ProbeLabels labels;
  SeparableData(10, 3, rng, &feats, &labels);
  labels.classes[2].pop_back();
  EXPECT_THROW(ProbeFeatures(feats, labels, ProbeConfig{}), std::invalid_argument);
  labels.classes.pop_back();
  EXPECT_THROW(ProbeFeatures(feats, labels, ProbeConfig{}), std::invalid_argument);
}

TEST(ProbeFeaturesTest, RawFramesApproachFrameBayesError) {
  const HmmSpec spec = HmmSpec::DeskDefault(5);
  const auto corpus = SampleCorpus(spec, 150, 60, 120);
  const ProbeLabels labels = ProbeLabels::FromCorpus(corpus, spec.n_states);
  std::vector<Matrix> feats;
  for (const auto& s : corpus) feats.push_back(s.frames.frames);
  ProbeConfig cfg;
  cfg.lr = 1e-2;
  cfg.heldout_fraction = 0.3;
  const LayerResult r = ProbeFeatures(feats, labels, cfg);
  // Equal-variance Gaussian classes: a linear rule is the frame-level optimum.
  const double bayes = FrameBayesError(spec, corpus);
  EXPECT_GT(r.error, bayes - 0.03);
  EXPECT_LT(r.error, bayes + 0.04);
}

TEST(RunProbeTest, ProbesEveryLayerWithoutTouchingTheModel) {
  TempDir dir;
  const HmmSpec spec = HmmSpec::DeskDefault(6);
  const auto labeled = SampleCorpus(spec, 20, 20, 30);
  const auto frames = FramesOf(labeled);
  TrainConfig tc;
  tc.codebook_size = 4;
  tc.epochs = 1;
  tc.batch_size = 5;
  tc.encoder.layers = 2;
  tc.encoder.model_dim = 8;
  tc.encoder.heads = 2;
  tc.encoder.ffn_dim = 16;
  Pretrain(frames, tc, dir.path() / "run");
  const Model model = LoadModel(dir.path() / "run" / "checkpoint");
  const Model copy = LoadModel(dir.path() / "run" / "checkpoint");

  ProbeConfig cfg;
  cfg.epochs = 2;
  cfg.heldout_fraction = 0.2;
  const ProbeReport rep =
      RunProbe(model, frames, ProbeLabels::FromCorpus(labeled, spec.n_states), cfg);
  EXPECT_TRUE(model.params.SameValues(copy.params));
  ASSERT_EQ(rep.layers.size(), 3u);
  EXPECT_EQ(rep.baseline.layer, -1);
  double best = 2.0;
  for (const auto& l : rep.layers) best = std::min(best, l.error);
  EXPECT_EQ(rep.best_error, best);
  EXPECT_EQ(rep.heldout_sequences.size(), 4u);

  const auto all = ExtractAllLayers(model, frames[0].frames);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[1], ExtractLayer(model, frames[0].frames, 1));
  const auto cached = ExtractFeatures(model, frames, 2, dir.path() / "cache");
  EXPECT_EQ(cached.size(), frames.size());
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "cache"));

  rep.Write(dir.path() / "probe");
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "probe" / "probe.json"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "probe" / "probe.csv"));
}

}  // namespace
}  // namespace vpc

// tests/synthdata_test.cc

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
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"
#include "vpc/synthdata/hmm.h"

namespace vpc {
namespace {

using vpc::testing::RandomMatrix;
using vpc::testing::TempDir;

HmmSpec SmallSpec() {
  HmmSpec s;
  s.n_states = 3;
  s.transition.resize(3, 3);
  s.transition << 0.0, 0.7, 0.3,
                  0.5, 0.0, 0.5,
                  0.2, 0.8, 0.0;
  s.emission_means.resize(3, 2);
  s.emission_means << 0.0, 0.0,
                      1.0, 0.5,
                      -0.5, 1.0;
  s.emission_std = {0.8, 1.1, 0.6};
  s.min_duration = 2;
  s.max_duration = 3;
  s.seed = 11;
  return s;
}

double LogEmission(const HmmSpec& spec, const Matrix& x, Index t, int s) {
  const double sd = spec.emission_std[static_cast<std::size_t>(s)];
  const double d = static_cast<double>(x.cols());
  return -0.5 * (x.row(t) - spec.emission_means.row(s)).squaredNorm() / (sd * sd) -
         d * std::log(sd) - 0.5 * d * std::log(2 * M_PI);
}

// Sums over every segmentation of the sequence. The final segment may be cut
// short, so it collects every duration at least as long as what remains.
Matrix BruteForcePosteriors(const HmmSpec& spec, const Matrix& x) {
  const Index len = x.rows();
  const int n = spec.n_states;
  const double p_dur = 1.0 / (spec.max_duration - spec.min_duration + 1);
  Matrix post = Matrix::Zero(len, n);
  std::vector<int> path(static_cast<std::size_t>(len));
  std::function<void(Index, int, double)> walk = [&](Index t, int s, double w) {
    for (int d = spec.min_duration; d <= spec.max_duration; ++d) {
      const Index take = std::min<Index>(d, len - t);
      double wd = w * p_dur;
      for (Index u = t; u < t + take; ++u) {
        wd *= std::exp(LogEmission(spec, x, u, s));
        path[static_cast<std::size_t>(u)] = s;
      }
      if (t + take == len) {
        for (Index u = 0; u < len; ++u) post(u, path[static_cast<std::size_t>(u)]) += wd;
        continue;
      }
      for (int sn = 0; sn < n; ++sn) {
        if (spec.transition(s, sn) > 0.0) walk(t + take, sn, wd * spec.transition(s, sn));
      }
    }
  };
  for (int s = 0; s < n; ++s) walk(0, s, 1.0 / n);
  for (Index t = 0; t < len; ++t) post.row(t) /= post.row(t).sum();
  return post;
}

TEST(HmmSpecTest, ValidateRejectsMalformedSpecs) {
  HmmSpec s = SmallSpec();
  EXPECT_NO_THROW(s.Validate());
  HmmSpec bad = s;
  bad.transition(0, 1) = 0.6;
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  bad = s;
  bad.min_duration = 4;
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  bad = s;
  bad.min_duration = 0;
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  bad = s;
  bad.emission_std[1] = 0.0;
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  bad = s;
  bad.emission_means = Matrix::Zero(2, 2);
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
}

TEST(HmmSpecTest, JsonRoundTrip) {
  const HmmSpec s = HmmSpec::DeskDefault(3);
  const HmmSpec back = HmmSpec::FromJson(s.ToJson());
  EXPECT_EQ(back.transition, s.transition);
  EXPECT_EQ(back.emission_means, s.emission_means);
  EXPECT_EQ(back.emission_std, s.emission_std);
  EXPECT_EQ(back.min_duration, s.min_duration);
  EXPECT_EQ(back.seed, s.seed);
}

TEST(HmmSpecTest, DeskDefaultMeansAreEquidistant) {
  const HmmSpec s = HmmSpec::DeskDefault(9);
  EXPECT_EQ(s.n_states, 5);
  EXPECT_EQ(s.dim(), 8);
  EXPECT_EQ(s.transition.diagonal().cwiseAbs().maxCoeff(), 0.0);
  const double d01 = (s.emission_means.row(0) - s.emission_means.row(1)).norm();
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) {
      EXPECT_NEAR((s.emission_means.row(i) - s.emission_means.row(j)).norm(), d01, 1e-9);
    }
  }
}

TEST(SampleSegmentsTest, DurationsRespectBoundsAndStatesChange) {
  const HmmSpec s = HmmSpec::DeskDefault(1);
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const int len = 30 + rep;
    const auto segs = SampleSegments(s, len, rng);
    int total = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      total += segs[i].duration;
      if (i + 1 < segs.size()) {
        EXPECT_GE(segs[i].duration, s.min_duration);
        EXPECT_LE(segs[i].duration, s.max_duration);
        EXPECT_NE(segs[i].state, segs[i + 1].state);
      } else {
        EXPECT_LE(segs[i].duration, s.max_duration);
      }
    }
    EXPECT_EQ(total, len);
  }
}

TEST(SampleCorpusTest, DeterministicPerSeedAndLengthsInRange) {
  const HmmSpec s = HmmSpec::DeskDefault(4);
  const auto a = SampleCorpus(s, 20, 15, 25);
  const auto b = SampleCorpus(s, 20, 15, 25);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].frames.frames, b[i].frames.frames);
    EXPECT_EQ(a[i].states, b[i].states);
    EXPECT_GE(a[i].frames.length(), 15);
    EXPECT_LE(a[i].frames.length(), 25);
    EXPECT_EQ(a[i].states.size(), static_cast<std::size_t>(a[i].frames.length()));
    EXPECT_EQ(a[i].aux.size(), a[i].states.size());
  }
  const auto c = SampleCorpus(HmmSpec::DeskDefault(5), 1, 15, 25);
  EXPECT_NE(c[0].frames.frames.row(0), a[0].frames.frames.row(0));
}

TEST(SampleCorpusTest, EmissionsMatchStateStatistics) {
  const HmmSpec s = HmmSpec::DeskDefault(6);
  const auto corpus = SampleCorpus(s, 200, 60, 120);
  std::vector<Eigen::VectorXd> sum(5, Eigen::VectorXd::Zero(8));
  std::vector<double> sq(5, 0.0), count(5, 0.0);
  double frames = 0;
  for (const auto& seq : corpus) {
    for (Index t = 0; t < seq.frames.length(); ++t) {
      const int st = seq.states[static_cast<std::size_t>(t)];
      sum[static_cast<std::size_t>(st)] += seq.frames.frames.row(t).transpose();
      sq[static_cast<std::size_t>(st)] +=
          (seq.frames.frames.row(t) - s.emission_means.row(st)).squaredNorm();
      count[static_cast<std::size_t>(st)] += 1;
      frames += 1;
    }
  }
  for (int st = 0; st < 5; ++st) {
    const auto k = static_cast<std::size_t>(st);
    EXPECT_NEAR(count[k] / frames, 0.2, 0.02);
    EXPECT_LT((sum[k] / count[k] - s.emission_means.row(st).transpose()).norm(), 0.1);
    EXPECT_NEAR(sq[k] / count[k] / 8.0, 1.0, 0.05);
  }
}

TEST(PosteriorTest, MatchesSegmentationEnumeration) {
  const HmmSpec s = SmallSpec();
  Rng rng(7);
  for (Index len : {1, 2, 5, 9}) {
    const Matrix x = RandomMatrix(len, 2, rng);
    const Matrix got = SequencePosteriors(s, x);
    const Matrix want = BruteForcePosteriors(s, x);
    ASSERT_EQ(got.rows(), len);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-10) << "length " << len;
  }
}

TEST(PosteriorTest, MatchesEnumerationOnSampledSequences) {
  HmmSpec s = SmallSpec();
  s.min_duration = 1;
  s.max_duration = 4;
  const auto corpus = SampleCorpus(s, 4, 8, 10);
  for (const auto& seq : corpus) {
    const Matrix got = SequencePosteriors(s, seq.frames.frames);
    const Matrix want = BruteForcePosteriors(s, seq.frames.frames);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(BayesErrorTest, DeskDefaultFrameErrorNearTwelvePercent) {
  const HmmSpec s = HmmSpec::DeskDefault(2);
  const auto corpus = SampleCorpus(s, 200, 60, 120);
  const double frame = FrameBayesError(s, corpus);
  EXPECT_GT(frame, 0.09);
  EXPECT_LT(frame, 0.15);
  // Durations and transitions make context informative.
  const double seq = SequenceBayesError(s, corpus);
  EXPECT_LT(seq, frame);
  EXPECT_GE(seq, 0.0);
}

TEST(BayesErrorTest, FrameErrorMatchesMapClassifierRate) {
  const HmmSpec s = HmmSpec::DeskDefault(8);
  const auto corpus = SampleCorpus(s, 300, 60, 120);
  double wrong = 0, n = 0;
  for (const auto& seq : corpus) {
    for (Index t = 0; t < seq.frames.length(); ++t) {
      int best = 0;
      double best_ll = -1e300;
      for (int st = 0; st < s.n_states; ++st) {
        const double ll = LogEmission(s, seq.frames.frames, t, st);
        if (ll > best_ll) best_ll = ll, best = st;
      }
      wrong += best != seq.states[static_cast<std::size_t>(t)];
      n += 1;
    }
  }
  EXPECT_NEAR(FrameBayesError(s, corpus), wrong / n, 0.01);
}

TEST(LabeledCorpusTest, WriteReadRoundTrip) {
  TempDir dir;
  const HmmSpec s = HmmSpec::DeskDefault(10);
  const auto corpus = SampleCorpus(s, 5, 10, 20);
  WriteLabeledCorpus(dir.path(), s, corpus);
  const auto back = ReadLabeledCorpus(dir.path());
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].states, corpus[i].states);
    EXPECT_EQ(back[i].frames.frames.rows(), corpus[i].frames.frames.rows());
    EXPECT_LT((back[i].frames.frames - corpus[i].frames.frames).cwiseAbs().maxCoeff(), 1e-5);
  }
}

}  // namespace
}  // namespace vpc

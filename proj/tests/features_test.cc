// tests/features_test.cc

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
#include <complex>
#include <fstream>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"
#include "vpc/features/feature_cache.h"
#include "vpc/features/mel.h"
#include "vpc/features/wav.h"

namespace vpc {
namespace {

using vpc::testing::RandomMatrix;
using vpc::testing::TempDir;

Waveform Chirp(int n, int sr, Rng& rng) {
  Waveform w;
  w.sample_rate = sr;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    w.samples.push_back(0.5 * std::sin(2 * std::numbers::pi * (200 + 1500 * t) * t) +
                        0.01 * rng.Normal());
  }
  return w;
}

TEST(MelScaleTest, RoundTripsAndAnchors) {
  EXPECT_NEAR(HzToMel(0.0), 0.0, 1e-12);
  // 1000 Hz sits near 1000 mel on this scale.
  EXPECT_NEAR(HzToMel(1000.0), 1000.0, 0.1);
  for (double hz : {10.0, 440.0, 4000.0, 7999.0}) EXPECT_NEAR(MelToHz(HzToMel(hz)), hz, 1e-9);
}

TEST(MelTest, FrameCountMatchesFormula) {
  MelConfig cfg;
  EXPECT_EQ(WindowSamples(cfg, 16000), 400);
  EXPECT_EQ(HopSamples(cfg, 16000), 160);
  EXPECT_EQ(FftSize(cfg, 16000), 512);
  EXPECT_EQ(NumFrames(399, cfg, 16000), 0);
  EXPECT_EQ(NumFrames(400, cfg, 16000), 1);
  EXPECT_EQ(NumFrames(16000, cfg, 16000), 1 + (16000 - 400) / 160);
}

TEST(MelTest, FilterbankIsTriangularWithUnitPeaks) {
  MelConfig cfg;
  cfg.n_mels = 20;
  const MelFilterbank fb = MakeMelFilterbank(cfg, 16000);
  ASSERT_EQ(fb.weights.rows(), 20);
  ASSERT_EQ(fb.weights.cols(), 257);
  for (Index m = 0; m < 20; ++m) {
    EXPECT_GE(fb.weights.row(m).minCoeff(), 0.0);
    EXPECT_LE(fb.weights.row(m).maxCoeff(), 1.0 + 1e-12);
    EXPECT_GT(fb.weights.row(m).maxCoeff(), 0.5);
  }
  for (std::size_t m = 1; m < fb.center_hz.size(); ++m) {
    EXPECT_GT(fb.center_hz[m], fb.center_hz[m - 1]);
  }
}

// Naive O(N^2) DFT of each Hann-windowed frame, through the same filterbank.
TEST(MelTest, LogMelMatchesNaiveDft) {
  Rng rng(1);
  MelConfig cfg;
  cfg.n_mels = 16;
  const Waveform w = Chirp(3200, 16000, rng);
  const FrameSequence got = LogMel(w, cfg);
  const int win = WindowSamples(cfg, 16000), hop = HopSamples(cfg, 16000);
  const int nfft = FftSize(cfg, 16000);
  const MelFilterbank fb = MakeMelFilterbank(cfg, 16000);
  ASSERT_EQ(got.length(), NumFrames(3200, cfg, 16000));
  for (Index t = 0; t < got.length(); t += 3) {
    Eigen::VectorXd power(nfft / 2 + 1);
    for (int k = 0; k <= nfft / 2; ++k) {
      std::complex<double> acc = 0;
      for (int n = 0; n < win; ++n) {
        const double hann = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * n / (win - 1));
        const double x = w.samples[static_cast<std::size_t>(t * hop + n)] * hann;
        acc += x * std::polar(1.0, -2 * std::numbers::pi * k * n / nfft);
      }
      power(k) = std::norm(acc);
    }
    const Eigen::VectorXd energy = fb.weights * power;
    for (int m = 0; m < cfg.n_mels; ++m) {
      EXPECT_NEAR(got.frames(t, m), std::log(energy(m) + cfg.log_floor), 1e-8);
    }
  }
}

TEST(MelTest, PureToneEnergyPeaksInMatchingFilter) {
  MelConfig cfg;
  cfg.n_mels = 40;
  Waveform w;
  for (int i = 0; i < 8000; ++i) w.samples.push_back(std::sin(2 * std::numbers::pi * 1000.0 * i / 16000));
  const FrameSequence f = LogMel(w, cfg);
  const MelFilterbank fb = MakeMelFilterbank(cfg, 16000);
  Index best = 0;
  f.frames.row(2).maxCoeff(&best);
  EXPECT_NEAR(fb.center_hz[static_cast<std::size_t>(best)], 1000.0, 120.0);
}

TEST(MelTest, ShortWaveformThrows) {
  Waveform w;
  w.samples.assign(10, 0.0);
  EXPECT_THROW(LogMel(w, MelConfig{}), std::invalid_argument);
}

TEST(StackTest, StackUnstackRoundTrip) {
  Rng rng(2);
  FrameSequence f;
  f.frames = RandomMatrix(7, 3, rng);
  f.frame_rate_ms = 10;
  const FrameSequence s = StackFrames(f, 2);
  EXPECT_EQ(s.length(), 3);
  EXPECT_EQ(s.dim(), 6);
  EXPECT_DOUBLE_EQ(s.frame_rate_ms, 20.0);
  EXPECT_EQ(s.frames.row(1).head(3), f.frames.row(2));
  EXPECT_EQ(s.frames.row(1).tail(3), f.frames.row(3));
  const FrameSequence u = UnstackFrames(s, 2);
  EXPECT_EQ(u.frames, f.frames.topRows(6));
}

TEST(StackTest, DownsampleLabelsMajorityLowestOnTies) {
  const std::vector<int> labels = {1, 1, 2, 3, 2, 2, 4, 0};
  EXPECT_EQ(DownsampleLabels(labels, 2), (std::vector<int>{1, 2, 2, 0}));
  EXPECT_EQ(DownsampleLabels(labels, 3), (std::vector<int>{1, 2}));
}

TEST(StatsTest, NormalizeGivesZeroMeanUnitVariance) {
  Rng rng(3);
  std::vector<Matrix> mats = {RandomMatrix(50, 4, rng, 3.0), RandomMatrix(30, 4, rng, 3.0)};
  for (auto& m : mats) m.col(1).array() += 7.0;
  const FeatureStats st = ComputeStats(std::span<const Matrix>(mats));
  Matrix all(80, 4);
  all << Normalize(mats[0], st), Normalize(mats[1], st);
  for (Index c = 0; c < 4; ++c) {
    EXPECT_NEAR(all.col(c).mean(), 0.0, 1e-12);
    EXPECT_NEAR((all.col(c).array() - all.col(c).mean()).square().mean(), 1.0, 1e-12);
  }
}

TEST(StatsTest, SaveLoadRoundTrip) {
  TempDir dir;
  FeatureStats st;
  st.mean = {0.1, -2.0};
  st.stddev = {1.5, 0.25};
  st.Save(dir.path() / "s.json");
  const FeatureStats back = FeatureStats::Load(dir.path() / "s.json");
  EXPECT_EQ(back.mean, st.mean);
  EXPECT_EQ(back.stddev, st.stddev);
}

TEST(WavTest, Float32RoundTripIsExactInSinglePrecision) {
  TempDir dir;
  Rng rng(4);
  Waveform w = Chirp(1000, 8000, rng);
  WriteWav(dir.path() / "a.wav", w, WavEncoding::kFloat32);
  const Waveform back = LoadWav(dir.path() / "a.wav");
  EXPECT_EQ(back.sample_rate, 8000);
  ASSERT_EQ(back.samples.size(), w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i], static_cast<double>(static_cast<float>(w.samples[i])));
  }
}

TEST(WavTest, Pcm16RoundTripWithinQuantization) {
  TempDir dir;
  Rng rng(5);
  Waveform w = Chirp(1000, 16000, rng);
  WriteWav(dir.path() / "a.wav", w);
  const Waveform back = LoadWav(dir.path() / "a.wav");
  ASSERT_EQ(back.samples.size(), w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    EXPECT_NEAR(back.samples[i], w.samples[i], 0.5 / 32768 + 1e-12);
  }
}

TEST(WavTest, RejectsGarbage) {
  TempDir dir;
  std::ofstream(dir.path() / "bad.wav") << "not a wave file at all";
  EXPECT_THROW(LoadWav(dir.path() / "bad.wav"), std::runtime_error);
}

TEST(FeatureCacheTest, RoundTripPreservesValuesToSinglePrecision) {
  TempDir dir;
  Rng rng(6);
  std::vector<FrameSequence> corpus(3);
  for (int i = 0; i < 3; ++i) {
    corpus[static_cast<std::size_t>(i)].frames = RandomMatrix(5 + i, 4, rng);
    corpus[static_cast<std::size_t>(i)].source_id = "utt" + std::to_string(i);
  }
  WriteCorpus(dir.path(), corpus);
  const auto back = ReadCorpus(dir.path());
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].source_id, corpus[i].source_id);
    EXPECT_EQ(back[i].frames, corpus[i].frames.cast<float>().cast<double>());
  }
}

TEST(FeatureCacheTest, Float64IsExact) {
  TempDir dir;
  Rng rng(7);
  const Matrix m = RandomMatrix(4, 5, rng);
  WriteFloat64(dir.path() / "m.f64", m);
  EXPECT_EQ(ReadFloat64(dir.path() / "m.f64", 4, 5), m);
  EXPECT_THROW(ReadFloat64(dir.path() / "m.f64", 5, 5), std::runtime_error);
}

TEST(FeatureCacheTest, FingerprintDistinguishesCorpora) {
  Rng rng(8);
  std::vector<FrameSequence> a(1), b(1);
  a[0].frames = RandomMatrix(3, 2, rng);
  b[0].frames = a[0].frames;
  EXPECT_EQ(CorpusFingerprint(a), CorpusFingerprint(b));
  b[0].frames(1, 1) += 1e-3;
  EXPECT_NE(CorpusFingerprint(a), CorpusFingerprint(b));
}

}  // namespace
}  // namespace vpc

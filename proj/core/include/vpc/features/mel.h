// core/include/vpc/features/mel.h

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

#ifndef VPC_FEATURES_MEL_H_
#define VPC_FEATURES_MEL_H_

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpc/features/frames.h"
#include "vpc/features/wav.h"

namespace vpc {

struct MelConfig {
  int n_mels = 40;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int stack_factor = 2;
  double fmin = 0.0;
  double fmax = -1.0;  // <= 0 means sample_rate / 2
  double log_floor = 1e-10;

  // Throws std::invalid_argument when the invariants do not hold.
  void Validate() const;
};

int WindowSamples(const MelConfig& cfg, int sample_rate);
int HopSamples(const MelConfig& cfg, int sample_rate);
// Smallest power of two >= the window length.
int FftSize(const MelConfig& cfg, int sample_rate);
// Number of frames produced for `num_samples` samples (0 if too short).
Index NumFrames(Index num_samples, const MelConfig& cfg, int sample_rate);

double HzToMel(double hz);
double MelToHz(double mel);

// Triangular mel filters with unit peaks, laid out on the mel axis between
// fmin and fmax. Rows are filters, columns are FFT bins 0..nfft/2.
struct MelFilterbank {
  Matrix weights;
  std::vector<double> center_hz;
};
MelFilterbank MakeMelFilterbank(const MelConfig& cfg, int sample_rate);

// Hann-windowed power spectrum through the filterbank, then
// log(energy + log_floor). Output is T x n_mels at the hop rate.
FrameSequence LogMel(const Waveform& wave, const MelConfig& cfg);

// Concatenates each group of `factor` consecutive frames; a trailing partial
// group is dropped.
FrameSequence StackFrames(const FrameSequence& f, int factor);
// Inverse of StackFrames on the retained prefix.
FrameSequence UnstackFrames(const FrameSequence& f, int factor);
// Majority label inside each stacked group, lowest label on ties.
std::vector<int> DownsampleLabels(std::span<const int> labels, int factor);

// Per-dimension global mean and standard deviation.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  nlohmann::json ToJson() const;
  static FeatureStats FromJson(const nlohmann::json& j);
  void Save(const std::filesystem::path& path) const;
  static FeatureStats Load(const std::filesystem::path& path);
};

FeatureStats ComputeStats(std::span<const FrameSequence> corpus);
FeatureStats ComputeStats(std::span<const Matrix> mats);
// (x - mean) / std per dimension; dimensions with std == 0 pass through.
FrameSequence Normalize(const FrameSequence& f, const FeatureStats& stats);
Matrix Normalize(const Matrix& m, const FeatureStats& stats);

}  // namespace vpc

#endif  // VPC_FEATURES_MEL_H_

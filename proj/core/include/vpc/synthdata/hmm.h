// core/include/vpc/synthdata/hmm.h

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

// Synthetic labelled corpora drawn from a semi-Markov chain with Gaussian
// emissions. Each segment holds one state for a duration drawn uniformly from
// [min_duration, max_duration]; the next segment's state comes from the
// transition row of the current one (self-transitions allowed).

#ifndef VPC_SYNTHDATA_HMM_H_
#define VPC_SYNTHDATA_HMM_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpc/features/frames.h"
#include "vpc/numerics/rng.h"

namespace vpc {

struct HmmSpec {
  int n_states = 5;
  Matrix transition;                // n x n, row-stochastic
  Matrix emission_means;            // n x d
  std::vector<double> emission_std; // one per state
  int min_duration = 4;
  int max_duration = 12;
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(emission_means.cols()); }
  // Throws std::invalid_argument on malformed specs, including infeasible
  // duration bounds.
  void Validate() const;

  nlohmann::json ToJson() const;
  static HmmSpec FromJson(const nlohmann::json& j);

  // Desk-scale default: 5 equidistant states (a regular simplex randomly
  // rotated into 8 dimensions), no self-transitions, durations 4..12 frames,
  // and an emission spread giving a frame-level Bayes error of about 12%.
  static HmmSpec DeskDefault(std::uint64_t seed);
};

struct LabeledSequence {
  FrameSequence frames;
  std::vector<int> states;
  std::vector<double> aux;  // smooth f0-like continuous target
};

struct Segment {
  int state;
  int duration;
};

// Segments covering exactly `length` frames (the last one may be truncated).
std::vector<Segment> SampleSegments(const HmmSpec& spec, int length, Rng& rng);

// Deterministic given spec.seed: sequence i draws from its own derived
// stream. Throws std::invalid_argument for invalid specs or length ranges.
std::vector<LabeledSequence> SampleCorpus(const HmmSpec& spec, int n_sequences,
                                          int min_length, int max_length);

// Expected error of the Bayes classifier that sees only the current frame,
// averaged over the frames of `corpus` (posterior-expectation estimate).
double FrameBayesError(const HmmSpec& spec,
                       std::span<const LabeledSequence> corpus);
// Same, for the classifier that sees the whole sequence: exact
// forward-backward over the chain expanded with remaining-duration counters.
double SequenceBayesError(const HmmSpec& spec,
                          std::span<const LabeledSequence> corpus);
// Per-frame state posteriors given the whole sequence (T x n_states).
Matrix SequencePosteriors(const HmmSpec& spec, const Matrix& frames);

std::vector<FrameSequence> FramesOf(std::span<const LabeledSequence> corpus);

// Corpus directory = feature cache + labels.json sidecar + hmm_spec.json.
void WriteLabeledCorpus(const std::filesystem::path& dir, const HmmSpec& spec,
                        std::span<const LabeledSequence> corpus);
std::vector<LabeledSequence> ReadLabeledCorpus(const std::filesystem::path& dir);

}  // namespace vpc

#endif  // VPC_SYNTHDATA_HMM_H_

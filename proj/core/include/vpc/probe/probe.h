// core/include/vpc/probe/probe.h

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

#ifndef VPC_PROBE_PROBE_H_
#define VPC_PROBE_PROBE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpc/synthdata/hmm.h"
#include "vpc/trainer/trainer.h"

namespace vpc {

enum class ProbeTask { kClassify, kRegress };

std::string ToString(ProbeTask t);
// "frame_classify" or "frame_regress".
ProbeTask ParseProbeTask(const std::string& s);

struct ProbeConfig {
  ProbeTask task = ProbeTask::kClassify;
  int layer = -1;  // -1 probes every layer
  double lr = 1e-3;
  int epochs = 10;
  int batch_frames = 256;
  double heldout_fraction = 0.1;
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
};

// Frame-aligned supervision, one entry per sequence. Only the member that
// matches the task is read.
struct ProbeLabels {
  std::vector<std::vector<int>> classes;
  std::vector<std::vector<double>> values;
  int num_classes = 0;

  static ProbeLabels FromCorpus(std::span<const LabeledSequence> corpus, int num_classes);
};

struct LayerResult {
  int layer = 0;  // -1 marks the raw-feature baseline
  double error = 0.0;  // error rate or RMSE on the held-out sequences
  double train_error = 0.0;
  Index train_frames = 0;
  Index heldout_frames = 0;
};

struct ProbeReport {
  ProbeTask task = ProbeTask::kClassify;
  std::vector<LayerResult> layers;
  LayerResult baseline;
  int best_layer = 0;
  double best_error = 0.0;
  std::vector<std::size_t> heldout_sequences;

  nlohmann::json ToJson() const;
  std::string ToCsv() const;
  void Write(const std::filesystem::path& dir) const;  // probe.{json,csv}
};

// Hidden states of every layer 0..layers for one utterance in one pass.
std::vector<Matrix> ExtractAllLayers(const Model& model, const Matrix& raw_frames);

// Hidden states of `layer` for each sequence. When cache_dir is non-empty the
// result is also written there in the feature-cache format.
std::vector<Matrix> ExtractFeatures(const Model& model, std::span<const FrameSequence> corpus,
                                    int layer, const std::filesystem::path& cache_dir = {});

// Held-out sequence indices for a seeded split.
std::vector<std::size_t> HeldoutSplit(std::size_t n, double fraction, std::uint64_t seed);

// Trains a linear probe on one feature set and scores it on the held-out
// sequences. Throws std::invalid_argument on length mismatches.
LayerResult ProbeFeatures(std::span<const Matrix> features, const ProbeLabels& labels,
                          const ProbeConfig& cfg);

// Baseline on the raw frames plus one probe per requested layer.
ProbeReport RunProbe(const Model& model, std::span<const FrameSequence> corpus,
                     const ProbeLabels& labels, const ProbeConfig& cfg);

}  // namespace vpc

#endif  // VPC_PROBE_PROBE_H_

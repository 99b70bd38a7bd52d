// core/include/vpc/trainer/trainer.h

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

#ifndef VPC_TRAINER_TRAINER_H_
#define VPC_TRAINER_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpc/codebook/kmeans.h"
#include "vpc/encoder/encoder.h"
#include "vpc/features/mel.h"
#include "vpc/objectives/nce.h"
#include "vpc/objectives/objectives.h"
#include "vpc/trainer/checkpoint.h"

namespace vpc {

struct SecondIterationConfig {
  std::filesystem::path teacher;  // teacher checkpoint directory
  int teacher_layer = -1;         // -1: middle layer of the teacher
  double tau = 10.0;
  CodebookInit codebook_init = CodebookInit::kKmeansPP;
};

struct TrainConfig {
  Objective objective = Objective::kMaskedVpc;
  EstimatorConfig estimator;
  CodebookInit codebook_init = CodebookInit::kRandom;
  int codebook_size = 100;
  double lr = 1e-4;
  int batch_size = 8;
  int epochs = 30;
  Index max_frames = 1400;
  std::uint64_t seed = 0;
  double tau = 1.0;
  MaskSpec mask;
  FutureSpec future;
  NceConfig nce;
  // input_dim and codebook_size are filled in from the data and codebook_size.
  EncoderConfig encoder;
  KmeansOptions kmeans;
  int checkpoint_every = 0;  // epochs between intermediate checkpoints
  int smoothing_window = 50;
  TensorDtype checkpoint_dtype = TensorDtype::kFloat32;
  std::filesystem::path resume_from;
  bool second_iteration = false;
  SecondIterationConfig second;

  void Validate() const;
  // Flat key/value view; keys match SetOption.
  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
  // Sets one option from its text form, e.g. ("encoder.layers", "2").
  // Throws std::invalid_argument for unknown keys or malformed values.
  void SetOption(const std::string& key, const std::string& value);
  // e.g. "masked_vpc/gumbel/random" or "hubert_obj".
  std::string Label() const;
};

struct CurvePoint {
  std::int64_t step = 0;
  int epoch = 0;
  LossBreakdown loss;
};

struct RunRecord {
  std::string label;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::filesystem::path run_dir;
  std::filesystem::path curve_path;
  std::filesystem::path checkpoint_path;
  std::vector<CurvePoint> curve;
  // Mean total over the last `smoothing_window` steps.
  double final_neg_elbo = 0.0;
  double first_total = 0.0;  // loss of the first logged step
  double wall_seconds = 0.0;
  std::string corpus_fingerprint;
  nlohmann::json encoder_config;

  nlohmann::json ToJson() const;
  // Reads run.json and curve.jsonl from a run directory.
  static RunRecord Load(const std::filesystem::path& run_dir);
};

// Trained encoder plus everything needed to featurize new data.
struct Model {
  EncoderConfig encoder;
  num::ParameterStore params;
  FeatureStats input_stats;
  nlohmann::json config;
};

// Loads a checkpoint written by Pretrain (feature_stats.json sits beside
// manifest.json).
Model LoadModel(const std::filesystem::path& checkpoint_dir);

// Hidden states of `layer` (0..layers) for raw frames: normalization with the
// model's stats, no mask, no dropout.
Matrix ExtractLayer(const Model& model, const Matrix& raw_frames, int layer);

double SmoothedFinal(const std::vector<CurvePoint>& curve, int window);

// Trains on `corpus` (raw frames) and writes config.json, feature_stats.json,
// curve.jsonl, checkpoint/ and run.json under run_dir. A non-finite loss
// writes error.json and throws NonFiniteError.
RunRecord Pretrain(const std::vector<FrameSequence>& corpus, const TrainConfig& cfg,
                   const std::filesystem::path& run_dir);

// Same with targets taken from a frozen teacher (cfg.second_iteration set).
RunRecord SecondIteration(const std::vector<FrameSequence>& corpus, const TrainConfig& cfg,
                          const std::filesystem::path& run_dir);

}  // namespace vpc

#endif  // VPC_TRAINER_TRAINER_H_

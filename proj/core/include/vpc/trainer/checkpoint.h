// core/include/vpc/trainer/checkpoint.h

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

// Checkpoint container: a directory holding manifest.json and one raw
// little-endian blob per tensor (float32 by default, float64 on request).
// Optimizer moments are stored as tensors named "adam.m/<name>" and
// "adam.v/<name>".

#ifndef VPC_TRAINER_CHECKPOINT_H_
#define VPC_TRAINER_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "vpc/numerics/parameters.h"

namespace vpc {

enum class TensorDtype { kFloat32, kFloat64 };

struct Checkpoint {
  num::ParameterStore params;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  int epoch = 0;
  bool has_optimizer = false;
  num::Adam optimizer;
};

void SaveCheckpoint(const std::filesystem::path& dir, const num::ParameterStore& params,
                    const nlohmann::json& config, std::uint64_t seed, std::int64_t step,
                    int epoch, const num::Adam* optimizer,
                    TensorDtype dtype = TensorDtype::kFloat32);

// Throws std::runtime_error for missing or malformed checkpoints.
Checkpoint LoadCheckpoint(const std::filesystem::path& dir);

}  // namespace vpc

#endif  // VPC_TRAINER_CHECKPOINT_H_

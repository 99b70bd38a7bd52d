// core/include/vpc/objectives/checks.h

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

#ifndef VPC_OBJECTIVES_CHECKS_H_
#define VPC_OBJECTIVES_CHECKS_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpc/encoder/encoder.h"
#include "vpc/numerics/grad_check.h"
#include "vpc/objectives/objectives.h"
#include "vpc/partition/partition.h"

namespace vpc {

// A small randomly initialized model with a few random utterances.
struct ToyProblem {
  EncoderConfig encoder;
  ParameterStore params;  // encoder, head.u, codebook (and nce.proj for NCE)
  std::vector<Matrix> inputs;
  std::vector<Partition> partitions;
};

struct ToyOptions {
  int codebook_size = 4;
  int dim = 3;
  Index min_length = 6;
  Index max_length = 10;
  int utterances = 2;
  bool causal = false;
  bool with_nce = false;
  int layers = 1;
  int model_dim = 8;
  int heads = 2;
  int ffn_dim = 16;
};

ToyProblem MakeToyProblem(const ToyOptions& opt, std::uint64_t seed);

// -ELBO - exact NLL (per masked frame, averaged) of the masked objective with
// the marginal estimator at temperature tau. Non-negative in exact arithmetic.
double BoundGap(const EncoderConfig& cfg, ParameterStore& params, const Matrix& inputs,
                const Matrix& targets, const Partition& partition, double tau);

struct BoundCheckSummary {
  double min_gap = 0.0;
  double mean_gap = 0.0;
  double max_gap = 0.0;
  int evaluations = 0;
  bool pass = false;  // min_gap >= -tolerance
  double tolerance = 1e-9;

  nlohmann::json ToJson() const;
};

BoundCheckSummary SummarizeGaps(const std::vector<double>& gaps, double tolerance);

struct GradientCase {
  std::string name;  // e.g. "masked_vpc/marginal"
  num::GradCheckReport report;
};

// Finite-difference checks of every objective on toy problems. Gumbel and
// NCE run with the relaxed (non straight-through) forward and fixed noise.
std::vector<GradientCase> GradientSuite(std::uint64_t seed,
                                        const num::GradCheckOptions& options);

nlohmann::json ToJson(const std::vector<GradientCase>& cases);

}  // namespace vpc

#endif  // VPC_OBJECTIVES_CHECKS_H_

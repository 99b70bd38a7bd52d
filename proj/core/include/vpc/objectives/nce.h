// core/include/vpc/objectives/nce.h

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

// Masked contrastive loss. Targets are quantized with a jointly trained
// codebook through a straight-through Gumbel selection on -||x - v||^2;
// the context is the encoder output at a masked frame projected back to the
// target dimension. Negatives are other masked frames of the same batch.

#ifndef VPC_OBJECTIVES_NCE_H_
#define VPC_OBJECTIVES_NCE_H_

#include <cstdint>
#include <span>
#include <vector>

#include "vpc/objectives/objectives.h"

namespace vpc {

struct NceConfig {
  int n_negatives = 100;
  double scale = 10.0;  // cosine similarity divided by 0.1
  double gumbel_start = 2.0;
  double gumbel_min = 0.5;
  double gumbel_decay = 0.999995;
  // Off only for finite-difference checks (relaxed quantizer forward).
  bool straight_through = true;

  void Validate() const;
  double GumbelTemperature(std::int64_t step) const;
};

// Registers the context projection "nce.proj.{w,b}" (h -> d).
void InitNceParams(const EncoderConfig& cfg, Index target_dim, std::uint64_t seed,
                   ParameterStore& store);

// -log softmax at index 0 of `scale * [pos, negs...]`.
double NceFromSimilarities(double positive, std::span<const double> negatives,
                           double scale);

// Draws `count` distinct indices from [0, n) excluding `self`.
std::vector<Index> SampleNegatives(Index n, Index self, int count, Rng& rng);

struct NceBatch {
  std::vector<const Matrix*> inputs;
  std::vector<const Partition*> partitions;
};

// One graph for the whole batch. `rng` drives negatives and Gumbel noise.
LossTerms NceLoss(const LossContext& ctx, const NceBatch& batch, const NceConfig& cfg,
                  std::int64_t step, Rng& rng);

}  // namespace vpc

#endif  // VPC_OBJECTIVES_NCE_H_

// core/include/vpc/objectives/estimator.h

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

#ifndef VPC_OBJECTIVES_ESTIMATOR_H_
#define VPC_OBJECTIVES_ESTIMATOR_H_

#include <span>
#include <string>

#include "vpc/features/frames.h"
#include "vpc/numerics/rng.h"
#include "vpc/numerics/tape.h"

namespace vpc {

enum class EstimatorKind { kSinglePoint, kMarginal, kGumbel };

std::string ToString(EstimatorKind kind);
// "single_point", "marginal" or "gumbel".
EstimatorKind ParseEstimatorKind(const std::string& s);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::kMarginal;
  double gumbel_temperature = 1.0;
  int n_samples = 1;
  // When false the gumbel forward uses the relaxed sample itself instead of
  // the hard one; only useful for finite-difference checks.
  bool straight_through = true;

  void Validate() const;
};

// Source of Gumbel noise: either a fixed N x K matrix or a generator.
struct GumbelNoise {
  const Matrix* fixed = nullptr;
  Rng* rng = nullptr;

  Matrix Draw(Index rows, Index cols) const;
};

// Per-frame weights W (N x K) over codes such that E_q[f] ~= sum_k W_ik f_ik.
//   single_point: one-hot at argmin distance (lowest index on ties)
//   marginal:     q itself
//   gumbel:       hard Gumbel-max one-hot with straight-through gradient to
//                 softmax((log q + g) / temperature)
// With n_samples > 1 the gumbel weights average independent draws.
num::Var EstimatorWeights(const num::Var& distances, const num::Var& log_q,
                          const num::Var& q, const EstimatorConfig& cfg,
                          const GumbelNoise& noise);

// Plain scalar version for one row.
double EstimateExpectation(std::span<const double> q_row,
                           std::span<const double> values,
                           const EstimatorConfig& cfg, Rng* rng);

}  // namespace vpc

#endif  // VPC_OBJECTIVES_ESTIMATOR_H_

// core/include/vpc/numerics/grad_check.h

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

#ifndef VPC_NUMERICS_GRAD_CHECK_H_
#define VPC_NUMERICS_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vpc/numerics/parameters.h"

namespace vpc::num {

// Builds the scalar loss on `tape` from the bound parameters. Must be a pure
// function of the parameter values: any sampling has to use fixed noise.
using LossFn = std::function<Var(Tape& tape, const BoundParams& params)>;

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  // Coordinates checked per tensor; tensors at most this large are checked
  // exhaustively.
  int coords_per_tensor = 32;
  // Denominator floor for the relative error, so that coordinates whose true
  // gradient is ~0 are judged on absolute error.
  double scale_floor = 1e-6;
  std::uint64_t seed = 0;
  // Only check these parameters (all trainable ones when empty).
  std::vector<std::string> only;
};

struct GradCheckReport {
  std::map<std::string, double> max_rel_error;
  std::map<std::string, int> coords_checked;
  double step = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  // Set when the graph contains a surrogate gradient; no comparison is made.
  bool skipped = false;
  std::vector<std::string> skip_reasons;

  double worst() const;
};

// Compares the analytic gradient of `loss` against central finite differences
// (f(p+h) - f(p-h)) / 2h. Throws std::runtime_error when two evaluations at
// identical parameters disagree (non-deterministic forward).
GradCheckReport GradCheck(const LossFn& loss, ParameterStore& params,
                          const GradCheckOptions& options = {});

}  // namespace vpc::num

#endif  // VPC_NUMERICS_GRAD_CHECK_H_

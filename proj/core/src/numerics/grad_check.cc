// core/src/numerics/grad_check.cc

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

#include "vpc/numerics/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "vpc/numerics/rng.h"

namespace vpc::num {

namespace {

double Evaluate(const LossFn& loss, ParameterStore& params) {
  Tape tape;
  BoundParams bound(tape, params);
  return loss(tape, bound).item();
}

}  // namespace

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& [name, e] : max_rel_error) w = std::max(w, e);
  return w;
}

GradCheckReport GradCheck(const LossFn& loss, ParameterStore& params,
                          const GradCheckOptions& options) {
  GradCheckReport report;
  report.step = options.step;
  report.tolerance = options.tolerance;

  params.ZeroGrad();
  double base = 0.0;
  {
    Tape tape;
    BoundParams bound(tape, params);
    Var l = loss(tape, bound);
    base = l.item();
    if (tape.has_surrogate()) {
      report.skipped = true;
      report.skip_reasons = tape.surrogate_reasons();
      report.pass = false;
      return report;
    }
    tape.Backward(l);
  }
  if (Evaluate(loss, params) != base) {
    throw std::runtime_error(
        "grad check: forward is not deterministic for fixed parameters");
  }

  Rng rng(DeriveSeed(options.seed, "grad-check"));
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), name) ==
            options.only.end()) {
      continue;
    }
    const Index n = p.value.size();
    std::vector<Index> coords(static_cast<std::size_t>(n));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (n > options.coords_per_tensor) {
      // Partial Fisher-Yates for a seeded subsample.
      for (int i = 0; i < options.coords_per_tensor; ++i) {
        const auto j = static_cast<std::size_t>(i) +
                       rng.UniformInt(static_cast<std::uint64_t>(n - i));
        std::swap(coords[static_cast<std::size_t>(i)], coords[j]);
      }
      coords.resize(static_cast<std::size_t>(options.coords_per_tensor));
    }
    const Matrix analytic = p.grad;
    double worst = 0.0;
    for (Index c : coords) {
      double& x = p.value.data()[c];
      const double saved = x;
      x = saved + options.step;
      const double fp = Evaluate(loss, params);
      x = saved - options.step;
      const double fm = Evaluate(loss, params);
      x = saved;
      const double numeric = (fp - fm) / (2.0 * options.step);
      const double a = analytic.data()[c];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.scale_floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
    report.max_rel_error[name] = worst;
    report.coords_checked[name] = static_cast<int>(coords.size());
  }
  report.pass = report.worst() < options.tolerance;
  return report;
}

}  // namespace vpc::num

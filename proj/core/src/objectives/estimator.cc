// core/src/objectives/estimator.cc

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

#include "vpc/objectives/estimator.h"

#include <stdexcept>

#include "vpc/codebook/codebook.h"

namespace vpc {

using num::Var;

std::string ToString(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kSinglePoint:
      return "single_point";
    case EstimatorKind::kMarginal:
      return "marginal";
    case EstimatorKind::kGumbel:
      return "gumbel";
  }
  return "unknown";
}

EstimatorKind ParseEstimatorKind(const std::string& s) {
  if (s == "single_point") return EstimatorKind::kSinglePoint;
  if (s == "marginal") return EstimatorKind::kMarginal;
  if (s == "gumbel") return EstimatorKind::kGumbel;
  throw std::invalid_argument("unknown estimator '" + s + "'");
}

void EstimatorConfig::Validate() const {
  if (kind == EstimatorKind::kGumbel && !(gumbel_temperature > 0.0)) {
    throw std::invalid_argument("gumbel estimator needs a positive temperature");
  }
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
}

Matrix GumbelNoise::Draw(Index rows, Index cols) const {
  if (fixed != nullptr) {
    if (fixed->rows() < rows || fixed->cols() != cols) {
      throw std::invalid_argument("fixed gumbel noise has the wrong shape");
    }
    return fixed->topRows(rows);
  }
  if (rng == nullptr) throw std::invalid_argument("gumbel estimator needs a noise source");
  Matrix g(rows, cols);
  for (Index i = 0; i < g.size(); ++i) g.data()[i] = rng->Gumbel();
  return g;
}

namespace {

Matrix OneHot(const std::vector<int>& ids, Index k) {
  Matrix m = Matrix::Zero(static_cast<Index>(ids.size()), k);
  for (std::size_t i = 0; i < ids.size(); ++i) m(static_cast<Index>(i), ids[i]) = 1.0;
  return m;
}

std::vector<int> ArgmaxRows(const Matrix& a) {
  std::vector<int> ids(static_cast<std::size_t>(a.rows()));
  for (Index i = 0; i < a.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < a.cols(); ++k) {
      if (a(i, k) > a(i, best)) best = k;
    }
    ids[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return ids;
}

Var GumbelDraw(const Var& log_q, const EstimatorConfig& cfg, const GumbelNoise& noise) {
  num::Tape& tape = log_q.tape();
  const Matrix g = noise.Draw(log_q.rows(), log_q.cols());
  const Var perturbed = log_q + tape.Constant(g);
  const Var soft = SoftmaxRows(Scale(perturbed, 1.0 / cfg.gumbel_temperature));
  if (!cfg.straight_through) return soft;
  return StraightThrough(OneHot(ArgmaxRows(perturbed.value()), log_q.cols()), soft);
}

}  // namespace

Var EstimatorWeights(const Var& distances, const Var& log_q, const Var& q,
                     const EstimatorConfig& cfg, const GumbelNoise& noise) {
  cfg.Validate();
  num::Tape& tape = distances.tape();
  switch (cfg.kind) {
    case EstimatorKind::kSinglePoint:
      if (distances.requires_grad()) {
        tape.MarkSurrogate("point-mass selection (zero gradient almost everywhere)");
      }
      return tape.Constant(OneHot(ArgminRows(distances.value()), distances.cols()));
    case EstimatorKind::kMarginal:
      return q;
    case EstimatorKind::kGumbel: {
      Var w = GumbelDraw(log_q, cfg, noise);
      for (int s = 1; s < cfg.n_samples; ++s) w = w + GumbelDraw(log_q, cfg, noise);
      return cfg.n_samples == 1 ? w : Scale(w, 1.0 / cfg.n_samples);
    }
  }
  throw std::logic_error("unhandled estimator");
}

double EstimateExpectation(std::span<const double> q_row, std::span<const double> values,
                           const EstimatorConfig& cfg, Rng* rng) {
  cfg.Validate();
  if (q_row.size() != values.size() || q_row.empty()) {
    throw std::invalid_argument("estimate_expectation: size mismatch");
  }
  switch (cfg.kind) {
    case EstimatorKind::kSinglePoint: {
      std::size_t best = 0;
      for (std::size_t k = 1; k < q_row.size(); ++k) {
        if (q_row[k] > q_row[best]) best = k;
      }
      return values[best];
    }
    case EstimatorKind::kMarginal: {
      double acc = 0.0;
      for (std::size_t k = 0; k < q_row.size(); ++k) acc += q_row[k] * values[k];
      return acc;
    }
    case EstimatorKind::kGumbel: {
      if (rng == nullptr) throw std::invalid_argument("gumbel estimator needs an rng");
      double acc = 0.0;
      for (int s = 0; s < cfg.n_samples; ++s) {
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < q_row.size(); ++k) {
          const double score = std::log(q_row[k]) + rng->Gumbel();
          if (score > best_score) {
            best_score = score;
            best = k;
          }
        }
        acc += values[best];
      }
      return acc / cfg.n_samples;
    }
  }
  throw std::logic_error("unhandled estimator");
}

}  // namespace vpc

// core/include/vpc/objectives/objectives.h

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

// Masked-VPC, Future-VPC and HuBERT-style losses. For every predicted frame
// i with target x_i and context-dependent log p(z | context):
//   neg_entropy     = sum_k q_ik log q_ik
//   cross_entropy   = E_q[-log p(z_i = k | context)]
//   reconstruction  = E_q[0.5 ||x_i - v_k||^2 + (d/2) log 2 pi]
// with q_i = softmax(-||x_i - v||^2 / tau). Terms are averaged over the
// predicted frames of an utterance, then over the utterances of a batch.

#ifndef VPC_OBJECTIVES_OBJECTIVES_H_
#define VPC_OBJECTIVES_OBJECTIVES_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpc/encoder/encoder.h"
#include "vpc/objectives/estimator.h"
#include "vpc/partition/partition.h"

namespace vpc {

enum class Objective { kHubert, kMaskedVpc, kFutureVpc, kMaskedNce };

std::string ToString(Objective o);
// "hubert_obj", "masked_vpc", "future_vpc" or "masked_nce".
Objective ParseObjective(const std::string& s);

struct LossBreakdown {
  double neg_entropy = 0.0;
  double cross_entropy = 0.0;
  double reconstruction = 0.0;
  double total = 0.0;
  Index frames_counted = 0;
  // Entropy (nats) of the histogram of selected codes over counted frames.
  double codeword_usage_entropy = 0.0;

  nlohmann::json ToJson() const;
};

// Scalar loss nodes on a tape.
struct LossTerms {
  num::Var neg_entropy;
  num::Var cross_entropy;
  num::Var reconstruction;
  num::Var total;
  Index frames = 0;
  std::vector<int> selected_codes;  // argmax of the weights per frame
};

// Per-frame (N x 1) terms shared by the VPC objectives.
struct FrameTerms {
  num::Var neg_entropy;
  num::Var cross_entropy;
  num::Var reconstruction;
  std::vector<int> selected_codes;
};

FrameTerms VpcFrameTerms(const num::Var& targets, const num::Var& codebook,
                         const num::Var& logits, double tau,
                         const EstimatorConfig& estimator, const GumbelNoise& noise);

// Settings shared by every loss evaluation on one tape.
struct LossContext {
  const EncoderConfig* encoder = nullptr;
  const BoundParams* params = nullptr;
  bool train = false;
  Rng* dropout_rng = nullptr;
  GumbelNoise noise;
};

// One utterance. `inputs` feed the encoder, `targets` define q (they are the
// inputs themselves, or teacher hidden states in a second iteration).
LossTerms MaskedVpcLoss(const LossContext& ctx, const Matrix& inputs,
                        const Matrix& targets, const Partition& partition,
                        double tau, const EstimatorConfig& estimator);

// The codebook parameter must be frozen. Reconstruction is reported but is a
// constant of the graph.
LossTerms HubertObjLoss(const LossContext& ctx, const Matrix& inputs,
                        const Matrix& targets, const Partition& partition);

// Requires a causal encoder. Target i is predicted from hidden state i - shift.
LossTerms FutureVpcLoss(const LossContext& ctx, const Matrix& inputs,
                        const Matrix& targets, const FuturePartition& partition,
                        double tau, const EstimatorConfig& estimator);

// Averages utterance losses; the result's total is the training loss.
LossTerms AverageTerms(std::span<const LossTerms> terms);
LossBreakdown Breakdown(const LossTerms& terms, Index num_codes);

// Entropy of the empirical distribution of `codes` over [0, num_codes).
double UsageEntropy(std::span<const int> codes, Index num_codes);

// Exact -log p(x_M | x_unmasked) by enumerating codes, averaged over the
// masked frames (plain values, no graph).
double ExactNegLogLikelihood(const EncoderConfig& cfg, ParameterStore& params,
                             const Matrix& inputs, const Matrix& targets,
                             const Partition& partition);

// Per-frame pieces with log p and per-code reconstruction NLL r_k given:
//   -ELBO = sum_k q_k (log q_k - log p_k + r_k)
//   NLL   = -log sum_k p_k exp(-r_k)
double FrameNegElbo(std::span<const double> q, std::span<const double> log_p,
                    std::span<const double> recon);
double FrameNll(std::span<const double> log_p, std::span<const double> recon);

}  // namespace vpc

#endif  // VPC_OBJECTIVES_OBJECTIVES_H_

// core/src/objectives/checks.cc

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

#include "vpc/objectives/checks.h"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "vpc/objectives/estimator.h"
#include "vpc/objectives/nce.h"

namespace vpc {

ToyProblem MakeToyProblem(const ToyOptions& opt, std::uint64_t seed) {
  ToyProblem p;
  p.encoder.input_dim = opt.dim;
  p.encoder.layers = opt.layers;
  p.encoder.model_dim = opt.model_dim;
  p.encoder.heads = opt.heads;
  p.encoder.ffn_dim = opt.ffn_dim;
  p.encoder.dropout = 0.1;
  p.encoder.causal = opt.causal;
  p.encoder.codebook_size = opt.codebook_size;
  p.encoder.Validate();
  InitEncoderParams(p.encoder, seed, p.params);
  Rng rng(DeriveSeed(seed, "toy"));
  Matrix cb(opt.codebook_size, opt.dim);
  for (Index i = 0; i < cb.size(); ++i) cb.data()[i] = rng.Normal();
  p.params.Add("codebook", cb);
  if (opt.with_nce) InitNceParams(p.encoder, opt.dim, seed, p.params);
  for (int u = 0; u < opt.utterances; ++u) {
    const Index len =
        opt.min_length + static_cast<Index>(rng.UniformInt(
                             static_cast<std::uint64_t>(opt.max_length - opt.min_length + 1)));
    Matrix x(len, opt.dim);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.Normal();
    p.inputs.push_back(x);
    MaskSpec spec;
    spec.span_frames = static_cast<int>(std::min<Index>(2, len));
    spec.start_prob = 0.3;
    p.partitions.push_back(SampleMask(len, spec, rng));
  }
  return p;
}

double BoundGap(const EncoderConfig& cfg, ParameterStore& params, const Matrix& inputs,
                const Matrix& targets, const Partition& partition, double tau) {
  Tape tape;
  const BoundParams bound(tape, params);
  LossContext ctx;
  ctx.encoder = &cfg;
  ctx.params = &bound;
  EstimatorConfig est;
  est.kind = EstimatorKind::kMarginal;
  const LossTerms t = MaskedVpcLoss(ctx, inputs, targets, partition, tau, est);
  const double neg_elbo = t.total.value()(0, 0);
  return neg_elbo - ExactNegLogLikelihood(cfg, params, inputs, targets, partition);
}

BoundCheckSummary SummarizeGaps(const std::vector<double>& gaps, double tolerance) {
  BoundCheckSummary s;
  s.tolerance = tolerance;
  s.evaluations = static_cast<int>(gaps.size());
  if (gaps.empty()) return s;
  s.min_gap = std::numeric_limits<double>::infinity();
  s.max_gap = -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (double g : gaps) {
    s.min_gap = std::min(s.min_gap, g);
    s.max_gap = std::max(s.max_gap, g);
    acc += g;
  }
  s.mean_gap = acc / static_cast<double>(gaps.size());
  s.pass = s.min_gap >= -tolerance;
  return s;
}

nlohmann::json BoundCheckSummary::ToJson() const {
  return {{"min_gap", min_gap},   {"mean_gap", mean_gap},   {"max_gap", max_gap},
          {"evaluations", evaluations}, {"tolerance", tolerance}, {"pass", pass}};
}

namespace {

num::GradCheckReport CheckMasked(ToyProblem& p, const EstimatorConfig& est, bool hubert,
                                 std::uint64_t seed, const num::GradCheckOptions& options) {
  const Index k = p.encoder.codebook_size;
  std::vector<Matrix> noise;
  Rng noise_rng(DeriveSeed(seed, "gumbel"));
  for (const Partition& part : p.partitions) {
    Matrix g(static_cast<Index>(part.masked.size()), k);
    for (Index i = 0; i < g.size(); ++i) g.data()[i] = noise_rng.Gumbel();
    noise.push_back(g);
  }
  if (hubert) p.params.Get("codebook").trainable = false;
  const num::LossFn loss = [&](Tape&, const BoundParams& bound) {
    Rng dropout(DeriveSeed(seed, "dropout"));
    std::vector<LossTerms> terms;
    for (std::size_t u = 0; u < p.inputs.size(); ++u) {
      LossContext ctx;
      ctx.encoder = &p.encoder;
      ctx.params = &bound;
      ctx.train = true;
      ctx.dropout_rng = &dropout;
      ctx.noise.fixed = &noise[u];
      terms.push_back(hubert ? HubertObjLoss(ctx, p.inputs[u], p.inputs[u], p.partitions[u])
                             : MaskedVpcLoss(ctx, p.inputs[u], p.inputs[u], p.partitions[u],
                                             1.0, est));
    }
    return AverageTerms(terms).total;
  };
  return num::GradCheck(loss, p.params, options);
}

num::GradCheckReport CheckFuture(ToyProblem& p, const EstimatorConfig& est, std::uint64_t seed,
                                 const num::GradCheckOptions& options) {
  FutureSpec spec;
  const num::LossFn loss = [&](Tape&, const BoundParams& bound) {
    Rng dropout(DeriveSeed(seed, "dropout"));
    std::vector<LossTerms> terms;
    for (const Matrix& x : p.inputs) {
      LossContext ctx;
      ctx.encoder = &p.encoder;
      ctx.params = &bound;
      ctx.train = true;
      ctx.dropout_rng = &dropout;
      terms.push_back(
          FutureVpcLoss(ctx, x, x, MakeFuturePartition(x.rows(), spec), 1.0, est));
    }
    return AverageTerms(terms).total;
  };
  return num::GradCheck(loss, p.params, options);
}

num::GradCheckReport CheckNce(ToyProblem& p, std::uint64_t seed,
                              const num::GradCheckOptions& options) {
  NceConfig cfg;
  cfg.straight_through = false;
  Index masked = 0;
  for (const Partition& part : p.partitions) masked += static_cast<Index>(part.masked.size());
  cfg.n_negatives = static_cast<int>(std::min<Index>(3, masked - 1));
  const num::LossFn loss = [&](Tape&, const BoundParams& bound) {
    Rng dropout(DeriveSeed(seed, "dropout"));
    Rng rng(DeriveSeed(seed, "gumbel"));
    LossContext ctx;
    ctx.encoder = &p.encoder;
    ctx.params = &bound;
    ctx.train = true;
    ctx.dropout_rng = &dropout;
    NceBatch batch;
    for (std::size_t u = 0; u < p.inputs.size(); ++u) {
      batch.inputs.push_back(&p.inputs[u]);
      batch.partitions.push_back(&p.partitions[u]);
    }
    return NceLoss(ctx, batch, cfg, 0, rng).total;
  };
  return num::GradCheck(loss, p.params, options);
}

}  // namespace

std::vector<GradientCase> GradientSuite(std::uint64_t seed, const num::GradCheckOptions& options) {
  std::vector<GradientCase> out;
  ToyOptions opt;
  auto seeded = [&](int i) {
    num::GradCheckOptions o = options;
    o.seed = DeriveSeed(seed, "gradcheck", static_cast<std::uint64_t>(i));
    return o;
  };
  {
    ToyProblem p = MakeToyProblem(opt, seed);
    out.push_back({"hubert_obj", CheckMasked(p, {}, true, seed, seeded(0))});
  }
  for (const EstimatorKind kind : {EstimatorKind::kMarginal, EstimatorKind::kGumbel}) {
    EstimatorConfig est;
    est.kind = kind;
    est.straight_through = false;
    ToyProblem p = MakeToyProblem(opt, seed);
    out.push_back({"masked_vpc/" + ToString(kind), CheckMasked(p, est, false, seed, seeded(1))});
  }
  {
    ToyOptions fo = opt;
    fo.causal = true;
    ToyProblem p = MakeToyProblem(fo, seed);
    EstimatorConfig est;
    out.push_back({"future_vpc/marginal", CheckFuture(p, est, seed, seeded(2))});
  }
  {
    ToyOptions no = opt;
    no.with_nce = true;
    ToyProblem p = MakeToyProblem(no, seed);
    out.push_back({"masked_nce", CheckNce(p, seed, seeded(3))});
  }
  return out;
}

nlohmann::json ToJson(const std::vector<GradientCase>& cases) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : cases) {
    j.push_back({{"case", c.name},
                 {"pass", c.report.pass},
                 {"skipped", c.report.skipped},
                 {"worst_rel_error", c.report.worst()},
                 {"max_rel_error", c.report.max_rel_error},
                 {"coords_checked", c.report.coords_checked}});
  }
  return j;
}

}  // namespace vpc

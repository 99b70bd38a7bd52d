// core/src/objectives/nce.cc

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

#include "vpc/objectives/nce.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace vpc {

using num::Var;

void NceConfig::Validate() const {
  if (n_negatives < 1) throw std::invalid_argument("n_negatives must be >= 1");
  if (!(scale > 0.0)) throw std::invalid_argument("similarity scale must be > 0");
  if (!(gumbel_min > 0.0) || gumbel_start < gumbel_min) {
    throw std::invalid_argument("gumbel anneal needs start >= min > 0");
  }
  if (!(gumbel_decay > 0.0 && gumbel_decay <= 1.0)) {
    throw std::invalid_argument("gumbel decay must be in (0, 1]");
  }
}

double NceConfig::GumbelTemperature(std::int64_t step) const {
  return std::max(gumbel_start * std::pow(gumbel_decay, static_cast<double>(step)),
                  gumbel_min);
}

void InitNceParams(const EncoderConfig& cfg, Index target_dim, std::uint64_t seed,
                   ParameterStore& store) {
  Rng rng(DeriveSeed(seed, "nce-init"));
  Matrix w(cfg.model_dim, target_dim);
  const double sd = 1.0 / std::sqrt(static_cast<double>(cfg.model_dim));
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = sd * rng.Normal();
  store.Add("nce.proj.w", w);
  store.Add("nce.proj.b", Matrix::Zero(1, target_dim));
}

double NceFromSimilarities(double positive, std::span<const double> negatives,
                           double scale) {
  std::vector<double> logits;
  logits.reserve(negatives.size() + 1);
  logits.push_back(scale * positive);
  for (double s : negatives) logits.push_back(scale * s);
  return num::LogSumExp(logits) - logits[0];
}

std::vector<Index> SampleNegatives(Index n, Index self, int count, Rng& rng) {
  const Index pool = n - 1;
  if (pool < count) {
    throw std::invalid_argument("batch has " + std::to_string(pool) +
                                " candidate frames for " + std::to_string(count) +
                                " negatives");
  }
  // Floyd's algorithm over [0, pool), then skip over `self`.
  std::vector<Index> picked;
  picked.reserve(static_cast<std::size_t>(count));
  std::unordered_set<Index> seen;
  for (Index j = pool - count; j < pool; ++j) {
    Index t = static_cast<Index>(rng.UniformInt(static_cast<std::uint64_t>(j + 1)));
    if (seen.count(t)) t = j;
    seen.insert(t);
    picked.push_back(t);
  }
  for (Index& p : picked) {
    if (p >= self) ++p;
  }
  return picked;
}

LossTerms NceLoss(const LossContext& ctx, const NceBatch& batch, const NceConfig& cfg,
                  std::int64_t step, Rng& rng) {
  cfg.Validate();
  if (ctx.encoder == nullptr || ctx.params == nullptr) {
    throw std::invalid_argument("loss context needs an encoder config and parameters");
  }
  if (batch.inputs.empty() || batch.inputs.size() != batch.partitions.size()) {
    throw std::invalid_argument("nce: inputs and partitions must pair up");
  }
  const BoundParams& p = *ctx.params;
  const Var& cb = p["codebook"];
  Tape& tape = cb.tape();

  std::vector<Var> contexts;
  std::vector<Var> targets;
  std::vector<double> weights;
  const double inv_batch = 1.0 / static_cast<double>(batch.inputs.size());
  for (std::size_t b = 0; b < batch.inputs.size(); ++b) {
    const Matrix& x = *batch.inputs[b];
    const Partition& part = *batch.partitions[b];
    if (part.masked.empty()) throw std::invalid_argument("nce: empty mask");
    if (x.cols() != cb.cols()) throw std::invalid_argument("nce: codebook dim mismatch");
    EncodeOptions opt;
    opt.masked = part.masked;
    opt.train = ctx.train;
    opt.dropout_rng = ctx.dropout_rng;
    const EncoderOutput enc = Encode(*ctx.encoder, p, tape.Constant(x), opt);
    contexts.push_back(GatherRows(enc.final(), part.masked));
    targets.push_back(tape.Constant(x(part.masked, Eigen::all)));
    weights.insert(weights.end(), part.masked.size(),
                   inv_batch / static_cast<double>(part.masked.size()));
  }
  const Var ctx_all = AddRow(MatMul(VConcat(contexts), p["nce.proj.w"]), p["nce.proj.b"]);
  const Var tgt_all = VConcat(targets);
  const Index n = tgt_all.rows();

  // Quantize every target with a Gumbel selection over -distance logits.
  GumbelNoise noise = ctx.noise;
  if (noise.fixed == nullptr && noise.rng == nullptr) noise.rng = &rng;
  EstimatorConfig quant;
  quant.kind = EstimatorKind::kGumbel;
  quant.gumbel_temperature = cfg.GumbelTemperature(step);
  quant.straight_through = cfg.straight_through;
  const Var dist = SquaredDistances(tgt_all, cb);
  const Var neg_dist = Scale(dist, -1.0);
  const Var sel = EstimatorWeights(dist, neg_dist, neg_dist, quant, noise);
  const Var quantized = MatMul(sel, cb);

  const Var sims = MatMulNT(L2NormalizeRows(ctx_all), L2NormalizeRows(quantized));
  num::IndexMatrix cols(n, cfg.n_negatives + 1);
  for (Index i = 0; i < n; ++i) {
    cols(i, 0) = i;
    const std::vector<Index> negs = SampleNegatives(n, i, cfg.n_negatives, rng);
    for (int j = 0; j < cfg.n_negatives; ++j) cols(i, j + 1) = negs[static_cast<std::size_t>(j)];
  }
  const Var log_probs = LogSoftmaxRows(Scale(GatherCols(sims, cols), cfg.scale));
  Matrix w = Eigen::Map<const Matrix>(weights.data(), n, 1);
  const Var loss = Scale(Sum(MulConst(Cols(log_probs, 0, 1), w)), -1.0);

  LossTerms t;
  t.neg_entropy = tape.Constant(Matrix::Zero(1, 1));
  t.reconstruction = tape.Constant(Matrix::Zero(1, 1));
  t.cross_entropy = loss;
  t.total = loss;
  t.frames = n;
  t.selected_codes.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    sel.value().row(i).maxCoeff(&best);
    t.selected_codes[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return t;
}

}  // namespace vpc

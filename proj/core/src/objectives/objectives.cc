// core/src/objectives/objectives.cc

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

#include "vpc/objectives/objectives.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "vpc/codebook/codebook.h"

namespace vpc {

using num::Var;

std::string ToString(Objective o) {
  switch (o) {
    case Objective::kHubert:
      return "hubert_obj";
    case Objective::kMaskedVpc:
      return "masked_vpc";
    case Objective::kFutureVpc:
      return "future_vpc";
    case Objective::kMaskedNce:
      return "masked_nce";
  }
  return "unknown";
}

Objective ParseObjective(const std::string& s) {
  if (s == "hubert_obj") return Objective::kHubert;
  if (s == "masked_vpc") return Objective::kMaskedVpc;
  if (s == "future_vpc") return Objective::kFutureVpc;
  if (s == "masked_nce") return Objective::kMaskedNce;
  throw std::invalid_argument("unknown objective '" + s + "'");
}

nlohmann::json LossBreakdown::ToJson() const {
  return {{"neg_entropy", neg_entropy},
          {"cross_entropy", cross_entropy},
          {"reconstruction", reconstruction},
          {"total", total},
          {"frames_counted", frames_counted},
          {"codeword_usage_entropy", codeword_usage_entropy}};
}

namespace {

std::vector<int> ArgmaxRows(const Matrix& a) {
  std::vector<int> ids(static_cast<std::size_t>(a.rows()));
  for (Index i = 0; i < a.rows(); ++i) {
    Index best = 0;
    a.row(i).maxCoeff(&best);
    ids[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return ids;
}

const Var& CodebookVar(const LossContext& ctx) { return (*ctx.params)["codebook"]; }

void CheckContext(const LossContext& ctx) {
  if (ctx.encoder == nullptr || ctx.params == nullptr) {
    throw std::invalid_argument("loss context needs an encoder config and parameters");
  }
}

void CheckTargets(const Matrix& inputs, const Matrix& targets, const Var& codebook) {
  if (inputs.rows() != targets.rows()) {
    throw std::invalid_argument("inputs and targets differ in length");
  }
  if (targets.cols() != codebook.cols()) {
    throw std::invalid_argument("target dim " + std::to_string(targets.cols()) +
                                " vs codebook dim " + std::to_string(codebook.cols()));
  }
}

EncodeOptions TrainOptions(const LossContext& ctx) {
  EncodeOptions opt;
  opt.train = ctx.train;
  opt.dropout_rng = ctx.dropout_rng;
  return opt;
}

LossTerms Reduce(const FrameTerms& f, Index frames) {
  LossTerms t;
  t.neg_entropy = Mean(f.neg_entropy);
  t.cross_entropy = Mean(f.cross_entropy);
  t.reconstruction = Mean(f.reconstruction);
  t.total = t.neg_entropy + t.cross_entropy + t.reconstruction;
  t.frames = frames;
  t.selected_codes = f.selected_codes;
  return t;
}

}  // namespace

FrameTerms VpcFrameTerms(const Var& targets, const Var& codebook, const Var& logits,
                         double tau, const EstimatorConfig& estimator,
                         const GumbelNoise& noise) {
  if (!(tau > 0.0)) throw std::invalid_argument("soft-min temperature must be > 0");
  if (logits.cols() != codebook.rows()) {
    throw std::invalid_argument("predictor has " + std::to_string(logits.cols()) +
                                " codes, codebook has " + std::to_string(codebook.rows()));
  }
  const Var dist = SquaredDistances(targets, codebook);
  const Var log_q = LogSoftmaxRows(Scale(dist, -1.0 / tau));
  const Var q = Exp(log_q);
  const Var log_p = LogSoftmaxRows(logits);
  const Var w = EstimatorWeights(dist, log_q, q, estimator, noise);
  const double c = GaussianLogNormalizer(targets.cols());
  FrameTerms f;
  f.neg_entropy = SumRows(Mul(q, log_q));
  f.cross_entropy = Scale(SumRows(Mul(w, log_p)), -1.0);
  f.reconstruction = SumRows(Mul(w, AddScalar(Scale(dist, 0.5), c)));
  f.selected_codes = ArgmaxRows(w.value());
  return f;
}

LossTerms MaskedVpcLoss(const LossContext& ctx, const Matrix& inputs,
                        const Matrix& targets, const Partition& partition, double tau,
                        const EstimatorConfig& estimator) {
  CheckContext(ctx);
  const Var& cb = CodebookVar(ctx);
  CheckTargets(inputs, targets, cb);
  if (partition.masked.empty()) throw std::invalid_argument("masked_vpc: empty mask");
  if (partition.length() != inputs.rows()) {
    throw std::invalid_argument("partition length does not match the utterance");
  }
  Tape& tape = cb.tape();
  EncodeOptions opt = TrainOptions(ctx);
  opt.masked = partition.masked;
  const EncoderOutput enc = Encode(*ctx.encoder, *ctx.params, tape.Constant(inputs), opt);
  const Var logits = PredictorLogits(GatherRows(enc.final(), partition.masked),
                                     (*ctx.params)["head.u"]);
  const Var tgt = tape.Constant(targets(partition.masked, Eigen::all));
  const FrameTerms f = VpcFrameTerms(tgt, cb, logits, tau, estimator, ctx.noise);
  return Reduce(f, static_cast<Index>(partition.masked.size()));
}

LossTerms HubertObjLoss(const LossContext& ctx, const Matrix& inputs,
                        const Matrix& targets, const Partition& partition) {
  CheckContext(ctx);
  const Var& cb = CodebookVar(ctx);
  CheckTargets(inputs, targets, cb);
  if (cb.requires_grad()) {
    throw std::invalid_argument("hubert_obj requires a frozen codebook");
  }
  if (partition.masked.empty()) throw std::invalid_argument("hubert_obj: empty mask");
  if (partition.length() != inputs.rows()) {
    throw std::invalid_argument("partition length does not match the utterance");
  }
  Tape& tape = cb.tape();
  EncodeOptions opt = TrainOptions(ctx);
  opt.masked = partition.masked;
  const EncoderOutput enc = Encode(*ctx.encoder, *ctx.params, tape.Constant(inputs), opt);
  const Var logits = PredictorLogits(GatherRows(enc.final(), partition.masked),
                                     (*ctx.params)["head.u"]);
  const Matrix tgt = targets(partition.masked, Eigen::all);
  const Matrix dist = num::SquaredDistanceMatrix(tgt, cb.value());
  const std::vector<int> ids = ArgminRows(dist);
  std::vector<Index> cols(ids.begin(), ids.end());

  const Index n = tgt.rows();
  Matrix recon(n, 1);
  const double c = GaussianLogNormalizer(tgt.cols());
  for (Index i = 0; i < n; ++i) recon(i, 0) = 0.5 * dist(i, ids[static_cast<std::size_t>(i)]) + c;

  FrameTerms f;
  f.neg_entropy = tape.Constant(Matrix::Zero(n, 1));
  f.cross_entropy = Scale(PickCols(LogSoftmaxRows(logits), cols), -1.0);
  f.reconstruction = tape.Constant(recon);
  f.selected_codes = ids;
  return Reduce(f, n);
}

LossTerms FutureVpcLoss(const LossContext& ctx, const Matrix& inputs,
                        const Matrix& targets, const FuturePartition& partition,
                        double tau, const EstimatorConfig& estimator) {
  CheckContext(ctx);
  if (!ctx.encoder->causal) throw std::invalid_argument("future_vpc requires a causal encoder");
  const Var& cb = CodebookVar(ctx);
  CheckTargets(inputs, targets, cb);
  if (partition.targets.empty()) throw std::invalid_argument("future_vpc: no targets");
  if (partition.targets.back() >= inputs.rows()) {
    throw std::invalid_argument("future partition exceeds the utterance");
  }
  Tape& tape = cb.tape();
  const EncoderOutput enc =
      Encode(*ctx.encoder, *ctx.params, tape.Constant(inputs), TrainOptions(ctx));
  std::vector<Index> context_rows;
  context_rows.reserve(partition.targets.size());
  for (Index i : partition.targets) context_rows.push_back(partition.ContextEnd(i));
  const Var logits = PredictorLogits(GatherRows(enc.final(), context_rows),
                                     (*ctx.params)["head.u"]);
  const Var tgt = tape.Constant(targets(partition.targets, Eigen::all));
  const FrameTerms f = VpcFrameTerms(tgt, cb, logits, tau, estimator, ctx.noise);
  return Reduce(f, static_cast<Index>(partition.targets.size()));
}

LossTerms AverageTerms(std::span<const LossTerms> terms) {
  if (terms.empty()) throw std::invalid_argument("no utterances to average");
  LossTerms out = terms[0];
  for (std::size_t b = 1; b < terms.size(); ++b) {
    out.neg_entropy = out.neg_entropy + terms[b].neg_entropy;
    out.cross_entropy = out.cross_entropy + terms[b].cross_entropy;
    out.reconstruction = out.reconstruction + terms[b].reconstruction;
    out.total = out.total + terms[b].total;
    out.frames += terms[b].frames;
    out.selected_codes.insert(out.selected_codes.end(), terms[b].selected_codes.begin(),
                              terms[b].selected_codes.end());
  }
  if (terms.size() > 1) {
    const double inv = 1.0 / static_cast<double>(terms.size());
    out.neg_entropy = Scale(out.neg_entropy, inv);
    out.cross_entropy = Scale(out.cross_entropy, inv);
    out.reconstruction = Scale(out.reconstruction, inv);
    out.total = Scale(out.total, inv);
  }
  return out;
}

double UsageEntropy(std::span<const int> codes, Index num_codes) {
  if (codes.empty()) return 0.0;
  std::vector<double> counts(static_cast<std::size_t>(num_codes), 0.0);
  for (int c : codes) counts.at(static_cast<std::size_t>(c)) += 1.0;
  double h = 0.0;
  const double n = static_cast<double>(codes.size());
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

LossBreakdown Breakdown(const LossTerms& terms, Index num_codes) {
  LossBreakdown b;
  b.neg_entropy = terms.neg_entropy.item();
  b.cross_entropy = terms.cross_entropy.item();
  b.reconstruction = terms.reconstruction.item();
  b.total = terms.total.item();
  b.frames_counted = terms.frames;
  b.codeword_usage_entropy = UsageEntropy(terms.selected_codes, num_codes);
  return b;
}

double FrameNegElbo(std::span<const double> q, std::span<const double> log_p,
                    std::span<const double> recon) {
  if (q.size() != log_p.size() || q.size() != recon.size()) {
    throw std::invalid_argument("FrameNegElbo: size mismatch");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k] > 0.0) acc += q[k] * (std::log(q[k]) - log_p[k] + recon[k]);
  }
  return acc;
}

double FrameNll(std::span<const double> log_p, std::span<const double> recon) {
  if (log_p.size() != recon.size()) throw std::invalid_argument("FrameNll: size mismatch");
  std::vector<double> joint(log_p.size());
  for (std::size_t k = 0; k < log_p.size(); ++k) joint[k] = log_p[k] - recon[k];
  return -num::LogSumExp(joint);
}

double ExactNegLogLikelihood(const EncoderConfig& cfg, ParameterStore& params,
                             const Matrix& inputs, const Matrix& targets,
                             const Partition& partition) {
  if (partition.masked.empty()) throw std::invalid_argument("exact NLL: empty mask");
  Tape tape;
  const BoundParams bound(tape, params);
  EncodeOptions opt;
  opt.masked = partition.masked;
  const EncoderOutput enc = Encode(cfg, bound, tape.Constant(inputs), opt);
  const Matrix log_p = num::LogSoftmaxRowsValue(
      PredictorLogits(GatherRows(enc.final(), partition.masked), bound["head.u"]).value());
  const Matrix tgt = targets(partition.masked, Eigen::all);
  const Matrix recon = GaussianNll(
      num::SquaredDistanceMatrix(tgt, params.Get("codebook").value), tgt.cols());
  double acc = 0.0;
  for (Index i = 0; i < tgt.rows(); ++i) {
    acc += FrameNll(std::span<const double>(log_p.row(i).data(), static_cast<std::size_t>(log_p.cols())),
                    std::span<const double>(recon.row(i).data(), static_cast<std::size_t>(recon.cols())));
  }
  return acc / static_cast<double>(tgt.rows());
}

}  // namespace vpc

// core/src/encoder/encoder.cc

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

#include "vpc/encoder/encoder.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace vpc {

using num::Parameter;

void EncoderConfig::Validate() const {
  if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
  if (layers < 0) throw std::invalid_argument("layers must be >= 0");
  if (model_dim < 1 || heads < 1) {
    throw std::invalid_argument("model_dim and heads must be >= 1");
  }
  if (model_dim % heads != 0) {
    throw std::invalid_argument("model_dim " + std::to_string(model_dim) +
                                " is not divisible by heads " + std::to_string(heads));
  }
  if (ffn_dim < 1) throw std::invalid_argument("ffn_dim must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw std::invalid_argument("dropout must be in [0, 1)");
  }
  if (codebook_size < 1) throw std::invalid_argument("codebook_size must be >= 1");
}

nlohmann::json EncoderConfig::ToJson() const {
  return {{"input_dim", input_dim}, {"layers", layers},   {"model_dim", model_dim},
          {"heads", heads},         {"ffn_dim", ffn_dim}, {"dropout", dropout},
          {"causal", causal},       {"codebook_size", codebook_size}};
}

EncoderConfig EncoderConfig::FromJson(const nlohmann::json& j) {
  EncoderConfig c;
  c.input_dim = j.at("input_dim").get<int>();
  c.layers = j.at("layers").get<int>();
  c.model_dim = j.at("model_dim").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.causal = j.at("causal").get<bool>();
  c.codebook_size = j.at("codebook_size").get<int>();
  c.Validate();
  return c;
}

namespace {

std::string LayerName(int l, const std::string& leaf) {
  return "enc.l" + std::to_string(l) + "." + leaf;
}

Matrix Gaussian(Index rows, Index cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng.Normal();
  return m;
}

void AddLinear(ParameterStore& store, const std::string& w, const std::string& b,
               Index in, Index out, Rng& rng) {
  store.Add(w, Gaussian(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng));
  store.Add(b, Matrix::Zero(1, out));
}

void AddLayerNorm(ParameterStore& store, const std::string& prefix, Index dim) {
  store.Add(prefix + ".g", Matrix::Ones(1, dim));
  store.Add(prefix + ".b", Matrix::Zero(1, dim));
}

Var Linear(const Var& x, const Var& w, const Var& b) { return AddRow(MatMul(x, w), b); }

Var Dropout(const Var& x, double p, const EncodeOptions& opt) {
  if (!opt.train || opt.dropout_rng == nullptr || p <= 0.0) return x;
  Matrix mask(x.rows(), x.cols());
  const double keep = 1.0 / (1.0 - p);
  for (Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = opt.dropout_rng->Bernoulli(p) ? 0.0 : keep;
  }
  return MulConst(x, mask);
}

}  // namespace

void InitEncoderParams(const EncoderConfig& cfg, std::uint64_t seed,
                       ParameterStore& store) {
  cfg.Validate();
  Rng rng(DeriveSeed(seed, "encoder-init"));
  const Index d = cfg.input_dim, h = cfg.model_dim, f = cfg.ffn_dim;
  AddLinear(store, "enc.in.w", "enc.in.b", d, h, rng);
  store.Add("enc.mask_emb", Gaussian(1, d, 1.0, rng));
  for (int l = 0; l < cfg.layers; ++l) {
    AddLayerNorm(store, LayerName(l, "ln1"), h);
    for (const char* p : {"q", "k", "v", "o"}) {
      AddLinear(store, LayerName(l, std::string("w") + p), LayerName(l, std::string("b") + p),
                h, h, rng);
    }
    AddLayerNorm(store, LayerName(l, "ln2"), h);
    AddLinear(store, LayerName(l, "ffn.w1"), LayerName(l, "ffn.b1"), h, f, rng);
    AddLinear(store, LayerName(l, "ffn.w2"), LayerName(l, "ffn.b2"), f, h, rng);
  }
  AddLayerNorm(store, "enc.final_ln", h);
  store.Add("head.u", Gaussian(cfg.codebook_size, h, 1.0 / std::sqrt(static_cast<double>(h)), rng));
}

Matrix SinusoidalPositions(Index length, Index dim) {
  Matrix pe(length, dim);
  for (Index t = 0; t < length; ++t) {
    for (Index i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
      pe(t, i) = (i % 2 == 0) ? std::sin(t * rate) : std::cos(t * rate);
    }
  }
  return pe;
}

Matrix AttentionBias(Index length, bool causal, Index valid_length) {
  const bool padded = valid_length >= 0 && valid_length < length;
  if (!causal && !padded) return Matrix();
  const double neg_inf = -std::numeric_limits<double>::infinity();
  Matrix bias = Matrix::Zero(length, length);
  for (Index i = 0; i < length; ++i) {
    for (Index j = 0; j < length; ++j) {
      if ((causal && j > i) || (padded && j >= valid_length)) bias(i, j) = neg_inf;
    }
  }
  return bias;
}

EncoderOutput Encode(const EncoderConfig& cfg, const BoundParams& p,
                     const Var& input, const EncodeOptions& opt) {
  cfg.Validate();
  if (input.cols() != cfg.input_dim) {
    throw std::invalid_argument("encoder input dim " + std::to_string(input.cols()) +
                                " vs configured " + std::to_string(cfg.input_dim));
  }
  Tape& tape = input.tape();
  const Index t_len = input.rows();
  Var x = opt.masked.empty() ? input : ReplaceRows(input, opt.masked, p["enc.mask_emb"]);
  x = Linear(x, p["enc.in.w"], p["enc.in.b"]);
  x = x + tape.Constant(SinusoidalPositions(t_len, cfg.model_dim));

  EncoderOutput out;
  out.layers.push_back(x);
  const Matrix bias = AttentionBias(t_len, cfg.causal, opt.valid_length);
  const int stop = opt.stop_layer >= 0 ? std::min(opt.stop_layer, cfg.layers) : cfg.layers;
  for (int l = 0; l < stop; ++l) {
    auto w = [&](const std::string& leaf) -> const Var& { return p[LayerName(l, leaf)]; };
    const Var a = LayerNorm(x, w("ln1.g"), w("ln1.b"));
    const Var att = MultiHeadAttention(Linear(a, w("wq"), w("bq")), Linear(a, w("wk"), w("bk")),
                                       Linear(a, w("wv"), w("bv")), cfg.heads, bias);
    x = x + Dropout(Linear(att, w("wo"), w("bo")), cfg.dropout, opt);
    const Var b = LayerNorm(x, w("ln2.g"), w("ln2.b"));
    Var f = Dropout(Gelu(Linear(b, w("ffn.w1"), w("ffn.b1"))), cfg.dropout, opt);
    x = x + Dropout(Linear(f, w("ffn.w2"), w("ffn.b2")), cfg.dropout, opt);
    out.layers.push_back(x);
  }
  if (stop == cfg.layers) {
    out.layers.back() = LayerNorm(x, p["enc.final_ln.g"], p["enc.final_ln.b"]);
  }
  return out;
}

Var PredictorLogits(const Var& hidden, const Var& head) {
  if (hidden.cols() != head.cols()) {
    throw std::invalid_argument("predictor head expects hidden size " +
                                std::to_string(head.cols()));
  }
  return MatMulNT(hidden, head);
}

}  // namespace vpc

// core/include/vpc/encoder/encoder.h

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

// Pre-LN Transformer encoder with sinusoidal absolute positions, a learned
// mask embedding in input space and a linear predictor head.
//
// Parameter names (all in one ParameterStore):
//   enc.in.w [d x h], enc.in.b [1 x h], enc.mask_emb [1 x d]
//   enc.l<i>.{ln1,ln2}.{g,b}, enc.l<i>.{wq,wk,wv,wo} [h x h] + .b<q,k,v,o>,
//   enc.l<i>.ffn.w1 [h x f], .b1, enc.l<i>.ffn.w2 [f x h], .b2
//   enc.final_ln.{g,b}, head.u [K x h]

#ifndef VPC_ENCODER_ENCODER_H_
#define VPC_ENCODER_ENCODER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpc/features/frames.h"
#include "vpc/numerics/parameters.h"
#include "vpc/numerics/rng.h"

namespace vpc {

using num::BoundParams;
using num::ParameterStore;
using num::Tape;
using num::Var;

struct EncoderConfig {
  int input_dim = 8;
  int layers = 2;
  int model_dim = 64;
  int heads = 4;
  int ffn_dim = 256;
  double dropout = 0.1;
  bool causal = false;
  int codebook_size = 100;

  void Validate() const;
  nlohmann::json ToJson() const;
  static EncoderConfig FromJson(const nlohmann::json& j);
};

// Registers encoder and head parameters in `store`.
void InitEncoderParams(const EncoderConfig& cfg, std::uint64_t seed,
                       ParameterStore& store);

struct EncodeOptions {
  // Input frames replaced by the mask embedding.
  std::span<const Index> masked;
  // Dropout is applied only when `train` is set and `dropout_rng` is given.
  bool train = false;
  Rng* dropout_rng = nullptr;
  // Frames at or beyond this index are padding and hidden from attention;
  // negative means no padding.
  Index valid_length = -1;
  // Stop after this many blocks (layers() returns entries 0..stop_layer).
  int stop_layer = -1;
};

struct EncoderOutput {
  // layers[0]: input projection plus positions; layers[l]: output of block l;
  // the last entry is the final layer-norm output.
  std::vector<Var> layers;
  const Var& final() const { return layers.back(); }
};

EncoderOutput Encode(const EncoderConfig& cfg, const BoundParams& params,
                     const Var& input, const EncodeOptions& options = {});

// logits = hidden * U^T (T x K).
Var PredictorLogits(const Var& hidden, const Var& head);

Matrix SinusoidalPositions(Index length, Index dim);

// Full-sequence attention bias (0 or -inf) for causal and padding masks;
// empty when neither applies.
Matrix AttentionBias(Index length, bool causal, Index valid_length);

}  // namespace vpc

#endif  // VPC_ENCODER_ENCODER_H_

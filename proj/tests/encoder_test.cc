// tests/encoder_test.cc

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

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"
#include "vpc/encoder/encoder.h"

namespace vpc {
namespace {

using vpc::testing::RandomMatrix;

EncoderConfig SmallConfig(bool causal) {
  EncoderConfig cfg;
  cfg.input_dim = 3;
  cfg.layers = 2;
  cfg.model_dim = 8;
  cfg.heads = 2;
  cfg.ffn_dim = 16;
  cfg.dropout = 0.2;
  cfg.causal = causal;
  cfg.codebook_size = 4;
  return cfg;
}

Matrix Encode1(const EncoderConfig& cfg, ParameterStore& store, const Matrix& x,
           const EncodeOptions& opt = {}) {
  Tape tape;
  const BoundParams p(tape, store);
  return Encode(cfg, p, tape.Constant(x), opt).final().value();
}

TEST(EncoderConfigTest, ValidateAndJson) {
  EncoderConfig cfg = SmallConfig(true);
  EXPECT_NO_THROW(cfg.Validate());
  const EncoderConfig back = EncoderConfig::FromJson(cfg.ToJson());
  EXPECT_EQ(back.ToJson(), cfg.ToJson());
  cfg.heads = 3;
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
  cfg = SmallConfig(false);
  cfg.dropout = 1.0;
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
}

TEST(EncoderTest, ParameterShapes) {
  const EncoderConfig cfg = SmallConfig(false);
  ParameterStore store;
  InitEncoderParams(cfg, 1, store);
  EXPECT_EQ(store.Get("enc.in.w").value.rows(), 3);
  EXPECT_EQ(store.Get("enc.in.w").value.cols(), 8);
  EXPECT_EQ(store.Get("enc.mask_emb").value.cols(), 3);
  EXPECT_EQ(store.Get("enc.l1.ffn.w1").value.cols(), 16);
  EXPECT_EQ(store.Get("head.u").value.rows(), 4);
  EXPECT_FALSE(store.Contains("enc.l2.wq"));
}

TEST(EncoderTest, LayerZeroIsProjectionPlusPositions) {
  const EncoderConfig cfg = SmallConfig(false);
  ParameterStore store;
  InitEncoderParams(cfg, 2, store);
  Rng rng(3);
  const Matrix x = RandomMatrix(7, 3, rng);
  const std::vector<Index> masked = {2, 5};
  Tape tape;
  const BoundParams p(tape, store);
  EncodeOptions opt;
  opt.masked = masked;
  const EncoderOutput out = Encode(cfg, p, tape.Constant(x), opt);
  ASSERT_EQ(out.layers.size(), 3u);
  Matrix in = x;
  for (Index i : masked) in.row(i) = store.Get("enc.mask_emb").value;
  Matrix want = in * store.Get("enc.in.w").value;
  want.rowwise() += store.Get("enc.in.b").value.row(0);
  want += SinusoidalPositions(7, 8);
  EXPECT_LT((out.layers[0].value() - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EncoderTest, SinusoidalPositionsFormula) {
  const Matrix pe = SinusoidalPositions(5, 6);
  for (Index t = 0; t < 5; ++t) {
    for (Index i = 0; i < 3; ++i) {
      const double angle = t / std::pow(10000.0, 2.0 * i / 6.0);
      EXPECT_NEAR(pe(t, 2 * i), std::sin(angle), 1e-12);
      EXPECT_NEAR(pe(t, 2 * i + 1), std::cos(angle), 1e-12);
    }
  }
}

TEST(EncoderTest, AttentionBiasMasks) {
  EXPECT_EQ(AttentionBias(4, false, -1).size(), 0);
  const Matrix c = AttentionBias(4, true, -1);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(c(1, 0), 0.0);
  EXPECT_EQ(c(1, 2), -inf);
  const Matrix pad = AttentionBias(4, false, 3);
  EXPECT_EQ(pad(0, 3), -inf);
  EXPECT_EQ(pad(0, 2), 0.0);
}

TEST(EncoderTest, CausalOutputsIgnoreFutureInputs) {
  const EncoderConfig cfg = SmallConfig(true);
  ParameterStore store;
  InitEncoderParams(cfg, 4, store);
  Rng rng(5);
  const Index len = 9;
  const Matrix x = RandomMatrix(len, 3, rng);
  for (Index t = 0; t < len; ++t) {
    Tape tape;
    const BoundParams p(tape, store);
    const Var in = tape.Leaf(x);
    const std::vector<Index> row = {t};
    const Var out = Encode(cfg, p, in).final();
    // A plain sum of a layer-norm row has zero gradient, so weight it.
    const Var w = tape.Constant(RandomMatrix(1, cfg.model_dim, rng));
    tape.Backward(num::Sum(num::Mul(num::GatherRows(out, row), w)));
    const Matrix g = in.grad();
    for (Index u = 0; u < len; ++u) {
      if (u > t) {
        EXPECT_EQ(g.row(u).cwiseAbs().maxCoeff(), 0.0) << t << " <- " << u;
      } else if (u == t) {
        EXPECT_GT(g.row(u).cwiseAbs().maxCoeff(), 0.0);
      }
    }
  }
  Matrix y = x;
  y.bottomRows(3).setConstant(4.0);
  const Matrix a = Encode1(cfg, store, x), b = Encode1(cfg, store, y);
  EXPECT_LT((a.topRows(len - 3) - b.topRows(len - 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EncoderTest, BidirectionalOutputsSeeFutureInputs) {
  const EncoderConfig cfg = SmallConfig(false);
  ParameterStore store;
  InitEncoderParams(cfg, 6, store);
  Rng rng(7);
  Tape tape;
  const BoundParams p(tape, store);
  const Var in = tape.Leaf(RandomMatrix(6, 3, rng));
  const std::vector<Index> row = {0};
  const Var w = tape.Constant(RandomMatrix(1, cfg.model_dim, rng));
  tape.Backward(num::Sum(num::Mul(num::GatherRows(Encode(cfg, p, in).final(), row), w)));
  EXPECT_GT(in.grad().row(5).cwiseAbs().maxCoeff(), 0.0);
}

TEST(EncoderTest, PaddingIsInvisible) {
  const EncoderConfig cfg = SmallConfig(false);
  ParameterStore store;
  InitEncoderParams(cfg, 8, store);
  Rng rng(9);
  const Matrix x = RandomMatrix(5, 3, rng);
  Matrix padded = Matrix::Zero(8, 3);
  padded.topRows(5) = x;
  padded.bottomRows(3).setConstant(9.0);
  EncodeOptions opt;
  opt.valid_length = 5;
  const Matrix a = Encode1(cfg, store, x);
  const Matrix b = Encode1(cfg, store, padded, opt);
  EXPECT_LT((a - b.topRows(5)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EncoderTest, DeterministicAndDropoutOnlyInTraining) {
  const EncoderConfig cfg = SmallConfig(false);
  ParameterStore s1, s2;
  InitEncoderParams(cfg, 10, s1);
  InitEncoderParams(cfg, 10, s2);
  EXPECT_TRUE(s1.SameValues(s2));
  Rng rng(11);
  const Matrix x = RandomMatrix(6, 3, rng);
  EXPECT_EQ(Encode1(cfg, s1, x), Encode1(cfg, s2, x));

  Rng r1(12), r2(12), r3(13);
  EncodeOptions train;
  train.train = true;
  train.dropout_rng = &r1;
  const Matrix d1 = Encode1(cfg, s1, x, train);
  train.dropout_rng = &r2;
  EXPECT_EQ(d1, Encode1(cfg, s1, x, train));
  train.dropout_rng = &r3;
  EXPECT_NE(d1, Encode1(cfg, s1, x, train));
  EncodeOptions eval;
  eval.dropout_rng = &r3;
  EXPECT_EQ(Encode1(cfg, s1, x, eval), Encode1(cfg, s1, x));
}

TEST(EncoderTest, StopLayerTruncates) {
  const EncoderConfig cfg = SmallConfig(false);
  ParameterStore store;
  InitEncoderParams(cfg, 14, store);
  Rng rng(15);
  Tape tape;
  const BoundParams p(tape, store);
  const Var in = tape.Constant(RandomMatrix(4, 3, rng));
  EncodeOptions opt;
  opt.stop_layer = 1;
  const EncoderOutput part = Encode(cfg, p, in, opt);
  const EncoderOutput full = Encode(cfg, p, in);
  ASSERT_EQ(part.layers.size(), 2u);
  EXPECT_EQ(part.layers[1].value(), full.layers[1].value());
  EXPECT_THROW(Encode(cfg, p, tape.Constant(Matrix::Zero(4, 2))), std::invalid_argument);
}

TEST(EncoderTest, PredictorLogitsAreDotProducts) {
  Rng rng(16);
  Tape tape;
  const Matrix h = RandomMatrix(3, 4, rng), u = RandomMatrix(5, 4, rng);
  const Var logits = PredictorLogits(tape.Constant(h), tape.Constant(u));
  EXPECT_LT((logits.value() - h * u.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace vpc

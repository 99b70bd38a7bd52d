// core/src/numerics/ops.cc

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

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>

#include "vpc/numerics/tape.h"

namespace vpc::num {

namespace {

void RequireSameTape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) {
    throw std::invalid_argument("ops mix nodes from different tapes");
  }
}

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  RequireSameTape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

void RequireRow(const Var& a, const Var& row, const char* op) {
  RequireSameTape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument(std::string(op) + ": expected a 1x" +
                                std::to_string(a.cols()) + " row");
  }
}

Matrix SoftmaxRowsValue(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    const double m = a.row(i).maxCoeff();
    if (!std::isfinite(m)) {
      // Fully masked row (all -inf).
      out.row(i).setZero();
      continue;
    }
    // Vectorized exp clamps its argument, so -inf entries are zeroed here.
    out.row(i) = (a.row(i).array() == -std::numeric_limits<double>::infinity())
                     .select(0.0, (a.row(i).array() - m).exp());
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

}  // namespace

double LogSumExp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

Matrix SquaredDistanceMatrix(const Matrix& x, const Matrix& v) {
  Matrix out(x.rows(), v.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index k = 0; k < v.rows(); ++k) {
      out(i, k) = (x.row(i) - v.row(k)).squaredNorm();
    }
  }
  return out;
}

Matrix LogSoftmaxRowsValue(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    const double m = a.row(i).maxCoeff();
    const double lse = m + std::log((a.row(i).array() - m).exp().sum());
    out.row(i) = a.row(i).array() - lse;
  }
  return out;
}

Var MatMul(const Var& a, const Var& b) {
  RequireSameTape(a, b);
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("MatMul: inner dimensions differ");
  }
  Matrix out;
  out.noalias() = a.value() * b.value();
  const auto ia = a.id(), ib = b.id();
  return a.tape().Push(std::move(out), a.requires_grad() || b.requires_grad(),
                       [ia, ib](Tape& t, const Matrix& g) {
                         if (t.RequiresGrad(ia)) {
                           Matrix ga;
                           ga.noalias() = g * t.ValueOf(ib).transpose();
                           t.Accumulate(ia, ga);
                         }
                         if (t.RequiresGrad(ib)) {
                           Matrix gb;
                           gb.noalias() = t.ValueOf(ia).transpose() * g;
                           t.Accumulate(ib, gb);
                         }
                       });
}

Var MatMulNT(const Var& a, const Var& b) {
  RequireSameTape(a, b);
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("MatMulNT: inner dimensions differ");
  }
  Matrix out;
  out.noalias() = a.value() * b.value().transpose();
  const auto ia = a.id(), ib = b.id();
  return a.tape().Push(std::move(out), a.requires_grad() || b.requires_grad(),
                       [ia, ib](Tape& t, const Matrix& g) {
                         if (t.RequiresGrad(ia)) {
                           Matrix ga;
                           ga.noalias() = g * t.ValueOf(ib);
                           t.Accumulate(ia, ga);
                         }
                         if (t.RequiresGrad(ib)) {
                           Matrix gb;
                           gb.noalias() = g.transpose() * t.ValueOf(ia);
                           t.Accumulate(ib, gb);
                         }
                       });
}

Var Add(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Add");
  const auto ia = a.id(), ib = b.id();
  return a.tape().Push(a.value() + b.value(),
                       a.requires_grad() || b.requires_grad(),
                       [ia, ib](Tape& t, const Matrix& g) {
                         t.Accumulate(ia, g);
                         t.Accumulate(ib, g);
                       });
}

Var Sub(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Sub");
  const auto ia = a.id(), ib = b.id();
  return a.tape().Push(a.value() - b.value(),
                       a.requires_grad() || b.requires_grad(),
                       [ia, ib](Tape& t, const Matrix& g) {
                         t.Accumulate(ia, g);
                         t.AccumulateExpr(ib, -g);
                       });
}

Var Mul(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Mul");
  const auto ia = a.id(), ib = b.id();
  return a.tape().Push(
      a.value().cwiseProduct(b.value()), a.requires_grad() || b.requires_grad(),
      [ia, ib](Tape& t, const Matrix& g) {
        if (t.RequiresGrad(ia)) t.AccumulateExpr(ia, g.cwiseProduct(t.ValueOf(ib)));
        if (t.RequiresGrad(ib)) t.AccumulateExpr(ib, g.cwiseProduct(t.ValueOf(ia)));
      });
}

Var Scale(const Var& a, double s) {
  const auto ia = a.id();
  return a.tape().Push(a.value() * s, a.requires_grad(),
                       [ia, s](Tape& t, const Matrix& g) {
                         t.AccumulateExpr(ia, g * s);
                       });
}

Var AddScalar(const Var& a, double s) {
  const auto ia = a.id();
  return a.tape().Push((a.value().array() + s).matrix(), a.requires_grad(),
                       [ia](Tape& t, const Matrix& g) { t.Accumulate(ia, g); });
}

Var AddRow(const Var& a, const Var& row) {
  RequireRow(a, row, "AddRow");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  const auto ia = a.id(), ir = row.id();
  return a.tape().Push(std::move(out), a.requires_grad() || row.requires_grad(),
                       [ia, ir](Tape& t, const Matrix& g) {
                         t.Accumulate(ia, g);
                         if (t.RequiresGrad(ir)) {
                           t.AccumulateExpr(ir, g.colwise().sum());
                         }
                       });
}

Var MulRow(const Var& a, const Var& row) {
  RequireRow(a, row, "MulRow");
  Matrix out = a.value();
  out.array().rowwise() *= row.value().row(0).array();
  const auto ia = a.id(), ir = row.id();
  return a.tape().Push(
      std::move(out), a.requires_grad() || row.requires_grad(),
      [ia, ir](Tape& t, const Matrix& g) {
        if (t.RequiresGrad(ia)) {
          Matrix ga = g;
          ga.array().rowwise() *= t.ValueOf(ir).row(0).array();
          t.Accumulate(ia, ga);
        }
        if (t.RequiresGrad(ir)) {
          t.AccumulateExpr(ir, g.cwiseProduct(t.ValueOf(ia)).colwise().sum());
        }
      });
}

Var MulConst(const Var& a, const Matrix& mask) {
  if (mask.rows() != a.rows() || mask.cols() != a.cols()) {
    throw std::invalid_argument("MulConst: shape mismatch");
  }
  const auto ia = a.id();
  auto m = std::make_shared<Matrix>(mask);
  return a.tape().Push(a.value().cwiseProduct(mask), a.requires_grad(),
                       [ia, m](Tape& t, const Matrix& g) {
                         t.AccumulateExpr(ia, g.cwiseProduct(*m));
                       });
}

Var Exp(const Var& a) {
  const auto ia = a.id();
  auto out = std::make_shared<Matrix>(a.value().array().exp().matrix());
  return a.tape().Push(*out, a.requires_grad(),
                       [ia, out](Tape& t, const Matrix& g) {
                         t.AccumulateExpr(ia, g.cwiseProduct(*out));
                       });
}

Var Log(const Var& a) {
  const auto ia = a.id();
  return a.tape().Push(a.value().array().log().matrix(), a.requires_grad(),
                       [ia](Tape& t, const Matrix& g) {
                         t.AccumulateExpr(ia, g.cwiseQuotient(t.ValueOf(ia)));
                       });
}

Var Gelu(const Var& a) {
  const auto ia = a.id();
  const Matrix& x = a.value();
  Matrix out = x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  });
  return a.tape().Push(std::move(out), a.requires_grad(),
                       [ia](Tape& t, const Matrix& g) {
                         const Matrix& x = t.ValueOf(ia);
                         Matrix d = x.unaryExpr([](double v) {
                           const double th =
                               std::tanh(kGeluC * (v + kGeluA * v * v * v));
                           return 0.5 * (1.0 + th) +
                                  0.5 * v * (1.0 - th * th) * kGeluC *
                                      (1.0 + 3.0 * kGeluA * v * v);
                         });
                         t.AccumulateExpr(ia, g.cwiseProduct(d));
                       });
}

Var LayerNorm(const Var& x, const Var& gain, const Var& bias, double eps) {
  RequireRow(x, gain, "LayerNorm gain");
  RequireRow(x, bias, "LayerNorm bias");
  const Matrix& xv = x.value();
  const Index n = xv.rows(), d = xv.cols();
  auto xhat = std::make_shared<Matrix>(n, d);
  auto inv_std = std::make_shared<Eigen::VectorXd>(n);
  for (Index i = 0; i < n; ++i) {
    const double mu = xv.row(i).mean();
    const double var = (xv.row(i).array() - mu).square().mean();
    (*inv_std)(i) = 1.0 / std::sqrt(var + eps);
    xhat->row(i) = (xv.row(i).array() - mu) * (*inv_std)(i);
  }
  Matrix out = *xhat;
  out.array().rowwise() *= gain.value().row(0).array();
  out.rowwise() += bias.value().row(0);
  const auto ix = x.id(), ig = gain.id(), ib = bias.id();
  const bool rg =
      x.requires_grad() || gain.requires_grad() || bias.requires_grad();
  return x.tape().Push(
      std::move(out), rg, [ix, ig, ib, xhat, inv_std](Tape& t, const Matrix& g) {
        if (t.RequiresGrad(ig)) {
          t.AccumulateExpr(ig, g.cwiseProduct(*xhat).colwise().sum());
        }
        if (t.RequiresGrad(ib)) t.AccumulateExpr(ib, g.colwise().sum());
        if (t.RequiresGrad(ix)) {
          Matrix dxhat = g;
          dxhat.array().rowwise() *= t.ValueOf(ig).row(0).array();
          Matrix dx(g.rows(), g.cols());
          for (Index i = 0; i < g.rows(); ++i) {
            const double m1 = dxhat.row(i).mean();
            const double m2 = dxhat.row(i).dot(xhat->row(i)) /
                              static_cast<double>(g.cols());
            dx.row(i) = (dxhat.row(i).array() - m1 - xhat->row(i).array() * m2) *
                        (*inv_std)(i);
          }
          t.Accumulate(ix, dx);
        }
      });
}

Var SoftmaxRows(const Var& a) {
  const auto ia = a.id();
  auto s = std::make_shared<Matrix>(SoftmaxRowsValue(a.value()));
  return a.tape().Push(*s, a.requires_grad(), [ia, s](Tape& t, const Matrix& g) {
    const Eigen::VectorXd dots = g.cwiseProduct(*s).rowwise().sum();
    Matrix d = g;
    d.colwise() -= dots;
    t.AccumulateExpr(ia, d.cwiseProduct(*s));
  });
}

Var LogSoftmaxRows(const Var& a) {
  const auto ia = a.id();
  Matrix out = LogSoftmaxRowsValue(a.value());
  auto soft = std::make_shared<Matrix>(out.array().exp().matrix());
  return a.tape().Push(std::move(out), a.requires_grad(),
                       [ia, soft](Tape& t, const Matrix& g) {
                         const Eigen::VectorXd sums = g.rowwise().sum();
                         Matrix d = *soft;
                         d.array().colwise() *= sums.array();
                         t.AccumulateExpr(ia, g - d);
                       });
}

Var MultiHeadAttention(const Var& q, const Var& k, const Var& v, int heads,
                       const Matrix& bias) {
  RequireSameShape(q, k, "MultiHeadAttention q/k");
  RequireSameShape(q, v, "MultiHeadAttention q/v");
  const Index n = q.rows(), d = q.cols();
  if (heads <= 0 || d % heads != 0) {
    throw std::invalid_argument("MultiHeadAttention: heads must divide dim");
  }
  if (bias.size() != 0 && (bias.rows() != n || bias.cols() != n)) {
    throw std::invalid_argument("MultiHeadAttention: bias must be TxT");
  }
  const Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  auto probs = std::make_shared<std::vector<Matrix>>(heads);
  Matrix out(n, d);
  for (int h = 0; h < heads; ++h) {
    const auto qh = q.value().middleCols(h * dh, dh);
    const auto kh = k.value().middleCols(h * dh, dh);
    const auto vh = v.value().middleCols(h * dh, dh);
    Matrix scores;
    scores.noalias() = qh * kh.transpose();
    scores *= scale;
    if (bias.size() != 0) scores += bias;
    (*probs)[h] = SoftmaxRowsValue(scores);
    out.middleCols(h * dh, dh).noalias() = (*probs)[h] * vh;
  }
  const auto iq = q.id(), ik = k.id(), iv = v.id();
  const bool rg = q.requires_grad() || k.requires_grad() || v.requires_grad();
  return q.tape().Push(
      std::move(out), rg,
      [iq, ik, iv, heads, dh, scale, probs](Tape& t, const Matrix& g) {
        const Matrix& qv = t.ValueOf(iq);
        const Matrix& kv = t.ValueOf(ik);
        const Matrix& vv = t.ValueOf(iv);
        Matrix gq = Matrix::Zero(qv.rows(), qv.cols());
        Matrix gk = Matrix::Zero(kv.rows(), kv.cols());
        Matrix gv = Matrix::Zero(vv.rows(), vv.cols());
        for (int h = 0; h < heads; ++h) {
          const Matrix& p = (*probs)[h];
          const auto gh = g.middleCols(h * dh, dh);
          gv.middleCols(h * dh, dh).noalias() = p.transpose() * gh;
          Matrix dp;
          dp.noalias() = gh * vv.middleCols(h * dh, dh).transpose();
          const Eigen::VectorXd dots = dp.cwiseProduct(p).rowwise().sum();
          dp.colwise() -= dots;
          Matrix ds = dp.cwiseProduct(p);
          ds *= scale;
          gq.middleCols(h * dh, dh).noalias() = ds * kv.middleCols(h * dh, dh);
          gk.middleCols(h * dh, dh).noalias() =
              ds.transpose() * qv.middleCols(h * dh, dh);
        }
        t.Accumulate(iq, gq);
        t.Accumulate(ik, gk);
        t.Accumulate(iv, gv);
      });
}

Var Sum(const Var& a) {
  const auto ia = a.id();
  const Index r = a.rows(), c = a.cols();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().Push(std::move(out), a.requires_grad(),
                       [ia, r, c](Tape& t, const Matrix& g) {
                         t.AccumulateExpr(ia, Matrix::Constant(r, c, g(0, 0)));
                       });
}

Var Mean(const Var& a) {
  if (a.value().size() == 0) throw std::invalid_argument("Mean of empty node");
  const double n = static_cast<double>(a.value().size());
  const auto ia = a.id();
  const Index r = a.rows(), c = a.cols();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum() / n;
  return a.tape().Push(std::move(out), a.requires_grad(),
                       [ia, r, c, n](Tape& t, const Matrix& g) {
                         t.AccumulateExpr(ia,
                                          Matrix::Constant(r, c, g(0, 0) / n));
                       });
}

Var SumRows(const Var& a) {
  const auto ia = a.id();
  const Index c = a.cols();
  Matrix out = a.value().rowwise().sum();
  return a.tape().Push(std::move(out), a.requires_grad(),
                       [ia, c](Tape& t, const Matrix& g) {
                         t.AccumulateExpr(ia, g.replicate(1, c));
                       });
}

Var MeanRows(const Var& a) {
  if (a.rows() == 0) throw std::invalid_argument("MeanRows of empty node");
  const auto ia = a.id();
  const Index r = a.rows();
  Matrix out = a.value().colwise().sum() / static_cast<double>(r);
  return a.tape().Push(std::move(out), a.requires_grad(),
                       [ia, r](Tape& t, const Matrix& g) {
                         t.AccumulateExpr(
                             ia, (g / static_cast<double>(r)).replicate(r, 1));
                       });
}

Var GatherRows(const Var& a, std::span<const Index> rows) {
  const Matrix& av = a.value();
  Matrix out(static_cast<Index>(rows.size()), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= av.rows()) {
      throw std::out_of_range("GatherRows: row index out of range");
    }
    out.row(static_cast<Index>(i)) = av.row(rows[i]);
  }
  const auto ia = a.id();
  const Index r = av.rows(), c = av.cols();
  auto idx = std::make_shared<std::vector<Index>>(rows.begin(), rows.end());
  return a.tape().Push(std::move(out), a.requires_grad(),
                       [ia, r, c, idx](Tape& t, const Matrix& g) {
                         Matrix ga = Matrix::Zero(r, c);
                         for (std::size_t i = 0; i < idx->size(); ++i) {
                           ga.row((*idx)[i]) += g.row(static_cast<Index>(i));
                         }
                         t.Accumulate(ia, ga);
                       });
}

Var ReplaceRows(const Var& a, std::span<const Index> rows, const Var& row) {
  RequireRow(a, row, "ReplaceRows");
  Matrix out = a.value();
  for (Index i : rows) {
    if (i < 0 || i >= out.rows()) {
      throw std::out_of_range("ReplaceRows: row index out of range");
    }
    out.row(i) = row.value().row(0);
  }
  const auto ia = a.id(), ir = row.id();
  auto idx = std::make_shared<std::vector<Index>>(rows.begin(), rows.end());
  return a.tape().Push(std::move(out), a.requires_grad() || row.requires_grad(),
                       [ia, ir, idx](Tape& t, const Matrix& g) {
                         if (t.RequiresGrad(ia)) {
                           Matrix ga = g;
                           for (Index i : *idx) ga.row(i).setZero();
                           t.Accumulate(ia, ga);
                         }
                         if (t.RequiresGrad(ir)) {
                           Matrix gr = Matrix::Zero(1, g.cols());
                           // Each replaced row counts once even if listed twice.
                           std::vector<Index> uniq(*idx);
                           std::sort(uniq.begin(), uniq.end());
                           uniq.erase(std::unique(uniq.begin(), uniq.end()),
                                      uniq.end());
                           for (Index i : uniq) gr.row(0) += g.row(i);
                           t.Accumulate(ir, gr);
                         }
                       });
}

Var Cols(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::out_of_range("Cols: column range out of bounds");
  }
  const auto ia = a.id();
  const Index r = a.rows(), c = a.cols();
  Matrix out = a.value().middleCols(start, count);
  return a.tape().Push(std::move(out), a.requires_grad(),
                       [ia, r, c, start, count](Tape& t, const Matrix& g) {
                         Matrix ga = Matrix::Zero(r, c);
                         ga.middleCols(start, count) = g;
                         t.Accumulate(ia, ga);
                       });
}

Var HConcat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("HConcat of nothing");
  const Index r = parts[0].rows();
  Index c = 0;
  bool rg = false;
  for (const Var& p : parts) {
    RequireSameTape(parts[0], p);
    if (p.rows() != r) throw std::invalid_argument("HConcat: row mismatch");
    c += p.cols();
    rg = rg || p.requires_grad();
  }
  Matrix out(r, c);
  std::vector<std::pair<std::size_t, Index>> spans;
  Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    spans.emplace_back(p.id(), p.cols());
    at += p.cols();
  }
  return parts[0].tape().Push(std::move(out), rg,
                              [spans](Tape& t, const Matrix& g) {
                                Index at = 0;
                                for (const auto& [id, w] : spans) {
                                  if (t.RequiresGrad(id)) {
                                    t.AccumulateExpr(id, g.middleCols(at, w));
                                  }
                                  at += w;
                                }
                              });
}

Var VConcat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("VConcat of nothing");
  const Index c = parts[0].cols();
  Index r = 0;
  bool rg = false;
  for (const Var& p : parts) {
    RequireSameTape(parts[0], p);
    if (p.cols() != c) throw std::invalid_argument("VConcat: column mismatch");
    r += p.rows();
    rg = rg || p.requires_grad();
  }
  Matrix out(r, c);
  std::vector<std::pair<std::size_t, Index>> spans;
  Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    spans.emplace_back(p.id(), p.rows());
    at += p.rows();
  }
  return parts[0].tape().Push(std::move(out), rg,
                              [spans](Tape& t, const Matrix& g) {
                                Index at = 0;
                                for (const auto& [id, h] : spans) {
                                  if (t.RequiresGrad(id)) {
                                    t.AccumulateExpr(id, g.middleRows(at, h));
                                  }
                                  at += h;
                                }
                              });
}

Var PickCols(const Var& a, std::span<const Index> cols) {
  if (static_cast<Index>(cols.size()) != a.rows()) {
    throw std::invalid_argument("PickCols: one column index per row");
  }
  Matrix out(a.rows(), 1);
  for (Index i = 0; i < a.rows(); ++i) {
    if (cols[i] < 0 || cols[i] >= a.cols()) {
      throw std::out_of_range("PickCols: column index out of range");
    }
    out(i, 0) = a.value()(i, cols[i]);
  }
  const auto ia = a.id();
  const Index r = a.rows(), c = a.cols();
  auto idx = std::make_shared<std::vector<Index>>(cols.begin(), cols.end());
  return a.tape().Push(std::move(out), a.requires_grad(),
                       [ia, r, c, idx](Tape& t, const Matrix& g) {
                         Matrix ga = Matrix::Zero(r, c);
                         for (Index i = 0; i < r; ++i) ga(i, (*idx)[i]) = g(i, 0);
                         t.Accumulate(ia, ga);
                       });
}

Var GatherCols(const Var& a, const IndexMatrix& cols) {
  if (cols.rows() != a.rows()) {
    throw std::invalid_argument("GatherCols: one index row per input row");
  }
  const Matrix& av = a.value();
  Matrix out(cols.rows(), cols.cols());
  for (Index i = 0; i < cols.rows(); ++i) {
    for (Index j = 0; j < cols.cols(); ++j) {
      if (cols(i, j) < 0 || cols(i, j) >= av.cols()) {
        throw std::out_of_range("GatherCols: column index out of range");
      }
      out(i, j) = av(i, cols(i, j));
    }
  }
  const auto ia = a.id();
  const Index r = a.rows(), c = a.cols();
  auto idx = std::make_shared<std::decay_t<decltype(cols)>>(cols);
  return a.tape().Push(std::move(out), a.requires_grad(),
                       [ia, r, c, idx](Tape& t, const Matrix& g) {
                         Matrix ga = Matrix::Zero(r, c);
                         for (Index i = 0; i < idx->rows(); ++i) {
                           for (Index j = 0; j < idx->cols(); ++j) ga(i, (*idx)(i, j)) += g(i, j);
                         }
                         t.Accumulate(ia, ga);
                       });
}

Var SquaredDistances(const Var& x, const Var& v) {
  RequireSameTape(x, v);
  if (x.cols() != v.cols()) {
    throw std::invalid_argument("SquaredDistances: dimension mismatch (" +
                                std::to_string(x.cols()) + " vs " +
                                std::to_string(v.cols()) + ")");
  }
  Matrix out = SquaredDistanceMatrix(x.value(), v.value());
  const auto ix = x.id(), iv = v.id();
  return x.tape().Push(
      std::move(out), x.requires_grad() || v.requires_grad(),
      [ix, iv](Tape& t, const Matrix& g) {
        const Matrix& xv = t.ValueOf(ix);
        const Matrix& vv = t.ValueOf(iv);
        // sum_k g_ik (x_i - v_k) = x_i * rowsum(g) - (g V)_i
        if (t.RequiresGrad(ix)) {
          Matrix gx = xv;
          gx.array().colwise() *= g.rowwise().sum().array();
          gx.noalias() -= g * vv;
          t.AccumulateExpr(ix, 2.0 * gx);
        }
        if (t.RequiresGrad(iv)) {
          Matrix gv = vv;
          gv.array().colwise() *= g.colwise().sum().transpose().array();
          gv.noalias() -= g.transpose() * xv;
          t.AccumulateExpr(iv, 2.0 * gv);
        }
      });
}

Var L2NormalizeRows(const Var& a, double eps) {
  const Matrix& av = a.value();
  auto norms = std::make_shared<Eigen::VectorXd>(av.rows());
  Matrix out(av.rows(), av.cols());
  for (Index i = 0; i < av.rows(); ++i) {
    (*norms)(i) = std::max(av.row(i).norm(), eps);
    out.row(i) = av.row(i) / (*norms)(i);
  }
  const auto ia = a.id();
  auto y = std::make_shared<Matrix>(out);
  return a.tape().Push(std::move(out), a.requires_grad(),
                       [ia, y, norms](Tape& t, const Matrix& g) {
                         Matrix ga(g.rows(), g.cols());
                         for (Index i = 0; i < g.rows(); ++i) {
                           const double dot = y->row(i).dot(g.row(i));
                           ga.row(i) = (g.row(i) - y->row(i) * dot) / (*norms)(i);
                         }
                         t.Accumulate(ia, ga);
                       });
}

Var RowDot(const Var& a, const Var& b) {
  RequireSameShape(a, b, "RowDot");
  Matrix out = a.value().cwiseProduct(b.value()).rowwise().sum();
  const auto ia = a.id(), ib = b.id();
  const Index c = a.cols();
  return a.tape().Push(std::move(out), a.requires_grad() || b.requires_grad(),
                       [ia, ib, c](Tape& t, const Matrix& g) {
                         const Matrix gr = g.replicate(1, c);
                         if (t.RequiresGrad(ia)) {
                           t.AccumulateExpr(ia, gr.cwiseProduct(t.ValueOf(ib)));
                         }
                         if (t.RequiresGrad(ib)) {
                           t.AccumulateExpr(ib, gr.cwiseProduct(t.ValueOf(ia)));
                         }
                       });
}

Var StraightThrough(const Matrix& hard, const Var& soft) {
  if (hard.rows() != soft.rows() || hard.cols() != soft.cols()) {
    throw std::invalid_argument("StraightThrough: shape mismatch");
  }
  if (soft.requires_grad()) soft.tape().MarkSurrogate("straight-through estimator");
  const auto is = soft.id();
  return soft.tape().Push(hard, soft.requires_grad(),
                          [is](Tape& t, const Matrix& g) { t.Accumulate(is, g); });
}

Var StopGradient(const Var& a) { return a.tape().Constant(a.value()); }

}  // namespace vpc::num

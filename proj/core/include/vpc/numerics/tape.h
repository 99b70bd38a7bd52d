// core/include/vpc/numerics/tape.h

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

#ifndef VPC_NUMERICS_TAPE_H_
#define VPC_NUMERICS_TAPE_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vpc::num {

// All graph values are dense row-major double matrices. Vectors are 1xN or
// Nx1 matrices and scalars are 1x1.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

struct Parameter;
class Tape;

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  // Scalar value of a 1x1 node.
  double item() const;
  bool requires_grad() const;
  // Gradient after Tape::Backward; zero matrix if none reached this node.
  Matrix grad() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so walking the
// node list backwards is a valid topological order for backpropagation.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Matrix value);
  // Leaf that reads the parameter's value in place. When the parameter is
  // trainable its gradient is accumulated into Parameter::grad by Backward.
  Var Bind(Parameter& param);
  // Leaf owning its own value; used by tests and grad checks.
  Var Leaf(Matrix value, bool requires_grad = true);

  // Appends an op output. `backprop` is dropped when no input needs a grad.
  Var Push(Matrix value, bool requires_grad, Backprop backprop);

  // Accumulates into the grad of node `id`; no-op for nodes without grad.
  void Accumulate(std::size_t id, const Matrix& g);
  template <typename Derived>
  void AccumulateExpr(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  // Runs reverse-mode differentiation from a scalar loss. Throws
  // std::invalid_argument for non-scalar losses and NonFiniteError for
  // non-finite ones.
  void Backward(const Var& loss);

  const Matrix& ValueOf(std::size_t id) const;
  bool RequiresGrad(std::size_t id) const { return nodes_[id].requires_grad; }
  Matrix GradOf(std::size_t id) const;
  std::size_t size() const { return nodes_.size(); }

  // A surrogate marks a place where the backward pass is not the derivative
  // of the forward value (point-mass selection of a differentiable input,
  // straight-through estimators). Finite-difference checks skip such graphs.
  void MarkSurrogate(std::string why);
  bool has_surrogate() const { return !surrogate_reasons_.empty(); }
  const std::vector<std::string>& surrogate_reasons() const {
    return surrogate_reasons_;
  }

 private:
  struct Node {
    Matrix own;
    const Matrix* external = nullptr;
    Matrix grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
    Backprop backprop;
    const Matrix& value() const { return external ? *external : own; }
  };

  std::deque<Node> nodes_;
  std::vector<std::string> surrogate_reasons_;
};

// ---------------------------------------------------------------------------
// Differentiable ops. Shapes are checked and mismatches throw
// std::invalid_argument.

Var MatMul(const Var& a, const Var& b);    // a * b
Var MatMulNT(const Var& a, const Var& b);  // a * b^T
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);  // elementwise
Var Scale(const Var& a, double s);
Var AddScalar(const Var& a, double s);
// Adds a 1xN row to every row of a.
Var AddRow(const Var& a, const Var& row);
// Multiplies every row of a by a 1xN row.
Var MulRow(const Var& a, const Var& row);
// Multiplies by a constant mask (dropout, padding).
Var MulConst(const Var& a, const Matrix& mask);
Var Exp(const Var& a);
Var Log(const Var& a);
Var Gelu(const Var& a);  // tanh approximation

// Row-wise layer normalisation followed by gain/bias (both 1xN).
Var LayerNorm(const Var& x, const Var& gain, const Var& bias,
              double eps = 1e-5);

// Row-wise softmax / log-softmax with max subtraction.
Var SoftmaxRows(const Var& a);
Var LogSoftmaxRows(const Var& a);

// Multi-head scaled dot-product attention over TxD inputs. `bias` is a TxT
// additive matrix (0 or -inf) applied to every head; pass an empty matrix
// for full attention. A fully masked query row yields a zero output row.
Var MultiHeadAttention(const Var& q, const Var& k, const Var& v, int heads,
                       const Matrix& bias);

Var Sum(const Var& a);        // 1x1
Var Mean(const Var& a);       // 1x1
Var SumRows(const Var& a);    // Nx1, sum across columns
Var MeanRows(const Var& a);   // 1xN, mean over rows

Var GatherRows(const Var& a, std::span<const Index> rows);
// Copy of `a` with the listed rows replaced by the 1xN `row`.
Var ReplaceRows(const Var& a, std::span<const Index> rows, const Var& row);
Var Cols(const Var& a, Index start, Index count);
Var HConcat(std::span<const Var> parts);
Var VConcat(std::span<const Var> parts);
// Picks a[i, cols[i]] for every row, as an Nx1 column.
Var PickCols(const Var& a, std::span<const Index> cols);
// out[i, j] = a[i, cols[i, j]]; repeated indices accumulate in backward.
using IndexMatrix =
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
Var GatherCols(const Var& a, const IndexMatrix& cols);

// D[i,k] = ||x_i - v_k||^2, evaluated directly (no norm expansion) so
// equidistant points produce bitwise-equal distances.
Var SquaredDistances(const Var& x, const Var& v);
Var L2NormalizeRows(const Var& a, double eps = 1e-12);
// Row-wise inner products of two NxD inputs, Nx1.
Var RowDot(const Var& a, const Var& b);

// Forward value is `hard`; gradient flows to `soft` unchanged. Marks the
// tape as a surrogate when `soft` requires grad.
Var StraightThrough(const Matrix& hard, const Var& soft);
Var StopGradient(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return Add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return Sub(a, b); }
inline Var operator*(double s, const Var& a) { return Scale(a, s); }

// Plain (non-graph) numerically stable helpers shared with the objectives.
double LogSumExp(std::span<const double> xs);
Matrix LogSoftmaxRowsValue(const Matrix& a);
// Value of SquaredDistances without a tape.
Matrix SquaredDistanceMatrix(const Matrix& x, const Matrix& v);

}  // namespace vpc::num

#endif  // VPC_NUMERICS_TAPE_H_

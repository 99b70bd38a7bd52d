// core/src/numerics/tape.cc

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

#include "vpc/numerics/tape.h"

#include <cmath>
#include <utility>

#include "vpc/numerics/parameters.h"

namespace vpc::num {

const Matrix& Var::value() const { return tape_->ValueOf(id_); }

double Var::item() const {
  const Matrix& v = value();
  if (v.size() != 1) {
    throw std::invalid_argument("item() on a non-scalar node");
  }
  return v(0, 0);
}

bool Var::requires_grad() const { return tape_->RequiresGrad(id_); }

Matrix Var::grad() const { return tape_->GradOf(id_); }

Var Tape::Constant(Matrix value) {
  Node n;
  n.own = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::Bind(Parameter& param) {
  Node n;
  n.external = &param.value;
  n.requires_grad = param.trainable;
  n.param = param.trainable ? &param : nullptr;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::Leaf(Matrix value, bool requires_grad) {
  Node n;
  n.own = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::Push(Matrix value, bool requires_grad, Backprop backprop) {
  Node n;
  n.own = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::Accumulate(std::size_t id, const Matrix& g) { AccumulateExpr(id, g); }

const Matrix& Tape::ValueOf(std::size_t id) const { return nodes_[id].value(); }

Matrix Tape::GradOf(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    return Matrix::Zero(n.value().rows(), n.value().cols());
  }
  return n.grad;
}

void Tape::MarkSurrogate(std::string why) {
  for (const auto& r : surrogate_reasons_) {
    if (r == why) return;
  }
  surrogate_reasons_.push_back(std::move(why));
}

void Tape::Backward(const Var& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw std::invalid_argument("backward requires a scalar loss");
  }
  if (!std::isfinite(loss.item())) {
    throw NonFiniteError("non-finite loss in backward");
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backprop) {
      // The closure may append to other nodes' grads but never to this one.
      const Matrix g = std::move(n.grad);
      n.backprop(*this, g);
      n.grad = g;
    }
  }
  for (auto& n : nodes_) {
    if (n.param == nullptr || n.grad.size() == 0) continue;
    if (n.param->grad.rows() != n.grad.rows() ||
        n.param->grad.cols() != n.grad.cols()) {
      n.param->grad = n.grad;
    } else {
      n.param->grad += n.grad;
    }
  }
}

}  // namespace vpc::num

// core/src/numerics/parameters.cc

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

#include "vpc/numerics/parameters.h"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace vpc::num {

Parameter& ParameterStore::Add(const std::string& name, Matrix value,
                               bool trainable) {
  if (params_.count(name) != 0) {
    throw std::invalid_argument("parameter registered twice: " + name);
  }
  Parameter p;
  p.value = std::move(value);
  p.trainable = trainable;
  p.ZeroGrad();
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParameterStore::Get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter: " + name);
  return it->second;
}

const Parameter& ParameterStore::Get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter: " + name);
  return it->second;
}

bool ParameterStore::Contains(const std::string& name) const {
  return params_.count(name) != 0;
}

void ParameterStore::ZeroGrad() {
  for (auto& [name, p] : params_) p.ZeroGrad();
}

std::vector<std::string> ParameterStore::Names() const {
  std::vector<std::string> names;
  names.reserve(params_.size());
  for (const auto& [name, p] : params_) names.push_back(name);
  return names;
}

std::size_t ParameterStore::NumValues() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

bool ParameterStore::SameValues(const ParameterStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto it = other.params_.begin();
  for (const auto& [name, p] : params_) {
    const auto& [oname, op] = *it++;
    if (name != oname) return false;
    if (p.value.rows() != op.value.rows() || p.value.cols() != op.value.cols()) {
      return false;
    }
    if (p.value.size() > 0 &&
        std::memcmp(p.value.data(), op.value.data(),
                    sizeof(double) * static_cast<std::size_t>(p.value.size())) != 0) {
      return false;
    }
  }
  return true;
}

BoundParams::BoundParams(Tape& tape, ParameterStore& store) {
  for (auto& [name, p] : store) vars_.emplace(name, tape.Bind(p));
}

const Var& BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("unbound parameter: " + name);
  return it->second;
}

void Adam::Step(ParameterStore& params) {
  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      continue;  // never touched by a backward pass
    }
    Matrix& m = m_[name];
    Matrix& v = v_[name];
    if (m.size() == 0) {
      m = Matrix::Zero(p.value.rows(), p.value.cols());
      v = Matrix::Zero(p.value.rows(), p.value.cols());
    }
    m = b1 * m + (1.0 - b1) * p.grad;
    v = b2 * v + (1.0 - b2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= options_.lr * (m.array() / c1) /
                       ((v.array() / c2).sqrt() + options_.eps);
  }
}

}  // namespace vpc::num

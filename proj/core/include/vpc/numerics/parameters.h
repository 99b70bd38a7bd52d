// core/include/vpc/numerics/parameters.h

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

#ifndef VPC_NUMERICS_PARAMETERS_H_
#define VPC_NUMERICS_PARAMETERS_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vpc/numerics/tape.h"

namespace vpc::num {

struct Parameter {
  Matrix value;
  Matrix grad;
  bool trainable = true;

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

// Named trainable tensors. Names are unique and iteration order is the
// lexicographic name order, which fixes every reduction over parameters.
class ParameterStore {
 public:
  // Throws std::invalid_argument when `name` is already registered.
  Parameter& Add(const std::string& name, Matrix value, bool trainable = true);
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;
  bool Contains(const std::string& name) const;

  void ZeroGrad();
  std::vector<std::string> Names() const;
  std::size_t size() const { return params_.size(); }
  std::size_t NumValues() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Bitwise equality of all values (names, shapes and contents).
  bool SameValues(const ParameterStore& other) const;

 private:
  std::map<std::string, Parameter> params_;
};

// Binds every parameter of a store onto a tape.
class BoundParams {
 public:
  BoundParams(Tape& tape, ParameterStore& store);
  const Var& operator[](const std::string& name) const;
  bool Contains(const std::string& name) const {
    return vars_.count(name) != 0;
  }

 private:
  std::map<std::string, Var> vars_;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with a fixed learning rate: no schedule, no warm-up.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Applies one update to every trainable parameter using Parameter::grad.
  void Step(ParameterStore& params);

  std::int64_t step() const { return step_; }
  const AdamOptions& options() const { return options_; }

  // Moment access for checkpointing.
  std::map<std::string, Matrix>& first_moments() { return m_; }
  std::map<std::string, Matrix>& second_moments() { return v_; }
  const std::map<std::string, Matrix>& first_moments() const { return m_; }
  const std::map<std::string, Matrix>& second_moments() const { return v_; }
  void set_step(std::int64_t step) { step_ = step; }

 private:
  AdamOptions options_;
  std::int64_t step_ = 0;
  std::map<std::string, Matrix> m_;
  std::map<std::string, Matrix> v_;
};

}  // namespace vpc::num

#endif  // VPC_NUMERICS_PARAMETERS_H_

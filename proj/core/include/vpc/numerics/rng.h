// core/include/vpc/numerics/rng.h

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

#ifndef VPC_NUMERICS_RNG_H_
#define VPC_NUMERICS_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace vpc {

// Mixes a run seed with a stream tag and an index so that independent
// consumers (mask sampling, dropout, batch order, ...) never share a stream.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view stream,
                         std::uint64_t index = 0);

// Seeded random source. The engine is std::mt19937_64; the real-valued
// transforms are spelled out here so that draws are identical across
// standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1).
  double Uniform();
  // Uniform on the open interval (0, 1); safe to take log of.
  double UniformOpen();
  // Uniform integer on [0, n).
  std::uint64_t UniformInt(std::uint64_t n);
  double Normal();
  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }
  // Standard Gumbel(0, 1) draw.
  double Gumbel();
  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vpc

#endif  // VPC_NUMERICS_RNG_H_

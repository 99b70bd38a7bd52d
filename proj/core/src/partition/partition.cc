// core/src/partition/partition.cc

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

#include "vpc/partition/partition.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace vpc {

void MaskSpec::Validate() const {
  if (span_frames < 1) throw std::invalid_argument("mask span must be >= 1");
  if (!(start_prob > 0.0 && start_prob <= 1.0)) {
    throw std::invalid_argument("mask start probability must be in (0, 1]");
  }
}

void FutureSpec::Validate() const {
  if (shift < 1) throw std::invalid_argument("future shift must be >= 1");
  if (min_context < 0) throw std::invalid_argument("min_context must be >= 0");
}

Partition MakePartition(Index length, std::vector<Index> masked) {
  std::sort(masked.begin(), masked.end());
  masked.erase(std::unique(masked.begin(), masked.end()), masked.end());
  if (!masked.empty() && (masked.front() < 0 || masked.back() >= length)) {
    throw std::invalid_argument("masked index out of range");
  }
  Partition p;
  p.masked = std::move(masked);
  std::size_t j = 0;
  for (Index i = 0; i < length; ++i) {
    if (j < p.masked.size() && p.masked[j] == i) {
      ++j;
    } else {
      p.unmasked.push_back(i);
    }
  }
  return p;
}

Partition SampleMask(Index length, const MaskSpec& spec, Rng& rng) {
  spec.Validate();
  if (length < spec.span_frames) {
    throw std::invalid_argument("sequence of " + std::to_string(length) +
                                " frames is shorter than the mask span " +
                                std::to_string(spec.span_frames));
  }
  std::vector<char> hit(static_cast<std::size_t>(length));
  for (int attempt = 0;; ++attempt) {
    std::fill(hit.begin(), hit.end(), 0);
    bool any = false;
    for (Index i = 0; i < length; ++i) {
      if (!rng.Bernoulli(spec.start_prob)) continue;
      const Index end = std::min<Index>(i + spec.span_frames, length);
      for (Index j = i; j < end; ++j) hit[static_cast<std::size_t>(j)] = 1;
      any = true;
    }
    if (!any) continue;
    std::vector<Index> masked;
    for (Index i = 0; i < length; ++i) {
      if (hit[static_cast<std::size_t>(i)]) masked.push_back(i);
    }
    Partition p = MakePartition(length, std::move(masked));
    p.resamples = attempt;
    return p;
  }
}

FuturePartition MakeFuturePartition(Index length, const FutureSpec& spec) {
  spec.Validate();
  const Index first = spec.shift + spec.min_context;
  if (length <= first) {
    throw std::invalid_argument("sequence of " + std::to_string(length) +
                                " frames too short for shift " +
                                std::to_string(spec.shift) + " and min_context " +
                                std::to_string(spec.min_context));
  }
  FuturePartition p;
  p.shift = spec.shift;
  for (Index i = first; i < length; ++i) p.targets.push_back(i);
  return p;
}

}  // namespace vpc

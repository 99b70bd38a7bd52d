// core/include/vpc/partition/partition.h

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

#ifndef VPC_PARTITION_PARTITION_H_
#define VPC_PARTITION_PARTITION_H_

#include <cstdint>
#include <vector>

#include "vpc/features/frames.h"
#include "vpc/numerics/rng.h"

namespace vpc {

struct MaskSpec {
  int span_frames = 4;
  double start_prob = 0.2;
  void Validate() const;
};

struct Partition {
  std::vector<Index> masked;    // sorted
  std::vector<Index> unmasked;  // sorted complement
  // Number of all-empty draws that were thrown away.
  int resamples = 0;

  Index length() const {
    return static_cast<Index>(masked.size() + unmasked.size());
  }
};

// Every frame independently starts a span with probability start_prob; the
// span covers [i, min(i + span, T)). Empty masks are redrawn. Throws
// std::invalid_argument when T < span_frames.
Partition SampleMask(Index length, const MaskSpec& spec, Rng& rng);

// Partition with the given masked indices (sorted and deduplicated).
Partition MakePartition(Index length, std::vector<Index> masked);

struct FutureSpec {
  int shift = 2;  // kappa
  int min_context = 0;
  void Validate() const;
};

// Targets i in [shift + min_context, T); target i conditions on x_{<= i-shift}.
struct FuturePartition {
  std::vector<Index> targets;
  int shift = 0;
  // Last visible input index for a target.
  Index ContextEnd(Index target) const { return target - shift; }
};

// Throws std::invalid_argument when no target remains.
FuturePartition MakeFuturePartition(Index length, const FutureSpec& spec);

}  // namespace vpc

#endif  // VPC_PARTITION_PARTITION_H_

// core/include/vpc/trainer/batching.h

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

#ifndef VPC_TRAINER_BATCHING_H_
#define VPC_TRAINER_BATCHING_H_

#include <cstdint>
#include <vector>

#include "vpc/features/frames.h"

namespace vpc {

// Utterances sorted by length and cut into consecutive buckets of
// `batch_size`; the bucket order is shuffled with the given seed. Each batch
// lists utterance indices.
std::vector<std::vector<std::size_t>> MakeBatches(const std::vector<Index>& lengths,
                                                  int batch_size, std::uint64_t seed);

// First `max_frames` rows (the whole matrix when shorter).
Matrix Truncate(const Matrix& m, Index max_frames);

}  // namespace vpc

#endif  // VPC_TRAINER_BATCHING_H_

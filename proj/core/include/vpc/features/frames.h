// core/include/vpc/features/frames.h

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

#ifndef VPC_FEATURES_FRAMES_H_
#define VPC_FEATURES_FRAMES_H_

#include <string>

#include "vpc/numerics/tape.h"

namespace vpc {

using num::Index;
using num::Matrix;

// A T x d matrix of acoustic frames (one frame per row).
struct FrameSequence {
  Matrix frames;
  double frame_rate_ms = 10.0;
  std::string source_id;

  Index length() const { return frames.rows(); }
  Index dim() const { return frames.cols(); }
};

}  // namespace vpc

#endif  // VPC_FEATURES_FRAMES_H_

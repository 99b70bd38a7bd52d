// core/include/vpc/features/feature_cache.h

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

#ifndef VPC_FEATURES_FEATURE_CACHE_H_
#define VPC_FEATURES_FEATURE_CACHE_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vpc/features/frames.h"

namespace vpc {

// On-disk layout of one cached sequence:
//   <stem>.json  {"source_id", "shape": [T, d], "frame_rate_ms", "dtype":
//                 "float32", "payload": "<stem>.f32"}
//   <stem>.f32   T*d little-endian IEEE floats, row-major
// A corpus directory additionally holds index.json listing the stems in order.

void WriteFeatureFile(const std::filesystem::path& dir, const std::string& stem,
                      const FrameSequence& seq);
FrameSequence ReadFeatureFile(const std::filesystem::path& manifest);

void WriteCorpus(const std::filesystem::path& dir,
                 std::span<const FrameSequence> corpus);
std::vector<FrameSequence> ReadCorpus(const std::filesystem::path& dir);

// Raw float32 payload helpers shared with checkpoints.
void WriteFloat32(const std::filesystem::path& path, const Matrix& m);
Matrix ReadFloat32(const std::filesystem::path& path, Index rows, Index cols);
void WriteFloat64(const std::filesystem::path& path, const Matrix& m);
Matrix ReadFloat64(const std::filesystem::path& path, Index rows, Index cols);

// Hex digest of shapes and values, used to tell corpora apart.
std::string CorpusFingerprint(std::span<const FrameSequence> corpus);

}  // namespace vpc

#endif  // VPC_FEATURES_FEATURE_CACHE_H_

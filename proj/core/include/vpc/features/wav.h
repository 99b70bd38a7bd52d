// core/include/vpc/features/wav.h

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

#ifndef VPC_FEATURES_WAV_H_
#define VPC_FEATURES_WAV_H_

#include <filesystem>
#include <stdexcept>
#include <vector>

namespace vpc {

class WavFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 16000;
};

enum class WavEncoding { kPcm16, kFloat32 };

// Reads a mono RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float
// samples. PCM samples are scaled by 1/32768. Multi-channel files are
// rejected rather than mixed down.
Waveform LoadWav(const std::filesystem::path& path);

// Writes a mono WAV file. PCM16 quantises with round-to-nearest and clips to
// [-32768, 32767]; Float32 stores the samples as floats.
void WriteWav(const std::filesystem::path& path, const Waveform& wave,
              WavEncoding encoding = WavEncoding::kPcm16);

}  // namespace vpc

#endif  // VPC_FEATURES_WAV_H_

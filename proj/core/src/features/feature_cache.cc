// core/src/features/feature_cache.cc

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

#include "vpc/features/feature_cache.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace vpc {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "payload I/O assumes a little-endian host");

namespace {

nlohmann::json ReadJson(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(f);
}

void WriteJson(const fs::path& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << "\n";
}

template <typename T>
void WriteRaw(const fs::path& path, const Matrix& m) {
  std::vector<T> buf(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.size(); ++i) buf[static_cast<std::size_t>(i)] = static_cast<T>(m.data()[i]);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(T)));
}

template <typename T>
Matrix ReadRaw(const fs::path& path, Index rows, Index cols) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::vector<T> buf(static_cast<std::size_t>(rows * cols));
  f.read(reinterpret_cast<char*>(buf.data()),
         static_cast<std::streamsize>(buf.size() * sizeof(T)));
  if (f.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(T))) {
    throw std::runtime_error("payload size does not match shape: " + path.string());
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(buf[static_cast<std::size_t>(i)]);
  return m;
}

}  // namespace

void WriteFloat32(const fs::path& path, const Matrix& m) { WriteRaw<float>(path, m); }
Matrix ReadFloat32(const fs::path& path, Index rows, Index cols) {
  return ReadRaw<float>(path, rows, cols);
}
void WriteFloat64(const fs::path& path, const Matrix& m) { WriteRaw<double>(path, m); }
Matrix ReadFloat64(const fs::path& path, Index rows, Index cols) {
  return ReadRaw<double>(path, rows, cols);
}

void WriteFeatureFile(const fs::path& dir, const std::string& stem,
                      const FrameSequence& seq) {
  fs::create_directories(dir);
  const std::string payload = stem + ".f32";
  WriteFloat32(dir / payload, seq.frames);
  nlohmann::json j = {{"source_id", seq.source_id},
                      {"shape", {seq.length(), seq.dim()}},
                      {"frame_rate_ms", seq.frame_rate_ms},
                      {"dtype", "float32"},
                      {"payload", payload}};
  WriteJson(dir / (stem + ".json"), j);
}

FrameSequence ReadFeatureFile(const fs::path& manifest) {
  const nlohmann::json j = ReadJson(manifest);
  if (j.value("dtype", "float32") != "float32") {
    throw std::runtime_error("unsupported feature dtype in " + manifest.string());
  }
  const auto shape = j.at("shape").get<std::vector<Index>>();
  if (shape.size() != 2) throw std::runtime_error("feature shape must be [T, d]");
  FrameSequence seq;
  seq.source_id = j.at("source_id").get<std::string>();
  seq.frame_rate_ms = j.at("frame_rate_ms").get<double>();
  seq.frames = ReadFloat32(manifest.parent_path() / j.at("payload").get<std::string>(),
                           shape[0], shape[1]);
  return seq;
}

void WriteCorpus(const fs::path& dir, std::span<const FrameSequence> corpus) {
  fs::create_directories(dir);
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::ostringstream stem;
    stem << "seq_" << std::setw(6) << std::setfill('0') << i;
    WriteFeatureFile(dir, stem.str(), corpus[i]);
    entries.push_back(stem.str());
  }
  WriteJson(dir / "index.json", {{"format", "vpc-feature-cache"},
                                 {"version", 1},
                                 {"entries", entries}});
}

std::vector<FrameSequence> ReadCorpus(const fs::path& dir) {
  const nlohmann::json index = ReadJson(dir / "index.json");
  std::vector<FrameSequence> out;
  for (const auto& stem : index.at("entries")) {
    out.push_back(ReadFeatureFile(dir / (stem.get<std::string>() + ".json")));
  }
  return out;
}

std::string CorpusFingerprint(std::span<const FrameSequence> corpus) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& seq : corpus) {
    const std::int64_t shape[2] = {seq.length(), seq.dim()};
    mix(shape, sizeof(shape));
    for (Index i = 0; i < seq.frames.size(); ++i) {
      // Hash at float32 precision so a cached corpus matches its source.
      const float f = static_cast<float>(seq.frames.data()[i]);
      mix(&f, sizeof(f));
    }
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace vpc

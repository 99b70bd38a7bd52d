// core/src/trainer/checkpoint.cc

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

#include "vpc/trainer/checkpoint.h"

#include <fstream>
#include <stdexcept>

#include "vpc/features/feature_cache.h"

namespace vpc {

namespace fs = std::filesystem;

namespace {

std::string BlobName(const std::string& name, TensorDtype dtype) {
  std::string s = name;
  for (char& c : s) {
    if (c == '/') c = '~';
  }
  return s + (dtype == TensorDtype::kFloat32 ? ".f32" : ".f64");
}

nlohmann::json WriteTensor(const fs::path& dir, const std::string& name, const Matrix& m,
                           TensorDtype dtype, bool trainable) {
  const std::string file = BlobName(name, dtype);
  if (dtype == TensorDtype::kFloat32) {
    WriteFloat32(dir / file, m);
  } else {
    WriteFloat64(dir / file, m);
  }
  return {{"name", name},
          {"shape", {m.rows(), m.cols()}},
          {"dtype", dtype == TensorDtype::kFloat32 ? "float32" : "float64"},
          {"file", file},
          {"trainable", trainable}};
}

Matrix ReadTensor(const fs::path& dir, const nlohmann::json& t) {
  const auto shape = t.at("shape").get<std::vector<Index>>();
  const std::string dtype = t.at("dtype").get<std::string>();
  const fs::path file = dir / t.at("file").get<std::string>();
  if (dtype == "float32") return ReadFloat32(file, shape.at(0), shape.at(1));
  if (dtype == "float64") return ReadFloat64(file, shape.at(0), shape.at(1));
  throw std::runtime_error("unsupported tensor dtype " + dtype);
}

}  // namespace

void SaveCheckpoint(const fs::path& dir, const num::ParameterStore& params,
                    const nlohmann::json& config, std::uint64_t seed, std::int64_t step,
                    int epoch, const num::Adam* optimizer, TensorDtype dtype) {
  fs::create_directories(dir);
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, p] : params) {
    tensors.push_back(WriteTensor(dir, name, p.value, dtype, p.trainable));
  }
  nlohmann::json manifest = {{"format", "vpc-checkpoint"},
                             {"version", 1},
                             {"seed", seed},
                             {"step", step},
                             {"epoch", epoch},
                             {"config", config},
                             {"tensors", tensors}};
  if (optimizer != nullptr) {
    nlohmann::json moments = nlohmann::json::array();
    for (const auto& [name, m] : optimizer->first_moments()) {
      moments.push_back(WriteTensor(dir, "adam.m/" + name, m, dtype, false));
    }
    for (const auto& [name, v] : optimizer->second_moments()) {
      moments.push_back(WriteTensor(dir, "adam.v/" + name, v, dtype, false));
    }
    const auto& o = optimizer->options();
    manifest["optimizer"] = {{"step", optimizer->step()},
                             {"lr", o.lr},
                             {"beta1", o.beta1},
                             {"beta2", o.beta2},
                             {"eps", o.eps},
                             {"moments", moments}};
  }
  std::ofstream f(dir / "manifest.json");
  if (!f) throw std::runtime_error("cannot write checkpoint manifest in " + dir.string());
  f << manifest.dump(2) << "\n";
}

Checkpoint LoadCheckpoint(const fs::path& dir) {
  std::ifstream f(dir / "manifest.json");
  if (!f) throw std::runtime_error("no checkpoint manifest in " + dir.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (m.value("format", "") != "vpc-checkpoint") {
    throw std::runtime_error("not a vpc checkpoint: " + dir.string());
  }
  Checkpoint ck;
  ck.config = m.at("config");
  ck.seed = m.at("seed").get<std::uint64_t>();
  ck.step = m.at("step").get<std::int64_t>();
  ck.epoch = m.at("epoch").get<int>();
  for (const auto& t : m.at("tensors")) {
    ck.params.Add(t.at("name").get<std::string>(), ReadTensor(dir, t),
                  t.at("trainable").get<bool>());
  }
  if (m.contains("optimizer")) {
    const auto& o = m["optimizer"];
    num::AdamOptions opts{o.at("lr").get<double>(), o.at("beta1").get<double>(),
                          o.at("beta2").get<double>(), o.at("eps").get<double>()};
    ck.optimizer = num::Adam(opts);
    ck.optimizer.set_step(o.at("step").get<std::int64_t>());
    for (const auto& t : o.at("moments")) {
      const std::string name = t.at("name").get<std::string>();
      if (name.rfind("adam.m/", 0) == 0) {
        ck.optimizer.first_moments()[name.substr(7)] = ReadTensor(dir, t);
      } else if (name.rfind("adam.v/", 0) == 0) {
        ck.optimizer.second_moments()[name.substr(7)] = ReadTensor(dir, t);
      }
    }
    ck.has_optimizer = true;
  }
  return ck;
}

}  // namespace vpc

// core/src/codebook/codebook.cc

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

#include "vpc/codebook/codebook.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "vpc/features/feature_cache.h"
#include "vpc/numerics/rng.h"

namespace vpc {

std::string ToString(CodebookInit kind) {
  return kind == CodebookInit::kKmeansPP ? "kmeans++" : "random";
}

CodebookInit ParseCodebookInit(const std::string& s) {
  if (s == "kmeans++") return CodebookInit::kKmeansPP;
  if (s == "random") return CodebookInit::kRandom;
  throw std::invalid_argument("unknown codebook init '" + s + "'");
}

void Codebook::Validate() const {
  if (size() < 2) throw std::invalid_argument("codebook needs K >= 2");
  if (!centroids.allFinite()) {
    throw std::invalid_argument("codebook has non-finite entries");
  }
}

void Codebook::Save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  WriteFloat32(dir / "codebook.f32", centroids);
  const nlohmann::json j = {{"shape", {size(), dim()}},
                            {"dtype", "float32"},
                            {"payload", "codebook.f32"},
                            {"init_kind", ToString(init_kind)},
                            {"frozen", frozen}};
  std::ofstream f(dir / "codebook.json");
  if (!f) throw std::runtime_error("cannot write codebook manifest");
  f << j.dump(2) << "\n";
}

Codebook Codebook::Load(const std::filesystem::path& dir) {
  std::ifstream f(dir / "codebook.json");
  if (!f) throw std::runtime_error("missing codebook.json in " + dir.string());
  const nlohmann::json j = nlohmann::json::parse(f);
  const auto shape = j.at("shape").get<std::vector<Index>>();
  Codebook cb;
  cb.centroids = ReadFloat32(dir / j.at("payload").get<std::string>(),
                             shape.at(0), shape.at(1));
  cb.init_kind = ParseCodebookInit(j.at("init_kind").get<std::string>());
  cb.frozen = j.at("frozen").get<bool>();
  return cb;
}

Codebook RandomCodebook(Index k, Index d, std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, "codebook-random"));
  Codebook cb;
  cb.centroids.resize(k, d);
  for (Index i = 0; i < cb.centroids.size(); ++i) cb.centroids.data()[i] = rng.Normal();
  cb.init_kind = CodebookInit::kRandom;
  return cb;
}

std::vector<int> ArgminRows(const Matrix& distances) {
  std::vector<int> ids(static_cast<std::size_t>(distances.rows()));
  for (Index i = 0; i < distances.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < distances.cols(); ++k) {
      if (distances(i, k) < distances(i, best)) best = k;
    }
    ids[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return ids;
}

std::vector<int> HardAssign(const Matrix& frames, const Codebook& cb) {
  if (frames.cols() != cb.dim()) {
    throw std::invalid_argument("hard_assign: frame dim " + std::to_string(frames.cols()) +
                                " vs codebook dim " + std::to_string(cb.dim()));
  }
  return ArgminRows(num::SquaredDistanceMatrix(frames, cb.centroids));
}

PosteriorQ SoftPosterior(const Matrix& frames, const Codebook& cb, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("soft_posterior: tau must be > 0");
  if (frames.cols() != cb.dim()) {
    throw std::invalid_argument("soft_posterior: dimension mismatch");
  }
  PosteriorQ q;
  q.temperature = tau;
  q.log_probs = num::LogSoftmaxRowsValue(
      -num::SquaredDistanceMatrix(frames, cb.centroids) / tau);
  q.probs = q.log_probs.array().exp();
  return q;
}

double GaussianLogNormalizer(Index dim) {
  return 0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi);
}

Matrix GaussianNll(const Matrix& distances, Index dim) {
  return (0.5 * distances.array() + GaussianLogNormalizer(dim)).matrix();
}

Eigen::VectorXd DistortionTerms(const Matrix& frames, const Codebook& cb,
                                const Matrix& q) {
  if (frames.cols() != cb.dim() || q.rows() != frames.rows() ||
      q.cols() != cb.size()) {
    throw std::invalid_argument("distortion_terms: shape mismatch");
  }
  const Matrix nll = GaussianNll(num::SquaredDistanceMatrix(frames, cb.centroids),
                                 frames.cols());
  return q.cwiseProduct(nll).rowwise().sum();
}

}  // namespace vpc

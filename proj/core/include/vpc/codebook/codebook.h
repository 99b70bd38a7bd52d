// core/include/vpc/codebook/codebook.h

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

#ifndef VPC_CODEBOOK_CODEBOOK_H_
#define VPC_CODEBOOK_CODEBOOK_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpc/features/frames.h"

namespace vpc {

enum class CodebookInit { kKmeansPP, kRandom };

std::string ToString(CodebookInit kind);
// Accepts "kmeans++" and "random"; throws std::invalid_argument otherwise.
CodebookInit ParseCodebookInit(const std::string& s);

// K x d centroids, one codeword per row.
struct Codebook {
  Matrix centroids;
  CodebookInit init_kind = CodebookInit::kRandom;
  bool frozen = false;

  Index size() const { return centroids.rows(); }
  Index dim() const { return centroids.cols(); }
  // Throws std::invalid_argument unless K >= 2 and every entry is finite.
  void Validate() const;

  // <dir>/codebook.json + <dir>/codebook.f32
  void Save(const std::filesystem::path& dir) const;
  static Codebook Load(const std::filesystem::path& dir);
};

// Centroids drawn from N(0, I) (features are normalized beforehand).
Codebook RandomCodebook(Index k, Index d, std::uint64_t seed);

// id_i = argmin_k ||x_i - v_k||^2; ties go to the lowest index.
std::vector<int> HardAssign(const Matrix& frames, const Codebook& cb);
std::vector<int> ArgminRows(const Matrix& distances);

struct PosteriorQ {
  Matrix probs;      // T x K, rows on the simplex
  Matrix log_probs;  // same, in log space
  double temperature = 1.0;
};

// q_ik = softmax_k(-||x_i - v_k||^2 / tau), evaluated in log space.
PosteriorQ SoftPosterior(const Matrix& frames, const Codebook& cb, double tau);

// value_i = sum_k q_ik (0.5 ||x_i - v_k||^2 + (d/2) log 2 pi)
Eigen::VectorXd DistortionTerms(const Matrix& frames, const Codebook& cb,
                                const Matrix& q);

// Per-code Gaussian negative log-likelihood, unit covariance.
Matrix GaussianNll(const Matrix& distances, Index dim);
double GaussianLogNormalizer(Index dim);  // (d/2) log 2 pi

}  // namespace vpc

#endif  // VPC_CODEBOOK_CODEBOOK_H_

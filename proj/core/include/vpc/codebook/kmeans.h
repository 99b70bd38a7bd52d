// core/include/vpc/codebook/kmeans.h

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

#ifndef VPC_CODEBOOK_KMEANS_H_
#define VPC_CODEBOOK_KMEANS_H_

#include <cstdint>
#include <vector>

#include "vpc/codebook/codebook.h"

namespace vpc {

// First center uniform over the rows of `data`, each further center drawn
// with probability proportional to the squared distance to the nearest
// chosen center. Throws std::invalid_argument when N < K or when the data
// has fewer than K distinct points.
Codebook KmeansPlusPlusInit(const Matrix& data, Index k, std::uint64_t seed);

struct KmeansOptions {
  int max_iters = 100;
  double rel_tol = 1e-6;
};

struct KmeansResult {
  Codebook codebook;
  double distortion = 0.0;  // mean over points of min_k ||x - v_k||^2
  // Distortion of the initial centroids followed by one entry per iteration.
  std::vector<double> history;
  int iterations = 0;
  int empty_reassignments = 0;
};

// Lloyd iterations from `init`. An empty cluster takes over the point with
// the largest current distortion. The returned codebook is frozen.
KmeansResult FitKmeans(const Matrix& data, const Codebook& init,
                       const KmeansOptions& options = {});

// Stacks the frames of a corpus into one N x d matrix.
Matrix StackCorpus(const std::vector<Matrix>& mats);

}  // namespace vpc

#endif  // VPC_CODEBOOK_KMEANS_H_

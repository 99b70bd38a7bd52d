// core/src/codebook/kmeans.cc

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

#include "vpc/codebook/kmeans.h"

#include <limits>
#include <stdexcept>
#include <string>

#include "vpc/numerics/rng.h"

namespace vpc {

Matrix StackCorpus(const std::vector<Matrix>& mats) {
  Index n = 0;
  const Index d = mats.empty() ? 0 : mats[0].cols();
  for (const Matrix& m : mats) {
    if (m.cols() != d) throw std::invalid_argument("StackCorpus: dim mismatch");
    n += m.rows();
  }
  Matrix out(n, d);
  Index row = 0;
  for (const Matrix& m : mats) {
    out.middleRows(row, m.rows()) = m;
    row += m.rows();
  }
  return out;
}

Codebook KmeansPlusPlusInit(const Matrix& data, Index k, std::uint64_t seed) {
  const Index n = data.rows();
  if (k < 1) throw std::invalid_argument("kmeans++: K must be >= 1");
  if (n < k) {
    throw std::invalid_argument("kmeans++: " + std::to_string(n) +
                                " points for K=" + std::to_string(k));
  }
  Rng rng(DeriveSeed(seed, "kmeans++"));
  Codebook cb;
  cb.init_kind = CodebookInit::kKmeansPP;
  cb.centroids.resize(k, data.cols());
  Index first = static_cast<Index>(rng.UniformInt(static_cast<std::uint64_t>(n)));
  cb.centroids.row(0) = data.row(first);
  Eigen::VectorXd nearest(n);
  for (Index i = 0; i < n; ++i) nearest(i) = (data.row(i) - data.row(first)).squaredNorm();

  for (Index c = 1; c < k; ++c) {
    const double total = nearest.sum();
    if (!(total > 0.0)) {
      throw std::invalid_argument("kmeans++: data has only " + std::to_string(c) +
                                  " distinct points, need K=" + std::to_string(k));
    }
    const double u = rng.Uniform() * total;
    double acc = 0.0;
    Index pick = -1;
    for (Index i = 0; i < n; ++i) {
      acc += nearest(i);
      if (nearest(i) > 0.0 && u < acc) {
        pick = i;
        break;
      }
    }
    if (pick < 0) {
      for (Index i = n; i-- > 0;) {
        if (nearest(i) > 0.0) {
          pick = i;
          break;
        }
      }
    }
    cb.centroids.row(c) = data.row(pick);
    for (Index i = 0; i < n; ++i) {
      nearest(i) = std::min(nearest(i), (data.row(i) - data.row(pick)).squaredNorm());
    }
  }
  return cb;
}

namespace {

// Nearest-centroid ids and distances, lowest index on ties.
void AssignAll(const Matrix& data, const Matrix& centroids, std::vector<int>& ids,
               Eigen::VectorXd& dist) {
  const Index n = data.rows(), k = centroids.rows();
  ids.resize(static_cast<std::size_t>(n));
  dist.resize(n);
  for (Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (Index c = 0; c < k; ++c) {
      const double d2 = (data.row(i) - centroids.row(c)).squaredNorm();
      if (d2 < best) {
        best = d2;
        best_k = static_cast<int>(c);
      }
    }
    ids[static_cast<std::size_t>(i)] = best_k;
    dist(i) = best;
  }
}

}  // namespace

KmeansResult FitKmeans(const Matrix& data, const Codebook& init,
                       const KmeansOptions& options) {
  if (data.rows() == 0) throw std::invalid_argument("fit_kmeans: empty input");
  if (data.cols() != init.dim() || init.size() < 1) {
    throw std::invalid_argument("fit_kmeans: init does not match data");
  }
  const Index n = data.rows(), k = init.size();
  KmeansResult res;
  res.codebook = init;
  Matrix& v = res.codebook.centroids;
  std::vector<int> ids;
  Eigen::VectorXd dist;
  AssignAll(data, v, ids, dist);
  double current = dist.mean();
  res.history.push_back(current);

  for (int it = 0; it < options.max_iters; ++it) {
    Matrix sums = Matrix::Zero(k, data.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Index i = 0; i < n; ++i) {
      sums.row(ids[static_cast<std::size_t>(i)]) += data.row(i);
      counts(ids[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (Index c = 0; c < k; ++c) {
      if (counts(c) > 0.0) {
        v.row(c) = sums.row(c) / counts(c);
        continue;
      }
      Index worst = 0;
      dist.maxCoeff(&worst);
      v.row(c) = data.row(worst);
      dist(worst) = 0.0;
      ++res.empty_reassignments;
    }
    AssignAll(data, v, ids, dist);
    const double next = dist.mean();
    res.history.push_back(next);
    res.iterations = it + 1;
    const double improvement = current > 0.0 ? (current - next) / current : 0.0;
    current = next;
    if (improvement < options.rel_tol) break;
  }
  res.distortion = current;
  res.codebook.frozen = true;
  return res;
}

}  // namespace vpc

// tests/codebook_test.cc

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

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"
#include "vpc/codebook/codebook.h"
#include "vpc/codebook/kmeans.h"

namespace vpc {
namespace {

using vpc::testing::RandomMatrix;
using vpc::testing::TempDir;

// Three well separated blobs in 2-d.
Matrix Blobs(Index per, Rng& rng) {
  Matrix x(3 * per, 2);
  const double cx[3] = {-5.0, 0.0, 5.0};
  const double cy[3] = {0.0, 4.0, 0.0};
  for (Index b = 0; b < 3; ++b) {
    for (Index i = 0; i < per; ++i) {
      x(b * per + i, 0) = cx[b] + 0.3 * rng.Normal();
      x(b * per + i, 1) = cy[b] + 0.3 * rng.Normal();
    }
  }
  return x;
}

TEST(CodebookTest, ParseInitKinds) {
  EXPECT_EQ(ParseCodebookInit("kmeans++"), CodebookInit::kKmeansPP);
  EXPECT_EQ(ParseCodebookInit("random"), CodebookInit::kRandom);
  EXPECT_EQ(ToString(CodebookInit::kKmeansPP), "kmeans++");
  EXPECT_THROW(ParseCodebookInit("lloyd"), std::invalid_argument);
}

TEST(CodebookTest, ValidateAndSaveLoad) {
  TempDir dir;
  Codebook cb = RandomCodebook(4, 3, 1);
  EXPECT_NO_THROW(cb.Validate());
  cb.frozen = true;
  cb.Save(dir.path());
  const Codebook back = Codebook::Load(dir.path());
  EXPECT_EQ(back.centroids, cb.centroids.cast<float>().cast<double>());
  EXPECT_TRUE(back.frozen);
  EXPECT_EQ(back.init_kind, CodebookInit::kRandom);
  Codebook one = RandomCodebook(1, 3, 1);
  EXPECT_THROW(one.Validate(), std::invalid_argument);
  cb.centroids(0, 0) = std::nan("");
  EXPECT_THROW(cb.Validate(), std::invalid_argument);
}

TEST(CodebookTest, HardAssignMatchesNaiveAndBreaksTiesLow) {
  Rng rng(2);
  const Matrix x = RandomMatrix(40, 3, rng);
  const Codebook cb = RandomCodebook(5, 3, 3);
  const auto ids = HardAssign(x, cb);
  for (Index i = 0; i < x.rows(); ++i) {
    int best = 0;
    for (int k = 1; k < 5; ++k) {
      if ((x.row(i) - cb.centroids.row(k)).squaredNorm() <
          (x.row(i) - cb.centroids.row(best)).squaredNorm()) {
        best = k;
      }
    }
    EXPECT_EQ(ids[static_cast<std::size_t>(i)], best);
  }
  Codebook tie;
  tie.centroids.resize(2, 1);
  tie.centroids << -1.0, 1.0;
  EXPECT_EQ(HardAssign(Matrix::Zero(1, 1), tie)[0], 0);
}

TEST(SoftPosteriorTest, RowsOnSimplexAndMatchSoftmax) {
  Rng rng(4);
  const Matrix x = RandomMatrix(10, 3, rng);
  const Codebook cb = RandomCodebook(4, 3, 5);
  const PosteriorQ q = SoftPosterior(x, cb, 0.7);
  for (Index i = 0; i < 10; ++i) {
    EXPECT_NEAR(q.probs.row(i).sum(), 1.0, 1e-12);
    Eigen::VectorXd w(4);
    for (int k = 0; k < 4; ++k) w(k) = std::exp(-(x.row(i) - cb.centroids.row(k)).squaredNorm() / 0.7);
    w /= w.sum();
    for (int k = 0; k < 4; ++k) {
      EXPECT_NEAR(q.probs(i, k), w(k), 1e-12);
      EXPECT_NEAR(q.log_probs(i, k), std::log(w(k)), 1e-10);
    }
  }
  EXPECT_THROW(SoftPosterior(x, cb, 0.0), std::invalid_argument);
}

TEST(SoftPosteriorTest, SmallTemperatureApproachesHardAssignment) {
  Rng rng(6);
  const Matrix x = RandomMatrix(30, 2, rng);
  const Codebook cb = RandomCodebook(6, 2, 7);
  const PosteriorQ q = SoftPosterior(x, cb, 1e-4);
  const auto ids = HardAssign(x, cb);
  for (Index i = 0; i < x.rows(); ++i) {
    EXPECT_GT(q.probs(i, ids[static_cast<std::size_t>(i)]), 0.99);
  }
  // Far-away frames stay finite in log space.
  const PosteriorQ far = SoftPosterior(Matrix::Constant(1, 2, 1e3), cb, 1e-3);
  EXPECT_TRUE(far.log_probs.allFinite());
  EXPECT_NEAR(far.probs.sum(), 1.0, 1e-12);
}

TEST(SoftPosteriorTest, DistortionTermsIncludeNormalizer) {
  Rng rng(8);
  const Matrix x = RandomMatrix(5, 3, rng);
  const Codebook cb = RandomCodebook(3, 3, 9);
  const PosteriorQ q = SoftPosterior(x, cb, 1.0);
  const Eigen::VectorXd got = DistortionTerms(x, cb, q.probs);
  for (Index i = 0; i < 5; ++i) {
    double want = 0.0;
    for (int k = 0; k < 3; ++k) {
      want += q.probs(i, k) *
              (0.5 * (x.row(i) - cb.centroids.row(k)).squaredNorm() + 1.5 * std::log(2 * M_PI));
    }
    EXPECT_NEAR(got(i), want, 1e-12);
  }
  EXPECT_NEAR(GaussianLogNormalizer(3), 1.5 * std::log(2 * M_PI), 1e-15);
}

TEST(KmeansPlusPlusTest, PicksDistinctDataPoints) {
  Rng rng(10);
  const Matrix x = Blobs(20, rng);
  const Codebook cb = KmeansPlusPlusInit(x, 3, 11);
  EXPECT_EQ(cb.init_kind, CodebookInit::kKmeansPP);
  std::set<int> blobs;
  for (Index k = 0; k < 3; ++k) {
    bool found = false;
    for (Index i = 0; i < x.rows(); ++i) {
      if (x.row(i) == cb.centroids.row(k)) {
        found = true;
        blobs.insert(static_cast<int>(i / 20));
      }
    }
    EXPECT_TRUE(found);
  }
  // D^2 sampling across separated blobs lands in each one with high probability.
  EXPECT_EQ(blobs.size(), 3u);
}

TEST(KmeansPlusPlusTest, RejectsTooFewDistinctPoints) {
  EXPECT_THROW(KmeansPlusPlusInit(Matrix::Zero(2, 2), 3, 1), std::invalid_argument);
  Matrix dup = Matrix::Zero(10, 2);
  dup.row(3).setOnes();
  EXPECT_THROW(KmeansPlusPlusInit(dup, 3, 1), std::invalid_argument);
  EXPECT_NO_THROW(KmeansPlusPlusInit(dup, 2, 1));
}

TEST(FitKmeansTest, DistortionIsMonotoneAndConverges) {
  Rng rng(12);
  const Matrix x = RandomMatrix(300, 4, rng);
  const KmeansResult r = FitKmeans(x, RandomCodebook(8, 4, 13));
  ASSERT_GE(r.history.size(), 2u);
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    EXPECT_LE(r.history[i], r.history[i - 1] + 1e-12);
  }
  EXPECT_NEAR(r.distortion, r.history.back(), 1e-12);
  EXPECT_TRUE(r.codebook.frozen);
}

TEST(FitKmeansTest, FixedPointCentroidsAreClusterMeans) {
  Rng rng(14);
  const Matrix x = Blobs(30, rng);
  const KmeansResult r = FitKmeans(x, KmeansPlusPlusInit(x, 3, 15), {200, 0.0});
  const auto ids = HardAssign(x, r.codebook);
  for (int k = 0; k < 3; ++k) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(2);
    double n = 0;
    for (Index i = 0; i < x.rows(); ++i) {
      if (ids[static_cast<std::size_t>(i)] == k) mean += x.row(i), n += 1;
    }
    ASSERT_GT(n, 0);
    EXPECT_LT((mean / n - r.codebook.centroids.row(k)).norm(), 1e-10);
  }
  double d = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    d += (x.row(i) - r.codebook.centroids.row(ids[static_cast<std::size_t>(i)])).squaredNorm();
  }
  EXPECT_NEAR(r.distortion, d / x.rows(), 1e-10);
}

TEST(FitKmeansTest, EmptyClusterIsReseeded) {
  Rng rng(16);
  const Matrix x = Blobs(10, rng);
  Codebook init;
  init.centroids.resize(3, 2);
  init.centroids << 0.0, 2.0, 100.0, 100.0, 101.0, 100.0;
  const KmeansResult r = FitKmeans(x, init);
  EXPECT_GT(r.empty_reassignments, 0);
  EXPECT_LT(r.distortion, 1.0);
}

TEST(FitKmeansTest, ShapeMismatchThrows) {
  EXPECT_THROW(FitKmeans(Matrix::Zero(4, 3), RandomCodebook(2, 2, 1)), std::invalid_argument);
  EXPECT_THROW(StackCorpus({Matrix::Zero(2, 2), Matrix::Zero(2, 3)}), std::invalid_argument);
}

}  // namespace
}  // namespace vpc

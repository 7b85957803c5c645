/* Copyright 2026 The pqos Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "pqos/sampling.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_fixtures.hpp"

namespace pqos {
namespace {

using test::batch_means_se;
using test::iid_se;
using test::triangle;
using test::unit_square;

TEST(RejectionSample, UnitSquareMean) {
  RngStream rng(5);
  const Matrix pts = rejection_sample(unit_square(), 10000, rng);
  ASSERT_EQ(pts.cols(), 10000);
  EXPECT_NEAR(pts.row(0).mean(), 0.5, 0.015);
  EXPECT_NEAR(pts.row(1).mean(), 0.5, 0.015);
}

TEST(RejectionSample, TriangleCentroidAndMembership) {
  const HPolytope tri = triangle();
  RngStream rng(6);
  const Matrix pts = rejection_sample(tri, 100000, rng);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) ASSERT_TRUE(contains(tri, pts.col(i)));
  for (Eigen::Index d = 0; d < 2; ++d) {
    const Vector coord = pts.row(d).transpose();
    EXPECT_NEAR(coord.mean(), 1.0 / 3.0, 3 * iid_se(coord));
  }
}

TEST(RejectionSample, ThinRegionAborts) {
  // 1 <= x + y <= 1 + 1e-12 has box acceptance around 1e-12.
  Matrix a(6, 2);
  a << 1, 0, 0, 1, -1, 0, 0, -1, 1, 1, -1, -1;
  Vector b(6);
  b << 1, 1, 0, 0, 1 + 1e-12, -1;
  const HPolytope sliver(a, b);
  RngStream rng(1);
  EXPECT_THROW(rejection_sample(sliver, 10, rng), ThinRegionError);
}

TEST(DikinWalk, UnitSquareMoments) {
  const HPolytope sq = unit_square();
  RngStream rng(21);
  const DikinWalkResult walk = dikin_walk(sq, 10000, DikinWalkConfig::defaults(2), rng);
  ASSERT_EQ(walk.points.cols(), 10000);
  const Vector mean = walk.points.rowwise().mean();
  EXPECT_NEAR(mean(0), 0.5, 0.02);
  EXPECT_NEAR(mean(1), 0.5, 0.02);
  const Matrix centered = walk.points.colwise() - mean;
  const Matrix cov = centered * centered.transpose() / static_cast<double>(walk.points.cols() - 1);
  EXPECT_NEAR(cov(0, 0), 1.0 / 12, 0.1 / 12);
  EXPECT_NEAR(cov(1, 1), 1.0 / 12, 0.1 / 12);
  EXPECT_NEAR(cov(0, 1), 0.0, 0.1 / 12);
}

TEST(DikinWalk, PointsAreStrictlyInterior) {
  const HPolytope tri = triangle();
  RngStream rng(3);
  const DikinWalkResult walk = dikin_walk(tri, 20000, DikinWalkConfig::defaults(2), rng);
  for (Eigen::Index i = 0; i < walk.points.cols(); ++i) {
    ASSERT_GT(tri.slacks(walk.points.col(i)).minCoeff(), 0.0);
  }
  EXPECT_GT(walk.accepted, 0u);
  EXPECT_EQ(walk.restarts, 0u);
}

TEST(DikinWalk, AgreesWithRejectionSamplerOnTriangle) {
  const HPolytope tri = triangle();
  RngStream r1(100), r2(200);
  const Matrix exact = rejection_sample(tri, 100000, r1);
  const DikinWalkResult walk = dikin_walk(tri, 100000, DikinWalkConfig::defaults(2), r2);
  for (Eigen::Index d = 0; d < 2; ++d) {
    for (int power : {1, 2}) {
      const Vector a = exact.row(d).transpose().array().pow(power);
      const Vector b = walk.points.row(d).transpose().array().pow(power);
      const double se = std::hypot(iid_se(a), batch_means_se(b));
      EXPECT_NEAR(a.mean(), b.mean(), 3 * se) << "axis " << d << " moment " << power;
    }
  }
  // Cross moment E[xy] = 1/12 on the triangle.
  const Vector xy = walk.points.row(0).cwiseProduct(walk.points.row(1)).transpose();
  EXPECT_NEAR(xy.mean(), 1.0 / 12.0, 3 * batch_means_se(xy) + 1e-3);
}

TEST(DikinWalk, Deterministic) {
  const HPolytope tri = triangle();
  RngStream a(9, 4), b(9, 4);
  const DikinWalkConfig config = DikinWalkConfig::defaults(2);
  EXPECT_EQ(dikin_walk(tri, 500, config, a).points, dikin_walk(tri, 500, config, b).points);
}

TEST(DikinWalk, AcceptanceRatioIsOneForEqualHessians) {
  Matrix h(2, 2);
  h << 4, 1, 1, 3;
  EXPECT_DOUBLE_EQ(dikin_acceptance_ratio(h, h), 1.0);
  // Deep inside a large box the barrier is locally flat.
  const HPolytope big =
      HPolytope::box_region(Box(Vector::Constant(2, -1e6), Vector::Constant(2, 1e6)), {"x", "y"});
  Vector x = Vector::Zero(2), y(2);
  y << 1e-3, -1e-3;
  EXPECT_NEAR(dikin_acceptance_ratio(barrier_hessian(big, x), barrier_hessian(big, y)), 1.0, 1e-12);
}

TEST(DikinWalk, ConfigValidation) {
  RngStream rng(1);
  DikinWalkConfig bad;
  bad.radius = 0.0;
  EXPECT_THROW(dikin_walk(unit_square(), 10, bad, rng), InvalidArgument);
  bad = DikinWalkConfig{};
  bad.thinning = 0;
  EXPECT_THROW(dikin_walk(unit_square(), 10, bad, rng), InvalidArgument);
}

TEST(RngStream, SubstreamsAreReproducible) {
  const RngStream root(42);
  RngStream a = root.substream(3), b = root.substream(3), c = root.substream(4);
  const auto x = a(), y = b(), z = c();
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
}

}  // namespace
}  // namespace pqos

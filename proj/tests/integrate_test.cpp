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

#include "pqos/integrate.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_fixtures.hpp"

namespace pqos {
namespace {

using test::reference_box;
using test::reference_box_region;
using test::running_example;
using test::triangle;
using test::unit_square;
using test::UniformBoxProfile;

UniformBoxProfile unit_density() {
  return UniformBoxProfile(AttributeSchema({"x", "y"}), Box(Vector::Zero(2), Vector::Ones(2)));
}

TEST(IntegrateUniform, ConstantIntegrandOnExactRegion) {
  const UniformBoxProfile f = unit_density();
  for (std::size_t k : {2u, 100u, 50000u}) {
    const IntegralEstimate est = integrate_uniform(f, unit_square(), k, RngStream(1));
    EXPECT_EQ(est.value, 1.0);
    EXPECT_EQ(est.std_error, 0.0);
    EXPECT_EQ(est.volume_used, 1.0);
    EXPECT_EQ(est.sampler, PointSampler::rejection);
  }
}

TEST(IntegrateUniform, RunningExampleMatchesClosedForm) {
  const IndependentProduct profile = running_example();
  const double truth = rectangle_probability(profile, reference_box());
  const IntegralEstimate est =
      integrate_uniform(profile, reference_box_region(), 1000000, RngStream(2024));
  EXPECT_NEAR(est.value, truth, 3 * est.std_error);
  EXPECT_NEAR(est.value, truth, 5e-3);
  EXPECT_LT(est.std_error, 2e-3);
}

TEST(IntegrateUniform, ZeroVolumeRegion) {
  Matrix a(6, 2);
  a << 1, 0, 0, 1, -1, 0, 0, -1, 1, 1, -1, -1;
  Vector b(6);
  b << 1, 1, 0, 0, 1, -1;
  const HPolytope segment(a, b, {"x", "y"});
  const IntegralEstimate est = integrate_uniform(unit_density(), segment, 1000, RngStream(3));
  EXPECT_EQ(est.value, 0.0);
  EXPECT_EQ(est.std_error, 0.0);
}

TEST(IntegrateUniform, SchemaMismatch) {
  EXPECT_THROW(integrate_uniform(running_example(), unit_square(), 100, RngStream(1)), SchemaError);
  EXPECT_THROW(integrate_uniform(unit_density(), unit_square(), 1, RngStream(1)), InvalidArgument);
}

TEST(IntegrateUniform, WorkerCountDoesNotChangeResult) {
  const IndependentProduct profile = running_example();
  IntegrationOptions many;
  many.workers = 3;
  const IntegralEstimate a = integrate_uniform(profile, test::r_good(), 100000, RngStream(5));
  const IntegralEstimate b = integrate_uniform(profile, test::r_good(), 100000, RngStream(5), many);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(IntegrateUniform, ThinRegionUsesDikinWalkAndAgrees) {
  // |x - y| <= 0.02 inside the unit square: box acceptance about 4%.
  Matrix a(6, 2);
  a << 1, 0, 0, 1, -1, 0, 0, -1, 1, -1, -1, 1;
  Vector b(6);
  b << 1, 1, 0, 0, 0.02, 0.02;
  const HPolytope band(a, b, {"x", "y"});
  const IndependentProduct profile(AttributeSchema({"x", "y"}),
                                   {GaussianMarginal(0.4, 0.04), GaussianMarginal(0.5, 0.09)});
  const IntegralEstimate walk = integrate_uniform(profile, band, 200000, RngStream(6));
  ASSERT_EQ(walk.sampler, PointSampler::dikin);
  const IntegralEstimate box = integrate_rejection_box(profile, band, 2000000, RngStream(7));
  EXPECT_NEAR(walk.value, box.value, 3 * std::hypot(walk.std_error, box.std_error));
}

TEST(IntegrateRejectionBox, ConstantDensityOverTriangle) {
  const IntegralEstimate est = integrate_rejection_box(unit_density(), triangle(), 100000, RngStream(8));
  EXPECT_NEAR(est.value, 0.5, 3 * est.std_error);
  EXPECT_FALSE(est.volume_used.has_value());
}

TEST(IntegrateRejectionBox, AgreesWithUniformEstimator) {
  const IndependentProduct ind = running_example();
  const CorrelatedTPRT corr = test::correlated_example();
  for (const QoSProfile* profile :
       {static_cast<const QoSProfile*>(&ind), static_cast<const QoSProfile*>(&corr)}) {
    for (const HPolytope& region : {reference_box_region(), test::r_good(), test::r_bad()}) {
      const IntegralEstimate u = integrate_uniform(*profile, region, 1000000, RngStream(9));
      const IntegralEstimate r = integrate_rejection_box(*profile, region, 1000000, RngStream(10));
      EXPECT_NEAR(u.value, r.value, 3 * std::hypot(u.std_error, r.std_error)) << profile->kind();
    }
  }
}

TEST(Integrate, AdditivityOverDisjointPieces) {
  // The unit square split along x + y = 1.
  const IndependentProduct profile(AttributeSchema({"x", "y"}),
                                   {GaussianMarginal(0.5, 0.1), GaussianMarginal(0.3, 0.2)});
  Matrix lower_a(3, 2), upper_a(3, 2);
  lower_a << -1, 0, 0, -1, 1, 1;
  upper_a << 1, 0, 0, 1, -1, -1;
  Vector lower_b(3), upper_b(3);
  lower_b << 0, 0, 1;
  upper_b << 1, 1, -1;
  const HPolytope lower(lower_a, lower_b, {"x", "y"});
  const HPolytope upper(upper_a, upper_b, {"x", "y"});
  const IntegralEstimate p1 = integrate_uniform(profile, lower, 400000, RngStream(11));
  const IntegralEstimate p2 = integrate_uniform(profile, upper, 400000, RngStream(12));
  const double whole = rectangle_probability(profile, Box(Vector::Zero(2), Vector::Ones(2)));
  EXPECT_NEAR(p1.value + p2.value, whole, 3 * std::hypot(p1.std_error, p2.std_error));
}

TEST(Integrate, ProbabilityNeverExceedsOne) {
  const IndependentProduct profile = running_example();
  Vector lo(2), hi(2);
  lo << -100, 0;
  hi << 200, 3000;
  const HPolytope everything = HPolytope::box_region(Box(lo, hi), {"TP", "RT"});
  const IntegralEstimate est = integrate_uniform(profile, everything, 200000, RngStream(13));
  EXPECT_LE(est.value, 1.0 + 3 * est.std_error);
  EXPECT_GE(est.value, 0.0 - 3 * est.std_error);
}

TEST(ConvergenceScan, InverseSqrtRate) {
  const IndependentProduct profile = running_example();
  const double truth = rectangle_probability(profile, reference_box());
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(s);
  const ConvergenceTable table = convergence_scan(
      profile, reference_box_region(), {100, 1000, 10000, 100000, 1000000}, seeds, truth);
  ASSERT_TRUE(table.slope.has_value());
  EXPECT_NEAR(*table.slope, -0.5, 0.15);
  ASSERT_EQ(table.rows.size(), 5u);
  EXPECT_GT(table.rows.front().mean_abs_error, table.rows.back().mean_abs_error);
}

TEST(ConvergenceScan, ZeroVarianceEstimator) {
  const ConvergenceTable table =
      convergence_scan(unit_density(), unit_square(), {10, 100, 1000}, {1, 2}, 1.0);
  for (const auto& row : table.rows) EXPECT_EQ(row.mean_abs_error, 0.0);
  EXPECT_FALSE(table.slope.has_value());
}

TEST(ConvergenceScan, Preconditions) {
  EXPECT_THROW(convergence_scan(unit_density(), unit_square(), {100}, {1}, 1.0), InvalidArgument);
  EXPECT_THROW(convergence_scan(unit_density(), unit_square(), {100, 100, 1000}, {1}, 1.0),
               InvalidArgument);
  EXPECT_THROW(convergence_scan(unit_density(), unit_square(), {10, 100, 1000}, {}, 1.0),
               InvalidArgument);
}

}  // namespace
}  // namespace pqos

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

#include "pqos/profiles.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "pqos/integrate.hpp"
#include "pqos/special_functions.hpp"
#include "test_fixtures.hpp"

namespace pqos {
namespace {

using special::kPi;
using test::correlated_example;
using test::reference_box;
using test::running_example;

Vector point(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

TEST(GammaP, IntegerShapeClosedForm) {
  // P(n, x) = 1 - exp(-x) sum_{j<n} x^j / j!
  for (int n = 1; n <= 8; ++n) {
    for (double x : {0.01, 0.5, 1.0, 3.0, 7.5, 20.0, 60.0}) {
      double term = 1.0, sum = 0.0;
      for (int j = 0; j < n; ++j) {
        sum += term;
        term *= x / (j + 1);
      }
      const double expected = 1.0 - std::exp(-x) * sum;
      EXPECT_NEAR(special::gamma_p(n, x), expected, 1e-13 + 1e-10 * expected)
          << "n=" << n << " x=" << x;
    }
  }
}

TEST(GammaP, HalfShapeIsErf) {
  for (double x : {1e-4, 0.1, 0.7, 2.0, 9.0, 30.0}) {
    EXPECT_NEAR(special::gamma_p(0.5, x), std::erf(std::sqrt(x)), 1e-13);
  }
}

TEST(DensityAt, RunningExampleIndependent) {
  const IndependentProduct profile = running_example();
  const double expected =
      (1.0 / std::sqrt(600.0 * kPi)) * (std::pow(0.01, 3) / 2.0) * 200.0 * 200.0 * std::exp(-2.0);
  EXPECT_NEAR(density_at(profile, point(50, 200)), expected, 1e-15);
  EXPECT_NEAR(expected, 6.234e-5, 1e-8);
}

TEST(DensityAt, GammaOutsideSupport) {
  EXPECT_EQ(GammaMarginal(3, 0.01).pdf(-1.0), 0.0);
  EXPECT_EQ(GammaMarginal(1, 2.0).pdf(0.0), 2.0);
}

TEST(DensityAt, DimensionMismatch) {
  const IndependentProduct profile = running_example();
  Vector p(3);
  p << 1, 2, 3;
  EXPECT_THROW(density_at(profile, p), DimensionError);
}

TEST(DensityAt, CorrelatedSupportClip) {
  const CorrelatedTPRT profile = correlated_example();
  // Conditional shape 3 - (250 - 50) / 50 = -1.
  EXPECT_EQ(density_at(profile, point(250, 100)), 0.0);
  EXPECT_EQ(profile.support_clips(), 1u);
  const double shape = 3.0 - (40.0 - 50.0) / 50.0;
  const double expected = GaussianMarginal(50, 300).pdf(40) * GammaMarginal(shape, 0.01).pdf(250);
  EXPECT_DOUBLE_EQ(density_at(profile, point(40, 250)), expected);
}

TEST(DensityAt, NeverNegative) {
  const IndependentProduct ind = running_example();
  const CorrelatedTPRT corr = correlated_example();
  RngStream rng(8);
  for (int i = 0; i < 10000; ++i) {
    const Vector p = point(rng.uniform(-500, 500), rng.uniform(-2000, 5000));
    ASSERT_GE(ind.density(p), 0.0);
    ASSERT_GE(corr.density(p), 0.0);
  }
}

TEST(Sample, MarginalMeans) {
  RngStream rng(12);
  const IndependentProduct profile = running_example();
  const SampleBatch batch = sample(profile, 100000, rng);
  EXPECT_NEAR(batch.points.row(0).mean(), 50.0, 0.17);
  EXPECT_NEAR(batch.points.row(1).mean(), 300.0, 5.2);
  EXPECT_EQ(batch.redraws, 0u);
}

TEST(Sample, CorrelatedIsNegativelyCorrelated) {
  RngStream rng(13);
  const SampleBatch batch = sample(correlated_example(), 100000, rng);
  const Vector x = batch.points.row(0).transpose();
  const Vector y = batch.points.row(1).transpose();
  const double cov = ((x.array() - x.mean()) * (y.array() - y.mean())).mean();
  EXPECT_LT(cov, 0.0);
}

TEST(Sample, GammaSmallShape) {
  RngStream rng(14);
  const IndependentProduct profile(AttributeSchema({"a"}), {GammaMarginal(0.3, 2.0)});
  const SampleBatch batch = sample(profile, 200000, rng);
  const Vector x = batch.points.row(0).transpose();
  // mean 0.15, variance 0.075
  EXPECT_NEAR(x.mean(), 0.15, 3 * std::sqrt(0.075 / 200000));
  EXPECT_GE(x.minCoeff(), 0.0);
}

TEST(RectangleProbability, RunningExampleMatchesQuadrature) {
  const double p = rectangle_probability(running_example(), reference_box());
  const double tp = test::simpson(60, 100, 2000, [](double x) {
    return std::exp(-0.5 * (x - 50) * (x - 50) / 300) / std::sqrt(600 * kPi);
  });
  const double rt = test::simpson(0, 300, 2000, [](double x) {
    return 1e-6 / 2.0 * x * x * std::exp(-0.01 * x);
  });
  EXPECT_NEAR(p, tp * rt, 1e-10);
  EXPECT_NEAR(p, 0.1615, 1e-4);
}

TEST(RectangleProbability, EdgeCases) {
  Vector lo(2), hi(2);
  lo << 60, 10;
  hi << 60, 300;
  EXPECT_EQ(rectangle_probability(running_example(), Box(lo, lo)), 0.0);
  EXPECT_EQ(rectangle_probability(running_example(), Box(lo, hi)), 0.0);

  const IndependentProduct normal(AttributeSchema({"z"}), {GaussianMarginal(0, 1)});
  Vector a(1), b(1);
  a << -1e10;
  b << 1e10;
  EXPECT_NEAR(rectangle_probability(normal, Box(a, b)), 1.0, 1e-12);

  EXPECT_THROW(rectangle_probability(correlated_example(), reference_box()), InvalidArgument);
}

// Box covering every one of 1e6 draws.
Box coverage_box(const QoSProfile& profile, std::uint64_t seed) {
  RngStream rng(seed);
  const SampleBatch batch = sample(profile, 1000000, rng);
  return Box(batch.points.rowwise().minCoeff(), batch.points.rowwise().maxCoeff());
}

TEST(Normalization, BuiltInProfilesIntegrateToOne) {
  const IndependentProduct ind = running_example();
  const CorrelatedTPRT corr = correlated_example();
  for (const QoSProfile* profile : {static_cast<const QoSProfile*>(&ind),
                                    static_cast<const QoSProfile*>(&corr)}) {
    const Box box = coverage_box(*profile, 31);
    const IntegralEstimate est = integrate_box_stratified(*profile, box, 1000000, RngStream(32));
    EXPECT_GE(est.value, 0.999) << profile->kind();
    EXPECT_LE(est.value, 1.001) << profile->kind();
  }
}

TEST(SamplerDensityConsistency, Independent) {
  const IndependentProduct profile = running_example();
  RngStream rng(41);
  const SampleBatch batch = sample(profile, 1000000, rng);
  const Box box = reference_box();
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < batch.points.cols(); ++i) hits += box.contains(batch.points.col(i));
  const double p = rectangle_probability(profile, box);
  const double phat = static_cast<double>(hits) / 1e6;
  EXPECT_NEAR(phat, p, 3 * std::sqrt(p * (1 - p) / 1e6));
}

TEST(SamplerDensityConsistency, Correlated) {
  const CorrelatedTPRT profile = correlated_example();
  RngStream rng(42);
  const SampleBatch batch = sample(profile, 1000000, rng);
  const Box box = reference_box();
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < batch.points.cols(); ++i) hits += box.contains(batch.points.col(i));
  const double phat = static_cast<double>(hits) / 1e6;
  const IntegralEstimate est =
      integrate_uniform(profile, test::reference_box_region(), 1000000, RngStream(43));
  const double se = std::hypot(std::sqrt(phat * (1 - phat) / 1e6), est.std_error);
  EXPECT_NEAR(phat, est.value, 3 * se);
}

TEST(AttributeSchema, Validation) {
  EXPECT_THROW(AttributeSchema(std::vector<std::string>{}), InvalidArgument);
  EXPECT_THROW(AttributeSchema({"TP", "TP"}), InvalidArgument);
  EXPECT_THROW(AttributeSchema({"TP", ""}), InvalidArgument);
  const AttributeSchema s({"TP", "RT"});
  EXPECT_EQ(s.index_of("RT"), 1u);
  EXPECT_EQ(s.index_of("XX"), 2u);
}

TEST(Marginals, ParameterValidation) {
  EXPECT_THROW(GaussianMarginal(0, 0), InvalidArgument);
  EXPECT_THROW(GammaMarginal(0, 1), InvalidArgument);
  EXPECT_THROW(GammaMarginal(1, -1), InvalidArgument);
  EXPECT_THROW(IndependentProduct(test::tprt_schema(), {GaussianMarginal(0, 1)}), DimensionError);
}

}  // namespace
}  // namespace pqos

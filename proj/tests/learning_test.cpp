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

#include "pqos/learning.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "pqos/integrate.hpp"
#include "test_fixtures.hpp"

namespace pqos {
namespace {

const double kTwoPi = 2.0 * 3.14159265358979323846;

Matrix draw_rows(const QoSProfile& p, Eigen::Index m, std::uint64_t seed) {
  RngStream rng(seed);
  const Matrix pts = sample(p, static_cast<std::size_t>(m), rng).points;
  return pts.transpose();
}

// Direct evaluation of the product-kernel estimator.
double kde_oracle(const Matrix& obs, Kernel k, const Vector& h, const Vector& x) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < obs.rows(); ++i) {
    double term = 1.0;
    for (Eigen::Index j = 0; j < obs.cols(); ++j) {
      const double u = (x(j) - obs(i, j)) / h(j);
      term *= (k == Kernel::gaussian ? std::exp(-u * u / 2) / std::sqrt(kTwoPi) : std::exp(-std::abs(u)) / 2) / h(j);
    }
    sum += term;
  }
  return sum / static_cast<double>(obs.rows());
}

// Two-pass per-axis sample standard deviation.
Vector oracle_std(const Matrix& x) {
  Vector sd(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double mean = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) mean += x(i, j);
    mean /= static_cast<double>(x.rows());
    double ss = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) ss += (x(i, j) - mean) * (x(i, j) - mean);
    sd(j) = std::sqrt(ss / static_cast<double>(x.rows() - 1));
  }
  return sd;
}

QoSRecordSet fixture_records() {
  Matrix x(6, 2);
  x << 52.1, 210.0,
       47.3, 405.5,
       61.0, 150.25,
       39.8, 333.0,
       55.5, 289.0,
       44.4, 120.75;
  return QoSRecordSet(test::tprt_schema(), x);
}

TEST(Kde, SingleGaussianBumpPeak) {
  const KDEProfile p(test::tprt_schema(), Matrix::Zero(1, 2), Kernel::gaussian, Vector::Ones(2));
  EXPECT_NEAR(kde_density(p, Vector::Zero(2)), 1.0 / kTwoPi, 1e-15);
  EXPECT_NEAR(1.0 / kTwoPi, 0.1592, 1e-4);
  const KDEProfile e(test::tprt_schema(), Matrix::Zero(1, 2), Kernel::exponential, Vector::Ones(2));
  EXPECT_NEAR(kde_density(e, Vector::Zero(2)), 0.25, 1e-15);
}

TEST(Kde, MatchesDirectFormula) {
  const QoSRecordSet r = fixture_records();
  const Vector h = (Vector(2) << 4.0, 60.0).finished();
  for (const Kernel k : {Kernel::gaussian, Kernel::exponential}) {
    const KDEProfile p(r.schema, r.observations, k, h);
    RngStream rng(4);
    for (int t = 0; t < 200; ++t) {
      const Vector x = (Vector(2) << rng.uniform(30, 70), rng.uniform(50, 450)).finished();
      const double want = kde_oracle(r.observations, k, h, x);
      EXPECT_NEAR(kde_density(p, x), want, 1e-12 * want);
    }
  }
}

TEST(Kde, SymmetricPair) {
  Matrix obs(2, 2);
  obs << -1.0, 2.0, 1.0, -2.0;
  const KDEProfile p(test::tprt_schema(), obs, Kernel::gaussian, (Vector(2) << 0.7, 1.3).finished());
  const Vector a = (Vector(2) << 0.3, -0.4).finished();
  EXPECT_DOUBLE_EQ(kde_density(p, a), kde_density(p, -a));
  const KDEProfile q(test::tprt_schema(), obs, Kernel::exponential, (Vector(2) << 0.7, 1.3).finished());
  EXPECT_DOUBLE_EQ(kde_density(q, a), kde_density(q, -a));
}

TEST(Kde, RowPermutationInvariant) {
  const Matrix obs = draw_rows(test::correlated_example(), 300, 8);
  Matrix shuffled = obs.colwise().reverse();
  for (Eigen::Index i = 0; i + 7 < shuffled.rows(); i += 7) shuffled.row(i).swap(shuffled.row(i + 3));
  const Vector h = (Vector(2) << 5.0, 40.0).finished();
  for (const Kernel k : {Kernel::gaussian, Kernel::exponential}) {
    const KDEProfile a(test::tprt_schema(), obs, k, h);
    const KDEProfile b(test::tprt_schema(), shuffled, k, h);
    RngStream rng(1);
    for (int t = 0; t < 100; ++t) {
      const Vector x = (Vector(2) << rng.uniform(0, 100), rng.uniform(0, 800)).finished();
      EXPECT_EQ(kde_density(a, x), kde_density(b, x));
    }
  }
}

TEST(Kde, Validation) {
  EXPECT_THROW(KDEProfile(test::tprt_schema(), Matrix::Zero(1, 2), Kernel::gaussian, Vector::Zero(2)),
               InvalidArgument);
  EXPECT_THROW(KDEProfile(test::tprt_schema(), Matrix::Zero(1, 3), Kernel::gaussian, Vector::Ones(3)),
               DimensionError);
  const KDEProfile p(test::tprt_schema(), Matrix::Zero(1, 2), Kernel::gaussian, Vector::Ones(2));
  EXPECT_THROW(kde_density(p, Vector::Zero(3)), DimensionError);
}

TEST(Bandwidth, ScottAndSilvermanClosedForm) {
  const QoSRecordSet r = fixture_records();
  const Vector sd = oracle_std(r.observations);
  const double m = 6.0;
  const Vector scott = bandwidth_scott(r);
  const Vector silver = bandwidth_silverman(r);
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double want = sd(j) * std::pow(m, -1.0 / 6.0);
    EXPECT_NEAR(scott(j), want, 1e-12 * want);
    EXPECT_NEAR(silver(j), want, 1e-12 * want);
  }
}

TEST(Bandwidth, OneDimensionalSilvermanFactor) {
  Matrix x(5, 1);
  x << 1.0, 2.5, 2.0, 4.0, 7.5;
  const QoSRecordSet r(AttributeSchema(std::vector<std::string>{"RT"}), x);
  const double sd = oracle_std(x)(0);
  const double scott = sd * std::pow(5.0, -0.2);
  EXPECT_NEAR(bandwidth_scott(r)(0), scott, 1e-12 * scott);
  const double ratio = bandwidth_silverman(r)(0) / bandwidth_scott(r)(0);
  EXPECT_NEAR(ratio, std::pow(4.0 / 3.0, 0.2), 1e-12);
  EXPECT_NEAR(ratio, 1.0592, 1e-4);
}

TEST(Bandwidth, RunningExampleScale) {
  // Alternating +-c rows give sample standard deviation exactly sigma.
  const Eigen::Index m = 10000;
  const double s1 = std::sqrt(300.0), s2 = std::sqrt(3.0) / 0.01;
  const double c = std::sqrt(static_cast<double>(m - 1) / static_cast<double>(m));
  Matrix x(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sign = i % 2 ? 1.0 : -1.0;
    x(i, 0) = 50 + sign * s1 * c;
    x(i, 1) = 300 + sign * s2 * c;
  }
  const Vector h = bandwidth_scott(QoSRecordSet(test::tprt_schema(), x));
  EXPECT_NEAR(h(0), 3.73, 0.005);
  EXPECT_NEAR(h(1), 37.3, 0.05);
  EXPECT_NEAR(h(0), s1 * std::pow(1e4, -1.0 / 6.0), 1e-9);
}

TEST(Bandwidth, ScalingHomogeneity) {
  const QoSRecordSet r = fixture_records();
  const QoSRecordSet scaled(r.schema, 3.5 * r.observations);
  EXPECT_TRUE(bandwidth_scott(scaled).isApprox(3.5 * bandwidth_scott(r), 1e-14));
  EXPECT_TRUE(bandwidth_silverman(scaled).isApprox(3.5 * bandwidth_silverman(r), 1e-14));
}

TEST(Bandwidth, Preconditions) {
  EXPECT_THROW(QoSRecordSet(AttributeSchema(std::vector<std::string>{"x"}), Matrix::Zero(1, 1)), InvalidArgument);
  Matrix flat(3, 2);
  flat << 1, 2, 1, 3, 1, 4;
  EXPECT_THROW(bandwidth_scott(QoSRecordSet(test::tprt_schema(), flat)), InvalidArgument);
}

TEST(CrossValidation, StandardGaussianPicksModerateMultiplier) {
  const IndependentProduct g(AttributeSchema(std::vector<std::string>{"a", "b"}),
                             {GaussianMarginal(0, 1), GaussianMarginal(0, 1)});
  const QoSRecordSet r(g.schema(), draw_rows(g, 600, 31));
  const KDEProfile p = fit_kde_cv(r, {Kernel::gaussian}, default_bandwidth_grid(), 5, RngStream(2));
  EXPECT_GE(p.fit().multiplier, 0.5);
  EXPECT_LE(p.fit().multiplier, 2.0);
  EXPECT_EQ(p.fit().candidates.size(), default_bandwidth_grid().size());
  double best = -1e300;
  for (const auto& c : p.fit().candidates) best = std::max(best, c.score);
  EXPECT_EQ(*p.fit().score, best);
  EXPECT_TRUE(p.bandwidths().isApprox(p.fit().multiplier * bandwidth_scott(r), 1e-14));
}

TEST(CrossValidation, Deterministic) {
  const QoSRecordSet r(test::tprt_schema(), draw_rows(test::correlated_example(), 300, 5));
  const auto kernels = std::vector<Kernel>{Kernel::gaussian, Kernel::exponential};
  const KDEProfile a = fit_kde_cv(r, kernels, default_bandwidth_grid(), 4, RngStream(9));
  const KDEProfile b = fit_kde_cv(r, kernels, default_bandwidth_grid(), 4, RngStream(9), 3);
  EXPECT_EQ(a.kernel(), b.kernel());
  EXPECT_EQ(a.bandwidths(), b.bandwidths());
  EXPECT_EQ(*a.fit().score, *b.fit().score);
}

TEST(CrossValidation, Preconditions) {
  const QoSRecordSet r = fixture_records();
  EXPECT_THROW(fit_kde_cv(r, {Kernel::gaussian}, {1.0}, 7, RngStream(1)), InvalidArgument);
  EXPECT_THROW(fit_kde_cv(r, {Kernel::gaussian}, {}, 2, RngStream(1)), InvalidArgument);
  EXPECT_THROW(fit_kde_cv(r, {}, {1.0}, 2, RngStream(1)), InvalidArgument);
  EXPECT_NO_THROW(fit_kde_cv(r, {Kernel::exponential}, {1.0}, 6, RngStream(1)));
}

TEST(CrossValidation, CorrelatedRecordsGiveNormalizedProfile) {
  const QoSRecordSet r(test::tprt_schema(), draw_rows(test::correlated_example(), 1000, 77));
  const KDEProfile p = fit_kde_cv(r, {Kernel::gaussian, Kernel::exponential}, default_bandwidth_grid(), 5,
                                  RngStream(3));
  ASSERT_TRUE(p.fit().score.has_value());
  EXPECT_TRUE(std::isfinite(*p.fit().score));
  const IntegralEstimate total = integrate_box_stratified(p, p.coverage_box(), 1'000'000, RngStream(6));
  EXPECT_NEAR(total.value, 1.0, 0.002);
}

TEST(Kde, ExponentialNormalization) {
  const QoSRecordSet r(test::tprt_schema(), draw_rows(test::correlated_example(), 100, 12));
  const KDEProfile p = fit_kde(r, Kernel::exponential, BandwidthRule::silverman);
  const IntegralEstimate total = integrate_box_stratified(p, p.coverage_box(), 1'000'000, RngStream(6));
  EXPECT_NEAR(total.value, 1.0, 0.002);
}

TEST(Kde, MixtureDrawMoments) {
  const QoSRecordSet r = fixture_records();
  const Vector h = (Vector(2) << 3.0, 25.0).finished();
  for (const Kernel k : {Kernel::gaussian, Kernel::exponential}) {
    const KDEProfile p(r.schema, r.observations, k, h);
    RngStream rng(21);
    const Matrix pts = sample(p, 200'000, rng).points;
    const Vector mean = r.observations.colwise().mean().transpose();
    // Mixture variance: population variance of the rows plus kernel variance.
    const double kv = k == Kernel::gaussian ? 1.0 : 2.0;
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double pop = (r.observations.col(j).array() - mean(j)).square().mean();
      const double var = pop + kv * h(j) * h(j);
      const Vector col = pts.row(j).transpose();
      EXPECT_NEAR(col.mean(), mean(j), 4 * std::sqrt(var / 200'000.0));
      const double sv = (col.array() - col.mean()).square().mean();
      EXPECT_NEAR(sv, var, 0.02 * var);
    }
  }
}

TEST(Csv, ReadsRecords) {
  std::istringstream in("TP, RT\n50.5,200\n  60 , 1e2\r\n\n+40,300.25\n");
  const QoSRecordSet r = read_records_csv(in);
  EXPECT_EQ(r.schema.names(), test::tprt_schema().names());
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r.observations(1, 1), 100.0);
  EXPECT_EQ(r.observations(2, 0), 40.0);
}

TEST(Csv, RejectsBadInput) {
  auto parse = [](const char* text) {
    std::istringstream in(text);
    return read_records_csv(in);
  };
  EXPECT_THROW(parse("TP,RT\n1,2\n"), FormatError);
  EXPECT_THROW(parse("TP,RT\n1,2\n3,\n"), FormatError);
  EXPECT_THROW(parse("TP,RT\n1,2\n3\n"), FormatError);
  EXPECT_THROW(parse("TP,RT\n1,2\n3,x\n"), FormatError);
  EXPECT_THROW(parse("TP,RT\n1,2\n3,nan\n"), FormatError);
  EXPECT_THROW(parse("TP,TP\n1,2\n3,4\n"), FormatError);
  EXPECT_THROW(parse(""), FormatError);
}

}  // namespace
}  // namespace pqos

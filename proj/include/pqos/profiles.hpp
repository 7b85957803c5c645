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

#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "pqos/error.hpp"
#include "pqos/geometry.hpp"
#include "pqos/rng.hpp"
#include "pqos/special_functions.hpp"

namespace pqos {

/// Ordered, unique attribute names a_1..a_n.
class AttributeSchema {
 public:
  AttributeSchema() = default;
  explicit AttributeSchema(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw InvalidArgument("AttributeSchema: no attributes");
    std::set<std::string> seen;
    for (const auto& name : names_) {
      if (name.empty()) throw InvalidArgument("AttributeSchema: empty attribute name");
      if (!seen.insert(name).second) {
        throw InvalidArgument("AttributeSchema: duplicate attribute '" + name + "'");
      }
    }
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& operator[](std::size_t i) const { return names_[i]; }

  /// Index of `name`, or size() when absent.
  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return i;
    }
    return names_.size();
  }

  friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;

 private:
  std::vector<std::string> names_;
};

struct GaussianMarginal {
  double mean = 0.0;
  double variance = 1.0;

  GaussianMarginal(double mu, double var) : mean(mu), variance(var) {
    if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(mean)) {
      throw InvalidArgument("GaussianMarginal: variance must be positive and finite");
    }
  }

  double pdf(double x) const {
    const double z = (x - mean) / std::sqrt(variance);
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * special::kPi * variance);
  }
  double cdf(double x) const { return special::normal_cdf((x - mean) / std::sqrt(variance)); }
  double sample(RngStream& rng) const { return mean + std::sqrt(variance) * rng.normal(); }
};

struct GammaMarginal {
  double shape = 1.0;
  double rate = 1.0;

  GammaMarginal(double alpha, double beta) : shape(alpha), rate(beta) {
    if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
      throw InvalidArgument("GammaMarginal: shape and rate must be positive and finite");
    }
  }

  double pdf(double x) const { return pdf(x, shape, rate); }
  double cdf(double x) const { return special::gamma_p(shape, rate * x); }
  double sample(RngStream& rng) const { return rng.gamma(shape) / rate; }

  static double pdf(double x, double alpha, double beta) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) {
      if (alpha < 1.0) return std::numeric_limits<double>::infinity();
      return alpha == 1.0 ? beta : 0.0;
    }
    return std::exp(alpha * std::log(beta) - std::lgamma(alpha) +
                    (alpha - 1.0) * std::log(x) - beta * x);
  }
};

using Marginal = std::variant<GaussianMarginal, GammaMarginal>;

/// Joint density f_X over an attribute schema, with forward sampling.
class QoSProfile {
 public:
  explicit QoSProfile(AttributeSchema schema) : schema_(std::move(schema)) {}
  virtual ~QoSProfile() = default;

  const AttributeSchema& schema() const { return schema_; }
  std::size_t dimension() const { return schema_.size(); }

  /// Family tag used by the JSON format.
  virtual std::string kind() const = 0;

  /// f_X(point); callers guarantee point.size() == dimension().
  virtual double density(const Eigen::Ref<const Vector>& point) const = 0;

  /// One draw into `out`. Returns the number of internal redraws.
  virtual std::size_t draw(RngStream& rng, Eigen::Ref<Vector> out) const = 0;

 private:
  AttributeSchema schema_;
};

using ProfilePtr = std::shared_ptr<const QoSProfile>;

/// f(x) = prod_i f_i(x_i).
class IndependentProduct final : public QoSProfile {
 public:
  IndependentProduct(AttributeSchema schema, std::vector<Marginal> marginals)
      : QoSProfile(std::move(schema)), marginals_(std::move(marginals)) {
    if (marginals_.size() != dimension()) {
      throw DimensionError("IndependentProduct: one marginal per attribute required");
    }
  }

  std::string kind() const override { return "independent"; }
  const std::vector<Marginal>& marginals() const { return marginals_; }

  double density(const Eigen::Ref<const Vector>& point) const override {
    double f = 1.0;
    for (std::size_t i = 0; i < marginals_.size() && f > 0.0; ++i) {
      const double x = point(static_cast<Eigen::Index>(i));
      f *= std::visit([x](const auto& m) { return m.pdf(x); }, marginals_[i]);
    }
    return f;
  }

  std::size_t draw(RngStream& rng, Eigen::Ref<Vector> out) const override {
    for (std::size_t i = 0; i < marginals_.size(); ++i) {
      out(static_cast<Eigen::Index>(i)) =
          std::visit([&rng](const auto& m) { return m.sample(rng); }, marginals_[i]);
    }
    return 0;
  }

 private:
  std::vector<Marginal> marginals_;
};

/// TP ~ Gaussian(mu, sigma2), RT | TP ~ Gamma(alpha - (TP - mu)/mu, beta).
///
/// The conditional shape is nonpositive for TP >= mu (1 + alpha); the density
/// is 0 there (a support clip, counted) and sampling redraws TP.
class CorrelatedTPRT final : public QoSProfile {
 public:
  CorrelatedTPRT(AttributeSchema schema, double mu, double sigma2, double alpha, double beta)
      : QoSProfile(std::move(schema)), mu_(mu), sigma2_(sigma2), alpha_(alpha), beta_(beta),
        tp_(mu, sigma2) {
    if (dimension() != 2) throw DimensionError("CorrelatedTPRT: schema must have 2 attributes");
    if (mu == 0.0 || !std::isfinite(mu)) throw InvalidArgument("CorrelatedTPRT: mu must be nonzero");
    GammaMarginal check(alpha, beta);
    (void)check;
  }

  std::string kind() const override { return "correlated_tprt"; }
  double mu() const { return mu_; }
  double sigma2() const { return sigma2_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  double conditional_shape(double tp) const { return alpha_ - (tp - mu_) / mu_; }

  double density(const Eigen::Ref<const Vector>& point) const override {
    const double shape = conditional_shape(point(0));
    if (!(shape > 0.0)) {
      clips_.fetch_add(1, std::memory_order_relaxed);
      return 0.0;
    }
    return tp_.pdf(point(0)) * GammaMarginal::pdf(point(1), shape, beta_);
  }

  std::size_t draw(RngStream& rng, Eigen::Ref<Vector> out) const override {
    std::size_t redraws = 0;
    double tp = tp_.sample(rng);
    while (!(conditional_shape(tp) > 0.0)) {
      ++redraws;
      tp = tp_.sample(rng);
    }
    out(0) = tp;
    out(1) = rng.gamma(conditional_shape(tp)) / beta_;
    return redraws;
  }

  /// Density evaluations that fell outside the conditional's support.
  std::uint64_t support_clips() const { return clips_.load(std::memory_order_relaxed); }

 private:
  double mu_, sigma2_, alpha_, beta_;
  GaussianMarginal tp_;
  mutable std::atomic<std::uint64_t> clips_{0};
};

inline double density_at(const QoSProfile& profile, const Eigen::Ref<const Vector>& point) {
  check_dimension(profile.dimension(), point.size(), "density_at");
  return profile.density(point);
}

struct SampleBatch {
  Matrix points;  // n x k, one draw per column
  std::size_t redraws = 0;
};

inline SampleBatch sample(const QoSProfile& profile, std::size_t k, RngStream& rng) {
  if (k < 1) throw InvalidArgument("sample: k must be >= 1");
  SampleBatch batch;
  batch.points.resize(static_cast<Eigen::Index>(profile.dimension()),
                      static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    batch.redraws += profile.draw(rng, batch.points.col(static_cast<Eigen::Index>(i)));
  }
  return batch;
}

/// P(X in box) = prod_i (F_i(upper_i) - F_i(lower_i)) for an independent
/// product. Throws for any other profile family.
inline double rectangle_probability(const QoSProfile& profile, const Box& box) {
  const auto* product = dynamic_cast<const IndependentProduct*>(&profile);
  if (product == nullptr) {
    throw InvalidArgument("rectangle_probability: requires an independent product profile");
  }
  if (box.dimension() != profile.dimension()) {
    throw DimensionError("rectangle_probability: box dimension differs from schema");
  }
  double p = 1.0;
  for (std::size_t i = 0; i < product->marginals().size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const double lo = box.lower()(idx);
    const double hi = box.upper()(idx);
    if (lo == hi) return 0.0;
    p *= std::visit([&](const auto& m) { return m.cdf(hi) - m.cdf(lo); },
                    product->marginals()[i]);
  }
  return p;
}

}  // namespace pqos

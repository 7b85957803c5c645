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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pqos/error.hpp"
#include "pqos/lp.hpp"
#include "pqos/parallel.hpp"
#include "pqos/rng.hpp"

namespace pqos {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned box [lower, upper].
class Box {
 public:
  Box() = default;
  Box(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.size() == 0) {
      throw DimensionError("Box: lower and upper must have the same nonzero length");
    }
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
      if (!(lower_(i) <= upper_(i)) || !std::isfinite(lower_(i)) ||
          !std::isfinite(upper_(i))) {
        throw InvalidArgument("Box: require finite lower <= upper on every axis");
      }
    }
  }

  std::size_t dimension() const { return static_cast<std::size_t>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  double volume() const { return (upper_ - lower_).prod(); }

  bool contains(const Eigen::Ref<const Vector>& point) const {
    return (point.array() >= lower_.array()).all() &&
           (point.array() <= upper_.array()).all();
  }

  /// Uniform point in the box, written into `out`.
  void sample(RngStream& rng, Eigen::Ref<Vector> out) const {
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
      out(i) = std::min(upper_(i), lower_(i) + (upper_(i) - lower_(i)) * rng.uniform());
    }
  }

 private:
  Vector lower_;
  Vector upper_;
};

namespace detail {

// 2n LP solves; throws UnboundedError on the first open direction.
inline std::pair<Box, std::vector<Vector>> lp_bounding_box(const Matrix& a,
                                                            const Vector& b) {
  const Eigen::Index n = a.cols();
  Vector lower(n), upper(n);
  std::vector<Vector> extremes;
  extremes.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector c = Vector::Unit(n, i);
    for (Sense sense : {Sense::minimize, Sense::maximize}) {
      LpResult r = solve_lp(c, a, b, sense);
      if (r.status == LpStatus::unbounded) {
        throw UnboundedError("region is unbounded along attribute " +
                             std::to_string(i + 1));
      }
      (sense == Sense::minimize ? lower : upper)(i) = r.value;
      extremes.push_back(std::move(r.point));
    }
  }
  // Roundoff can leave lower a hair above upper on zero-width axes.
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lower(i) > upper(i)) lower(i) = upper(i) = 0.5 * (lower(i) + upper(i));
  }
  return {Box(std::move(lower), std::move(upper)), std::move(extremes)};
}

}  // namespace detail

/// Bounded polyhedral region {x : A x <= b} over named attributes.
///
/// Construction rejects empty, unbounded and ill-formed systems, so every
/// HPolytope in circulation has a finite bounding box.
class HPolytope {
 public:
  HPolytope(Matrix a, Vector b, std::vector<std::string> attribute_names)
      : a_(std::move(a)), b_(std::move(b)), names_(std::move(attribute_names)) {
    if (a_.rows() < 1 || a_.cols() < 1) {
      throw InvalidArgument("HPolytope: need at least one constraint and one attribute");
    }
    if (b_.size() != a_.rows()) {
      throw DimensionError("HPolytope: bounds length differs from constraint count");
    }
    if (names_.size() != static_cast<std::size_t>(a_.cols())) {
      throw DimensionError("HPolytope: attribute name count differs from column count");
    }
    if (!a_.allFinite() || !b_.allFinite()) {
      throw InvalidArgument("HPolytope: non-finite coefficient");
    }
    for (Eigen::Index r = 0; r < a_.rows(); ++r) {
      if ((a_.row(r).array() == 0.0).all()) {
        throw InvalidArgument("HPolytope: constraint row " + std::to_string(r + 1) +
                              " has no nonzero coefficient");
      }
    }
    box_ = detail::lp_bounding_box(a_, b_).first;
  }

  /// Unnamed attributes x1..xn.
  HPolytope(Matrix a, Vector b) : HPolytope(a, b, default_names(a.cols())) {}

  std::size_t dimension() const { return static_cast<std::size_t>(a_.cols()); }
  std::size_t constraint_count() const { return static_cast<std::size_t>(a_.rows()); }
  const Matrix& constraint_matrix() const { return a_; }
  const Vector& bounds() const { return b_; }
  const std::vector<std::string>& attribute_names() const { return names_; }
  const Box& box() const { return box_; }

  Vector slacks(const Eigen::Ref<const Vector>& point) const { return b_ - a_ * point; }

  /// H-representation of an axis-aligned box.
  static HPolytope box_region(const Box& box, std::vector<std::string> names) {
    const Eigen::Index n = static_cast<Eigen::Index>(box.dimension());
    Matrix a(2 * n, n);
    a << Matrix::Identity(n, n), -Matrix::Identity(n, n);
    Vector b(2 * n);
    b << box.upper(), -box.lower();
    return HPolytope(std::move(a), std::move(b), std::move(names));
  }

  static std::vector<std::string> default_names(Eigen::Index n) {
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
    return names;
  }

 private:
  Matrix a_;
  Vector b_;
  std::vector<std::string> names_;
  Box box_;
};

inline void check_dimension(std::size_t expected, Eigen::Index got, const char* what) {
  if (static_cast<std::size_t>(got) != expected) {
    throw DimensionError(std::string(what) + ": point has dimension " +
                         std::to_string(got) + ", expected " + std::to_string(expected));
  }
}

/// A x <= b, compared exactly; boundary points are members.
inline bool contains(const HPolytope& poly, const Eigen::Ref<const Vector>& point) {
  check_dimension(poly.dimension(), point.size(), "contains");
  const Matrix& a = poly.constraint_matrix();
  const Vector& b = poly.bounds();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    if (a.row(r).dot(point) > b(r)) return false;
  }
  return true;
}

inline LpResult solve_lp(const Vector& objective, const HPolytope& poly, Sense sense) {
  check_dimension(poly.dimension(), objective.size(), "solve_lp");
  return solve_lp(objective, poly.constraint_matrix(), poly.bounds(), sense);
}

inline const Box& bounding_box(const HPolytope& poly) { return poly.box(); }

inline constexpr double kSimplexTolerance = 1e-9;

/// Convex hull of n+1 affinely independent points in R^n.
class Simplex {
 public:
  /// `vertices` holds one vertex per column (n rows, n+1 columns).
  explicit Simplex(Matrix vertices) : vertices_(std::move(vertices)) {
    const Eigen::Index n = vertices_.rows();
    if (n < 1 || vertices_.cols() != n + 1) {
      throw DimensionError("Simplex: need n+1 vertices in R^n");
    }
    edges_ = vertices_.rightCols(n).colwise() - vertices_.col(0);
    lu_ = Eigen::FullPivLU<Matrix>(edges_);
    const double scale = std::max(1.0, edges_.cwiseAbs().maxCoeff());
    lu_.setThreshold(kSimplexTolerance / scale);
    if (lu_.rank() != n) {
      throw DegenerateError("Simplex: vertices are affinely dependent");
    }
  }

  std::size_t dimension() const { return static_cast<std::size_t>(vertices_.rows()); }
  const Matrix& vertices() const { return vertices_; }

  /// Coordinates t_0..t_n with sum 1 and x = sum t_i x_i.
  Vector barycentric(const Eigen::Ref<const Vector>& point) const {
    check_dimension(dimension(), point.size(), "Simplex::barycentric");
    const Eigen::Index n = vertices_.rows();
    Vector t(n + 1);
    t.tail(n) = lu_.solve(point - vertices_.col(0));
    t(0) = 1.0 - t.tail(n).sum();
    return t;
  }

  double volume() const {
    double f = 1.0;
    for (Eigen::Index i = 2; i <= vertices_.rows(); ++i) f *= static_cast<double>(i);
    return std::abs(edges_.determinant()) / f;
  }

 private:
  Matrix vertices_;
  Matrix edges_;
  Eigen::FullPivLU<Matrix> lu_;
};

inline bool simplex_contains(const Simplex& s, const Eigen::Ref<const Vector>& point) {
  return (s.barycentric(point).array() >= -kSimplexTolerance).all();
}

inline constexpr double kBarrierTolerance = 1e-8;

/// Minimizer of -sum log(b_j - a_j^T x).
///
/// Phase 1 finds the Chebyshev center by LP (a strictly interior point when
/// one exists); damped Newton with backtracking then minimizes the barrier.
inline Vector analytic_center(const HPolytope& poly, int max_iterations = 200) {
  const Matrix& a = poly.constraint_matrix();
  const Vector& b = poly.bounds();
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();

  Matrix lifted(m, n + 1);
  lifted.leftCols(n) = a;
  lifted.col(n) = a.rowwise().norm();
  Vector objective = Vector::Unit(n + 1, n);
  LpResult cheb = solve_lp(objective, lifted, b, Sense::maximize);
  const double scale = std::max(1.0, poly.box().upper().cwiseAbs().maxCoeff() +
                                         poly.box().lower().cwiseAbs().maxCoeff());
  if (cheb.status != LpStatus::optimal || cheb.value <= 1e-12 * scale) {
    throw DegenerateError("analytic_center: region has empty interior");
  }
  Vector x = cheb.point.head(n);
  if ((poly.slacks(x).array() <= 0.0).any()) {
    throw DegenerateError("analytic_center: no strictly feasible start");
  }

  auto barrier = [&](const Vector& p) { return -poly.slacks(p).array().log().sum(); };

  for (int it = 0; it < max_iterations; ++it) {
    const Vector inv = poly.slacks(x).cwiseInverse();
    const Vector grad = a.transpose() * inv;
    if (grad.norm() <= kBarrierTolerance) return x;
    const Matrix hess = a.transpose() * inv.cwiseAbs2().asDiagonal() * a;
    Eigen::LLT<Matrix> llt(hess);
    if (llt.info() != Eigen::Success) {
      throw ConvergenceError("analytic_center: barrier Hessian is singular");
    }
    const Vector step = -llt.solve(grad);
    const double decrement = -grad.dot(step);
    // Affine-invariant stop: the remaining gain is below double resolution.
    if (decrement <= 1e-24) return x;

    double t = 1.0;
    Vector trial = x + step;
    while ((poly.slacks(trial).array() <= 0.0).any()) {
      t *= 0.5;
      trial = x + t * step;
    }
    const double f0 = barrier(x);
    while (barrier(trial) > f0 - 0.25 * t * decrement && t > 1e-12) {
      t *= 0.5;
      trial = x + t * step;
    }
    x = trial;
  }
  throw ConvergenceError("analytic_center: Newton iteration did not converge");
}

struct VolumeEstimate {
  double volume = 0.0;
  double std_error = 0.0;
  std::size_t hits = 0;
  std::size_t samples = 0;
  double box_volume = 0.0;

  double acceptance_rate() const {
    return samples == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(samples);
  }
};

/// Vol(box) * hits / k from uniform samples in the bounding box.
///
/// Chunk c draws from rng.substream(c), so the result is independent of
/// `workers`.
inline VolumeEstimate estimate_volume(const HPolytope& poly, std::size_t k,
                                      const RngStream& rng, std::size_t workers = 1) {
  if (k < 1) throw InvalidArgument("estimate_volume: k must be >= 1");
  const Box& box = poly.box();
  VolumeEstimate est;
  est.samples = k;
  est.box_volume = box.volume();
  if (est.box_volume == 0.0) return est;

  const std::size_t chunks = chunk_count(k);
  std::vector<std::size_t> hits(chunks, 0);
  parallel_for(chunks, workers, [&](std::size_t c) {
    RngStream stream = rng.substream(c);
    Vector x(static_cast<Eigen::Index>(poly.dimension()));
    std::size_t h = 0;
    for (std::size_t i = 0, len = chunk_length(k, c); i < len; ++i) {
      box.sample(stream, x);
      if (contains(poly, x)) ++h;
    }
    hits[c] = h;
  });
  for (std::size_t h : hits) est.hits += h;
  const double p = est.acceptance_rate();
  est.volume = est.box_volume * p;
  est.std_error = est.box_volume * std::sqrt(p * (1.0 - p) / static_cast<double>(k));
  return est;
}

}  // namespace pqos

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

#include <cmath>
#include <cstddef>
#include <utility>

#include "pqos/error.hpp"
#include "pqos/geometry.hpp"
#include "pqos/rng.hpp"

namespace pqos {

/// Consecutive rejections after which rejection_sample gives up.
inline constexpr std::size_t kMaxConsecutiveRejections = 1'000'000;

/// k i.i.d. uniform points (columns of an n x k matrix) by rejection from the
/// bounding box.
inline Matrix rejection_sample(const HPolytope& poly, std::size_t k, RngStream& rng) {
  const auto n = static_cast<Eigen::Index>(poly.dimension());
  Matrix out(n, static_cast<Eigen::Index>(k));
  const Box& box = poly.box();
  Vector x(n);
  std::size_t misses = 0;
  for (std::size_t i = 0; i < k;) {
    box.sample(rng, x);
    if (contains(poly, x)) {
      out.col(static_cast<Eigen::Index>(i++)) = x;
      misses = 0;
    } else if (++misses >= kMaxConsecutiveRejections) {
      throw ThinRegionError(
          "rejection_sample: no accepted proposal in 1e6 draws; the region is too thin "
          "for box rejection, use the Dikin walk or reformulate the region");
    }
  }
  return out;
}

struct DikinWalkConfig {
  double radius = 1.0;
  std::size_t burn_in = 1000;
  std::size_t thinning = 20;

  /// radius 2 / sqrt(n), 1000 burn-in steps, every 20th state emitted.
  static DikinWalkConfig defaults(std::size_t n) {
    DikinWalkConfig c;
    c.radius = 2.0 / std::sqrt(static_cast<double>(n));
    return c;
  }

  void validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
      throw InvalidArgument("DikinWalkConfig: radius must be positive");
    }
    if (thinning < 1) throw InvalidArgument("DikinWalkConfig: thinning must be >= 1");
  }
};

/// Local log-barrier Hessian sum_j a_j a_j^T / (b_j - a_j^T x)^2.
inline Matrix barrier_hessian(const HPolytope& poly, const Eigen::Ref<const Vector>& x) {
  const Matrix& a = poly.constraint_matrix();
  const Vector inv = poly.slacks(x).cwiseInverse();
  return a.transpose() * inv.cwiseAbs2().asDiagonal() * a;
}

/// Metropolis correction sqrt(det H(y) / det H(x)) for the uniform target.
inline double dikin_acceptance_ratio(const Matrix& hx, const Matrix& hy) {
  const Eigen::LLT<Matrix> lx(hx), ly(hy);
  const double log_x = 2.0 * lx.matrixLLT().diagonal().array().log().sum();
  const double log_y = 2.0 * ly.matrixLLT().diagonal().array().log().sum();
  return std::exp(0.5 * (log_y - log_x));
}

struct DikinWalkResult {
  Matrix points;  // n x k
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t restarts = 0;
};

namespace detail {

struct DikinState {
  Vector x;
  Eigen::LLT<Matrix> chol;
  double log_det = 0.0;

  // False when the Hessian cannot be factored (state numerically on the
  // boundary).
  bool reset(const HPolytope& poly, Vector point) {
    x = std::move(point);
    chol.compute(barrier_hessian(poly, x));
    if (chol.info() != Eigen::Success) return false;
    log_det = 2.0 * chol.matrixLLT().diagonal().array().log().sum();
    return std::isfinite(log_det);
  }
};

}  // namespace detail

/// Dikin walk started at the analytic center.
///
/// Proposals are uniform in the ellipsoid {y : (y-x)^T H(x) (y-x) <= r^2}.
/// A proposal is rejected when it leaves the polytope or its own ellipsoid
/// does not contain x; otherwise it is accepted with probability
/// min(1, sqrt(det H(y) / det H(x))). After `burn_in` steps every
/// `thinning`-th state is emitted.
inline DikinWalkResult dikin_walk(const HPolytope& poly, std::size_t k,
                                  const DikinWalkConfig& config, RngStream& rng) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(poly.dimension());
  const double r2 = config.radius * config.radius;
  const Vector center = analytic_center(poly);

  DikinWalkResult result;
  result.points.resize(n, static_cast<Eigen::Index>(k));

  detail::DikinState current, proposal;
  if (!current.reset(poly, center)) {
    throw DegenerateError("dikin_walk: barrier Hessian singular at the analytic center");
  }

  Vector dir(n);
  const std::size_t total = config.burn_in + k * config.thinning;
  std::size_t emitted = 0;
  for (std::size_t step = 1; step <= total; ++step) {
    for (Eigen::Index i = 0; i < n; ++i) dir(i) = rng.normal();
    const double scale =
        config.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n)) / dir.norm();
    dir *= scale;
    Vector y = current.x + current.chol.matrixU().solve(dir);
    ++result.proposals;

    if ((poly.slacks(y).array() > 0.0).all()) {
      if (!proposal.reset(poly, std::move(y))) {
        ++result.restarts;
        current.reset(poly, center);
      } else {
        const Vector back = current.x - proposal.x;
        // back^T H(y) back = |L_y^T back|^2
        const double reverse = (proposal.chol.matrixU() * back).squaredNorm();
        const double log_ratio = 0.5 * (proposal.log_det - current.log_det);
        if (reverse <= r2 && (log_ratio >= 0.0 || std::log(rng.uniform_open()) < log_ratio)) {
          std::swap(current, proposal);
          ++result.accepted;
        }
      }
    }

    if (step > config.burn_in && (step - config.burn_in) % config.thinning == 0) {
      result.points.col(static_cast<Eigen::Index>(emitted++)) = current.x;
    }
  }
  return result;
}

}  // namespace pqos

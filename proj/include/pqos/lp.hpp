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
#include <limits>
#include <utility>
#include <vector>

#include "pqos/error.hpp"

namespace pqos {

enum class Sense { minimize, maximize };

enum class LpStatus { optimal, unbounded };

struct LpResult {
  LpStatus status = LpStatus::optimal;
  Eigen::VectorXd point;  // empty when unbounded
  double value = 0.0;
};

inline constexpr double kLpPivotTolerance = 1e-9;

namespace detail {

// Dense tableau over y >= 0 with equality rows T[:, 0..cols) y = T[:, cols].
// Bland's rule throughout, so the method terminates on degenerate problems.
class Tableau {
 public:
  Tableau(Eigen::MatrixXd table, std::vector<std::size_t> basis)
      : t_(std::move(table)), basis_(std::move(basis)) {}

  std::size_t rows() const { return static_cast<std::size_t>(t_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(t_.cols()) - 1; }
  double rhs(std::size_t r) const { return t_(r, cols()); }
  double at(std::size_t r, std::size_t c) const { return t_(r, c); }
  const std::vector<std::size_t>& basis() const { return basis_; }

  // Minimizes cost^T y using only columns with allowed[j]. Returns false when
  // the objective is unbounded below.
  bool minimize(const Eigen::VectorXd& cost, const std::vector<bool>& allowed) {
    const std::size_t nc = cols();
    Eigen::VectorXd reduced = cost;
    for (std::size_t r = 0; r < rows(); ++r) {
      const double cb = cost(basis_[r]);
      if (cb != 0.0) reduced -= cb * t_.row(r).head(nc).transpose();
    }
    for (;;) {
      std::size_t enter = nc;
      for (std::size_t j = 0; j < nc; ++j) {
        if (allowed[j] && reduced(j) < -kLpPivotTolerance) {
          enter = j;
          break;
        }
      }
      if (enter == nc) return true;

      std::size_t leave = rows();
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows(); ++r) {
        const double a = t_(r, enter);
        if (a <= kLpPivotTolerance) continue;
        const double ratio = rhs(r) / a;
        const bool better = leave == rows() || ratio < best_ratio - kLpPivotTolerance;
        const bool tie = !better && ratio <= best_ratio + kLpPivotTolerance &&
                         basis_[r] < basis_[leave];
        if (better || tie) {
          best_ratio = std::min(best_ratio, ratio);
          leave = r;
        }
      }
      if (leave == rows()) return false;
      pivot(leave, enter);
      const double rc = reduced(enter);
      reduced -= rc * t_.row(leave).head(nc).transpose();
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    t_.row(r) /= t_(r, c);
    for (std::size_t i = 0; i < rows(); ++i) {
      if (i == r) continue;
      const double factor = t_(i, c);
      if (factor != 0.0) t_.row(i) -= factor * t_.row(r);
    }
    basis_[r] = c;
  }

  Eigen::VectorXd solution() const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols()));
    for (std::size_t r = 0; r < rows(); ++r) y(basis_[r]) = rhs(r);
    return y;
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

/// Optimizes objective^T x subject to a * x <= b with x free.
///
/// Two-phase dense tableau simplex. Free variables are split as x = x+ - x-;
/// rows with negative right-hand side receive an artificial variable for the
/// phase-1 feasibility problem. Throws InfeasibleError when the system has no
/// solution; an unbounded objective is reported through the status.
inline LpResult solve_lp(const Eigen::VectorXd& objective,
                         const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                         Sense sense) {
  const auto m = static_cast<std::size_t>(a.rows());
  const auto n = static_cast<std::size_t>(a.cols());
  if (static_cast<std::size_t>(b.size()) != m ||
      static_cast<std::size_t>(objective.size()) != n) {
    throw DimensionError("solve_lp: inconsistent dimensions");
  }

  std::vector<std::size_t> artificial_rows;
  for (std::size_t i = 0; i < m; ++i) {
    if (b(i) < 0.0) artificial_rows.push_back(i);
  }
  const std::size_t n_art = artificial_rows.size();
  const std::size_t slack0 = 2 * n;
  const std::size_t art0 = slack0 + m;
  const std::size_t nc = art0 + n_art;

  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(nc + 1));
  std::vector<std::size_t> basis(m);
  std::size_t next_art = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      table(i, j) = sign * a(i, j);
      table(i, n + j) = -sign * a(i, j);
    }
    table(i, slack0 + i) = sign;
    table(i, nc) = sign * b(i);
    if (sign < 0.0) {
      table(i, art0 + next_art) = 1.0;
      basis[i] = art0 + next_art;
      ++next_art;
    } else {
      basis[i] = slack0 + i;
    }
  }

  detail::Tableau tab(std::move(table), std::move(basis));
  std::vector<bool> allowed(nc, true);

  if (n_art > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nc));
    phase1.tail(static_cast<Eigen::Index>(n_art)).setOnes();
    tab.minimize(phase1, allowed);
    double infeasibility = 0.0;
    for (std::size_t r = 0; r < tab.rows(); ++r) {
      if (tab.basis()[r] >= art0) infeasibility += tab.rhs(r);
    }
    if (infeasibility > 1e-7 * (1.0 + b.cwiseAbs().maxCoeff())) {
      throw InfeasibleError("linear system A x <= b is infeasible");
    }
    // Drive zero-level artificials out of the basis where possible; rows with
    // no usable pivot are redundant and keep a harmless zero artificial.
    for (std::size_t r = 0; r < tab.rows(); ++r) {
      if (tab.basis()[r] < art0) continue;
      for (std::size_t j = 0; j < art0; ++j) {
        if (std::abs(tab.at(r, j)) > kLpPivotTolerance) {
          tab.pivot(r, j);
          break;
        }
      }
    }
    for (std::size_t j = art0; j < nc; ++j) allowed[j] = false;
  }

  const double sign = sense == Sense::maximize ? -1.0 : 1.0;
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nc));
  for (std::size_t j = 0; j < n; ++j) {
    cost(j) = sign * objective(j);
    cost(n + j) = -sign * objective(j);
  }

  LpResult result;
  if (!tab.minimize(cost, allowed)) {
    result.status = LpStatus::unbounded;
    result.value = sense == Sense::maximize
                       ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
    return result;
  }
  const Eigen::VectorXd y = tab.solution();
  result.point = y.head(static_cast<Eigen::Index>(n)) -
                 y.segment(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  result.value = objective.dot(result.point);
  return result;
}

}  // namespace pqos

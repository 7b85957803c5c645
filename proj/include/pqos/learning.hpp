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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pqos/error.hpp"
#include "pqos/geometry.hpp"
#include "pqos/parallel.hpp"
#include "pqos/profiles.hpp"
#include "pqos/rng.hpp"
#include "pqos/special_functions.hpp"

namespace pqos {

enum class Kernel { gaussian, exponential };

inline const char* to_string(Kernel k) { return k == Kernel::gaussian ? "gaussian" : "exponential"; }

inline Kernel parse_kernel(const std::string& s) {
  if (s == "gaussian") return Kernel::gaussian;
  if (s == "exponential") return Kernel::exponential;
  throw InvalidArgument("unknown kernel '" + s + "' (expected gaussian or exponential)");
}

/// m observed QoS records (rows) over a schema.
struct QoSRecordSet {
  AttributeSchema schema;
  Matrix observations;  // m x n

  QoSRecordSet(AttributeSchema s, Matrix obs) : schema(std::move(s)), observations(std::move(obs)) {
    if (static_cast<std::size_t>(observations.cols()) != schema.size()) {
      throw DimensionError("QoSRecordSet: column count differs from schema size");
    }
    if (observations.rows() < 2) throw InvalidArgument("QoSRecordSet: at least two records required");
    if (!observations.allFinite()) throw InvalidArgument("QoSRecordSet: non-finite observation");
  }

  std::size_t size() const { return static_cast<std::size_t>(observations.rows()); }
  std::size_t dimension() const { return schema.size(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto comma = line.find(',');
    out.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) return out;
    line.remove_prefix(comma + 1);
  }
}

}  // namespace detail

/// Header row of attribute names, then one record per line. Blank lines are
/// skipped; empty fields and non-numeric values are rejected.
inline QoSRecordSet read_records_csv(std::istream& in, const std::string& source = "<csv>") {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  while (names.empty() && std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    for (auto field : detail::split_csv(line)) {
      if (field.empty()) throw FormatError(source + ":" + std::to_string(line_no) + ": empty column name");
      names.emplace_back(field);
    }
  }
  if (names.empty()) throw FormatError(source + ": missing header row");
  AttributeSchema schema = [&] {
    try {
      return AttributeSchema(names);
    } catch (const Error& e) {
      throw FormatError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }();

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != names.size()) {
      throw FormatError(source + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(names.size()) + " values, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto f = fields[j];
      const std::string where = source + ":" + std::to_string(line_no) + ": column '" + names[j] + "': ";
      if (f.empty()) throw FormatError(where + "missing value");
      double v = 0.0;
      const char* first = f.data();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw FormatError(where + "not a finite decimal number: '" + std::string(f) + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows < 2) throw FormatError(source + ": at least two records required, found " + std::to_string(rows));
  Matrix obs(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      obs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * names.size() + j];
    }
  }
  return QoSRecordSet(std::move(schema), std::move(obs));
}

inline QoSRecordSet load_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_records_csv(in, path);
}

/// Per-axis sample standard deviation (denominator m - 1).
inline Vector sample_std(const QoSRecordSet& records) {
  const Matrix& x = records.observations;
  const Vector mean = x.colwise().mean().transpose();
  const Vector sd = ((x.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() /
                     static_cast<double>(x.rows() - 1))
                        .cwiseSqrt();
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    if (!(sd(j) > 0.0)) {
      throw InvalidArgument("bandwidth: attribute '" + records.schema.names()[static_cast<std::size_t>(j)] +
                            "' has zero variance");
    }
  }
  return sd;
}

/// h_i = sd_i * m^(-1/(n+4)).
inline Vector bandwidth_scott(const QoSRecordSet& records) {
  const double n = static_cast<double>(records.dimension());
  const double m = static_cast<double>(records.size());
  return sample_std(records) * std::pow(m, -1.0 / (n + 4.0));
}

/// h_i = sd_i * (4/(n+2))^(1/(n+4)) * m^(-1/(n+4)).
inline Vector bandwidth_silverman(const QoSRecordSet& records) {
  const double n = static_cast<double>(records.dimension());
  const double m = static_cast<double>(records.size());
  return sample_std(records) * (std::pow(4.0 / (n + 2.0), 1.0 / (n + 4.0)) * std::pow(m, -1.0 / (n + 4.0)));
}

struct KdeCandidate {
  Kernel kernel = Kernel::gaussian;
  double multiplier = 1.0;
  double score = 0.0;  // mean held-out log density
};

/// How a KDE profile's kernel and bandwidths were chosen.
struct KdeFit {
  std::string method = "manual";  // manual | scott | silverman | cv
  double multiplier = 1.0;        // applied to the rule-of-thumb bandwidths
  std::optional<double> score;    // cv only
  std::size_t folds = 0;          // cv only
  std::vector<KdeCandidate> candidates;
};

/// f(x) = (1/m) sum_i prod_j (1/h_j) k((x_j - x_ij) / h_j) with the normalized
/// gaussian or exponential (Laplace) kernel k.
///
/// Rows are kept in lexicographic order so that evaluation is independent of
/// the input row order; terms whose axis-0 offset exceeds the cutoff are
/// below 1e-16 of the kernel peak and are skipped.
class KDEProfile final : public QoSProfile {
 public:
  KDEProfile(AttributeSchema schema, Matrix observations, Kernel kernel, Vector bandwidths,
             KdeFit fit = {})
      : QoSProfile(std::move(schema)), observations_(std::move(observations)), kernel_(kernel),
        bandwidths_(std::move(bandwidths)), fit_(std::move(fit)) {
    const auto n = static_cast<Eigen::Index>(dimension());
    if (observations_.cols() != n || bandwidths_.size() != n) {
      throw DimensionError("KDEProfile: observations/bandwidths do not match the schema");
    }
    if (observations_.rows() < 1) throw InvalidArgument("KDEProfile: no observations");
    if (!observations_.allFinite()) throw InvalidArgument("KDEProfile: non-finite observation");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(bandwidths_(j) > 0.0) || !std::isfinite(bandwidths_(j))) {
        throw InvalidArgument("KDEProfile: bandwidths must be positive and finite");
      }
    }
    build_index();
  }

  std::string kind() const override { return "kde"; }

  double density(const Eigen::Ref<const Vector>& x) const override {
    const double reach = cutoff() * bandwidths_(0);
    const auto lo = std::lower_bound(axis0_.begin(), axis0_.end(), x(0) - reach) - axis0_.begin();
    const auto hi = std::upper_bound(axis0_.begin(), axis0_.end(), x(0) + reach) - axis0_.begin();
    const Eigen::Index len = hi - lo;
    if (len == 0) return 0.0;
    thread_local Eigen::ArrayXd e;
    e.resize(len);
    for (Eigen::Index j = 0; j < sorted_.cols(); ++j) {
      const auto u = (x(j) - sorted_.col(j).segment(lo, len).array()) * inv_h_(j);
      if (kernel_ == Kernel::gaussian) {
        if (j == 0) e = 0.5 * u.square(); else e += 0.5 * u.square();
      } else {
        if (j == 0) e = u.abs(); else e += u.abs();
      }
    }
    return (-e).exp().sum() * norm_;
  }

  /// Mixture draw: a uniformly chosen observation plus scaled kernel noise.
  std::size_t draw(RngStream& rng, Eigen::Ref<Vector> out) const override {
    const std::size_t m = record_count();
    const auto i = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(m)), m - 1);
    const std::size_t n = dimension();
    for (std::size_t j = 0; j < n; ++j) {
      const double noise = kernel_ == Kernel::gaussian ? rng.normal() : rng.laplace();
      const auto jj = static_cast<Eigen::Index>(j);
      out(jj) = sorted_(static_cast<Eigen::Index>(i), jj) + bandwidths_(jj) * noise;
    }
    return 0;
  }

  const Matrix& observations() const { return observations_; }
  std::size_t record_count() const { return static_cast<std::size_t>(observations_.rows()); }
  Kernel kernel() const { return kernel_; }
  const Vector& bandwidths() const { return bandwidths_; }
  const KdeFit& fit() const { return fit_; }

  /// Box enclosing all observations padded by `pad` bandwidths per axis.
  Box coverage_box(double pad = 10.0) const {
    return Box(observations_.colwise().minCoeff().transpose() - pad * bandwidths_,
               observations_.colwise().maxCoeff().transpose() + pad * bandwidths_);
  }

 private:
  double cutoff() const { return kernel_ == Kernel::gaussian ? 8.6 : 37.0; }

  void build_index() {
    const std::size_t m = record_count();
    const std::size_t n = dimension();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      for (std::size_t j = 0; j < n; ++j) {
        const double va = observations_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
        const double vb = observations_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
        if (va != vb) return va < vb;
      }
      return false;
    });
    sorted_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    axis0_.resize(m);
    for (std::size_t r = 0; r < m; ++r) {
      sorted_.row(static_cast<Eigen::Index>(r)) = observations_.row(static_cast<Eigen::Index>(order[r]));
      axis0_[r] = sorted_(static_cast<Eigen::Index>(r), 0);
    }
    inv_h_ = bandwidths_.cwiseInverse();
    double log_norm = -std::log(static_cast<double>(m)) - bandwidths_.array().log().sum();
    log_norm += static_cast<double>(n) *
                (kernel_ == Kernel::gaussian ? -0.5 * std::log(2.0 * special::kPi) : -std::log(2.0));
    norm_ = std::exp(log_norm);
  }

  Matrix observations_;
  Kernel kernel_;
  Vector bandwidths_;
  KdeFit fit_;
  Matrix sorted_;  // rows in lexicographic order
  std::vector<double> axis0_;
  Vector inv_h_;
  double norm_ = 0.0;
};

inline double kde_density(const KDEProfile& profile, const Eigen::Ref<const Vector>& point) {
  if (static_cast<std::size_t>(point.size()) != profile.dimension()) {
    throw DimensionError("kde_density: point dimension differs from the profile");
  }
  return profile.density(point);
}

enum class BandwidthRule { scott, silverman };

inline const char* to_string(BandwidthRule r) { return r == BandwidthRule::scott ? "scott" : "silverman"; }

inline Vector rule_of_thumb(const QoSRecordSet& records, BandwidthRule rule) {
  return rule == BandwidthRule::scott ? bandwidth_scott(records) : bandwidth_silverman(records);
}

/// KDE with rule-of-thumb bandwidths times `multiplier`.
inline KDEProfile fit_kde(const QoSRecordSet& records, Kernel kernel, BandwidthRule rule,
                          double multiplier = 1.0) {
  if (!(multiplier > 0.0)) throw InvalidArgument("fit_kde: multiplier must be positive");
  KdeFit fit;
  fit.method = to_string(rule);
  fit.multiplier = multiplier;
  return KDEProfile(records.schema, records.observations, kernel, multiplier * rule_of_thumb(records, rule),
                    std::move(fit));
}

inline const std::vector<double>& default_bandwidth_grid() {
  static const std::vector<double> grid = {0.25, 0.35, 0.5, 0.71, 1.0, 1.41, 2.0, 2.83, 4.0};
  return grid;
}

namespace detail {

// Mean log density of held-out rows under a KDE of the training rows,
// by log-sum-exp over all training rows.
inline double held_out_log_likelihood(const Matrix& x, const std::vector<std::size_t>& train,
                                      const std::vector<std::size_t>& test, Kernel kernel,
                                      const Vector& h) {
  const Eigen::Index n = x.cols();
  double log_norm = -std::log(static_cast<double>(train.size())) - h.array().log().sum();
  log_norm += static_cast<double>(n) *
              (kernel == Kernel::gaussian ? -0.5 * std::log(2.0 * special::kPi) : -std::log(2.0));
  const Vector inv_h = h.cwiseInverse();
  std::vector<double> expo(train.size());
  double total = 0.0;
  for (const std::size_t t : test) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < train.size(); ++r) {
      double e = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double u = (x(static_cast<Eigen::Index>(t), j) - x(static_cast<Eigen::Index>(train[r]), j)) * inv_h(j);
        e += kernel == Kernel::gaussian ? 0.5 * u * u : std::abs(u);
      }
      expo[r] = -e;
      peak = std::max(peak, -e);
    }
    double s = 0.0;
    for (const double v : expo) s += std::exp(v - peak);
    total += peak + std::log(s) + log_norm;
  }
  return total;
}

}  // namespace detail

/// Maximum-likelihood cross-validation over kernels x (multiplier * rule of
/// thumb). Folds come from a random permutation drawn from `rng`; the best
/// mean held-out log density wins, ties going to the larger bandwidth.
inline KDEProfile fit_kde_cv(const QoSRecordSet& records, const std::vector<Kernel>& kernels,
                             const std::vector<double>& grid, std::size_t folds, RngStream rng,
                             std::size_t workers = 1, BandwidthRule rule = BandwidthRule::scott) {
  const std::size_t m = records.size();
  if (folds < 2) throw InvalidArgument("fit_kde_cv: at least two folds required");
  if (folds > m) {
    throw InvalidArgument("fit_kde_cv: " + std::to_string(folds) + " folds exceed " + std::to_string(m) +
                          " records");
  }
  if (kernels.empty() || grid.empty()) throw InvalidArgument("fit_kde_cv: empty kernel set or grid");
  for (const double g : grid) {
    if (!(g > 0.0) || !std::isfinite(g)) throw InvalidArgument("fit_kde_cv: grid multipliers must be positive");
  }

  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = m - 1; i > 0; --i) {
    const auto j = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1)), i);
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::vector<std::size_t>> train(folds), test(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t begin = f * m / folds, end = (f + 1) * m / folds;
    for (std::size_t p = 0; p < m; ++p) (p >= begin && p < end ? test[f] : train[f]).push_back(perm[p]);
  }

  const Vector base = rule_of_thumb(records, rule);
  std::vector<KdeCandidate> candidates;
  for (const Kernel k : kernels) {
    for (const double g : grid) candidates.push_back({k, g, 0.0});
  }
  parallel_for(candidates.size(), workers, [&](std::size_t c) {
    double total = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      total += detail::held_out_log_likelihood(records.observations, train[f], test[f], candidates[c].kernel,
                                               candidates[c].multiplier * base);
    }
    candidates[c].score = total / static_cast<double>(m);
  });

  const KdeCandidate* best = nullptr;
  for (const auto& c : candidates) {
    if (!std::isfinite(c.score)) continue;
    if (best == nullptr || c.score > best->score ||
        (c.score == best->score && c.multiplier > best->multiplier)) {
      best = &c;
    }
  }
  if (best == nullptr) throw ConvergenceError("fit_kde_cv: every candidate has a non-finite score");

  KdeFit fit;
  fit.method = "cv";
  fit.multiplier = best->multiplier;
  fit.score = best->score;
  fit.folds = folds;
  fit.candidates = candidates;
  const Kernel kernel = best->kernel;
  const Vector h = best->multiplier * base;
  return KDEProfile(records.schema, records.observations, kernel, h, std::move(fit));
}

}  // namespace pqos

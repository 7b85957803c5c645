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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pqos/error.hpp"
#include "pqos/geometry.hpp"
#include "pqos/parallel.hpp"
#include "pqos/profiles.hpp"
#include "pqos/rng.hpp"
#include "pqos/sampling.hpp"
#include "pqos/stats.hpp"

namespace pqos {

enum class IntegrationMethod { rejection_box, uniform_polytope };

enum class PointSampler { none, rejection, dikin };

inline const char* to_string(IntegrationMethod m) {
  return m == IntegrationMethod::rejection_box ? "rejection-box" : "uniform-polytope";
}

inline const char* to_string(PointSampler s) {
  switch (s) {
    case PointSampler::rejection: return "rejection";
    case PointSampler::dikin: return "dikin";
    default: return "none";
  }
}

/// Monte Carlo estimate of the integral of f_X over a region.
struct IntegralEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t k = 0;
  IntegrationMethod method = IntegrationMethod::uniform_polytope;
  std::optional<double> volume_used;
  PointSampler sampler = PointSampler::none;
};

/// Box acceptance rate at or above which exact rejection sampling is used;
/// below it the integrator switches to the Dikin walk.
inline constexpr double kRejectionAcceptanceThreshold = 0.05;

/// Default number of samples per constraint evaluation.
inline constexpr std::size_t kDefaultSamples = 200'000;

struct IntegrationOptions {
  std::size_t workers = 1;
  std::optional<DikinWalkConfig> dikin;  // defaults(n) when empty
};

inline void check_schema(const QoSProfile& profile, const HPolytope& region) {
  if (profile.schema().names() != region.attribute_names()) {
    std::string want, got;
    for (const auto& s : profile.schema().names()) want += s + " ";
    for (const auto& s : region.attribute_names()) got += s + " ";
    throw SchemaError("region attributes [ " + got + "] do not match profile schema [ " +
                      want + "]");
  }
}

/// Q_k = V * mean f(x_i) with x_i uniform in the region.
///
/// V comes from estimate_volume on rng.substream(0). Points come from exact
/// rejection sampling (substream 1, chunked) when the volume run accepted at
/// least 5% of box proposals, otherwise from one Dikin chain (substream 2).
/// std_error^2 = V^2 Var(f) / k + mean(f)^2 Var(V).
inline IntegralEstimate integrate_uniform(const QoSProfile& profile, const HPolytope& region,
                                          std::size_t k, const RngStream& rng,
                                          const IntegrationOptions& options = {}) {
  check_schema(profile, region);
  if (k < 2) throw InvalidArgument("integrate_uniform: k must be >= 2");

  IntegralEstimate est;
  est.k = k;
  est.method = IntegrationMethod::uniform_polytope;

  const VolumeEstimate vol = estimate_volume(region, k, rng.substream(0), options.workers);
  est.volume_used = vol.volume;
  if (vol.volume == 0.0) return est;

  RunningStats stats;
  if (vol.acceptance_rate() >= kRejectionAcceptanceThreshold) {
    est.sampler = PointSampler::rejection;
    const RngStream base = rng.substream(1);
    const std::size_t chunks = chunk_count(k);
    std::vector<RunningStats> partial(chunks);
    parallel_for(chunks, options.workers, [&](std::size_t c) {
      RngStream stream = base.substream(c);
      const Matrix pts = rejection_sample(region, chunk_length(k, c), stream);
      for (Eigen::Index i = 0; i < pts.cols(); ++i) partial[c].add(profile.density(pts.col(i)));
    });
    for (const auto& p : partial) stats.merge(p);
  } else {
    est.sampler = PointSampler::dikin;
    RngStream stream = rng.substream(2);
    const DikinWalkConfig config =
        options.dikin.value_or(DikinWalkConfig::defaults(region.dimension()));
    const DikinWalkResult walk = dikin_walk(region, k, config, stream);
    for (Eigen::Index i = 0; i < walk.points.cols(); ++i) {
      stats.add(profile.density(walk.points.col(i)));
    }
  }

  est.value = vol.volume * stats.mean;
  est.std_error = std::sqrt(vol.volume * vol.volume * stats.variance() / static_cast<double>(k) +
                            stats.mean * stats.mean * vol.std_error * vol.std_error);
  return est;
}

/// Vol(box) * mean(f * 1_R) with points uniform in the region's bounding box.
inline IntegralEstimate integrate_rejection_box(const QoSProfile& profile,
                                                const HPolytope& region, std::size_t k,
                                                const RngStream& rng,
                                                const IntegrationOptions& options = {}) {
  check_schema(profile, region);
  if (k < 2) throw InvalidArgument("integrate_rejection_box: k must be >= 2");

  IntegralEstimate est;
  est.k = k;
  est.method = IntegrationMethod::rejection_box;
  est.sampler = PointSampler::none;
  const Box& box = region.box();
  const double box_volume = box.volume();
  if (box_volume == 0.0) return est;

  const std::size_t chunks = chunk_count(k);
  std::vector<RunningStats> partial(chunks);
  parallel_for(chunks, options.workers, [&](std::size_t c) {
    RngStream stream = rng.substream(c);
    Vector x(static_cast<Eigen::Index>(region.dimension()));
    for (std::size_t i = 0, len = chunk_length(k, c); i < len; ++i) {
      box.sample(stream, x);
      partial[c].add(contains(region, x) ? profile.density(x) : 0.0);
    }
  });
  RunningStats stats;
  for (const auto& p : partial) stats.merge(p);
  est.value = box_volume * stats.mean;
  est.std_error = box_volume * stats.std_error();
  return est;
}

/// Jittered-grid (stratified) Monte Carlo integral of f_X over a box.
///
/// The box is cut into floor(k^(1/n)) cells per axis and one uniform point is
/// drawn in each cell. Unbiased like plain box sampling, with far smaller
/// variance for smooth densities; used for normalization checks over wide
/// covering boxes.
inline IntegralEstimate integrate_box_stratified(const QoSProfile& profile, const Box& box,
                                                 std::size_t k, const RngStream& rng,
                                                 std::size_t workers = 1) {
  const std::size_t n = profile.dimension();
  if (box.dimension() != n) throw DimensionError("integrate_box_stratified: box dimension");
  if (k < 2) throw InvalidArgument("integrate_box_stratified: k must be >= 2");
  auto per_axis = static_cast<std::size_t>(
      std::floor(std::pow(static_cast<double>(k), 1.0 / static_cast<double>(n)) + 1e-9));
  per_axis = std::max<std::size_t>(per_axis, 1);
  std::size_t cells = 1;
  for (std::size_t i = 0; i < n; ++i) cells *= per_axis;

  IntegralEstimate est;
  est.k = cells;
  est.method = IntegrationMethod::rejection_box;
  const double volume = box.volume();
  if (volume == 0.0) return est;
  const Vector width = (box.upper() - box.lower()) / static_cast<double>(per_axis);

  const std::size_t chunks = chunk_count(cells);
  std::vector<RunningStats> partial(chunks);
  parallel_for(chunks, workers, [&](std::size_t c) {
    RngStream stream = rng.substream(c);
    Vector x(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0, len = chunk_length(cells, c); j < len; ++j) {
      std::size_t cell = c * kChunkSize + j;
      for (std::size_t i = 0; i < n; ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        const double offset = static_cast<double>(cell % per_axis) + stream.uniform();
        cell /= per_axis;
        x(idx) = box.lower()(idx) + width(idx) * offset;
      }
      partial[c].add(profile.density(x));
    }
  });
  RunningStats stats;
  for (const auto& p : partial) stats.merge(p);
  est.value = volume * stats.mean;
  // Conservative: the i.i.d. formula bounds the stratified variance.
  est.std_error = volume * stats.std_error();
  return est;
}

struct ConvergenceRow {
  std::size_t k = 0;
  double mean_abs_error = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  /// Least-squares slope of log(error) on log(k); empty when some error is 0.
  std::optional<double> slope;
};

/// Mean |Q_k - truth| over seeds for each k, and the log-log error slope.
inline ConvergenceTable convergence_scan(const QoSProfile& profile, const HPolytope& region,
                                         const std::vector<std::size_t>& ks,
                                         const std::vector<std::uint64_t>& seeds, double truth,
                                         IntegrationMethod method = IntegrationMethod::uniform_polytope,
                                         const IntegrationOptions& options = {}) {
  if (std::set<std::size_t>(ks.begin(), ks.end()).size() < 3) {
    throw InvalidArgument("convergence_scan: need at least 3 distinct sample counts");
  }
  if (seeds.empty()) throw InvalidArgument("convergence_scan: need at least one seed");

  ConvergenceTable table;
  std::vector<double> log_k, log_err;
  bool any_zero = false;
  for (std::size_t k : ks) {
    double total = 0.0;
    for (std::uint64_t seed : seeds) {
      const RngStream rng(seed, k);
      const IntegralEstimate est = method == IntegrationMethod::uniform_polytope
                                       ? integrate_uniform(profile, region, k, rng, options)
                                       : integrate_rejection_box(profile, region, k, rng, options);
      total += std::abs(est.value - truth);
    }
    const double err = total / static_cast<double>(seeds.size());
    table.rows.push_back({k, err});
    if (err == 0.0) {
      any_zero = true;
    } else {
      log_k.push_back(std::log(static_cast<double>(k)));
      log_err.push_back(std::log(err));
    }
  }
  if (!any_zero) table.slope = fit_slope(log_k, log_err);
  return table;
}

}  // namespace pqos

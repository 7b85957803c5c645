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
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pqos/error.hpp"
#include "pqos/formula.hpp"
#include "pqos/integrate.hpp"
#include "pqos/profiles.hpp"
#include "pqos/rng.hpp"
#include "pqos/sat.hpp"

namespace pqos {

enum class Verdict { satisfied, violated, indeterminate };
enum class Mode { strict, confidence };
enum class Truth { false_, true_, indeterminate };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::satisfied: return "satisfied";
    case Verdict::violated: return "violated";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "";
}

inline const char* to_string(Mode m) { return m == Mode::strict ? "strict" : "confidence"; }

inline const char* to_string(Truth t) {
  switch (t) {
    case Truth::false_: return "false";
    case Truth::true_: return "true";
    case Truth::indeterminate: return "indeterminate";
  }
  return "";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "strict") return Mode::strict;
  if (s == "confidence") return Mode::confidence;
  throw InvalidArgument("unknown mode '" + s + "' (expected strict or confidence)");
}

/// Fresh variables are named "#c<i>" inside formulas, which cannot clash with
/// parsed identifiers; reports show them as "c<i>".
struct AbstractionMap {
  struct Binding {
    std::string variable;
    std::shared_ptr<const QoSConstraint> constraint;
  };

  FormulaPtr formula;
  std::vector<Binding> bindings;  // in order of first occurrence

  static std::string display_name(const std::string& variable) { return variable.substr(1); }
};

/// Replaces every constraint with a fresh variable; structurally identical
/// constraints share one.
inline AbstractionMap abstract(const QoSRequirement& req) {
  AbstractionMap out;
  std::map<std::string, std::string> by_key;
  std::map<const Formula*, FormulaPtr> memo;
  std::function<FormulaPtr(const FormulaPtr&)> walk = [&](const FormulaPtr& f) -> FormulaPtr {
    if (const auto it = memo.find(f.get()); it != memo.end()) return it->second;
    FormulaPtr result;
    switch (f->kind()) {
      case Formula::Kind::constraint: {
        auto [it, inserted] = by_key.try_emplace(f->qos_constraint().key());
        if (inserted) {
          it->second = "#c" + std::to_string(out.bindings.size() + 1);
          out.bindings.push_back({it->second, f->constraint_ptr()});
        }
        result = Formula::variable(it->second);
        break;
      }
      case Formula::Kind::negation: result = Formula::negation(walk(f->child())); break;
      case Formula::Kind::disjunction: {
        FormulaPtr lhs = walk(f->left());
        result = Formula::disjunction(std::move(lhs), walk(f->right()));
        break;
      }
      default: result = f; break;
    }
    memo.emplace(f.get(), result);
    return result;
  };
  out.formula = walk(req.formula);
  return out;
}

struct ConstraintEvaluation {
  Truth truth = Truth::indeterminate;
  double estimate = 0.0;
  double std_error = 0.0;
  /// Distance of the decision from flipping: positive when decided, <= 0 when
  /// indeterminate.
  double margin = 0.0;
  IntegralEstimate integral;
};

/// Decides p_min <= estimate <= p_max. In confidence mode the band
/// estimate +- z * std_error (clipped to [0, 1]) must lie entirely inside the
/// bounds for true, entirely outside for false; otherwise indeterminate.
inline ConstraintEvaluation decide_constraint(double estimate, double std_error, double p_min,
                                              double p_max, Mode mode, double z) {
  ConstraintEvaluation e;
  e.estimate = estimate;
  e.std_error = std_error;
  const double half = mode == Mode::strict ? 0.0 : z * std_error;
  const double lo = std::clamp(estimate - half, 0.0, 1.0);
  const double hi = std::clamp(estimate + half, 0.0, 1.0);
  const double inside = std::min(lo - p_min, p_max - hi);
  const double outside = std::max(p_min - hi, lo - p_max);
  if (inside >= 0.0) {
    e.truth = Truth::true_;
    e.margin = inside;
  } else if (outside > 0.0 || (mode == Mode::strict)) {
    e.truth = Truth::false_;
    e.margin = outside;
  } else {
    e.truth = Truth::indeterminate;
    e.margin = std::max(inside, outside);
  }
  return e;
}

inline ConstraintEvaluation evaluate_constraint(const QoSConstraint& c, const QoSProfile& profile,
                                                std::size_t k, const RngStream& rng, Mode mode,
                                                double z, const IntegrationOptions& options = {}) {
  const IntegralEstimate integral = integrate_uniform(profile, c.region, k, rng, options);
  ConstraintEvaluation e =
      decide_constraint(integral.value, integral.std_error, c.p_min, c.p_max, mode, z);
  e.integral = integral;
  return e;
}

struct CheckOptions {
  std::size_t samples = kDefaultSamples;
  std::uint64_t seed = 0;
  Mode mode = Mode::confidence;
  double z = 3.0;
  std::size_t workers = 1;
  /// Cap on indeterminate constraints whose truth combinations are enumerated.
  std::size_t max_indeterminate = 16;
};

struct ConstraintRow {
  std::string variable;  // display name, "c1", "c2", ...
  std::string label;
  double p_min = 0.0;
  double p_max = 1.0;
  ConstraintEvaluation evaluation;
};

struct CheckReport {
  Verdict verdict = Verdict::violated;
  std::optional<Valuation> witness;  // over the requirement's variable set
  std::vector<ConstraintRow> constraints;
  Mode mode = Mode::confidence;
  double z = 3.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  /// Smallest decision margin; +infinity when there are no constraints.
  double min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& row : constraints) m = std::min(m, row.evaluation.margin);
    return m;
  }
};

namespace detail {

inline SatResult sat_with_literals(const FormulaPtr& base, const std::vector<std::string>& names,
                                   const std::vector<bool>& values) {
  FormulaPtr f = base;
  for (std::size_t i = 0; i < names.size(); ++i) {
    FormulaPtr lit = Formula::variable(names[i]);
    f = Formula::conjunction(f, values[i] ? lit : Formula::negation(lit));
  }
  return dpll_sat(*f);
}

}  // namespace detail

/// Abstracts the requirement, integrates each distinct constraint once
/// (binding i on RngStream(seed).substream(i)), fixes the constraint literals
/// and asks DPLL for a valuation of the free variables.
///
/// Confidence mode: indeterminate constraints are tried both ways; the verdict
/// is indeterminate only when the SAT outcome depends on them. The witness is
/// taken with indeterminate constraints set by their point estimates.
inline CheckReport qos_check(const QoSProfile& profile, const QoSRequirement& req,
                             const CheckOptions& options = {}) {
  if (!(req.schema == profile.schema())) {
    std::string want, got;
    for (const auto& s : profile.schema().names()) want += s + " ";
    for (const auto& s : req.schema.names()) got += s + " ";
    throw SchemaError("requirement attributes [ " + got + "] do not match profile schema [ " +
                      want + "]");
  }
  if (!(options.z > 0.0)) throw InvalidArgument("qos_check: z must be positive");

  CheckReport report;
  report.mode = options.mode;
  report.z = options.z;
  report.samples = options.samples;
  report.seed = options.seed;

  const AbstractionMap abs = abstract(req);
  const RngStream root(options.seed);
  IntegrationOptions integration;
  integration.workers = options.workers;

  std::vector<std::string> names;
  std::vector<bool> decided_values;
  std::vector<std::string> open_names;
  std::vector<bool> open_point_values;
  for (std::size_t i = 0; i < abs.bindings.size(); ++i) {
    const auto& b = abs.bindings[i];
    ConstraintRow row;
    row.variable = AbstractionMap::display_name(b.variable);
    row.label = b.constraint->label;
    row.p_min = b.constraint->p_min;
    row.p_max = b.constraint->p_max;
    row.evaluation = evaluate_constraint(*b.constraint, profile, options.samples,
                                         root.substream(i), options.mode, options.z, integration);
    if (row.evaluation.truth == Truth::indeterminate) {
      const double est = row.evaluation.estimate;
      open_names.push_back(b.variable);
      open_point_values.push_back(row.p_min <= est && est <= row.p_max);
    } else {
      names.push_back(b.variable);
      decided_values.push_back(row.evaluation.truth == Truth::true_);
    }
    report.constraints.push_back(std::move(row));
  }
  if (open_names.size() > options.max_indeterminate) {
    throw InvalidArgument("qos_check: too many indeterminate constraints (" +
                          std::to_string(open_names.size()) + "); raise --samples or use strict mode");
  }

  FormulaPtr fixed = abs.formula;
  for (std::size_t i = 0; i < names.size(); ++i) {
    FormulaPtr lit = Formula::variable(names[i]);
    fixed = Formula::conjunction(fixed, decided_values[i] ? lit : Formula::negation(lit));
  }

  const SatResult point = detail::sat_with_literals(fixed, open_names, open_point_values);
  bool all_same = true;
  const std::size_t combos = std::size_t{1} << open_names.size();
  std::vector<bool> values(open_names.size());
  for (std::size_t mask = 0; mask < combos && all_same && !open_names.empty(); ++mask) {
    for (std::size_t j = 0; j < values.size(); ++j) values[j] = (mask >> j) & 1u;
    if (detail::sat_with_literals(fixed, open_names, values).satisfiable != point.satisfiable) {
      all_same = false;
    }
  }

  if (!all_same) {
    report.verdict = Verdict::indeterminate;
    return report;
  }
  report.verdict = point.satisfiable ? Verdict::satisfied : Verdict::violated;
  if (point.satisfiable) {
    Valuation witness;
    for (const auto& v : req.variables) {
      const auto it = point.model.find(v);
      witness[v] = it == point.model.end() ? true : it->second;
    }
    report.witness = std::move(witness);
  }
  return report;
}

}  // namespace pqos

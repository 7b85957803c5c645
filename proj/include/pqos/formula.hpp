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

#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pqos/error.hpp"
#include "pqos/geometry.hpp"
#include "pqos/profiles.hpp"

namespace pqos {

/// <R, p_min, p_max>: demands p_min <= P(X in R) <= p_max.
struct QoSConstraint {
  HPolytope region;
  double p_min = 0.0;
  double p_max = 1.0;
  std::string label;

  QoSConstraint(HPolytope r, double lo, double hi, std::string text = {})
      : region(std::move(r)), p_min(lo), p_max(hi), label(std::move(text)) {
    if (!(0.0 <= p_min && p_min <= p_max && p_max <= 1.0)) {
      throw InvalidArgument("QoSConstraint: require 0 <= p_min <= p_max <= 1");
    }
  }

  /// Bit-exact structural identity (region, bounds); the label is ignored.
  std::string key() const {
    std::ostringstream out;
    auto put = [&out](double v) { out << std::bit_cast<std::uint64_t>(v) << ','; };
    out << region.constraint_count() << 'x' << region.dimension() << ':';
    for (const auto& name : region.attribute_names()) out << name << ',';
    const Matrix& a = region.constraint_matrix();
    for (Eigen::Index i = 0; i < a.size(); ++i) put(a.data()[i]);
    for (Eigen::Index i = 0; i < region.bounds().size(); ++i) put(region.bounds()(i));
    put(p_min);
    put(p_max);
    return out.str();
  }
};

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// Requirement AST: top, bottom, propositional variable, QoS constraint,
/// negation and disjunction. Conjunction, implication and equivalence are
/// built from these.
class Formula {
 public:
  enum class Kind { top, bottom, variable, constraint, negation, disjunction };

  static FormulaPtr top() { return make(Kind::top); }
  static FormulaPtr bottom() { return make(Kind::bottom); }

  static FormulaPtr variable(std::string name) {
    auto f = make_mut(Kind::variable);
    f->name_ = std::move(name);
    return f;
  }

  static FormulaPtr constraint(QoSConstraint c) {
    auto f = make_mut(Kind::constraint);
    f->constraint_ = std::make_shared<const QoSConstraint>(std::move(c));
    return f;
  }

  static FormulaPtr negation(FormulaPtr child) {
    auto f = make_mut(Kind::negation);
    f->left_ = std::move(child);
    return f;
  }

  static FormulaPtr disjunction(FormulaPtr lhs, FormulaPtr rhs) {
    auto f = make_mut(Kind::disjunction);
    f->left_ = std::move(lhs);
    f->right_ = std::move(rhs);
    return f;
  }

  // a && b == !(!a || !b)
  static FormulaPtr conjunction(FormulaPtr lhs, FormulaPtr rhs) {
    return negation(disjunction(negation(std::move(lhs)), negation(std::move(rhs))));
  }

  // a -> b == !a || b
  static FormulaPtr implication(FormulaPtr lhs, FormulaPtr rhs) {
    return disjunction(negation(std::move(lhs)), std::move(rhs));
  }

  // a <-> b == (a -> b) && (b -> a)
  static FormulaPtr equivalence(const FormulaPtr& lhs, const FormulaPtr& rhs) {
    return conjunction(implication(lhs, rhs), implication(rhs, lhs));
  }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const QoSConstraint& qos_constraint() const { return *constraint_; }
  const std::shared_ptr<const QoSConstraint>& constraint_ptr() const { return constraint_; }
  const FormulaPtr& child() const { return left_; }
  const FormulaPtr& left() const { return left_; }
  const FormulaPtr& right() const { return right_; }

 private:
  explicit Formula(Kind k) : kind_(k) {}
  static std::shared_ptr<Formula> make_mut(Kind k) { return std::shared_ptr<Formula>(new Formula(k)); }
  static FormulaPtr make(Kind k) { return make_mut(k); }

  Kind kind_;
  std::string name_;
  std::shared_ptr<const QoSConstraint> constraint_;
  FormulaPtr left_;
  FormulaPtr right_;
};

using Valuation = std::map<std::string, bool>;

/// Truth value with variables from `vars` and constraint truths from
/// `constraint_truth` (required when the formula has constraint nodes).
inline bool evaluate(const Formula& f, const Valuation& vars,
                     const std::function<bool(const QoSConstraint&)>& constraint_truth = {}) {
  switch (f.kind()) {
    case Formula::Kind::top: return true;
    case Formula::Kind::bottom: return false;
    case Formula::Kind::variable: {
      const auto it = vars.find(f.name());
      if (it == vars.end()) throw InvalidArgument("evaluate: unassigned variable " + f.name());
      return it->second;
    }
    case Formula::Kind::constraint:
      if (!constraint_truth) throw InvalidArgument("evaluate: formula has constraint nodes");
      return constraint_truth(f.qos_constraint());
    case Formula::Kind::negation: return !evaluate(*f.child(), vars, constraint_truth);
    case Formula::Kind::disjunction:
      return evaluate(*f.left(), vars, constraint_truth) ||
             evaluate(*f.right(), vars, constraint_truth);
  }
  return false;
}

/// Variable names in first-occurrence order.
inline std::vector<std::string> collect_variables(const Formula& f) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::set<const Formula*> visited;
  std::function<void(const Formula&)> walk = [&](const Formula& g) {
    if (!visited.insert(&g).second) return;
    switch (g.kind()) {
      case Formula::Kind::variable:
        if (seen.insert(g.name()).second) out.push_back(g.name());
        break;
      case Formula::Kind::negation: walk(*g.child()); break;
      case Formula::Kind::disjunction:
        walk(*g.left());
        walk(*g.right());
        break;
      default: break;
    }
  };
  walk(f);
  return out;
}

inline std::size_t count_constraints(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::constraint: return 1;
    case Formula::Kind::negation: return count_constraints(*f.child());
    case Formula::Kind::disjunction: return count_constraints(*f.left()) + count_constraints(*f.right());
    default: return 0;
  }
}

/// Human-readable rendering; conjunction sugar is not reconstructed.
inline std::string to_string(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::top: return "true";
    case Formula::Kind::bottom: return "false";
    case Formula::Kind::variable: return f.name();
    case Formula::Kind::constraint:
      return f.qos_constraint().label.empty() ? "<constraint>" : f.qos_constraint().label;
    case Formula::Kind::negation: return "!" + to_string(*f.child());
    case Formula::Kind::disjunction:
      return "(" + to_string(*f.left()) + " || " + to_string(*f.right()) + ")";
  }
  return {};
}

/// A parsed requirement: formula, attribute schema, and the propositional
/// variable set P.
struct QoSRequirement {
  FormulaPtr formula;
  AttributeSchema schema;
  std::vector<std::string> variables;
  std::string source;
};

}  // namespace pqos

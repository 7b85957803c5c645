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

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pqos/error.hpp"
#include "pqos/formula.hpp"

namespace pqos {

struct SatResult {
  bool satisfiable = false;
  Valuation model;  // every variable of the formula, when satisfiable
};

/// CNF over variables 1..variable_count; literals are +-id.
struct Cnf {
  int variable_count = 0;
  std::vector<std::vector<int>> clauses;
  std::map<std::string, int> ids;  // original variables only
};

/// Tseitin transformation: one auxiliary variable per distinct disjunction
/// node and per constant, negation folded into literals. Linear in the number
/// of distinct nodes; equisatisfiable, with models agreeing on the original
/// variables.
inline Cnf tseitin(const Formula& f) {
  Cnf cnf;
  auto fresh = [&cnf] { return ++cnf.variable_count; };
  // Sugar shares subtrees, so nodes are encoded once each.
  std::map<const Formula*, int> memo;
  std::function<int(const Formula&)> encode_node;
  auto encode = [&](const Formula& g) -> int {
    if (const auto it = memo.find(&g); it != memo.end()) return it->second;
    const int lit = encode_node(g);
    memo.emplace(&g, lit);
    return lit;
  };
  encode_node = [&](const Formula& g) -> int {
    switch (g.kind()) {
      case Formula::Kind::variable: {
        auto [it, inserted] = cnf.ids.try_emplace(g.name(), 0);
        if (inserted) it->second = fresh();
        return it->second;
      }
      case Formula::Kind::top: {
        const int t = fresh();
        cnf.clauses.push_back({t});
        return t;
      }
      case Formula::Kind::bottom: {
        const int t = fresh();
        cnf.clauses.push_back({-t});
        return t;
      }
      case Formula::Kind::negation: return -encode(*g.child());
      case Formula::Kind::disjunction: {
        const int a = encode(*g.left());
        const int b = encode(*g.right());
        const int o = fresh();
        cnf.clauses.push_back({-o, a, b});
        cnf.clauses.push_back({o, -a});
        cnf.clauses.push_back({o, -b});
        return o;
      }
      case Formula::Kind::constraint:
        throw InvalidArgument("dpll_sat: formula still contains QoS constraints");
    }
    return 0;
  };
  const int root = encode(f);
  cnf.clauses.push_back({root});
  return cnf;
}

namespace detail {

class Dpll {
 public:
  explicit Dpll(const Cnf& cnf) : cnf_(cnf) {}

  // assignment[v]: 0 unassigned, +1 true, -1 false
  bool solve(std::vector<std::int8_t>& assignment) const {
    if (!simplify(assignment)) return false;
    const int branch = pick_branch(assignment);
    if (branch == 0) return true;
    for (std::int8_t value : {std::int8_t{1}, std::int8_t{-1}}) {
      std::vector<std::int8_t> trial = assignment;
      trial[static_cast<std::size_t>(branch)] = value;
      if (solve(trial)) {
        assignment = std::move(trial);
        return true;
      }
    }
    return false;
  }

 private:
  static int value_of(const std::vector<std::int8_t>& a, int lit) {
    const int v = a[static_cast<std::size_t>(std::abs(lit))];
    return lit > 0 ? v : -v;
  }

  // Unit propagation and pure-literal elimination to a fixed point. Returns
  // false on a falsified clause.
  bool simplify(std::vector<std::int8_t>& a) const {
    for (bool changed = true; changed;) {
      changed = false;
      std::vector<std::int8_t> polarity(a.size(), 0);  // bit 1: positive, bit 2: negative
      for (const auto& clause : cnf_.clauses) {
        int unassigned = 0, last = 0;
        bool satisfied = false;
        for (int lit : clause) {
          const int v = value_of(a, lit);
          if (v > 0) {
            satisfied = true;
            break;
          }
          if (v == 0) {
            ++unassigned;
            last = lit;
          }
        }
        if (satisfied) continue;
        if (unassigned == 0) return false;
        if (unassigned == 1) {
          a[static_cast<std::size_t>(std::abs(last))] = last > 0 ? 1 : -1;
          changed = true;
          continue;
        }
        for (int lit : clause) {
          if (value_of(a, lit) == 0) polarity[static_cast<std::size_t>(std::abs(lit))] |= lit > 0 ? 1 : 2;
        }
      }
      if (changed) continue;
      for (std::size_t v = 1; v < a.size(); ++v) {
        if (a[v] == 0 && (polarity[v] == 1 || polarity[v] == 2)) {
          a[v] = polarity[v] == 1 ? 1 : -1;
          changed = true;
        }
      }
    }
    return true;
  }

  // First unassigned variable of an unsatisfied clause, 0 when all clauses
  // are satisfied.
  int pick_branch(const std::vector<std::int8_t>& a) const {
    for (const auto& clause : cnf_.clauses) {
      bool satisfied = false;
      int candidate = 0;
      for (int lit : clause) {
        const int v = value_of(a, lit);
        if (v > 0) {
          satisfied = true;
          break;
        }
        if (v == 0 && candidate == 0) candidate = std::abs(lit);
      }
      if (!satisfied) return candidate;
    }
    return 0;
  }

  const Cnf& cnf_;
};

}  // namespace detail

/// Complete DPLL (unit propagation, pure-literal elimination, chronological
/// branching) over the Tseitin CNF of a propositional formula. The model
/// covers every variable of the formula; variables left unconstrained are
/// reported true.
inline SatResult dpll_sat(const Formula& f) {
  const Cnf cnf = tseitin(f);
  std::vector<std::int8_t> assignment(static_cast<std::size_t>(cnf.variable_count) + 1, 0);
  SatResult result;
  result.satisfiable = detail::Dpll(cnf).solve(assignment);
  if (result.satisfiable) {
    for (const auto& [name, id] : cnf.ids) {
      result.model[name] = assignment[static_cast<std::size_t>(id)] >= 0;
    }
  }
  return result;
}

}  // namespace pqos

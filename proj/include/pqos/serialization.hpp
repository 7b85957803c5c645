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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pqos/check.hpp"
#include "pqos/error.hpp"
#include "pqos/integrate.hpp"
#include "pqos/learning.hpp"
#include "pqos/profiles.hpp"

namespace pqos {

using Json = nlohmann::ordered_json;

/// A profile file: optional service id plus the profile.
struct ProfileDocument {
  std::string service_id;
  ProfilePtr profile;
};

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const char* key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_number()) throw FormatError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline Vector number_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError(where + ": expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// Non-finite values have no JSON encoding and are written as null.
inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace detail

/// Reads a profile object:
///   {"schema": [...], "kind": "independent", "marginals": [{"family": "gaussian",
///     "mean": m, "variance": v} | {"family": "gamma", "shape": a, "rate": b}, ...]}
///   {"schema": [...], "kind": "correlated_tprt", "mu", "sigma2", "alpha", "beta"}
///   {"schema": [...], "kind": "kde", "kernel", "bandwidths": [...],
///     "observations": [[...], ...], "fit": {...}}
/// plus an optional "service_id".
inline ProfileDocument profile_from_json(const Json& j, const std::string& where = "<profile>") {
  if (!j.is_object()) throw FormatError(where + ": profile must be a JSON object");
  ProfileDocument doc;
  if (j.contains("service_id")) {
    if (!j["service_id"].is_string() || j["service_id"].get<std::string>().empty()) {
      throw FormatError(where + ": service_id must be a nonempty string");
    }
    doc.service_id = j["service_id"].get<std::string>();
  }
  const Json& schema_json = detail::require(j, "schema", where);
  if (!schema_json.is_array()) throw FormatError(where + ": schema must be an array of names");
  std::vector<std::string> names;
  for (const auto& s : schema_json) {
    if (!s.is_string()) throw FormatError(where + ": schema must be an array of names");
    names.push_back(s.get<std::string>());
  }
  const Json& kind_json = detail::require(j, "kind", where);
  if (!kind_json.is_string()) throw FormatError(where + ": kind must be a string");
  const std::string kind = kind_json.get<std::string>();

  try {
    AttributeSchema schema(names);
    if (kind == "independent") {
      const Json& ms = detail::require(j, "marginals", where);
      if (!ms.is_array()) throw FormatError(where + ": marginals must be an array");
      std::vector<Marginal> marginals;
      for (const auto& m : ms) {
        const Json& fam = detail::require(m, "family", where);
        const std::string family = fam.is_string() ? fam.get<std::string>() : "";
        if (family == "gaussian") {
          marginals.emplace_back(GaussianMarginal(detail::number(m, "mean", where), detail::number(m, "variance", where)));
        } else if (family == "gamma") {
          marginals.emplace_back(GammaMarginal(detail::number(m, "shape", where), detail::number(m, "rate", where)));
        } else {
          throw FormatError(where + ": unknown marginal family '" + family + "'");
        }
      }
      doc.profile = std::make_shared<IndependentProduct>(std::move(schema), std::move(marginals));
    } else if (kind == "correlated_tprt") {
      doc.profile = std::make_shared<CorrelatedTPRT>(std::move(schema), detail::number(j, "mu", where),
                                                     detail::number(j, "sigma2", where),
                                                     detail::number(j, "alpha", where),
                                                     detail::number(j, "beta", where));
    } else if (kind == "kde") {
      const Json& kj = detail::require(j, "kernel", where);
      const Kernel kernel = parse_kernel(kj.is_string() ? kj.get<std::string>() : "");
      const Vector h = detail::number_vector(detail::require(j, "bandwidths", where), where + ": bandwidths");
      const Json& obs = detail::require(j, "observations", where);
      if (!obs.is_array() || obs.empty()) throw FormatError(where + ": observations must be a nonempty array");
      Matrix x(static_cast<Eigen::Index>(obs.size()), static_cast<Eigen::Index>(names.size()));
      for (std::size_t i = 0; i < obs.size(); ++i) {
        const Vector row = detail::number_vector(obs[i], where + ": observations");
        if (row.size() != x.cols()) throw FormatError(where + ": observation row length differs from schema");
        x.row(static_cast<Eigen::Index>(i)) = row.transpose();
      }
      KdeFit fit;
      if (j.contains("fit") && j["fit"].is_object()) {
        const Json& f = j["fit"];
        if (f.contains("method") && f["method"].is_string()) fit.method = f["method"].get<std::string>();
        if (f.contains("multiplier") && f["multiplier"].is_number()) fit.multiplier = f["multiplier"].get<double>();
        if (f.contains("score") && f["score"].is_number()) fit.score = f["score"].get<double>();
        if (f.contains("folds") && f["folds"].is_number_unsigned()) fit.folds = f["folds"].get<std::size_t>();
      }
      doc.profile = std::make_shared<KDEProfile>(std::move(schema), std::move(x), kernel, h, std::move(fit));
    } else {
      throw FormatError(where + ": unknown profile kind '" + kind + "'");
    }
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(where + ": " + e.what());
  }
  return doc;
}

inline Json profile_to_json(const QoSProfile& profile, const std::string& service_id = {}) {
  Json j;
  if (!service_id.empty()) j["service_id"] = service_id;
  j["schema"] = profile.schema().names();
  j["kind"] = profile.kind();
  if (const auto* p = dynamic_cast<const IndependentProduct*>(&profile)) {
    Json ms = Json::array();
    for (const auto& m : p->marginals()) {
      if (const auto* g = std::get_if<GaussianMarginal>(&m)) {
        ms.push_back({{"family", "gaussian"}, {"mean", g->mean}, {"variance", g->variance}});
      } else {
        const auto& gm = std::get<GammaMarginal>(m);
        ms.push_back({{"family", "gamma"}, {"shape", gm.shape}, {"rate", gm.rate}});
      }
    }
    j["marginals"] = std::move(ms);
  } else if (const auto* c = dynamic_cast<const CorrelatedTPRT*>(&profile)) {
    j["mu"] = c->mu();
    j["sigma2"] = c->sigma2();
    j["alpha"] = c->alpha();
    j["beta"] = c->beta();
  } else if (const auto* k = dynamic_cast<const KDEProfile*>(&profile)) {
    j["kernel"] = to_string(k->kernel());
    j["bandwidths"] = detail::vector_json(k->bandwidths());
    Json fit;
    fit["method"] = k->fit().method;
    fit["multiplier"] = k->fit().multiplier;
    if (k->fit().score) fit["score"] = *k->fit().score;
    if (k->fit().folds) fit["folds"] = k->fit().folds;
    fit["records"] = k->record_count();
    j["fit"] = std::move(fit);
    Json obs = Json::array();
    for (Eigen::Index i = 0; i < k->observations().rows(); ++i) {
      obs.push_back(detail::vector_json(k->observations().row(i).transpose()));
    }
    j["observations"] = std::move(obs);
  } else {
    throw InvalidArgument("profile_to_json: unsupported profile kind '" + profile.kind() + "'");
  }
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

/// Loads a profile file; the service id defaults to the file name stem.
inline ProfileDocument load_profile(const std::string& path) {
  ProfileDocument doc = profile_from_json(read_json_file(path), path);
  if (doc.service_id.empty()) doc.service_id = std::filesystem::path(path).stem().string();
  return doc;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline Json constraint_row_json(const ConstraintRow& row) {
  const ConstraintEvaluation& e = row.evaluation;
  Json j;
  j["variable"] = row.variable;
  j["label"] = row.label;
  j["p_min"] = row.p_min;
  j["p_max"] = row.p_max;
  j["estimate"] = e.estimate;
  j["std_error"] = e.std_error;
  j["truth"] = to_string(e.truth);
  j["margin"] = detail::finite_or_null(e.margin);
  j["sampler"] = to_string(e.integral.sampler);
  j["volume"] = e.integral.volume_used ? Json(*e.integral.volume_used) : Json(nullptr);
  return j;
}

inline Json report_json(const CheckReport& r) {
  Json j;
  j["verdict"] = to_string(r.verdict);
  if (r.witness) {
    Json w = Json::object();
    for (const auto& [name, value] : *r.witness) w[name] = value;
    j["witness"] = std::move(w);
  } else {
    j["witness"] = nullptr;
  }
  j["min_margin"] = detail::finite_or_null(r.min_margin());
  j["mode"] = to_string(r.mode);
  j["z"] = r.z;
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  Json rows = Json::array();
  for (const auto& row : r.constraints) rows.push_back(constraint_row_json(row));
  j["constraints"] = std::move(rows);
  return j;
}

inline Json estimate_json(const IntegralEstimate& e) {
  Json j;
  j["value"] = e.value;
  j["std_error"] = e.std_error;
  j["k"] = e.k;
  j["method"] = to_string(e.method);
  j["sampler"] = to_string(e.sampler);
  j["volume"] = e.volume_used ? Json(*e.volume_used) : Json(nullptr);
  return j;
}

}  // namespace pqos

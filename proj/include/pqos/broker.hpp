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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pqos/check.hpp"
#include "pqos/error.hpp"
#include "pqos/parallel.hpp"
#include "pqos/parser.hpp"
#include "pqos/rng.hpp"
#include "pqos/serialization.hpp"

namespace pqos {

/// Process exit codes of the command-line front end.
enum ExitCode : int {
  kExitSatisfied = 0,
  kExitViolated = 1,
  kExitIndeterminate = 2,
  kExitMalformed = 10,
  kExitSchemaMismatch = 11,
  kExitUnbounded = 12,
  kExitOtherError = 13,
};

inline int exit_code(Verdict v) {
  switch (v) {
    case Verdict::satisfied: return kExitSatisfied;
    case Verdict::violated: return kExitViolated;
    case Verdict::indeterminate: return kExitIndeterminate;
  }
  return kExitOtherError;
}

/// Maps the exception currently being handled to an exit code.
inline int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const UnknownAttributeError&) {
    return kExitSchemaMismatch;
  } catch (const SchemaError&) {
    return kExitSchemaMismatch;
  } catch (const UnboundedError&) {
    return kExitUnbounded;
  } catch (const ParseError&) {
    return kExitMalformed;
  } catch (const FormatError&) {
    return kExitMalformed;
  } catch (...) {
    return kExitOtherError;
  }
}

/// Hex FNV-1a digest of the requirement text.
inline std::string requirement_hash(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a64(text)));
  return buf;
}

struct ServiceEntry {
  std::string service_id;
  ProfilePtr profile;
  std::string source;  // file path
};

/// A directory of profile JSON files sharing one schema.
class Repository {
 public:
  static Repository load(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw FormatError(dir + ": not a directory");
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    Repository repo;
    for (const auto& p : paths) {
      ProfileDocument doc = load_profile(p);
      repo.add({doc.service_id, doc.profile, p});
    }
    if (repo.services_.empty()) throw FormatError(dir + ": repository contains no profile JSON files");
    return repo;
  }

  void add(ServiceEntry entry) {
    for (const auto& s : services_) {
      if (s.service_id == entry.service_id) {
        throw FormatError("duplicate service_id '" + entry.service_id + "' in " + s.source + " and " + entry.source);
      }
    }
    if (!services_.empty() && !(services_.front().profile->schema() == entry.profile->schema())) {
      throw SchemaError("service '" + entry.service_id + "' has a schema different from '" +
                        services_.front().service_id + "'");
    }
    services_.push_back(std::move(entry));
    std::sort(services_.begin(), services_.end(),
              [](const ServiceEntry& a, const ServiceEntry& b) { return a.service_id < b.service_id; });
  }

  const std::vector<ServiceEntry>& services() const { return services_; }
  const AttributeSchema& schema() const { return services_.front().profile->schema(); }
  bool empty() const { return services_.empty(); }

 private:
  std::vector<ServiceEntry> services_;
};

struct RankedService {
  std::string service_id;
  CheckReport report;
};

struct SelectionResult {
  std::vector<RankedService> selected;   // satisfied (and, if requested, indeterminate) services
  std::vector<RankedService> evaluated;  // every service, in id order
  std::string requirement_hash;
  CheckOptions options;                  // seed is the master seed
  bool include_indeterminate = false;
};

/// Checks every service with seed derive_seed(master, service_id) and ranks
/// the satisfying ones by verdict, then smallest decision margin
/// (descending), then service id.
inline SelectionResult select_services(const Repository& repo, const QoSRequirement& req, const CheckOptions& options,
                                       bool include_indeterminate = false) {
  SelectionResult result;
  result.requirement_hash = requirement_hash(req.source);
  result.options = options;
  result.include_indeterminate = include_indeterminate;

  const auto& services = repo.services();
  std::vector<CheckReport> reports(services.size());
  const std::size_t outer = std::min(options.workers, services.size());
  CheckOptions inner = options;
  inner.workers = std::max<std::size_t>(1, options.workers / std::max<std::size_t>(1, outer));
  parallel_for(services.size(), outer, [&](std::size_t i) {
    CheckOptions o = inner;
    o.seed = derive_seed(options.seed, services[i].service_id);
    reports[i] = qos_check(*services[i].profile, req, o);
  });

  for (std::size_t i = 0; i < services.size(); ++i) {
    result.evaluated.push_back({services[i].service_id, reports[i]});
    const Verdict v = reports[i].verdict;
    if (v == Verdict::satisfied || (include_indeterminate && v == Verdict::indeterminate)) {
      result.selected.push_back({services[i].service_id, reports[i]});
    }
  }
  std::stable_sort(result.selected.begin(), result.selected.end(), [](const RankedService& a, const RankedService& b) {
    const int va = a.report.verdict == Verdict::satisfied ? 0 : 1;
    const int vb = b.report.verdict == Verdict::satisfied ? 0 : 1;
    if (va != vb) return va < vb;
    const double ma = a.report.min_margin(), mb = b.report.min_margin();
    if (ma != mb) return ma > mb;
    return a.service_id < b.service_id;
  });
  return result;
}

inline Json selection_json(const SelectionResult& r) {
  Json j;
  j["requirement_hash"] = r.requirement_hash;
  j["samples"] = r.options.samples;
  j["seed"] = r.options.seed;
  j["mode"] = to_string(r.options.mode);
  j["z"] = r.options.z;
  j["include_indeterminate"] = r.include_indeterminate;
  Json selected = Json::array();
  for (const auto& s : r.selected) {
    Json e;
    e["service_id"] = s.service_id;
    e["verdict"] = to_string(s.report.verdict);
    e["min_margin"] = detail::finite_or_null(s.report.min_margin());
    selected.push_back(std::move(e));
  }
  j["selected"] = std::move(selected);
  Json services = Json::array();
  for (const auto& s : r.evaluated) {
    Json e;
    e["service_id"] = s.service_id;
    e["seed"] = s.report.seed;
    e["report"] = report_json(s.report);
    services.push_back(std::move(e));
  }
  j["services"] = std::move(services);
  return j;
}

}  // namespace pqos

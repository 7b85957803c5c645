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

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pqos/broker.hpp"
#include "pqos/check.hpp"
#include "pqos/geometry.hpp"
#include "pqos/integrate.hpp"
#include "pqos/learning.hpp"
#include "pqos/parser.hpp"
#include "pqos/serialization.hpp"

namespace {

using namespace pqos;

struct CommonFlags {
  std::uint64_t seed = 0;
  std::size_t samples = kDefaultSamples;
  std::string mode = "confidence";
  double z = 3.0;
  std::size_t workers = 1;
  bool json = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Master RNG seed")->capture_default_str();
    cmd->add_option("--samples", samples, "Monte Carlo samples per estimate")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    cmd->add_option("--mode", mode, "Decision mode")
        ->capture_default_str()
        ->check(CLI::IsMember({"strict", "confidence"}));
    cmd->add_option("--z", z, "Confidence band width in standard errors")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--workers", workers, "Worker threads")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::size_t{1024}));
    cmd->add_flag("--json", json, "Emit JSON on stdout");
  }

  CheckOptions check_options() const {
    CheckOptions o;
    o.samples = samples;
    o.seed = seed;
    o.mode = parse_mode(mode);
    o.z = z;
    o.workers = workers;
    return o;
  }
};

void print_json(const Json& j) { std::cout << j.dump(2) << '\n'; }

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void print_report_text(const CheckReport& r) {
  std::cout << "verdict: " << to_string(r.verdict) << '\n';
  if (r.witness) {
    std::cout << "witness:";
    if (r.witness->empty()) std::cout << " (no variables)";
    for (const auto& [name, value] : *r.witness) std::cout << ' ' << name << '=' << (value ? "true" : "false");
    std::cout << '\n';
  }
  for (const auto& row : r.constraints) {
    const auto& e = row.evaluation;
    std::cout << row.variable << ": " << to_string(e.truth) << "  estimate " << fmt(e.estimate) << " +- "
              << fmt(e.std_error, "%.3g") << "  bounds [" << fmt(row.p_min) << ", " << fmt(row.p_max)
              << "]  margin " << fmt(e.margin, "%.4g") << "\n    " << row.label << '\n';
  }
}

std::string region_text(const std::string& inline_text, const std::string& file) {
  if (!inline_text.empty() && !file.empty()) throw InvalidArgument("give either --region or --region-file");
  if (!file.empty()) return read_text_file(file);
  if (inline_text.empty()) throw InvalidArgument("a region is required (--region or --region-file)");
  return inline_text;
}

bool is_axis_aligned(const HPolytope& poly) {
  const Matrix& a = poly.constraint_matrix();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if ((a.row(i).array() != 0.0).count() != 1) return false;
  }
  return true;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

int run_check(const CommonFlags& flags, const std::string& profile_path, const std::string& req_path) {
  const ProfileDocument doc = load_profile(profile_path);
  const std::string text = read_text_file(req_path);
  const QoSRequirement req = parse_requirement(text, doc.profile->schema());
  const CheckReport report = qos_check(*doc.profile, req, flags.check_options());
  if (flags.json) {
    Json j;
    j["service_id"] = doc.service_id;
    j["requirement_hash"] = requirement_hash(req.source);
    j.update(report_json(report));
    print_json(j);
  } else {
    std::cout << "service: " << doc.service_id << '\n';
    print_report_text(report);
  }
  return exit_code(report.verdict);
}

struct LearnFlags {
  std::string csv;
  std::string output;
  std::string kernel = "gaussian";
  std::string bandwidth = "scott";
  bool cv = false;
  std::vector<std::string> kernels = {"gaussian", "exponential"};
  std::vector<double> grid = default_bandwidth_grid();
  std::size_t folds = 5;
  double multiplier = 1.0;
  std::string schema;
  std::string service_id;
};

int run_learn(const CommonFlags& flags, const LearnFlags& lf) {
  QoSRecordSet records = load_records_csv(lf.csv);
  if (!lf.schema.empty()) {
    const AttributeSchema want(split_list(lf.schema));
    if (!(want == records.schema)) throw SchemaError(lf.csv + ": CSV header does not match --schema " + lf.schema);
  }
  const BandwidthRule rule = lf.bandwidth == "scott" ? BandwidthRule::scott : BandwidthRule::silverman;
  std::optional<KDEProfile> profile;
  if (lf.cv) {
    std::vector<Kernel> kernels;
    for (const auto& k : lf.kernels) kernels.push_back(parse_kernel(k));
    profile.emplace(fit_kde_cv(records, kernels, lf.grid, lf.folds, RngStream(flags.seed), flags.workers, rule));
  } else {
    profile.emplace(fit_kde(records, parse_kernel(lf.kernel), rule, lf.multiplier));
  }
  const std::string id =
      lf.service_id.empty() ? std::filesystem::path(lf.output.empty() ? lf.csv : lf.output).stem().string()
                            : lf.service_id;
  const Json doc = profile_to_json(*profile, id);
  if (!lf.output.empty()) {
    std::ofstream out(lf.output);
    if (!out) throw FormatError("cannot write " + lf.output);
    out << doc.dump(1) << '\n';
  }

  Json meta;
  meta["service_id"] = id;
  meta["records"] = records.size();
  meta["kernel"] = to_string(profile->kernel());
  meta["bandwidths"] = doc["bandwidths"];
  meta["method"] = profile->fit().method;
  meta["base_rule"] = to_string(rule);
  meta["multiplier"] = profile->fit().multiplier;
  if (profile->fit().score) {
    meta["cv_score"] = *profile->fit().score;
    meta["folds"] = profile->fit().folds;
    Json cands = Json::array();
    for (const auto& c : profile->fit().candidates) {
      cands.push_back({{"kernel", to_string(c.kernel)}, {"multiplier", c.multiplier}, {"score", c.score}});
    }
    meta["candidates"] = std::move(cands);
  }
  if (!lf.output.empty()) meta["output"] = lf.output;
  if (flags.json || lf.output.empty()) {
    if (lf.output.empty()) meta["profile"] = doc;
    print_json(meta);
  } else {
    std::cout << "learned " << id << " from " << records.size() << " records: kernel " << meta["kernel"].get<std::string>()
              << ", bandwidths";
    for (Eigen::Index j = 0; j < profile->bandwidths().size(); ++j) std::cout << ' ' << fmt(profile->bandwidths()(j));
    std::cout << " (" << profile->fit().method;
    if (profile->fit().score) std::cout << ", multiplier " << fmt(profile->fit().multiplier) << ", score " << fmt(*profile->fit().score);
    std::cout << ")\nwrote " << lf.output << '\n';
  }
  return 0;
}

int run_select(const CommonFlags& flags, const std::string& repo_dir, const std::string& req_path,
               bool include_indeterminate) {
  const Repository repo = Repository::load(repo_dir);
  const std::string text = read_text_file(req_path);
  const QoSRequirement req = parse_requirement(text, repo.schema());
  const SelectionResult result = select_services(repo, req, flags.check_options(), include_indeterminate);
  if (flags.json) {
    print_json(selection_json(result));
  } else {
    std::cout << "requirement " << result.requirement_hash << ", " << repo.services().size() << " services\n";
    for (const auto& s : result.evaluated) {
      std::cout << "  " << s.service_id << ": " << to_string(s.report.verdict) << ", min margin "
                << fmt(s.report.min_margin(), "%.4g") << '\n';
    }
    std::cout << "selected:";
    if (result.selected.empty()) std::cout << " (none)";
    for (const auto& s : result.selected) {
      std::cout << ' ' << s.service_id << (s.report.verdict == Verdict::indeterminate ? "(indeterminate)" : "");
    }
    std::cout << '\n';
  }
  for (const auto& s : result.selected) {
    if (s.report.verdict == Verdict::satisfied) return kExitSatisfied;
  }
  return kExitViolated;
}

struct IntegrateFlags {
  std::string profile;
  std::string region;
  std::string region_file;
  std::string method = "uniform-polytope";
  std::vector<std::size_t> scan;
  std::size_t seeds = 20;
  std::optional<double> truth;
  std::size_t truth_samples = 10'000'000;
};

int run_integrate(const CommonFlags& flags, const IntegrateFlags& f) {
  const ProfileDocument doc = load_profile(f.profile);
  const HPolytope region = parse_region(region_text(f.region, f.region_file), doc.profile->schema());
  const IntegrationMethod method =
      f.method == "rejection-box" ? IntegrationMethod::rejection_box : IntegrationMethod::uniform_polytope;
  IntegrationOptions options;
  options.workers = flags.workers;

  Json j;
  j["service_id"] = doc.service_id;
  if (f.scan.empty()) {
    const RngStream rng(flags.seed);
    const IntegralEstimate e = method == IntegrationMethod::rejection_box
                                   ? integrate_rejection_box(*doc.profile, region, flags.samples, rng, options)
                                   : integrate_uniform(*doc.profile, region, flags.samples, rng, options);
    if (flags.json) {
      j.update(estimate_json(e));
      print_json(j);
    } else {
      std::cout << "P = " << fmt(e.value, "%.6f") << " +- " << fmt(e.std_error, "%.3g") << "  (k = " << e.k << ", "
                << to_string(e.method) << ", sampler " << to_string(e.sampler) << ")\n";
    }
    return 0;
  }

  double truth = 0.0;
  std::string truth_source;
  if (f.truth) {
    truth = *f.truth;
    truth_source = "given";
  } else if (doc.profile->kind() == "independent" && is_axis_aligned(region)) {
    truth = rectangle_probability(*doc.profile, region.box());
    truth_source = "closed-form";
  } else {
    const IntegralEstimate ref = integrate_uniform(*doc.profile, region, f.truth_samples,
                                                   RngStream(derive_seed(flags.seed, "truth")), options);
    truth = ref.value;
    truth_source = "reference run, k=" + std::to_string(f.truth_samples);
  }
  std::vector<std::uint64_t> seeds;
  for (std::size_t s = 0; s < f.seeds; ++s) seeds.push_back(flags.seed + s);
  const ConvergenceTable table = convergence_scan(*doc.profile, region, f.scan, seeds, truth, method, options);
  if (flags.json) {
    j["truth"] = truth;
    j["truth_source"] = truth_source;
    j["method"] = to_string(method);
    Json rows = Json::array();
    for (const auto& r : table.rows) rows.push_back({{"k", r.k}, {"mean_abs_error", r.mean_abs_error}});
    j["rows"] = std::move(rows);
    j["slope"] = table.slope ? Json(*table.slope) : Json(nullptr);
    print_json(j);
  } else {
    std::cout << "truth " << fmt(truth, "%.6f") << " (" << truth_source << ")\n";
    for (const auto& r : table.rows) std::cout << "  k = " << r.k << "  mean |error| = " << fmt(r.mean_abs_error, "%.4g") << '\n';
    std::cout << "slope " << (table.slope ? fmt(*table.slope, "%.3f") : std::string("n/a")) << '\n';
  }
  return 0;
}

int run_volume(const CommonFlags& flags, const std::string& region_inline, const std::string& region_file,
               const std::string& attributes) {
  const AttributeSchema schema(split_list(attributes));
  const HPolytope region = parse_region(region_text(region_inline, region_file), schema);
  const VolumeEstimate v = estimate_volume(region, flags.samples, RngStream(flags.seed), flags.workers);
  const Box& box = region.box();
  if (flags.json) {
    Json j;
    j["volume"] = v.volume;
    j["std_error"] = v.std_error;
    j["hits"] = v.hits;
    j["samples"] = v.samples;
    j["box_volume"] = v.box_volume;
    j["acceptance_rate"] = v.acceptance_rate();
    j["box_lower"] = detail::vector_json(box.lower());
    j["box_upper"] = detail::vector_json(box.upper());
    print_json(j);
  } else {
    std::cout << "volume " << fmt(v.volume, "%.6g") << " +- " << fmt(v.std_error, "%.3g") << "  (" << v.hits << "/"
              << v.samples << " box hits, box volume " << fmt(v.box_volume) << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pqos: probabilistic QoS requirement checking and service selection"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* check = app.add_subcommand("check", "Check one profile against a requirement");
  std::string profile_path, req_path;
  check->add_option("profile", profile_path, "Profile JSON file")->required();
  check->add_option("requirement", req_path, "Requirement file")->required();
  flags.attach(check);

  auto* learn = app.add_subcommand("learn", "Fit a KDE profile to QoS records");
  LearnFlags lf;
  learn->add_option("records", lf.csv, "CSV of QoS records")->required();
  learn->add_option("-o,--output", lf.output, "Profile JSON to write");
  learn->add_option("--kernel", lf.kernel, "Kernel without --cv")->check(CLI::IsMember({"gaussian", "exponential"}));
  learn->add_option("--bandwidth", lf.bandwidth, "Rule-of-thumb bandwidth (base of the --cv grid)")
      ->check(CLI::IsMember({"scott", "silverman"}));
  learn->add_option("--multiplier", lf.multiplier, "Scale applied to the rule-of-thumb bandwidth")
      ->check(CLI::PositiveNumber);
  learn->add_flag("--cv", lf.cv, "Cross-validate kernel and bandwidth multiplier");
  learn->add_option("--kernels", lf.kernels, "Kernels tried by --cv")->delimiter(',');
  learn->add_option("--grid", lf.grid, "Bandwidth multipliers tried by --cv")->delimiter(',');
  learn->add_option("--folds", lf.folds, "Cross-validation folds")->capture_default_str();
  learn->add_option("--schema", lf.schema, "Expected attribute names, comma separated");
  learn->add_option("--service-id", lf.service_id, "Service id stored in the profile");
  flags.attach(learn);

  auto* select = app.add_subcommand("select", "Rank the services of a repository that satisfy a requirement");
  std::string repo_dir;
  bool include_indeterminate = false;
  select->add_option("repository", repo_dir, "Directory of profile JSON files")->required();
  select->add_option("requirement", req_path, "Requirement file")->required();
  select->add_flag("--include-indeterminate", include_indeterminate, "Also list indeterminate services");
  flags.attach(select);

  auto* integrate = app.add_subcommand("integrate", "Estimate P(X in R), or scan the convergence rate");
  IntegrateFlags inf;
  integrate->add_option("profile", inf.profile, "Profile JSON file")->required();
  integrate->add_option("--region", inf.region, "Region, e.g. \"60 <= TP && TP <= 100 && 0 <= RT && RT <= 300\"");
  integrate->add_option("--region-file", inf.region_file, "File holding the region text");
  integrate->add_option("--method", inf.method, "Estimator")
      ->capture_default_str()
      ->check(CLI::IsMember({"uniform-polytope", "rejection-box"}));
  integrate->add_option("--scan", inf.scan, "Sample counts for a convergence scan, comma separated")->delimiter(',');
  integrate->add_option("--seeds", inf.seeds, "Seeds per sample count in a scan")->capture_default_str();
  integrate->add_option("--truth", inf.truth, "Reference value for the scan");
  integrate->add_option("--truth-samples", inf.truth_samples, "Samples for the reference value when none is known")
      ->capture_default_str();
  flags.attach(integrate);

  auto* volume = app.add_subcommand("volume", "Estimate the volume of a region");
  std::string vol_region, vol_region_file, attributes;
  volume->add_option("--region", vol_region, "Region text");
  volume->add_option("--region-file", vol_region_file, "File holding the region text");
  volume->add_option("--attributes", attributes, "Attribute names, comma separated")->required();
  flags.attach(volume);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitOtherError;
  }

  try {
    if (*check) return run_check(flags, profile_path, req_path);
    if (*learn) return run_learn(flags, lf);
    if (*select) return run_select(flags, repo_dir, req_path, include_indeterminate);
    if (*integrate) return run_integrate(flags, inf);
    if (*volume) return run_volume(flags, vol_region, vol_region_file, attributes);
  } catch (const std::exception& e) {
    const int code = exit_code_for_current_exception();
    std::cerr << "pqos: error: " << e.what() << '\n';
    return code;
  }
  return kExitOtherError;
}

// Copyright 2026 the sotifval authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sotifval/catalog.hpp"
#include "sotifval/classify.hpp"
#include "sotifval/constraints.hpp"
#include "sotifval/ontology.hpp"
#include "sotifval/scenario.hpp"
#include "sotifval/simkernel.hpp"
#include "sotifval/testgen.hpp"

namespace {

using namespace sotifval;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::infeasible_constraints:
    case ErrorCode::empty_sampling_range:
      return kExitInfeasible;
    case ErrorCode::io_error:
    case ErrorCode::digest_mismatch:
    case ErrorCode::not_found:
      return kExitIo;
    case ErrorCode::invalid_levels:
      return kExitUsage;
    default:
      return kExitValidation;
  }
}

struct GlobalOptions {
  std::string catalog;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  bool json = false;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    fail(ErrorCode::io_error, "cannot read " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.good()) {
    fail(ErrorCode::io_error, "cannot write " + path);
  }
  out << content;
  out.flush();
  if (!out.good()) {
    fail(ErrorCode::io_error, "write failed on " + path);
  }
}

CatalogStore open_catalog(const GlobalOptions& global) {
  std::string root = global.catalog;
  if (root.empty()) {
    if (const char* env = std::getenv("SOTIF_CATALOG")) root = env;
  }
  if (root.empty()) {
    throw CLI::ValidationError("catalog",
                               "no catalog root: pass --catalog or set SOTIF_CATALOG");
  }
  return CatalogStore::open(root);
}

/// Composition root for a set of requested condition ids. Routing them
/// through one synthetic parent keeps shared sub-conditions deduplicated
/// exactly as they would be inside a single nested condition.
std::vector<std::pair<std::string, ScenarioConstraint>> flatten_ids(
    const CatalogStore& store, const std::vector<std::string>& tc_ids) {
  const auto lookup = store.tc_lookup();
  for (const auto& id : tc_ids) {
    if (lookup(id) == nullptr) {
      fail(ErrorCode::unknown_sub_condition,
           "unknown triggering condition \"" + id + "\"", id);
    }
  }
  TriggeringCondition root;
  root.id = "";
  root.name = "composition root";
  root.sub_conditions = tc_ids;
  return flatten(root, store.tc_lookup());
}

EffectiveConstraintSet compose_ids(const CatalogStore& store,
                                   const std::vector<std::string>& tc_ids,
                                   const Ontology& ontology) {
  return merge(flatten_ids(store, tc_ids), ontology);
}

FunctionUnderTest function_of(const Scenario& s) {
  return s.function ? *s.function : FunctionUnderTest{};
}

int run_validate(const GlobalOptions& global, const std::string& kind,
                 const std::string& file) {
  const std::string content = slurp(file);
  ValidationReport report;
  if (kind == "ontology") {
    report = validate_ontology_document(content);
  } else {
    report = validate_scenario_document(content, open_catalog(global).the_ontology());
  }
  if (global.json) {
    std::cout << report.to_json().dump() << "\n";
  } else {
    std::cout << report.to_text();
  }
  return report.ok() ? kExitOk : kExitValidation;
}

int run_compose(const GlobalOptions& global, const std::vector<std::string>& tc_ids) {
  const CatalogStore store = open_catalog(global);
  const EffectiveConstraintSet ecs = compose_ids(store, tc_ids, store.the_ontology());
  nlohmann::json j = to_json(ecs);
  j["tc_ids"] = tc_ids;
  std::cout << (global.json ? j.dump() : j.dump(2)) << "\n";
  for (const auto& warning : ecs.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }
  return kExitOk;
}

int run_gen(const GlobalOptions& global, const std::string& scenario_id,
            const std::vector<std::string>& tc_ids, int levels, bool pairwise,
            const std::string& out_path) {
  const CatalogStore store = open_catalog(global);
  const Ontology ontology = store.the_ontology();
  const Scenario s = store.scenario(scenario_id);

  const EffectiveConstraintSet ecs = compose_ids(store, tc_ids, ontology);
  const ConstrainedScenario cs = apply_to_scenario(ecs, s, ontology);
  const Provenance prov =
      tc_ids.empty() ? Provenance::nominal() : Provenance::tc_set(tc_ids);

  LevelSpec spec;
  spec.default_levels = levels;
  const TestMatrix matrix = pairwise ? reduce_pairwise(cs, spec, prov, global.seed)
                                     : generate_grid(cs, spec, prov);

  const std::string text = serialize(matrix);
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    spill(out_path, text);
  }
  std::cerr << "generated " << matrix.cases.size() << " cases for \"" << scenario_id
            << "\"\n";
  return kExitOk;
}

int run_run(const GlobalOptions& global, const std::string& matrix_path,
            const std::string& traces_dir) {
  const TestMatrix matrix = parse_matrix(slurp(matrix_path));
  if (matrix.cases.empty()) {
    fail(ErrorCode::empty_matrix, "empty matrix: nothing to run");
  }
  const std::string scenario_id = matrix.cases.front().scenario_id;
  for (const auto& tc : matrix.cases) {
    if (tc.scenario_id != scenario_id) {
      fail(ErrorCode::not_simulatable,
           "matrix mixes scenarios \"" + scenario_id + "\" and \"" + tc.scenario_id +
               "\"");
    }
  }

  const CatalogStore store = open_catalog(global);
  const Scenario s = store.scenario(scenario_id);
  const FunctionUnderTest fut = function_of(s);

  const auto results = run_matrix(matrix, s, fut, {}, global.workers);
  std::cout << serialize(results);

  if (!traces_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(traces_dir, ec);
    if (ec) {
      fail(ErrorCode::io_error, "cannot create " + traces_dir);
    }
    for (const auto& tc : matrix.cases) {
      const auto [trace, report] = simulate(tc, s, fut);
      spill(traces_dir + "/" + std::to_string(tc.case_index) + ".csv",
            trace_to_csv(trace));
    }
    std::cerr << "wrote " << matrix.cases.size() << " traces to " << traces_dir
              << "\n";
  }
  return kExitOk;
}

std::string tc_label(const std::vector<RunResult>& results) {
  for (const auto& r : results) {
    if (r.provenance.is_nominal()) continue;
    std::string label;
    for (const auto& id : r.provenance.tc_ids) {
      if (!label.empty()) label += "+";
      label += id;
    }
    return label;
  }
  return "NOMINAL";
}

int run_classify(const GlobalOptions& global, const std::string& nominal_path,
                 const std::string& tc_path, const std::string& windows_path) {
  const auto nominal = parse_results(slurp(nominal_path));
  const auto tc_results = parse_results(slurp(tc_path));
  const TolerableWindow windows =
      windows_path.empty() ? TolerableWindow{} : load_windows(slurp(windows_path));

  ClassificationReport report;
  report.classification =
      classify_tc(nominal, tc_results, windows, tc_label(tc_results));
  report.windows = windows;

  if (global.json) {
    std::cout << to_json(report).dump() << "\n";
  } else {
    std::cout << render_markdown(report);
  }
  return kExitOk;
}

int run_threshold(const GlobalOptions& global, const std::string& scenario_id,
                  const std::string& param_path, double lo, double hi, double tol,
                  const std::string& windows_path) {
  const CatalogStore store = open_catalog(global);
  const Ontology ontology = store.the_ontology();
  const Scenario s = store.scenario(scenario_id);
  const EntityId param = EntityId::parse(param_path);
  try {
    ontology.resolve_param(param);
  } catch (const Error&) {
    fail(ErrorCode::unresolved_param,
         "\"" + param.str() + "\" is not a parameter of the ontology", param.str());
  }

  const TolerableWindow windows =
      windows_path.empty() ? TolerableWindow{} : load_windows(slurp(windows_path));

  // Everything except the swept parameter is pinned: fixed values stay put,
  // free ranges sit at their midpoint.
  std::map<EntityId, double> fixed;
  for (const auto& assignment : s.params) {
    if (assignment.param == param) continue;
    if (assignment.fixed()) {
      fixed[assignment.param] = *assignment.value;
    } else {
      fixed[assignment.param] = assignment.range->midpoint();
    }
  }

  const ThresholdResult result = find_threshold(param, Interval{lo, hi}, fixed, s,
                                                function_of(s), windows, tol);
  for (const auto& diag : result.diagnostics) {
    std::cerr << diag << "\n";
  }
  if (!result.value) {
    if (global.json) {
      std::cout << nlohmann::json{{"param", param.str()},
                                  {"value", nullptr},
                                  {"tol", result.tol},
                                  {"diagnostics", result.diagnostics}}
                       .dump()
                << "\n";
    }
    return kExitValidation;
  }
  if (global.json) {
    std::cout << nlohmann::json{{"param", param.str()},
                                {"value", *result.value},
                                {"tol", result.tol},
                                {"diagnostics", result.diagnostics}}
                     .dump()
              << "\n";
  } else {
    std::cout << param.str() << " threshold: " << *result.value << " (tol "
              << result.tol << ")\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scenario-based validation toolkit for automated driving functions"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--catalog", global.catalog,
                 "catalog root directory (default: $SOTIF_CATALOG)");
  app.add_option("--seed", global.seed, "seed for randomized reductions")
      ->default_val(0);
  app.add_option("--workers", global.workers,
                 "simulation worker threads (0 = hardware)")
      ->default_val(0);
  app.add_flag("--json", global.json, "machine-readable stdout");

  auto* validate = app.add_subcommand("validate", "validate a document");
  std::string validate_kind;
  std::string validate_file;
  validate->add_option("kind", validate_kind, "ontology or scenario")
      ->required()
      ->check(CLI::IsMember({"ontology", "scenario"}));
  validate->add_option("file", validate_file, "document path")->required();

  auto* compose = app.add_subcommand("compose", "merge triggering conditions");
  std::vector<std::string> compose_tcs;
  compose->add_option("--tc", compose_tcs, "triggering condition id")->required();

  auto* gen = app.add_subcommand("gen", "generate a test matrix");
  std::string gen_scenario;
  std::vector<std::string> gen_tcs;
  int gen_levels = 3;
  bool gen_pairwise = false;
  std::string gen_out;
  gen->add_option("--scenario", gen_scenario, "scenario id")->required();
  gen->add_option("--tc", gen_tcs, "triggering condition id");
  gen->add_option("--levels", gen_levels, "levels per parameter")->default_val(3);
  gen->add_flag("--pairwise", gen_pairwise, "pairwise-reduced matrix");
  gen->add_option("-o,--out", gen_out, "output file (default stdout)");

  auto* run = app.add_subcommand("run", "simulate a test matrix");
  std::string run_matrix_path;
  std::string run_traces;
  run->add_option("--matrix", run_matrix_path, "matrix file")->required();
  run->add_option("--traces", run_traces, "directory for per-case trace csv");

  auto* classify = app.add_subcommand("classify", "compare hazard rates");
  std::string classify_nominal;
  std::string classify_tc_results;
  std::string classify_windows;
  classify->add_option("--nominal", classify_nominal, "nominal results file")
      ->required();
  classify->add_option("--tc-results", classify_tc_results, "condition results file")
      ->required();
  classify->add_option("--windows", classify_windows, "tolerable window file");

  auto* threshold = app.add_subcommand("threshold", "locate a verdict boundary");
  std::string threshold_scenario;
  std::string threshold_param;
  double threshold_lo = 0;
  double threshold_hi = 0;
  double threshold_tol = 0;
  std::string threshold_windows;
  threshold->add_option("--scenario", threshold_scenario, "scenario id")->required();
  threshold->add_option("--param", threshold_param, "parameter path")->required();
  threshold->add_option("--lo", threshold_lo, "search lower bound")->required();
  threshold->add_option("--hi", threshold_hi, "search upper bound")->required();
  threshold->add_option("--tol", threshold_tol, "boundary tolerance")->required();
  threshold->add_option("--windows", threshold_windows, "tolerable window file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (validate->parsed()) {
      return run_validate(global, validate_kind, validate_file);
    }
    if (compose->parsed()) {
      return run_compose(global, compose_tcs);
    }
    if (gen->parsed()) {
      return run_gen(global, gen_scenario, gen_tcs, gen_levels, gen_pairwise, gen_out);
    }
    if (run->parsed()) {
      return run_run(global, run_matrix_path, run_traces);
    }
    if (classify->parsed()) {
      return run_classify(global, classify_nominal, classify_tc_results,
                          classify_windows);
    }
    if (threshold->parsed()) {
      return run_threshold(global, threshold_scenario, threshold_param, threshold_lo,
                           threshold_hi, threshold_tol, threshold_windows);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmpinfer/case_model.hpp"
#include "lmpinfer/dispatch.hpp"

namespace lmpinfer {

enum class ScenarioSelect { kScenario1, kScenario2, kBoth };

struct Scenario1Params {
  double margin_pu = 0.1;    // converted to MW via base_mva
  double min_gap_pu = 0.01;  // converted to MW via base_mva
  double bind_tol = 1e-6;    // $/MWh
};

struct Scenario2Params {
  double a_max = 0.5;
  double tol = 1e-6;
  int max_iter = 100;
  int budget = 2000;  // candidate evaluations per generator
  bool force = false; // run the iteration even when conditions fail
};

struct ExperimentConfig {
  std::string case_path;
  std::string format = "matpower";  // or "native"
  SolverKind solver = SolverKind::kEconomicDispatch;
  int n_points = 1000;
  double range_fraction = 0.2;
  std::uint64_t seed = 1;
  ScenarioSelect scenario = ScenarioSelect::kBoth;
  Scenario1Params s1;
  Scenario2Params s2;
  std::string out_dir = ".";
  std::string dataset_path;  // when set, load instead of generating
  std::string grid_label;    // defaults to the case file stem
};

struct ExperimentReport {
  nlohmann::ordered_json doc;      // everything except timings
  nlohmann::ordered_json timings;  // wall-clock seconds per stage
};

void validate_config(const ExperimentConfig& config);

GridCase load_case(const std::string& path, const std::string& format);

double compute_mse(const std::vector<double>& estimates,
                   const std::vector<double>& truth,
                   const std::vector<bool>& mask);

// Full pipeline: parse, validate, generate or load the dataset, run the
// selected attacks, compute metrics, and write report.json, timings.json,
// summary.csv (and dataset.csv when generated) under config.out_dir.
// Partially written outputs are removed if the pipeline fails.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Merges run_experiment reports into one Table-style CSV:
// grid,sample_range,n_iter,mse_a,mse_b,converged
std::string merge_reports(const std::vector<std::string>& report_paths);

}  // namespace lmpinfer

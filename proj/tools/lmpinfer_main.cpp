#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lmpinfer/dataset_io.hpp"
#include "lmpinfer/errors.hpp"
#include "lmpinfer/experiment.hpp"
#include "lmpinfer/native_io.hpp"

namespace {

struct CommonArgs {
  std::string case_path;
  std::string format = "matpower";
  std::string solver = "ed";
  int points = 1000;
  double range = 0.2;
  std::uint64_t seed = 1;
  std::string out;
  std::string dataset;
};

void add_case_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--case", args.case_path, "grid case file")->required();
  cmd->add_option("--format", args.format, "case file format")
      ->check(CLI::IsMember({"matpower", "native"}))
      ->capture_default_str();
}

void add_generation_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--solver", args.solver, "dispatch solver")
      ->check(CLI::IsMember({"ed", "dcopf"}))
      ->capture_default_str();
  cmd->add_option("--points", args.points, "number of data points")
      ->capture_default_str();
  cmd->add_option("--range", args.range, "load perturbation fraction")
      ->capture_default_str();
  cmd->add_option("--seed", args.seed, "random seed")->capture_default_str();
}

int run(int argc, char** argv) {
  CLI::App app{"Power-market dataset synthesis and cost-coefficient inference"};
  app.require_subcommand(1);

  CommonArgs parse_args;
  auto* parse_cmd = app.add_subcommand("parse", "convert a case to the native format");
  add_case_options(parse_cmd, parse_args);
  parse_cmd->add_option("--out", parse_args.out, "output path (default stdout)");

  CommonArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a dataset CSV with metadata");
  add_case_options(gen_cmd, gen_args);
  add_generation_options(gen_cmd, gen_args);
  gen_cmd->add_option("--out", gen_args.out, "output CSV path")->required();

  CommonArgs s1_args;
  lmpinfer::Scenario1Params s1_params;
  auto* s1_cmd = app.add_subcommand(
      "attack-individual", "recover per-generator coefficients and capacities");
  add_case_options(s1_cmd, s1_args);
  add_generation_options(s1_cmd, s1_args);
  s1_cmd->add_option("dataset", s1_args.dataset,
                     "existing dataset CSV (generated in memory when omitted)");
  s1_cmd->add_option("--margin-pu", s1_params.margin_pu,
                     "interior margin in per-unit")
      ->capture_default_str();
  s1_cmd->add_option("--min-gap-pu", s1_params.min_gap_pu,
                     "minimum generation gap in per-unit")
      ->capture_default_str();
  s1_cmd->add_option("--bind-tol", s1_params.bind_tol,
                     "binding classification tolerance in $/MWh")
      ->capture_default_str();
  std::string s1_out = ".";
  s1_cmd->add_option("--out", s1_out, "output directory")->capture_default_str();

  CommonArgs s2_args;
  lmpinfer::Scenario2Params s2_params;
  auto* s2_cmd = app.add_subcommand(
      "attack-aggregate", "recover quadratic coefficients from aggregated data");
  add_case_options(s2_cmd, s2_args);
  add_generation_options(s2_cmd, s2_args);
  s2_cmd->add_option("dataset", s2_args.dataset,
                     "existing dataset CSV (generated in memory when omitted)");
  s2_cmd->add_option("--a-max", s2_params.a_max, "upper coefficient bound")
      ->capture_default_str();
  s2_cmd->add_option("--tol", s2_params.tol, "iteration stopping tolerance")
      ->capture_default_str();
  s2_cmd->add_option("--max-iter", s2_params.max_iter, "iteration cap")
      ->capture_default_str();
  s2_cmd->add_option("--budget", s2_params.budget,
                     "pair-search candidate evaluations per generator")
      ->capture_default_str();
  s2_cmd->add_flag("--force-unguaranteed", s2_params.force,
                   "iterate even when the convergence conditions fail");
  std::string s2_out = ".";
  s2_cmd->add_option("--out", s2_out, "output directory")->capture_default_str();

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report_cmd =
      app.add_subcommand("report", "merge run reports into one summary CSV");
  report_cmd->add_option("reports", report_inputs, "report.json files")
      ->required()
      ->expected(-1);
  report_cmd->add_option("--out", report_out, "output CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  if (parse_cmd->parsed()) {
    const lmpinfer::GridCase gc =
        lmpinfer::load_case(parse_args.case_path, parse_args.format);
    const std::string text = lmpinfer::write_native_case(gc);
    if (parse_args.out.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(parse_args.out);
      if (!out) {
        throw lmpinfer::Error(lmpinfer::errc::kIo,
                              "cannot write " + parse_args.out);
      }
      out << text;
    }
    return 0;
  }

  if (gen_cmd->parsed()) {
    const lmpinfer::GridCase gc =
        lmpinfer::load_case(gen_args.case_path, gen_args.format);
    const lmpinfer::Dataset ds = lmpinfer::generate_dataset(
        gc, gen_args.points, gen_args.range, gen_args.seed,
        lmpinfer::solver_kind_from_string(gen_args.solver));
    lmpinfer::write_dataset_csv(ds, gc, gen_args.out);
    std::cout << "wrote " << ds.points.size() << " points to " << gen_args.out
              << " (retries " << ds.retries << ")\n";
    return 0;
  }

  if (s1_cmd->parsed() || s2_cmd->parsed()) {
    const bool is_s1 = s1_cmd->parsed();
    const CommonArgs& args = is_s1 ? s1_args : s2_args;
    lmpinfer::ExperimentConfig config;
    config.case_path = args.case_path;
    config.format = args.format;
    config.solver = lmpinfer::solver_kind_from_string(args.solver);
    config.n_points = args.points;
    config.range_fraction = args.range;
    config.seed = args.seed;
    config.dataset_path = args.dataset;
    config.scenario = is_s1 ? lmpinfer::ScenarioSelect::kScenario1
                            : lmpinfer::ScenarioSelect::kScenario2;
    config.s1 = s1_params;
    config.s2 = s2_params;
    config.out_dir = is_s1 ? s1_out : s2_out;
    const lmpinfer::ExperimentReport report = lmpinfer::run_experiment(config);
    std::cout << "report written to " << config.out_dir << "/report.json\n";
    if (!is_s1 && report.doc.contains("scenario2")) {
      const auto& s2 = report.doc["scenario2"];
      if (s2.contains("skipped_reason")) {
        std::cout << "iteration skipped: " << s2["skipped_reason"].get<std::string>()
                  << "\n";
      }
    }
    return 0;
  }

  if (report_cmd->parsed()) {
    const std::string csv = lmpinfer::merge_reports(report_inputs);
    if (report_out.empty()) {
      std::cout << csv;
    } else {
      std::ofstream out(report_out);
      if (!out) {
        throw lmpinfer::Error(lmpinfer::errc::kIo, "cannot write " + report_out);
      }
      out << csv;
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lmpinfer::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}

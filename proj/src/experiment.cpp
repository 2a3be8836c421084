#include "lmpinfer/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lmpinfer/dataset_io.hpp"
#include "lmpinfer/errors.hpp"
#include "lmpinfer/matpower.hpp"
#include "lmpinfer/native_io.hpp"
#include "lmpinfer/scenario1.hpp"
#include "lmpinfer/scenario2.hpp"

namespace lmpinfer {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// Stream index reserved for the pair search so it never collides with the
// per-point sub-streams used by dataset generation.
constexpr std::uint64_t kSearchStreamIndex = 0x5EA2C400000001ULL;

ordered_json json_num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::kIo, "cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9e", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

ordered_json scenario1_to_json(const GridCase& gc, const Scenario1Result& s1) {
  ordered_json out;
  ordered_json gens = ordered_json::array();
  std::vector<double> est_a, est_b, truth_a, truth_b;
  std::vector<bool> mask;
  std::vector<int> excluded;

  for (const auto& r : s1.generators) {
    const Generator* g = nullptr;
    for (const auto& cand : gc.generators) {
      if (cand.id == r.gen_id) g = &cand;
    }
    ordered_json jg;
    jg["id"] = r.gen_id;
    jg["recovered"] = r.recovered;
    if (!r.recovered) {
      jg["failure_reason"] = r.failure_reason;
      excluded.push_back(r.gen_id);
    } else {
      jg["a_hat"] = json_num(r.a_hat);
      jg["b_hat"] = json_num(r.b_hat);
      jg["a_true"] = g->cost.a;
      jg["b_true"] = g->cost.b;
      jg["abs_err_a"] = json_num(std::abs(r.a_hat - g->cost.a));
      jg["abs_err_b"] = json_num(std::abs(r.b_hat - g->cost.b));
      jg["residual_max"] = json_num(r.residual_max);
      ordered_json cap;
      cap["case1_count"] = r.capacity.case1_count;
      cap["case2_count"] = r.capacity.case2_count;
      cap["interior_count"] = r.capacity.interior_count;
      cap["disagreement_warning"] = r.capacity.disagreement_warning;
      cap["p_max_hat"] = r.capacity.p_max_hat.has_value()
                             ? json_num(*r.capacity.p_max_hat)
                             : ordered_json(nullptr);
      cap["p_min_hat"] = r.capacity.p_min_hat.has_value()
                             ? json_num(*r.capacity.p_min_hat)
                             : ordered_json(nullptr);
      if (r.capacity.p_max_hat.has_value()) {
        cap["p_max_abs_err"] = json_num(std::abs(*r.capacity.p_max_hat - g->p_max));
      }
      if (r.capacity.p_min_hat.has_value()) {
        cap["p_min_abs_err"] = json_num(std::abs(*r.capacity.p_min_hat - g->p_min));
      }
      jg["capacity"] = cap;
    }
    gens.push_back(jg);

    est_a.push_back(r.a_hat);
    est_b.push_back(r.b_hat);
    truth_a.push_back(g->cost.a);
    truth_b.push_back(g->cost.b);
    mask.push_back(r.recovered);
  }

  out["generators"] = gens;
  out["excluded"] = excluded;
  ordered_json metrics;
  bool any = false;
  for (bool m : mask) any = any || m;
  if (any) {
    metrics["mse_a"] = json_num(compute_mse(est_a, truth_a, mask));
    metrics["mse_b"] = json_num(compute_mse(est_b, truth_b, mask));
  } else {
    metrics["mse_a"] = nullptr;
    metrics["mse_b"] = nullptr;
  }
  int recovered = 0;
  for (bool m : mask) recovered += m ? 1 : 0;
  metrics["recovered_count"] = recovered;
  metrics["mse_convention"] =
      "mean over recovered generators only; excluded generators listed above";
  out["metrics"] = metrics;
  return out;
}

ordered_json conditions_to_json(const ConditionReport& rep) {
  ordered_json j;
  j["cond1"] = rep.cond1;
  j["cond2"] = rep.cond2;
  j["a_min"] = json_num(rep.a_min);
  j["a_max"] = json_num(rep.a_max);
  j["bound_feasible"] = rep.bound_feasible;
  j["identifiability_ok"] = rep.identifiability_ok;
  j["overall"] = rep.overall;
  return j;
}

ordered_json pairs_to_json(const PairSet& pairs) {
  ordered_json arr = ordered_json::array();
  for (const auto& p : pairs.pairs) {
    ordered_json jp;
    jp["gen_id"] = p.gen_id;
    jp["p_agg_base"] = json_num(p.p_agg_base);
    jp["p_agg_aux"] = json_num(p.p_agg_aux);
    ordered_json lb = ordered_json::array(), la = ordered_json::array();
    for (double v : p.lmp_base) lb.push_back(json_num(v));
    for (double v : p.lmp_aux) la.push_back(json_num(v));
    jp["lmp_base"] = lb;
    jp["lmp_aux"] = la;
    arr.push_back(jp);
  }
  return arr;
}

ordered_json mfpi_to_json(const MFPIResult& res, bool unguaranteed) {
  ordered_json j;
  j["converged"] = res.converged;
  j["iterations"] = res.iterations;
  j["unguaranteed"] = unguaranteed;
  j["aborted"] = res.aborted;
  if (res.aborted) j["abort_reason"] = res.abort_reason;
  ordered_json ah = ordered_json::array();
  for (double v : res.a_hat) ah.push_back(json_num(v));
  j["a_hat"] = ah;
  ordered_json sn = ordered_json::array();
  for (double v : res.step_norms) sn.push_back(json_num(v));
  j["step_norms"] = sn;
  ordered_json bh = ordered_json::array();
  for (double v : res.bound_history) bh.push_back(json_num(v));
  j["contraction_bounds"] = bh;
  ordered_json cr = ordered_json::array();
  for (double v : res.contraction_ratios) cr.push_back(json_num(v));
  j["contraction_ratios"] = cr;
  ordered_json its = ordered_json::array();
  for (const auto& it : res.iterates) {
    ordered_json row = ordered_json::array();
    for (double v : it) row.push_back(json_num(v));
    its.push_back(row);
  }
  j["iterates"] = its;
  return j;
}

std::string scenario_name(ScenarioSelect s) {
  switch (s) {
    case ScenarioSelect::kScenario1:
      return "individual";
    case ScenarioSelect::kScenario2:
      return "aggregate";
    default:
      return "both";
  }
}

}  // namespace

void validate_config(const ExperimentConfig& config) {
  auto fail = [](const std::string& what) {
    throw Error(errc::kConfigInvalid, what);
  };
  if (config.case_path.empty()) fail("case path is required");
  if (config.format != "matpower" && config.format != "native") {
    fail("format must be 'matpower' or 'native'");
  }
  if (config.dataset_path.empty() && config.n_points < 1) {
    fail("points must be >= 1");
  }
  if (config.range_fraction < 0.0 || config.range_fraction >= 1.0) {
    fail("range must be in [0, 1)");
  }
  if (config.s1.margin_pu < 0.0) fail("margin-pu must be >= 0");
  if (config.s1.min_gap_pu < 0.0) fail("min-gap-pu must be >= 0");
  if (config.s1.bind_tol < 0.0) fail("bind-tol must be >= 0");
  if (config.s2.a_max <= 0.0) fail("a-max must be > 0");
  if (config.s2.tol <= 0.0) fail("tol must be > 0");
  if (config.s2.max_iter < 1) fail("max-iter must be >= 1");
  if (config.s2.budget < 0) fail("budget must be >= 0");
  if (config.out_dir.empty()) fail("output directory is required");
}

GridCase load_case(const std::string& path, const std::string& format) {
  const std::string text = read_file(path);
  GridCase gc = format == "native" ? parse_native_case(text)
                                   : parse_matpower_case(text);
  require_valid(gc);
  return gc;
}

double compute_mse(const std::vector<double>& estimates,
                   const std::vector<double>& truth,
                   const std::vector<bool>& mask) {
  if (estimates.size() != truth.size() || estimates.size() != mask.size()) {
    throw Error(errc::kConfigInvalid, "mse inputs have mismatched lengths");
  }
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!mask[i]) continue;
    const double d = estimates[i] - truth[i];
    sum += d * d;
    ++count;
  }
  if (count == 0) throw Error(errc::kEmptyMask, "no entries selected for mse");
  return sum / count;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate_config(config);

  std::vector<fs::path> created;
  auto cleanup = [&created]() {
    for (const auto& p : created) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  };

  try {
    const auto t_total = std::chrono::steady_clock::now();
    ExperimentReport report;
    ordered_json& doc = report.doc;

    std::string grid = config.grid_label;
    if (grid.empty()) grid = fs::path(config.case_path).stem().string();

    ordered_json jconfig;
    jconfig["grid"] = grid;
    jconfig["case"] = config.case_path;
    jconfig["format"] = config.format;
    jconfig["solver"] = to_string(config.solver);
    jconfig["points"] = config.n_points;
    jconfig["range_fraction"] = config.range_fraction;
    jconfig["seed"] = config.seed;
    jconfig["scenario"] = scenario_name(config.scenario);
    jconfig["margin_pu"] = config.s1.margin_pu;
    jconfig["min_gap_pu"] = config.s1.min_gap_pu;
    jconfig["bind_tol"] = config.s1.bind_tol;
    jconfig["a_max"] = config.s2.a_max;
    jconfig["tol"] = config.s2.tol;
    jconfig["max_iter"] = config.s2.max_iter;
    jconfig["budget"] = config.s2.budget;
    jconfig["force_unguaranteed"] = config.s2.force;
    jconfig["dataset"] = config.dataset_path.empty() ? ordered_json(nullptr)
                                                     : ordered_json(config.dataset_path);
    doc["config"] = jconfig;

    auto t0 = std::chrono::steady_clock::now();
    const GridCase gc = load_case(config.case_path, config.format);
    report.timings["parse_s"] = seconds_since(t0);

    const std::string fingerprint = case_fingerprint(gc);
    ordered_json jcase;
    jcase["fingerprint"] = fingerprint;
    jcase["buses"] = gc.buses.size();
    jcase["generators"] = gc.generators.size();
    jcase["in_service_generators"] = gc.in_service_generators().size();
    jcase["lines"] = gc.lines.size();
    doc["case"] = jcase;

    fs::create_directories(config.out_dir);

    t0 = std::chrono::steady_clock::now();
    Dataset ds;
    std::string dataset_file;
    if (!config.dataset_path.empty()) {
      ds = read_dataset_csv(config.dataset_path, gc);
      dataset_file = config.dataset_path;
    } else {
      ds = generate_dataset(gc, config.n_points, config.range_fraction,
                            config.seed, config.solver);
      dataset_file = (fs::path(config.out_dir) / "dataset.csv").string();
      created.push_back(dataset_file);
      created.push_back(metadata_path_for(dataset_file));
      write_dataset_csv(ds, gc, dataset_file);
    }
    report.timings["dataset_s"] = seconds_since(t0);

    ordered_json jds;
    jds["path"] = dataset_file;
    jds["case_fingerprint"] = ds.case_fingerprint;
    jds["points"] = ds.points.size();
    jds["seed"] = ds.seed;
    jds["range_fraction"] = ds.range_fraction;
    jds["solver"] = to_string(ds.solver_kind);
    jds["retries"] = ds.retries;
    doc["dataset"] = jds;

    const bool run_s1 = config.scenario != ScenarioSelect::kScenario2;
    const bool run_s2 = config.scenario != ScenarioSelect::kScenario1;

    std::optional<double> s1_mse_a, s1_mse_b;
    if (run_s1) {
      t0 = std::chrono::steady_clock::now();
      const double margin = config.s1.margin_pu * gc.base_mva;
      const double min_gap = config.s1.min_gap_pu * gc.base_mva;
      const Scenario1Result s1 =
          attack_all_generators(gc, ds, margin, min_gap, config.s1.bind_tol);
      doc["scenario1"] = scenario1_to_json(gc, s1);
      report.timings["scenario1_s"] = seconds_since(t0);
      const auto& m = doc["scenario1"]["metrics"];
      if (m["mse_a"].is_number()) s1_mse_a = m["mse_a"].get<double>();
      if (m["mse_b"].is_number()) s1_mse_b = m["mse_b"].get<double>();
    }

    std::optional<double> s2_mse_a;
    std::optional<int> s2_iters;
    std::optional<bool> s2_converged;
    if (run_s2) {
      t0 = std::chrono::steady_clock::now();
      RandomStream stream = RandomStream(config.seed).substream(kSearchStreamIndex);
      const SearchResult search = search_point_pairs(gc, ds, config.s2.a_max,
                                                     config.s2.budget, stream);
      ordered_json js2;
      js2["conditions"] = conditions_to_json(search.report);
      js2["pairs"] = pairs_to_json(search.pairs);

      if (search.report.overall || config.s2.force) {
        const MFPIResult res =
            run_mfpi(search.pairs, std::nullopt, config.s2.a_max, config.s2.tol,
                     config.s2.max_iter);
        js2["mfpi"] = mfpi_to_json(res, !search.report.overall);

        std::vector<double> truth;
        std::vector<bool> mask;
        for (int id : search.pairs.gen_ids) {
          for (const auto& g : gc.generators) {
            if (g.id == id) truth.push_back(g.cost.a);
          }
          mask.push_back(!res.aborted);
        }
        ordered_json metrics;
        if (!res.aborted && !res.a_hat.empty()) {
          const double mse = compute_mse(res.a_hat, truth, mask);
          metrics["mse_a"] = json_num(mse);
          s2_mse_a = mse;
        } else {
          metrics["mse_a"] = nullptr;
        }
        metrics["n_iter"] = res.iterations;
        s2_iters = res.iterations;
        s2_converged = res.converged;
        js2["metrics"] = metrics;
      } else {
        js2["mfpi"] = nullptr;
        js2["skipped_reason"] =
            "convergence conditions not satisfied; rerun with the force flag "
            "to iterate without the guarantee";
        ordered_json metrics;
        metrics["mse_a"] = nullptr;
        metrics["n_iter"] = nullptr;
        js2["metrics"] = metrics;
      }
      doc["scenario2"] = js2;
      report.timings["scenario2_s"] = seconds_since(t0);
    }

    // Summary row: scenario-2 numbers when present (the table is
    // aggregate-centric), scenario-1 MSEs otherwise.
    std::ostringstream summary;
    summary << "grid,sample_range,n_iter,mse_a,mse_b,converged\n";
    summary << grid << ',' << csv_num(ds.range_fraction) << ',';
    if (s2_iters.has_value()) summary << *s2_iters;
    summary << ',';
    if (s2_mse_a.has_value()) {
      summary << csv_num(*s2_mse_a);
    } else if (s1_mse_a.has_value()) {
      summary << csv_num(*s1_mse_a);
    }
    summary << ',';
    if (s1_mse_b.has_value()) summary << csv_num(*s1_mse_b);
    summary << ',';
    if (s2_converged.has_value()) summary << (*s2_converged ? "true" : "false");
    summary << '\n';
    doc["summary_csv"] = summary.str();

    report.timings["total_s"] = seconds_since(t_total);

    const fs::path report_path = fs::path(config.out_dir) / "report.json";
    const fs::path timings_path = fs::path(config.out_dir) / "timings.json";
    const fs::path summary_path = fs::path(config.out_dir) / "summary.csv";
    created.push_back(report_path);
    created.push_back(timings_path);
    created.push_back(summary_path);
    {
      std::ofstream out(report_path);
      if (!out) throw Error(errc::kIo, "cannot write " + report_path.string());
      out << doc.dump(2) << '\n';
    }
    {
      std::ofstream out(timings_path);
      if (!out) throw Error(errc::kIo, "cannot write " + timings_path.string());
      out << report.timings.dump(2) << '\n';
    }
    {
      std::ofstream out(summary_path);
      if (!out) throw Error(errc::kIo, "cannot write " + summary_path.string());
      out << summary.str();
    }
    return report;
  } catch (...) {
    cleanup();
    throw;
  }
}

std::string merge_reports(const std::vector<std::string>& report_paths) {
  std::ostringstream out;
  out << "grid,sample_range,n_iter,mse_a,mse_b,converged\n";
  for (const auto& path : report_paths) {
    nlohmann::json doc;
    std::ifstream in(path);
    if (!in) throw Error(errc::kIo, "cannot open report: " + path);
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw Error(errc::kIo, "bad report " + path + ": " + e.what());
    }
    if (!doc.contains("summary_csv")) {
      throw Error(errc::kIo, "report has no summary row: " + path);
    }
    const std::string row = doc["summary_csv"].get<std::string>();
    // Strip the per-report header line.
    const auto nl = row.find('\n');
    if (nl != std::string::npos && nl + 1 < row.size()) {
      out << row.substr(nl + 1);
    }
  }
  return out.str();
}

}  // namespace lmpinfer

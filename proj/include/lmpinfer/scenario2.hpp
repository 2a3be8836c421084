#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lmpinfer/case_model.hpp"
#include "lmpinfer/dispatch.hpp"

namespace lmpinfer {

// One (base, auxiliary) observation pair targeting generator i. The lmp
// vectors hold the price at every in-service generator's bus, in the fixed
// generator order of the PairSet.
struct PointPair {
  int gen_id = 0;
  double p_agg_base = 0.0;          // MW
  double p_agg_aux = 0.0;           // MW
  std::vector<double> lmp_base;     // $/MWh per generator
  std::vector<double> lmp_aux;      // $/MWh per generator

  double delta_lmp(std::size_t g) const { return lmp_base[g] - lmp_aux[g]; }
  double delta_pagg() const { return p_agg_base - p_agg_aux; }
};

struct PairSet {
  std::vector<int> gen_ids;      // fixed generator order
  std::vector<PointPair> pairs;  // pairs[k] targets gen_ids[k]
};

struct ConditionReport {
  std::vector<bool> cond1;  // delta_lmp_i > 0 per generator
  std::vector<bool> cond2;  // delta_pagg_i > 0 per generator
  double a_min = 0.0;
  double a_max = 0.0;
  bool bound_feasible = false;     // a_min < a_max
  bool identifiability_ok = true;  // false on uniform-price data
  bool overall = false;
};

struct MFPIResult {
  std::vector<std::vector<double>> iterates;  // a^(0), a^(1), ...
  std::vector<double> a_hat;
  int iterations = 0;
  bool converged = false;
  std::vector<double> step_norms;          // inf-norm of each update
  std::vector<double> contraction_ratios;  // step k / step k-1
  std::vector<double> bound_history;       // contraction bound per iterate
  bool aborted = false;
  std::string abort_reason;
};

// Update of coefficient i from everyone else's current value.
double mfpi_component(std::size_t i, const PointPair& pair,
                      const std::vector<double>& a);

// Simultaneous update: every component computed from the same input vector.
std::vector<double> mfpi_step(const PairSet& pairs, const std::vector<double>& a);

// Analytic Jacobian of the step map; diagonal is identically zero.
std::vector<std::vector<double>> mfpi_jacobian(const PairSet& pairs,
                                               const std::vector<double>& a);

// Infinity-norm row sum of the Jacobian.
double contraction_bound(const PairSet& pairs, const std::vector<double>& a);

// Lower admissible coefficient bound; requires per-pair conditions 1-2.
double a_min_bound(const PairSet& pairs, double a_max);

ConditionReport check_conditions(const PairSet& pairs, double a_max);

struct SearchResult {
  PairSet pairs;
  ConditionReport report;
};

// Draws candidate pairs per generator from the strictly-interior points of
// the dataset (up to `budget` candidate evaluations per generator), keeps
// those passing conditions 1-2, and picks the combination minimizing a_min,
// ties broken by larger aggregate-generation difference.
SearchResult search_point_pairs(const GridCase& gc, const Dataset& ds,
                                double a_max, int budget, RandomStream& stream);

MFPIResult run_mfpi(const PairSet& pairs,
                    const std::optional<std::vector<double>>& init,
                    double a_max, double tol, int max_iter);

}  // namespace lmpinfer

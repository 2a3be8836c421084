#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lmpinfer/case_model.hpp"
#include "lmpinfer/dispatch.hpp"

namespace lmpinfer {

// Per-generator view of a dataset: the generator's output paired with the
// price at its bus.
struct Observation {
  double p;    // MW
  double lmp;  // $/MWh
};

struct GenSeries {
  int gen_id = 0;
  std::vector<Observation> observations;
};

struct CoeffEstimate {
  double a_hat = 0.0;
  double b_hat = 0.0;
};

struct CapacityEstimate {
  std::optional<double> p_max_hat;
  std::optional<double> p_min_hat;
  int case1_count = 0;     // points at the upper limit
  int case2_count = 0;     // points at the lower limit
  int interior_count = 0;
  bool disagreement_warning = false;  // candidates disagreed, modal value used
};

struct GenAttackResult {
  int gen_id = 0;
  bool recovered = false;
  std::string failure_reason;
  double a_hat = 0.0;
  double b_hat = 0.0;
  double residual_max = 0.0;  // max |2*a_hat*p + b_hat - lmp| over interior points
  CapacityEstimate capacity;
};

struct Scenario1Result {
  std::vector<GenAttackResult> generators;
};

// Deterministic pair selection: both points at least `margin` inside the
// series' own [min p, max p] band, separated by at least `min_gap`; the
// widest-separated qualifying pair wins, ties broken by lowest observation
// indices. Returns (first index, second index) with first < second.
std::pair<std::size_t, std::size_t> select_interior_points(
    const GenSeries& series, double margin, double min_gap);

CoeffEstimate recover_coeffs_closed_form(const Observation& alpha,
                                         const Observation& beta);

CapacityEstimate infer_capacity(const GenSeries& series, double a_hat,
                                double b_hat, double bind_tol);

// margin and min_gap in MW; bind_tol in $/MWh.
Scenario1Result attack_all_generators(const GridCase& gc, const Dataset& ds,
                                      double margin, double min_gap,
                                      double bind_tol);

GenSeries series_for_generator(const GridCase& gc, const Dataset& ds,
                               int gen_id);

}  // namespace lmpinfer

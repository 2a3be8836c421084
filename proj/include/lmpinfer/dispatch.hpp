#pragma once

#include <string>
#include <vector>

#include "lmpinfer/case_model.hpp"
#include "lmpinfer/rng.hpp"

namespace lmpinfer {

enum class SolverKind { kEconomicDispatch, kDcOpf };

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

enum class DispatchStatus { kOptimal, kInfeasible };

// All per-generator vectors are aligned with gen_ids, the ids of the
// in-service generators in case order. Per-bus vectors follow the case bus
// order, per-line vectors the case line order.
struct DispatchSolution {
  std::vector<int> gen_ids;
  std::vector<double> p_gen;      // MW
  std::vector<double> lmp;        // $/MWh per bus
  std::vector<double> nu_plus;    // $/MWh, dual of p <= p_max
  std::vector<double> nu_minus;   // $/MWh, dual of p >= p_min
  std::vector<double> mu_line;    // $/MWh, congestion dual (0 when no limit)
  std::vector<double> flow;       // MW per line, from->to; empty for economic dispatch
  std::vector<double> loads;      // MW per bus, the dispatched demand
  double objective = 0.0;         // $/h
  DispatchStatus status = DispatchStatus::kOptimal;
};

struct DataPoint {
  std::vector<double> loads;   // MW per bus
  std::vector<double> p_gen;   // MW per in-service generator
  std::vector<double> lmp;     // $/MWh per bus
  double p_agg = 0.0;          // MW, sum of p_gen
};

struct Dataset {
  std::string case_fingerprint;
  std::vector<DataPoint> points;
  std::uint64_t seed = 0;
  double range_fraction = 0.0;
  SolverKind solver_kind = SolverKind::kEconomicDispatch;
  int retries = 0;  // infeasible samples redrawn during generation
};

struct KktReport {
  double max_stationarity = 0.0;     // $/MWh
  double max_complementarity = 0.0;  // $/h scale products
  double max_balance = 0.0;          // MW
  bool passed = false;
};

inline constexpr double kDefaultKktTol = 1e-8;

// Each bus load drawn independently and uniformly from
// [(1-r)*nominal, (1+r)*nominal]; zero-nominal buses stay zero.
std::vector<double> sample_loads(const GridCase& gc, double range_fraction,
                                 RandomStream& stream);

// Single-price dispatch: minimizes total cost subject to the aggregate
// balance and generator limits, by bisection on the marginal price.
DispatchSolution economic_dispatch(const GridCase& gc,
                                   const std::vector<double>& loads);

// DC optimal power flow with line flow limits; nodal prices come from the
// balance duals. Uncongested solutions coincide with economic_dispatch.
DispatchSolution dc_opf(const GridCase& gc, const std::vector<double>& loads);

KktReport verify_kkt(const GridCase& gc, const DispatchSolution& sol,
                     double kkt_tol);

Dataset generate_dataset(const GridCase& gc, int n, double range_fraction,
                         std::uint64_t seed, SolverKind solver_kind);

}  // namespace lmpinfer

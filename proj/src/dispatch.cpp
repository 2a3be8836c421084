#include "lmpinfer/dispatch.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lmpinfer/errors.hpp"
#include "lmpinfer/qp.hpp"

namespace lmpinfer {

std::string to_string(SolverKind kind) {
  return kind == SolverKind::kEconomicDispatch ? "economic_dispatch" : "dc_opf";
}

SolverKind solver_kind_from_string(const std::string& name) {
  if (name == "ed" || name == "economic_dispatch") return SolverKind::kEconomicDispatch;
  if (name == "dcopf" || name == "dc_opf") return SolverKind::kDcOpf;
  throw Error(errc::kConfigInvalid, "unknown solver kind '" + name + "'");
}

std::vector<double> sample_loads(const GridCase& gc, double range_fraction,
                                 RandomStream& stream) {
  if (range_fraction < 0.0 || range_fraction >= 1.0) {
    throw Error(errc::kConfigInvalid, "range_fraction must be in [0, 1)");
  }
  std::vector<double> loads(gc.buses.size());
  for (std::size_t i = 0; i < gc.buses.size(); ++i) {
    const double nominal = gc.buses[i].p_load_nominal;
    loads[i] = stream.uniform((1.0 - range_fraction) * nominal,
                              (1.0 + range_fraction) * nominal);
  }
  return loads;
}

namespace {

struct ActiveGen {
  int id;
  double a, b, c, p_min, p_max;
  int bus_pos;  // index into gc.buses
};

std::vector<ActiveGen> active_gens(const GridCase& gc) {
  auto bus_pos = gc.bus_index();
  std::vector<ActiveGen> out;
  for (const auto& g : gc.generators) {
    if (!g.in_service) continue;
    out.push_back({g.id, g.cost.a, g.cost.b, g.cost.c, g.p_min, g.p_max,
                   bus_pos.at(g.bus)});
  }
  return out;
}

void check_demand_feasible(const std::vector<ActiveGen>& gens, double total) {
  double sum_min = 0.0, sum_max = 0.0;
  for (const auto& g : gens) {
    sum_min += g.p_min;
    sum_max += g.p_max;
  }
  if (total < sum_min - 1e-9 || total > sum_max + 1e-9) {
    std::ostringstream msg;
    msg << "total load " << total << " MW outside aggregate capacity [" << sum_min
        << ", " << sum_max << "] MW";
    throw Error(errc::kDispatchInfeasibleDemand, msg.str());
  }
}

double total_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

void check_loads_size(const GridCase& gc, const std::vector<double>& loads) {
  if (loads.size() != gc.buses.size()) {
    throw Error(errc::kConfigInvalid, "loads vector does not match bus count");
  }
}

double cost_objective(const std::vector<ActiveGen>& gens,
                      const std::vector<double>& p) {
  double obj = 0.0;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    obj += gens[i].a * p[i] * p[i] + gens[i].b * p[i] + gens[i].c;
  }
  return obj;
}

void fill_duals_from_price(const std::vector<ActiveGen>& gens,
                           const std::vector<double>& p, double lambda,
                           std::vector<double>& nu_plus,
                           std::vector<double>& nu_minus) {
  nu_plus.assign(gens.size(), 0.0);
  nu_minus.assign(gens.size(), 0.0);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const double mc = 2.0 * gens[i].a * p[i] + gens[i].b;
    const double raw = (lambda - gens[i].b) / (2.0 * gens[i].a);
    if (raw >= gens[i].p_max) {
      nu_plus[i] = std::max(0.0, lambda - mc);
    } else if (raw <= gens[i].p_min) {
      nu_minus[i] = std::max(0.0, mc - lambda);
    }
  }
}

}  // namespace

DispatchSolution economic_dispatch(const GridCase& gc,
                                   const std::vector<double>& loads) {
  check_loads_size(gc, loads);
  const auto gens = active_gens(gc);
  if (gens.empty()) throw Error(errc::kDispatchInfeasibleDemand, "no in-service generators");
  const double demand = total_of(loads);
  check_demand_feasible(gens, demand);

  auto response = [&](double lambda) {
    double sum = 0.0;
    for (const auto& g : gens) {
      sum += std::clamp((lambda - g.b) / (2.0 * g.a), g.p_min, g.p_max);
    }
    return sum;
  };

  double lo = gens[0].b + 2.0 * gens[0].a * gens[0].p_min;
  double hi = gens[0].b + 2.0 * gens[0].a * gens[0].p_max;
  for (const auto& g : gens) {
    lo = std::min(lo, g.b + 2.0 * g.a * g.p_min);
    hi = std::max(hi, g.b + 2.0 * g.a * g.p_max);
  }

  double lambda = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    lambda = 0.5 * (lo + hi);
    const double r = response(lambda);
    if (std::abs(r - demand) <= 1e-9) break;
    if (r < demand) {
      lo = lambda;
    } else {
      hi = lambda;
    }
  }

  // Exact polish: with the marginal set fixed, the price solves the balance
  // linearly; reclassify and repeat until the set is stable.
  for (int round = 0; round < 10; ++round) {
    double bound_p = 0.0, inv_sum = 0.0, b_over = 0.0;
    int interior = 0;
    for (const auto& g : gens) {
      const double raw = (lambda - g.b) / (2.0 * g.a);
      if (raw >= g.p_max) {
        bound_p += g.p_max;
      } else if (raw <= g.p_min) {
        bound_p += g.p_min;
      } else {
        ++interior;
        inv_sum += 1.0 / (2.0 * g.a);
        b_over += g.b / (2.0 * g.a);
      }
    }
    if (interior == 0) break;
    const double next = (demand - bound_p + b_over) / inv_sum;
    if (next == lambda) break;
    lambda = next;
  }

  std::vector<double> p(gens.size());
  for (std::size_t i = 0; i < gens.size(); ++i) {
    p[i] = std::clamp((lambda - gens[i].b) / (2.0 * gens[i].a), gens[i].p_min,
                      gens[i].p_max);
  }

  DispatchSolution sol;
  for (const auto& g : gens) sol.gen_ids.push_back(g.id);
  sol.p_gen = p;
  sol.lmp.assign(gc.buses.size(), lambda);
  fill_duals_from_price(gens, p, lambda, sol.nu_plus, sol.nu_minus);
  sol.mu_line.assign(gc.lines.size(), 0.0);
  sol.loads = loads;
  sol.objective = cost_objective(gens, p);
  sol.status = DispatchStatus::kOptimal;
  return sol;
}

DispatchSolution dc_opf(const GridCase& gc, const std::vector<double>& loads) {
  check_loads_size(gc, loads);
  const auto gens = active_gens(gc);
  if (gens.empty()) throw Error(errc::kDispatchInfeasibleDemand, "no in-service generators");
  const double demand = total_of(loads);
  check_demand_feasible(gens, demand);

  const int nb = static_cast<int>(gc.buses.size());
  const int ng = static_cast<int>(gens.size());
  const int nl = static_cast<int>(gc.lines.size());
  const auto bus_pos = gc.bus_index();
  const int slack = bus_pos.at(gc.slack_bus);

  // Shift factors from the reduced susceptance Laplacian (slack removed):
  // row l maps bus injections to the flow on line l.
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(nb, nb);
  for (const auto& ln : gc.lines) {
    const int f = bus_pos.at(ln.from_bus);
    const int t = bus_pos.at(ln.to_bus);
    lap(f, f) += ln.susceptance;
    lap(t, t) += ln.susceptance;
    lap(f, t) -= ln.susceptance;
    lap(t, f) -= ln.susceptance;
  }
  std::vector<int> keep;
  for (int i = 0; i < nb; ++i) {
    if (i != slack) keep.push_back(i);
  }
  Eigen::MatrixXd lap_r(nb - 1, nb - 1);
  for (int i = 0; i < nb - 1; ++i) {
    for (int j = 0; j < nb - 1; ++j) lap_r(i, j) = lap(keep[i], keep[j]);
  }
  Eigen::LDLT<Eigen::MatrixXd> lap_fac(lap_r);

  Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(nl, nb);
  for (int l = 0; l < nl; ++l) {
    const auto& ln = gc.lines[l];
    Eigen::VectorXd w = Eigen::VectorXd::Zero(nb - 1);
    const int f = bus_pos.at(ln.from_bus);
    const int t = bus_pos.at(ln.to_bus);
    for (int j = 0; j < nb - 1; ++j) {
      if (keep[j] == f) w(j) += ln.susceptance;
      if (keep[j] == t) w(j) -= ln.susceptance;
    }
    const Eigen::VectorXd s = lap_fac.solve(w);
    for (int j = 0; j < nb - 1; ++j) shift(l, keep[j]) = s(j);
  }

  Eigen::VectorXd dvec(nb);
  for (int i = 0; i < nb; ++i) dvec(i) = loads[i];

  std::vector<int> limited;
  for (int l = 0; l < nl; ++l) {
    if (gc.lines[l].flow_limit.has_value()) limited.push_back(l);
  }
  const int nlim = static_cast<int>(limited.size());

  QpProblem qp;
  qp.G = Eigen::MatrixXd::Zero(ng, ng);
  qp.g0.resize(ng);
  for (int i = 0; i < ng; ++i) {
    qp.G(i, i) = 2.0 * gens[i].a;
    qp.g0(i) = gens[i].b;
  }
  qp.E = Eigen::MatrixXd::Ones(1, ng);
  qp.e = Eigen::VectorXd::Constant(1, demand);

  const int mi = 2 * ng + 2 * nlim;
  qp.C = Eigen::MatrixXd::Zero(mi, ng);
  qp.d.resize(mi);
  for (int i = 0; i < ng; ++i) {
    qp.C(i, i) = 1.0;
    qp.d(i) = gens[i].p_min;
    qp.C(ng + i, i) = -1.0;
    qp.d(ng + i) = -gens[i].p_max;
  }
  for (int k = 0; k < nlim; ++k) {
    const int l = limited[k];
    const double limit = *gc.lines[l].flow_limit;
    Eigen::RowVectorXd t_row(ng);
    for (int i = 0; i < ng; ++i) t_row(i) = shift(l, gens[i].bus_pos);
    const double offset = shift.row(l).dot(dvec);
    // flow_l = t_row p - offset; upper row then lower row
    qp.C.row(2 * ng + 2 * k) = -t_row;
    qp.d(2 * ng + 2 * k) = -limit - offset;
    qp.C.row(2 * ng + 2 * k + 1) = t_row;
    qp.d(2 * ng + 2 * k + 1) = -limit + offset;
  }

  QpResult qr = solve_qp(qp, 100 + 20 * mi);
  if (qr.status == QpStatus::kIterationLimit) {
    std::ostringstream msg;
    msg << "active-set iteration limit reached after " << qr.iterations
        << " iterations";
    throw Error(errc::kDispatchMaxIterations, msg.str());
  }
  if (qr.status == QpStatus::kInfeasible) {
    throw Error(errc::kDispatchInfeasible,
                "no dispatch satisfies the line flow limits at this load");
  }

  DispatchSolution sol;
  for (const auto& g : gens) sol.gen_ids.push_back(g.id);
  sol.p_gen.assign(ng, 0.0);
  for (int i = 0; i < ng; ++i) sol.p_gen[i] = qr.x(i);
  sol.nu_minus.assign(ng, 0.0);
  sol.nu_plus.assign(ng, 0.0);
  for (int i = 0; i < ng; ++i) {
    sol.nu_minus[i] = qr.ineq_mult(i);
    sol.nu_plus[i] = qr.ineq_mult(ng + i);
  }

  const double gamma = qr.eq_mult(0);
  sol.lmp.assign(nb, gamma);
  sol.mu_line.assign(nl, 0.0);
  for (int k = 0; k < nlim; ++k) {
    const int l = limited[k];
    const double mu_up = qr.ineq_mult(2 * ng + 2 * k);
    const double mu_dn = qr.ineq_mult(2 * ng + 2 * k + 1);
    sol.mu_line[l] = mu_up + mu_dn;
    const double net = mu_up - mu_dn;
    if (net != 0.0) {
      for (int b = 0; b < nb; ++b) sol.lmp[b] -= net * shift(l, b);
    }
  }

  Eigen::VectorXd inj = -dvec;
  for (int i = 0; i < ng; ++i) inj(gens[i].bus_pos) += qr.x(i);
  sol.flow.assign(nl, 0.0);
  for (int l = 0; l < nl; ++l) sol.flow[l] = shift.row(l).dot(inj);

  sol.loads = loads;
  sol.objective = cost_objective(gens, sol.p_gen);
  sol.status = DispatchStatus::kOptimal;
  return sol;
}

KktReport verify_kkt(const GridCase& gc, const DispatchSolution& sol,
                     double kkt_tol) {
  const auto gens = active_gens(gc);
  KktReport rep;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto& g = gens[i];
    const double p = sol.p_gen[i];
    const double lam = sol.lmp[g.bus_pos];
    const double stat =
        2.0 * g.a * p + g.b - lam + sol.nu_plus[i] - sol.nu_minus[i];
    rep.max_stationarity = std::max(rep.max_stationarity, std::abs(stat));
    rep.max_complementarity =
        std::max({rep.max_complementarity,
                  std::abs(sol.nu_plus[i] * (g.p_max - p)),
                  std::abs(sol.nu_minus[i] * (p - g.p_min))});
  }
  if (!sol.flow.empty()) {
    for (std::size_t l = 0; l < gc.lines.size(); ++l) {
      if (!gc.lines[l].flow_limit.has_value()) continue;
      const double slackness = *gc.lines[l].flow_limit - std::abs(sol.flow[l]);
      rep.max_complementarity = std::max(
          rep.max_complementarity, std::abs(sol.mu_line[l] * slackness));
    }
  }
  rep.max_balance =
      std::abs(total_of(sol.p_gen) - total_of(sol.loads));
  rep.passed = rep.max_stationarity <= kkt_tol &&
               rep.max_complementarity <= kkt_tol && rep.max_balance <= kkt_tol;
  return rep;
}

Dataset generate_dataset(const GridCase& gc, int n, double range_fraction,
                         std::uint64_t seed, SolverKind solver_kind) {
  if (n < 1) throw Error(errc::kConfigInvalid, "dataset size must be >= 1");
  require_valid(gc);

  Dataset ds;
  ds.case_fingerprint = case_fingerprint(gc);
  ds.seed = seed;
  ds.range_fraction = range_fraction;
  ds.solver_kind = solver_kind;
  ds.points.reserve(static_cast<std::size_t>(n));

  RandomStream root(seed);
  for (int i = 0; i < n; ++i) {
    RandomStream sub = root.substream(static_cast<std::uint64_t>(i));
    DispatchSolution sol;
    bool solved = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
      auto loads = sample_loads(gc, range_fraction, sub);
      try {
        sol = solver_kind == SolverKind::kEconomicDispatch
                  ? economic_dispatch(gc, loads)
                  : dc_opf(gc, loads);
        solved = true;
        break;
      } catch (const Error& err) {
        const std::string code = err.code();
        if (code != errc::kDispatchInfeasibleDemand &&
            code != errc::kDispatchInfeasible) {
          throw;
        }
        ++ds.retries;
      }
    }
    if (!solved) {
      std::ostringstream msg;
      msg << "point " << i << ": 100 consecutive load samples were infeasible";
      throw Error(errc::kDatasetGenerationFailure, msg.str());
    }
    const KktReport rep = verify_kkt(gc, sol, kDefaultKktTol);
    if (!rep.passed) {
      std::ostringstream msg;
      msg << "point " << i << ": solution failed KKT verification (stationarity "
          << rep.max_stationarity << ", complementarity " << rep.max_complementarity
          << ", balance " << rep.max_balance << ")";
      throw Error(errc::kDatasetGenerationFailure, msg.str());
    }

    DataPoint pt;
    pt.loads = sol.loads;
    pt.p_gen = sol.p_gen;
    pt.lmp = sol.lmp;
    pt.p_agg = std::accumulate(pt.p_gen.begin(), pt.p_gen.end(), 0.0);
    ds.points.push_back(std::move(pt));
  }
  return ds;
}

}  // namespace lmpinfer

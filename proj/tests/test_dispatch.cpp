#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "lmpinfer/dispatch.hpp"
#include "lmpinfer/errors.hpp"
#include "lmpinfer/matpower.hpp"
#include "lmpinfer/native_io.hpp"
#include "lmpinfer/rng.hpp"

using namespace lmpinfer;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GridCase load_fixture(const std::string& name) {
  return parse_native_case(slurp(std::string(FIXTURE_DIR) + "/" + name));
}

// Cheapest split of `demand` across the two units of a two-generator case,
// found by scanning p1 on a fine grid. Resolution-limited but independent of
// any optimality condition.
double grid_min_cost(const GridCase& gc, double demand) {
  const auto& g1 = gc.generators[0];
  const auto& g2 = gc.generators[1];
  const double lo = std::max(g1.p_min, demand - g2.p_max);
  const double hi = std::min(g1.p_max, demand - g2.p_min);
  REQUIRE(lo <= hi + 1e-12);
  double best = std::numeric_limits<double>::infinity();
  const int steps = 20000;
  for (int k = 0; k <= steps; ++k) {
    const double p1 = lo + (hi - lo) * k / steps;
    const double p2 = demand - p1;
    const double cost = g1.cost.a * p1 * p1 + g1.cost.b * p1 + g1.cost.c +
                        g2.cost.a * p2 * p2 + g2.cost.b * p2 + g2.cost.c;
    best = std::min(best, cost);
  }
  return best;
}

// Exhaustive reference for the three-bus fixture: full-space DC-OPF over
// x = (p1, p2, th2, th3) with the slack angle eliminated. Every subset of the
// six inequality rows is tried as an active set; a subset is accepted when the
// KKT solve is consistent, the inactive rows are satisfied and the active
// multipliers are nonnegative. The equality duals are the nodal prices.
struct OpfRef {
  double objective;
  Eigen::Vector3d lmp;
  Eigen::Vector2d p;
  double flow13;
};

std::optional<OpfRef> enumerate_threebus(const GridCase& gc,
                                         const std::vector<double>& d) {
  const auto& g1 = gc.generators[0];
  const auto& g2 = gc.generators[1];
  const double limit = *gc.lines[1].flow_limit;

  Eigen::Matrix4d H = Eigen::Matrix4d::Zero();
  H(0, 0) = 2.0 * g1.cost.a;
  H(1, 1) = 2.0 * g2.cost.a;
  Eigen::Vector4d g0(g1.cost.b, g2.cost.b, 0.0, 0.0);

  Eigen::Matrix<double, 3, 4> Aeq;
  Aeq << 1, 0, 10, 10,
         0, 1, -20, 10,
         0, 0, 10, -20;
  Eigen::Vector3d beq(d[0], d[1], d[2]);

  Eigen::Matrix<double, 6, 4> C;
  C << 1, 0, 0, 0,
       -1, 0, 0, 0,
       0, 1, 0, 0,
       0, -1, 0, 0,
       0, 0, 0, 10,
       0, 0, 0, -10;
  Eigen::Matrix<double, 6, 1> dd;
  dd << g1.p_min, -g1.p_max, g2.p_min, -g2.p_max, -limit, -limit;

  std::optional<OpfRef> best;
  for (unsigned mask = 0; mask < 64u; ++mask) {
    std::vector<int> act;
    for (int i = 0; i < 6; ++i) {
      if (mask & (1u << i)) act.push_back(i);
    }
    const int mw = static_cast<int>(act.size());
    const int dim = 4 + 3 + mw;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs(dim);
    K.topLeftCorner(4, 4) = H;
    K.block(0, 4, 4, 3) = -Aeq.transpose();
    K.block(4, 0, 3, 4) = Aeq;
    rhs.head(4) = -g0;
    rhs.segment(4, 3) = beq;
    for (int k = 0; k < mw; ++k) {
      K.block(0, 7 + k, 4, 1) = -C.row(act[k]).transpose();
      K.block(7 + k, 0, 1, 4) = C.row(act[k]);
      rhs(7 + k) = dd(act[k]);
    }
    Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
    if ((K * sol - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) continue;

    const Eigen::Vector4d x = sol.head(4);
    bool ok = true;
    for (int i = 0; i < 6 && ok; ++i) ok = C.row(i).dot(x) >= dd(i) - 1e-7;
    for (int k = 0; k < mw && ok; ++k) ok = sol(7 + k) >= -1e-7;
    if (!ok) continue;

    const double obj = 0.5 * x.dot(H * x) + g0.dot(x);
    if (!best || obj < best->objective - 1e-12) {
      OpfRef ref;
      ref.objective = obj;
      ref.lmp = sol.segment(4, 3);
      ref.p = x.head(2);
      ref.flow13 = -10.0 * x(3);
      best = ref;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("solver kind names round trip") {
  CHECK(to_string(SolverKind::kEconomicDispatch) == "economic_dispatch");
  CHECK(to_string(SolverKind::kDcOpf) == "dc_opf");
  CHECK(solver_kind_from_string("ed") == SolverKind::kEconomicDispatch);
  CHECK(solver_kind_from_string("economic_dispatch") == SolverKind::kEconomicDispatch);
  CHECK(solver_kind_from_string("dcopf") == SolverKind::kDcOpf);
  CHECK(solver_kind_from_string("dc_opf") == SolverKind::kDcOpf);
  CHECK_THROWS_AS(solver_kind_from_string("acopf"), Error);
}

TEST_CASE("sample_loads draws inside the band around nominal") {
  GridCase gc = load_fixture("twogen.json");
  RandomStream rs(7);
  for (int k = 0; k < 200; ++k) {
    auto loads = sample_loads(gc, 0.2, rs);
    REQUIRE(loads.size() == 2);
    CHECK(loads[0] >= 0.8 * 1.8);
    CHECK(loads[0] <= 1.2 * 1.8);
    CHECK(loads[1] >= 0.8 * 1.2);
    CHECK(loads[1] <= 1.2 * 1.2);
  }

  RandomStream rs0(7);
  auto exact = sample_loads(gc, 0.0, rs0);
  CHECK(exact[0] == 1.8);
  CHECK(exact[1] == 1.2);

  RandomStream a(42), b(42);
  CHECK(sample_loads(gc, 0.3, a) == sample_loads(gc, 0.3, b));

  CHECK_THROWS_AS(sample_loads(gc, -0.1, a), Error);
  CHECK_THROWS_AS(sample_loads(gc, 1.0, a), Error);
}

TEST_CASE("economic dispatch splits load at equal marginal cost") {
  GridCase gc = load_fixture("twogen.json");
  auto sol = economic_dispatch(gc, {8.0, 2.0});  // total 10
  REQUIRE(sol.p_gen.size() == 2);
  CHECK(sol.p_gen[0] == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(sol.p_gen[1] == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(sol.lmp[0] == doctest::Approx(6.0).epsilon(1e-10));
  CHECK(sol.lmp[1] == doctest::Approx(6.0).epsilon(1e-10));
  CHECK(sol.nu_plus == std::vector<double>{0.0, 0.0});
  CHECK(sol.nu_minus == std::vector<double>{0.0, 0.0});
  CHECK(sol.objective == doctest::Approx(0.1 * 25 + 25 + 0.2 * 25 + 20));
  CHECK(verify_kkt(gc, sol, kDefaultKktTol).passed);
}

TEST_CASE("economic dispatch pins an uneconomic unit at its floor") {
  GridCase gc = load_fixture("twogen.json");
  auto sol = economic_dispatch(gc, {1.0, 1.0});  // total 2
  CHECK(sol.p_gen[0] == doctest::Approx(0.0));
  CHECK(sol.p_gen[1] == doctest::Approx(2.0));
  CHECK(sol.lmp[0] == doctest::Approx(4.8));
  CHECK(sol.nu_minus[0] == doctest::Approx(0.2));
  CHECK(sol.nu_plus[0] == doctest::Approx(0.0));
  CHECK(sol.nu_minus[1] == doctest::Approx(0.0));
  CHECK(verify_kkt(gc, sol, kDefaultKktTol).passed);
}

TEST_CASE("economic dispatch rejects demand beyond fleet capacity") {
  GridCase gc = load_fixture("twogen.json");
  try {
    economic_dispatch(gc, {20.5, 20.5});  // total 41 > 40
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::kDispatchInfeasibleDemand);
  }
  CHECK_THROWS_AS(economic_dispatch(gc, {-1.0, 0.0}), Error);  // below sum p_min
}

TEST_CASE("economic dispatch matches a grid scan of the cost surface") {
  GridCase gc = load_fixture("twogen.json");
  for (double demand : {2.0, 7.5, 10.0, 19.3, 31.0, 39.9}) {
    CAPTURE(demand);
    auto sol = economic_dispatch(gc, {demand, 0.0});
    const double ref = grid_min_cost(gc, demand);
    CHECK(sol.objective <= ref + 1e-9);
    CHECK(ref - sol.objective <= 1e-5);
    CHECK(sol.p_gen[0] + sol.p_gen[1] == doctest::Approx(demand).epsilon(1e-12));
    CHECK(verify_kkt(gc, sol, kDefaultKktTol).passed);
  }
}

TEST_CASE("clearing price is monotone in demand") {
  GridCase gc = load_fixture("twogen.json");
  double prev = -std::numeric_limits<double>::infinity();
  for (double demand = 0.5; demand <= 39.5; demand += 0.5) {
    auto sol = economic_dispatch(gc, {demand, 0.0});
    CHECK(sol.lmp[0] >= prev - 1e-10);
    prev = sol.lmp[0];
  }
}

TEST_CASE("dc_opf without congestion reproduces economic dispatch") {
  GridCase gc = load_fixture("twogen.json");
  RandomStream rs(99);
  for (int k = 0; k < 20; ++k) {
    auto loads = sample_loads(gc, 0.5, rs);
    auto ed = economic_dispatch(gc, loads);
    auto opf = dc_opf(gc, loads);
    REQUIRE(opf.p_gen.size() == ed.p_gen.size());
    for (std::size_t i = 0; i < ed.p_gen.size(); ++i) {
      CHECK(opf.p_gen[i] == doctest::Approx(ed.p_gen[i]).epsilon(1e-9));
    }
    for (std::size_t b = 0; b < gc.buses.size(); ++b) {
      CHECK(opf.lmp[b] == doctest::Approx(ed.lmp[0]).epsilon(1e-9));
    }
    CHECK(opf.mu_line == std::vector<double>{0.0});
    REQUIRE(opf.flow.size() == 1);
    // Line 1->2 carries whatever bus 1 produces beyond its own load.
    CHECK(opf.flow[0] == doctest::Approx(opf.p_gen[0] - loads[0]).epsilon(1e-8));
    CHECK(verify_kkt(gc, opf, kDefaultKktTol).passed);
  }
}

TEST_CASE("dc_opf prices the congested three-bus case") {
  GridCase gc = load_fixture("threebus.json");
  const std::vector<double> nominal = {4.0, 4.0, 8.0};

  // Reference values worked out by hand from the binding pattern.
  auto ref = enumerate_threebus(gc, nominal);
  REQUIRE(ref.has_value());
  CHECK(ref->lmp(0) == doctest::Approx(6.6).epsilon(1e-9));
  CHECK(ref->lmp(1) == doctest::Approx(8.7).epsilon(1e-9));
  CHECK(ref->lmp(2) == doctest::Approx(10.8).epsilon(1e-9));
  CHECK(ref->p(0) == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(ref->p(1) == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(ref->flow13 == doctest::Approx(4.0).epsilon(1e-9));

  auto sol = dc_opf(gc, nominal);
  CHECK(sol.p_gen[0] == doctest::Approx(8.0).epsilon(1e-8));
  CHECK(sol.p_gen[1] == doctest::Approx(8.0).epsilon(1e-8));
  CHECK(sol.lmp[0] == doctest::Approx(6.6).epsilon(1e-8));
  CHECK(sol.lmp[1] == doctest::Approx(8.7).epsilon(1e-8));
  CHECK(sol.lmp[2] == doctest::Approx(10.8).epsilon(1e-8));
  CHECK(sol.flow[1] == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(sol.mu_line[1] == doctest::Approx(6.3).epsilon(1e-8));
  CHECK(sol.mu_line[0] == 0.0);
  CHECK(sol.mu_line[2] == 0.0);
  CHECK(verify_kkt(gc, sol, kDefaultKktTol).passed);
}

TEST_CASE("dc_opf matches active-set enumeration across the sampling band") {
  GridCase gc = load_fixture("threebus.json");
  RandomStream rs(511);
  for (int k = 0; k < 25; ++k) {
    std::vector<double> loads = {rs.uniform(3.2, 4.8), rs.uniform(3.2, 4.8),
                                 rs.uniform(6.4, 9.6)};
    CAPTURE(k);
    auto ref = enumerate_threebus(gc, loads);
    REQUIRE(ref.has_value());
    auto sol = dc_opf(gc, loads);
    CHECK(sol.objective == doctest::Approx(ref->objective).epsilon(1e-9));
    for (int b = 0; b < 3; ++b) {
      CHECK(sol.lmp[b] == doctest::Approx(ref->lmp(b)).epsilon(1e-7));
    }
    CHECK(sol.p_gen[0] == doctest::Approx(ref->p(0)).epsilon(1e-7));
    CHECK(sol.p_gen[1] == doctest::Approx(ref->p(1)).epsilon(1e-7));
    CHECK(sol.flow[1] == doctest::Approx(ref->flow13).epsilon(1e-7));
    CHECK(verify_kkt(gc, sol, kDefaultKktTol).passed);
  }
}

TEST_CASE("dc_opf reports unreachable load pockets as infeasible") {
  GridCase gc = load_fixture("threebus.json");
  for (auto& ln : gc.lines) ln.flow_limit = 0.0;
  try {
    dc_opf(gc, {4.0, 4.0, 8.0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::kDispatchInfeasible);
  }
}

TEST_CASE("MATPOWER import dispatches like the single-price solver") {
  GridCase gc = parse_matpower_case(slurp(std::string(FIXTURE_DIR) + "/case14.m"));
  std::vector<double> loads;
  for (const auto& b : gc.buses) loads.push_back(b.p_load_nominal);

  auto ed = economic_dispatch(gc, loads);
  auto opf = dc_opf(gc, loads);  // no line limits, so prices stay uniform
  for (std::size_t b = 0; b < gc.buses.size(); ++b) {
    CHECK(opf.lmp[b] == doctest::Approx(ed.lmp[0]).epsilon(1e-8));
  }
  for (std::size_t i = 0; i < ed.p_gen.size(); ++i) {
    CHECK(opf.p_gen[i] == doctest::Approx(ed.p_gen[i]).scale(1.0).epsilon(1e-7));
  }
  CHECK(verify_kkt(gc, ed, kDefaultKktTol).passed);
  CHECK(verify_kkt(gc, opf, 1e-6).passed);

  // The three expensive units sit at their floor at nominal load.
  CHECK(ed.p_gen[2] == doctest::Approx(0.0));
  CHECK(ed.nu_minus[2] > 0.1);
}

TEST_CASE("verify_kkt flags a perturbed dispatch") {
  GridCase gc = load_fixture("twogen.json");
  auto sol = economic_dispatch(gc, {8.0, 2.0});
  sol.p_gen[0] += 1.0;
  auto rep = verify_kkt(gc, sol, kDefaultKktTol);
  CHECK(!rep.passed);
  CHECK(rep.max_stationarity == doctest::Approx(0.2));  // 2a * 1 MW
  CHECK(rep.max_balance == doctest::Approx(1.0));
}

TEST_CASE("generate_dataset is reproducible and self-checking") {
  GridCase gc = load_fixture("twogen.json");
  Dataset a = generate_dataset(gc, 40, 0.5, 2024, SolverKind::kEconomicDispatch);
  Dataset b = generate_dataset(gc, 40, 0.5, 2024, SolverKind::kEconomicDispatch);

  REQUIRE(a.points.size() == 40);
  CHECK(a.case_fingerprint == case_fingerprint(gc));
  CHECK(a.seed == 2024);
  CHECK(a.range_fraction == 0.5);
  CHECK(a.solver_kind == SolverKind::kEconomicDispatch);

  REQUIRE(b.points.size() == a.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].loads == b.points[i].loads);
    CHECK(a.points[i].p_gen == b.points[i].p_gen);
    CHECK(a.points[i].lmp == b.points[i].lmp);
    CHECK(a.points[i].p_agg == b.points[i].p_agg);
  }

  for (const auto& pt : a.points) {
    const double gen = std::accumulate(pt.p_gen.begin(), pt.p_gen.end(), 0.0);
    const double load = std::accumulate(pt.loads.begin(), pt.loads.end(), 0.0);
    CHECK(pt.p_agg == doctest::Approx(gen).epsilon(1e-15));
    CHECK(gen == doctest::Approx(load).epsilon(1e-10));
  }
}

TEST_CASE("dataset points are keyed to their index, not the draw order") {
  GridCase gc = load_fixture("twogen.json");
  Dataset longer = generate_dataset(gc, 8, 0.3, 77, SolverKind::kEconomicDispatch);
  Dataset shorter = generate_dataset(gc, 3, 0.3, 77, SolverKind::kEconomicDispatch);
  for (std::size_t i = 0; i < shorter.points.size(); ++i) {
    CHECK(shorter.points[i].loads == longer.points[i].loads);
  }
}

TEST_CASE("zero range produces the nominal dispatch") {
  GridCase gc = load_fixture("twogen.json");
  Dataset ds = generate_dataset(gc, 1, 0.0, 5, SolverKind::kEconomicDispatch);
  REQUIRE(ds.points.size() == 1);
  CHECK(ds.points[0].loads == std::vector<double>{1.8, 1.2});
  auto ref = economic_dispatch(gc, {1.8, 1.2});
  CHECK(ds.points[0].p_gen == ref.p_gen);
  CHECK(ds.points[0].lmp == ref.lmp);
}

TEST_CASE("generate_dataset rejects invalid inputs") {
  GridCase gc = load_fixture("twogen.json");
  CHECK_THROWS_AS(generate_dataset(gc, 0, 0.2, 1, SolverKind::kEconomicDispatch),
                  Error);
  gc.generators[0].cost.a = -1.0;
  CHECK_THROWS_AS(generate_dataset(gc, 5, 0.2, 1, SolverKind::kEconomicDispatch),
                  Error);
}

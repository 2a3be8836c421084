#include "lmpinfer/scenario2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lmpinfer/errors.hpp"

namespace lmpinfer {

namespace {

// Half the update denominator: D_i = dP_A + sum_{g != i} (lmp_aux_g - lmp_base_g)/(2 a_g).
double half_denominator(std::size_t i, const PointPair& pair,
                        const std::vector<double>& a) {
  double d = pair.delta_pagg();
  for (std::size_t g = 0; g < a.size(); ++g) {
    if (g == i) continue;
    d += (pair.lmp_aux[g] - pair.lmp_base[g]) / (2.0 * a[g]);
  }
  return d;
}

void check_denominator(std::size_t i, const PointPair& pair, double half_denom) {
  const double leading = 2.0 * pair.delta_pagg();
  if (std::abs(2.0 * half_denom) <= 1e-12 * std::abs(leading)) {
    std::ostringstream msg;
    msg << "generator " << pair.gen_id << " (component " << i
        << "): update denominator vanished";
    throw Error(errc::kSingularDenominator, msg.str());
  }
}

bool uniform_within(const std::vector<double>& lmp) {
  double lo = lmp[0], hi = lmp[0], mag = std::abs(lmp[0]);
  for (double v : lmp) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mag = std::max(mag, std::abs(v));
  }
  return hi - lo <= 1e-9 * std::max(1.0, mag);
}

}  // namespace

double mfpi_component(std::size_t i, const PointPair& pair,
                      const std::vector<double>& a) {
  const double half_denom = half_denominator(i, pair, a);
  check_denominator(i, pair, half_denom);
  return pair.delta_lmp(i) / (2.0 * half_denom);
}

std::vector<double> mfpi_step(const PairSet& pairs, const std::vector<double>& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < pairs.pairs.size(); ++i) {
    out[i] = mfpi_component(i, pairs.pairs[i], a);
  }
  return out;
}

std::vector<std::vector<double>> mfpi_jacobian(const PairSet& pairs,
                                               const std::vector<double>& a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> jac(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pair = pairs.pairs[i];
    const double di = half_denominator(i, pair, a);
    check_denominator(i, pair, di);
    for (std::size_t g = 0; g < n; ++g) {
      if (g == i) continue;
      jac[i][g] = pair.delta_lmp(i) * (pair.lmp_aux[g] - pair.lmp_base[g]) /
                  (4.0 * a[g] * a[g] * di * di);
    }
  }
  return jac;
}

double contraction_bound(const PairSet& pairs, const std::vector<double>& a) {
  const auto jac = mfpi_jacobian(pairs, a);
  double bound = 0.0;
  for (const auto& row : jac) {
    double sum = 0.0;
    for (double v : row) sum += std::abs(v);
    bound = std::max(bound, sum);
  }
  return bound;
}

double a_min_bound(const PairSet& pairs, double a_max) {
  double a_min = 0.0;
  for (std::size_t i = 0; i < pairs.pairs.size(); ++i) {
    const auto& pair = pairs.pairs[i];
    double abs_cross = 0.0;
    double neg_sum = 0.0;  // sum over G- of (lmp_aux - lmp_base), negative terms
    double pos_sum = 0.0;  // sum over G+ of (lmp_aux - lmp_base), positive terms
    for (std::size_t g = 0; g < pair.lmp_base.size(); ++g) {
      if (g == i) continue;
      const double delta = pair.lmp_aux[g] - pair.lmp_base[g];
      abs_cross += std::abs(delta);
      if (delta > 0.0) {
        pos_sum += delta;
      } else {
        neg_sum += delta;
      }
    }
    const double numerator =
        std::sqrt(pair.delta_lmp(i) * abs_cross) - neg_sum;
    const double denominator = 2.0 * pair.delta_pagg() + pos_sum / a_max;
    if (denominator <= 0.0) {
      std::ostringstream msg;
      msg << "generator " << pair.gen_id << ": bound denominator " << denominator
          << " is not positive";
      throw Error(errc::kBoundUndefined, msg.str());
    }
    a_min = std::max(a_min, numerator / denominator);
  }
  return a_min;
}

ConditionReport check_conditions(const PairSet& pairs, double a_max) {
  ConditionReport rep;
  rep.a_max = a_max;
  bool conds_ok = true;
  for (const auto& pair : pairs.pairs) {
    const std::size_t i = rep.cond1.size();
    const bool c1 = pair.delta_lmp(i) > 0.0;
    const bool c2 = pair.delta_pagg() > 0.0;
    rep.cond1.push_back(c1);
    rep.cond2.push_back(c2);
    conds_ok = conds_ok && c1 && c2;
  }

  if (conds_ok) {
    try {
      rep.a_min = a_min_bound(pairs, a_max);
      rep.bound_feasible = rep.a_min < a_max;
    } catch (const Error&) {
      rep.a_min = std::numeric_limits<double>::infinity();
      rep.bound_feasible = false;
    }
  } else {
    rep.a_min = std::numeric_limits<double>::quiet_NaN();
    rep.bound_feasible = false;
  }

  bool all_uniform = true;
  for (const auto& pair : pairs.pairs) {
    if (!uniform_within(pair.lmp_base) || !uniform_within(pair.lmp_aux)) {
      all_uniform = false;
      break;
    }
  }
  rep.identifiability_ok = !all_uniform;

  rep.overall = conds_ok && rep.bound_feasible && rep.identifiability_ok;
  return rep;
}

SearchResult search_point_pairs(const GridCase& gc, const Dataset& ds,
                                double a_max, int budget, RandomStream& stream) {
  const auto bus_pos = gc.bus_index();
  std::vector<int> gen_ids;
  std::vector<std::size_t> gen_bus_col;
  for (const auto& g : gc.generators) {
    if (!g.in_service) continue;
    gen_ids.push_back(g.id);
    gen_bus_col.push_back(bus_pos.at(g.bus));
  }
  const std::size_t ng = gen_ids.size();

  // Strictly interior points only: the aggregated relation the update
  // exploits holds only when no generator limit binds.
  std::vector<std::size_t> pool;
  for (std::size_t k = 0; k < ds.points.size(); ++k) {
    const auto& pt = ds.points[k];
    bool interior = true;
    std::size_t gi = 0;
    for (const auto& g : gc.generators) {
      if (!g.in_service) continue;
      const double p = pt.p_gen[gi++];
      if (p <= g.p_min + 1e-9 || p >= g.p_max - 1e-9) {
        interior = false;
        break;
      }
    }
    if (interior) pool.push_back(k);
  }

  auto lmp_at_gens = [&](std::size_t point) {
    std::vector<double> lmp(ng);
    for (std::size_t g = 0; g < ng; ++g) {
      lmp[g] = ds.points[point].lmp[gen_bus_col[g]];
    }
    return lmp;
  };

  PairSet best;
  best.gen_ids.assign(gen_ids.begin(), gen_ids.end());
  best.pairs.resize(ng);

  for (std::size_t i = 0; i < ng; ++i) {
    bool found = false;
    double best_score = std::numeric_limits<double>::infinity();
    double best_dpagg = -1.0;
    PointPair best_pair;

    for (int trial = 0; trial < budget && pool.size() >= 2; ++trial) {
      std::size_t x = pool[stream.uniform_index(pool.size())];
      std::size_t y = pool[stream.uniform_index(pool.size())];
      if (x == y) continue;

      const auto& px = ds.points[x];
      const auto& py = ds.points[y];
      const double lx = px.lmp[gen_bus_col[i]];
      const double ly = py.lmp[gen_bus_col[i]];

      // Orient so both sign conditions hold.
      std::size_t base, aux;
      if (lx > ly && px.p_agg > py.p_agg) {
        base = x;
        aux = y;
      } else if (ly > lx && py.p_agg > px.p_agg) {
        base = y;
        aux = x;
      } else {
        continue;
      }

      PointPair cand;
      cand.gen_id = gen_ids[i];
      cand.p_agg_base = ds.points[base].p_agg;
      cand.p_agg_aux = ds.points[aux].p_agg;
      cand.lmp_base = lmp_at_gens(base);
      cand.lmp_aux = lmp_at_gens(aux);

      // Per-generator contribution to a_min; the set bound is the max of
      // these, so each slot is minimized independently.
      double abs_cross = 0.0, neg_sum = 0.0, pos_sum = 0.0;
      for (std::size_t g = 0; g < ng; ++g) {
        if (g == i) continue;
        const double delta = cand.lmp_aux[g] - cand.lmp_base[g];
        abs_cross += std::abs(delta);
        if (delta > 0.0) {
          pos_sum += delta;
        } else {
          neg_sum += delta;
        }
      }
      const double numerator = std::sqrt(cand.delta_lmp(i) * abs_cross) - neg_sum;
      const double denominator = 2.0 * cand.delta_pagg() + pos_sum / a_max;
      if (denominator <= 0.0) continue;
      const double score = numerator / denominator;

      if (score < best_score ||
          (score == best_score && cand.delta_pagg() > best_dpagg)) {
        best_score = score;
        best_dpagg = cand.delta_pagg();
        best_pair = std::move(cand);
        found = true;
      }
    }

    if (!found) {
      std::ostringstream msg;
      msg << "generator " << gen_ids[i]
          << ": no point pair satisfying conditions 1-2 within budget";
      throw Error(errc::kSearchExhausted, msg.str());
    }
    best.pairs[i] = std::move(best_pair);
  }

  SearchResult result;
  result.report = check_conditions(best, a_max);
  result.pairs = std::move(best);
  return result;
}

MFPIResult run_mfpi(const PairSet& pairs,
                    const std::optional<std::vector<double>>& init,
                    double a_max, double tol, int max_iter) {
  const std::size_t n = pairs.pairs.size();
  if (tol <= 0.0) throw Error(errc::kConfigInvalid, "tol must be positive");
  if (a_max <= 0.0) throw Error(errc::kConfigInvalid, "a_max must be positive");

  std::vector<double> a;
  if (init.has_value()) {
    a = *init;
    if (a.size() != n) {
      throw Error(errc::kConfigInvalid, "init vector size does not match pair set");
    }
    for (double v : a) {
      if (!(v > 0.0) || v > a_max) {
        throw Error(errc::kConfigInvalid,
                    "init components must lie in (0, a_max]");
      }
    }
  } else {
    a.assign(n, a_max / 2.0);
  }

  MFPIResult res;
  res.iterates.push_back(a);

  for (int k = 0; k < max_iter; ++k) {
    std::vector<double> next;
    try {
      res.bound_history.push_back(contraction_bound(pairs, a));
      next = mfpi_step(pairs, a);
    } catch (const Error& err) {
      res.aborted = true;
      res.abort_reason = err.what();
      break;
    }

    bool finite = true;
    for (double v : next) finite = finite && std::isfinite(v);
    if (!finite) {
      res.aborted = true;
      res.abort_reason = "non-finite iterate";
      break;
    }

    double step = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      step = std::max(step, std::abs(next[i] - a[i]));
    }
    res.iterates.push_back(next);
    if (!res.step_norms.empty() && res.step_norms.back() > 0.0) {
      res.contraction_ratios.push_back(step / res.step_norms.back());
    }
    res.step_norms.push_back(step);
    a = next;
    res.iterations = k + 1;
    if (step <= tol) {
      res.converged = true;
      break;
    }
  }

  res.a_hat = a;
  return res;
}

}  // namespace lmpinfer

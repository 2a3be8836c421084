#include "lmpinfer/scenario1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "lmpinfer/errors.hpp"

namespace lmpinfer {

std::pair<std::size_t, std::size_t> select_interior_points(
    const GenSeries& series, double margin, double min_gap) {
  const auto& obs = series.observations;
  if (obs.size() < 2) {
    throw Error(errc::kNoQualifyingPair,
                "series has fewer than 2 observations");
  }

  double p_lo = obs[0].p, p_hi = obs[0].p;
  for (const auto& o : obs) {
    p_lo = std::min(p_lo, o.p);
    p_hi = std::max(p_hi, o.p);
  }

  // Qualifying points sit at least `margin` inside the series band.
  std::vector<std::size_t> band;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i].p >= p_lo + margin && obs[i].p <= p_hi - margin) {
      band.push_back(i);
    }
  }
  if (band.size() < 2) {
    throw Error(errc::kNoQualifyingPair,
                "fewer than 2 observations inside the margin band");
  }

  double q_lo = obs[band[0]].p, q_hi = obs[band[0]].p;
  for (std::size_t i : band) {
    q_lo = std::min(q_lo, obs[i].p);
    q_hi = std::max(q_hi, obs[i].p);
  }
  const double gap = q_hi - q_lo;
  if (gap <= 0.0) {
    throw Error(errc::kNoQualifyingPair, "all qualifying observations coincide");
  }
  if (gap < min_gap) {
    std::ostringstream msg;
    msg << "widest qualifying separation " << gap << " MW is below the minimum gap "
        << min_gap << " MW";
    throw Error(errc::kNoQualifyingPair, msg.str());
  }

  // The widest pair joins a minimum-value point with a maximum-value point;
  // lexicographically lowest indices among those.
  std::size_t first = obs.size();
  for (std::size_t i : band) {
    if (obs[i].p == q_lo || obs[i].p == q_hi) {
      first = i;
      break;
    }
  }
  const double other = obs[first].p == q_lo ? q_hi : q_lo;
  std::size_t second = obs.size();
  for (std::size_t i : band) {
    if (i > first && obs[i].p == other) {
      second = i;
      break;
    }
  }
  if (first >= obs.size() || second >= obs.size()) {
    throw Error(errc::kNoQualifyingPair, "no qualifying pair found");
  }
  return {first, second};
}

CoeffEstimate recover_coeffs_closed_form(const Observation& alpha,
                                         const Observation& beta) {
  if (alpha.p == beta.p) {
    throw Error(errc::kDegeneratePair,
                "observations have identical generation values");
  }
  const double slope = (alpha.lmp - beta.lmp) / (alpha.p - beta.p);
  CoeffEstimate est;
  est.a_hat = slope / 2.0;
  est.b_hat = alpha.lmp - alpha.p * slope;
  return est;
}

CapacityEstimate infer_capacity(const GenSeries& series, double a_hat,
                                double b_hat, double bind_tol) {
  CapacityEstimate cap;
  std::vector<double> max_candidates, min_candidates;
  for (const auto& o : series.observations) {
    const double s = o.lmp - (2.0 * a_hat * o.p + b_hat);
    if (s > bind_tol) {
      ++cap.case1_count;
      max_candidates.push_back(o.p);
    } else if (s < -bind_tol) {
      ++cap.case2_count;
      min_candidates.push_back(o.p);
    } else {
      ++cap.interior_count;
    }
  }

  auto resolve = [&cap](std::vector<double>& cands) -> std::optional<double> {
    if (cands.empty()) return std::nullopt;
    std::sort(cands.begin(), cands.end());
    const double tol = 1e-9 * std::max(1.0, std::abs(cands.back()));
    if (cands.back() - cands.front() <= tol) return cands.front();
    // Disagreeing candidates: cluster within tolerance, take the modal
    // cluster (first on ties) and report its first value.
    cap.disagreement_warning = true;
    std::size_t best_start = 0, best_len = 0;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= cands.size(); ++i) {
      if (i == cands.size() || cands[i] - cands[start] > tol) {
        if (i - start > best_len) {
          best_len = i - start;
          best_start = start;
        }
        start = i;
      }
    }
    return cands[best_start];
  };

  cap.p_max_hat = resolve(max_candidates);
  cap.p_min_hat = resolve(min_candidates);
  return cap;
}

GenSeries series_for_generator(const GridCase& gc, const Dataset& ds,
                               int gen_id) {
  const auto bus_pos = gc.bus_index();
  std::size_t col = gc.generators.size() + 1;
  int bus = -1;
  std::size_t k = 0;
  for (const auto& g : gc.generators) {
    if (!g.in_service) continue;
    if (g.id == gen_id) {
      col = k;
      bus = g.bus;
    }
    ++k;
  }
  if (col > gc.generators.size() || bus < 0) {
    throw Error(errc::kConfigInvalid,
                "generator " + std::to_string(gen_id) + " is not in service");
  }
  const std::size_t bus_col = bus_pos.at(bus);

  GenSeries series;
  series.gen_id = gen_id;
  series.observations.reserve(ds.points.size());
  for (const auto& pt : ds.points) {
    series.observations.push_back({pt.p_gen[col], pt.lmp[bus_col]});
  }
  return series;
}

Scenario1Result attack_all_generators(const GridCase& gc, const Dataset& ds,
                                      double margin, double min_gap,
                                      double bind_tol) {
  if (ds.points.empty()) {
    throw Error(errc::kConfigInvalid, "dataset has no points");
  }
  Scenario1Result result;
  for (const auto& g : gc.generators) {
    GenAttackResult r;
    r.gen_id = g.id;
    if (!g.in_service) {
      r.failure_reason = "generator is out of service in every point";
      result.generators.push_back(std::move(r));
      continue;
    }
    const GenSeries series = series_for_generator(gc, ds, g.id);
    try {
      const auto [ia, ib] = select_interior_points(series, margin, min_gap);
      const auto est = recover_coeffs_closed_form(series.observations[ia],
                                                  series.observations[ib]);
      r.a_hat = est.a_hat;
      r.b_hat = est.b_hat;
      r.recovered = true;
      r.capacity = infer_capacity(series, est.a_hat, est.b_hat, bind_tol);
      for (const auto& o : series.observations) {
        const double s = o.lmp - (2.0 * est.a_hat * o.p + est.b_hat);
        if (std::abs(s) <= bind_tol) {
          r.residual_max = std::max(r.residual_max, std::abs(s));
        }
      }
    } catch (const Error& err) {
      r.recovered = false;
      r.failure_reason = err.what();
    }
    result.generators.push_back(std::move(r));
  }
  return result;
}

}  // namespace lmpinfer

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hpol/defaults.hpp"
#include "hpol/distance.hpp"
#include "hpol/errors.hpp"
#include "hpol/geom.hpp"
#include "hpol/integrate.hpp"
#include "hpol/model.hpp"
#include "hpol/packing.hpp"

namespace hpol {

struct SlopeRow {
  double eps = 0.0;
  std::vector<double> horizons;
  std::vector<int> counts;
  std::vector<char> saturated;      // count reached the ensemble size
  std::optional<double> slope;      // least squares on contributing rungs
  double spread = std::numeric_limits<double>::infinity();
  int contributing = 0;
  bool saturation_warning = false;
};

struct SlopeFit {
  std::vector<SlopeRow> rows;
  int ensemble_size = 0;
  std::string scheme;

  bool any_saturation_warning() const {
    for (const auto& r : rows)
      if (r.saturation_warning) return true;
    return false;
  }

  // h_pol proxy: the largest per-eps slope whose top-half secants agree to
  // within spread_tol. Mirrors the eps -> 0 ordering of the definition.
  std::optional<double> max_stable_slope(double spread_tol = defaults::kStableSpread) const {
    std::optional<double> best;
    for (const auto& r : rows) {
      if (!r.slope || r.spread > spread_tol) continue;
      if (!best || *r.slope > *best) best = *r.slope;
    }
    return best;
  }
};

namespace detail {

// Fit one eps row: contributing rungs are the top half of the ladder that are
// unsaturated and nonzero; a slope needs at least 4 of them.
inline void fit_row(SlopeRow& row, int ensemble_size) {
  const int nh = static_cast<int>(row.horizons.size());
  std::vector<int> contrib;
  bool dropped_saturated = false;
  for (int i = nh / 2; i < nh; ++i) {
    if (row.counts[i] >= ensemble_size) {
      row.saturated[i] = 1;
      dropped_saturated = true;
      continue;
    }
    if (row.counts[i] < 1) continue;
    contrib.push_back(i);
  }
  row.contributing = static_cast<int>(contrib.size());
  row.saturation_warning = dropped_saturated;

  // stability diagnostic: spread of pairwise secant slopes
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < contrib.size(); ++a) {
    for (std::size_t b = a + 1; b < contrib.size(); ++b) {
      const double dx = std::log(row.horizons[contrib[b]]) - std::log(row.horizons[contrib[a]]);
      const double dy = std::log(static_cast<double>(row.counts[contrib[b]])) -
                        std::log(static_cast<double>(row.counts[contrib[a]]));
      if (dx <= 0.0) continue;
      const double s = dy / dx;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  row.spread = (contrib.size() >= 2) ? hi - lo : std::numeric_limits<double>::infinity();

  if (row.contributing < 4) return;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const int i : contrib) {
    const double x = std::log(row.horizons[i]);
    const double y = std::log(static_cast<double>(row.counts[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(contrib.size());
  row.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

// Greedy separated counts for every (eps, horizon) from a first-separation
// table, then per-eps slope fits. The greedy order is candidate index order,
// so results are deterministic for a fixed ensemble.
inline SlopeFit slopes_from_table(const FirstSeparationTable& table,
                                  const std::vector<double>& horizons) {
  SlopeFit fit;
  fit.ensemble_size = table.n;
  std::vector<int> kept;
  kept.reserve(table.n);
  for (std::size_t e = 0; e < table.eps_ladder.size(); ++e) {
    SlopeRow row;
    row.eps = table.eps_ladder[e];
    row.horizons = horizons;
    row.counts.resize(horizons.size());
    row.saturated.assign(horizons.size(), 0);
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      const double T = horizons[h];
      kept.clear();
      for (int i = 0; i < table.n; ++i) {
        bool ok = true;
        for (const int j : kept) {
          if (!(table.at(static_cast<int>(e), j, i) <= T)) {
            ok = false;
            break;
          }
        }
        if (ok) kept.push_back(i);
      }
      row.counts[h] = static_cast<int>(kept.size());
    }
    detail::fit_row(row, table.n);
    fit.rows.push_back(std::move(row));
  }
  // rows ordered largest eps first, like the ladder is usually quoted
  std::sort(fit.rows.begin(), fit.rows.end(),
            [](const SlopeRow& a, const SlopeRow& b) { return a.eps > b.eps; });
  return fit;
}

enum class Scheme { uniform, bundle, separatrix };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::uniform: return "uniform";
    case Scheme::bundle: return "bundle";
    case Scheme::separatrix: return "separatrix";
  }
  return "?";
}

// (model, energy shell, sampling scheme) for flow entropy estimates.
struct SystemDescriptor {
  TonelliModel model;
  double energy = 0.5;
  Scheme scheme = Scheme::bundle;
  int ensemble_size = 400;
  std::uint64_t seed = 1;

  // bundle scheme
  Vec2 base_q{0.25, 0.25};
  double base_angle = 0.0;
  double bundle_width = 0.0;  // <= 0: tuned so counts saturate at the top rung

  // separatrix scheme
  int orbit_count = 16;
  double period_floor = 0.0;  // <= 0: tuned from the horizon ladder
};

struct EstimateOptions {
  std::vector<double> eps_ladder{defaults::kEpsLadder,
                                 defaults::kEpsLadder + 4};
  std::vector<double> horizons;  // empty: dyadic ladder at time_unit
  double time_unit = defaults::kTimeUnit;
  double dt = 1e-3;
  double dt_sample = 5e-3;
};

inline std::vector<double> dyadic_horizons(double time_unit) {
  std::vector<double> h;
  for (int k = defaults::kHorizonExpLo; k <= defaults::kHorizonExpHi; ++k) {
    h.push_back(std::ldexp(1.0, k) * time_unit);
  }
  return h;
}

namespace detail {

inline PhaseState shell_state(const TonelliModel& m, const Vec2& q, double angle, double e) {
  const Vec2 dir{std::cos(angle), std::sin(angle)};
  return restrict_to_energy(m, {TorusPoint(q), dir}, e);
}

inline std::vector<PhaseState> uniform_ensemble(const SystemDescriptor& d) {
  Rng rng(d.seed);
  std::vector<PhaseState> states;
  states.reserve(d.ensemble_size);
  while (static_cast<int>(states.size()) < d.ensemble_size) {
    const Vec2 q{rng.uniform(), rng.uniform()};
    const double a = rng.uniform(0.0, two_pi());
    try {
      states.push_back(shell_state(d.model, q, a, d.energy));
    } catch (const DomainError&) {
    }
  }
  return states;
}

// Velocity-angle ladder around a base orbit. The window is sized so the
// largest horizon just resolves the whole ladder at the reference eps
// (geometric mean of the ladder): smaller windows waste candidates, larger
// ones saturate early.
inline std::vector<PhaseState> bundle_ensemble(const SystemDescriptor& d,
                                               const EstimateOptions& opt,
                                               const std::vector<double>& horizons) {
  double width = d.bundle_width;
  if (width <= 0.0) {
    const double eps_ref = std::sqrt(opt.eps_ladder.front() * opt.eps_ladder.back());
    width = std::min(two_pi(), d.ensemble_size * eps_ref / horizons.back());
  }
  std::vector<PhaseState> states;
  states.reserve(d.ensemble_size);
  for (int j = 0; j < d.ensemble_size; ++j) {
    const double a = d.base_angle + width * (static_cast<double>(j) / d.ensemble_size - 0.5);
    states.push_back(shell_state(d.model, d.base_q, a, d.energy));
  }
  return states;
}

// Near-separatrix ensemble for the revolution family. Orbits with meridian
// rotation periods on a linear ladder up to roughly the top horizon, each
// sampled uniformly in time, so slower orbits carry proportionally more
// points. Period calibration bisects the Clairaut offset eta in log scale.
std::vector<PhaseState> separatrix_ensemble(const SystemDescriptor& d,
                                            const std::vector<double>& horizons);

}  // namespace detail

inline std::vector<PhaseState> make_ensemble(const SystemDescriptor& d,
                                             const EstimateOptions& opt,
                                             const std::vector<double>& horizons) {
  switch (d.scheme) {
    case Scheme::uniform: return detail::uniform_ensemble(d);
    case Scheme::bundle: return detail::bundle_ensemble(d, opt, horizons);
    case Scheme::separatrix: return detail::separatrix_ensemble(d, horizons);
  }
  return {};
}

// Separated-count slopes of a flow under the dynamical metrics; the lockstep
// stepper variant so tests can substitute synthetic systems.
inline SlopeFit hpol_estimate_with_stepper(const EnsembleStepper& stepper,
                                           std::vector<PhaseState> states,
                                           EstimateOptions opt, const std::string& scheme) {
  if (opt.horizons.empty()) opt.horizons = dyadic_horizons(opt.time_unit);
  const FirstSeparationTable table =
      first_separations(stepper, std::move(states), opt.eps_ladder, opt.horizons.back(), opt.dt,
                        opt.dt_sample);
  SlopeFit fit = slopes_from_table(table, opt.horizons);
  fit.scheme = scheme;
  return fit;
}

inline SlopeFit hpol_estimate(const SystemDescriptor& d, EstimateOptions opt = {}) {
  if (opt.horizons.empty()) opt.horizons = dyadic_horizons(opt.time_unit);
  auto states = make_ensemble(d, opt, opt.horizons);
  return hpol_estimate_with_stepper(hamiltonian_stepper(d.model), std::move(states), opt,
                                    scheme_name(d.scheme));
}

namespace detail {

inline std::vector<PhaseState> separatrix_ensemble(const SystemDescriptor& d,
                                                   const std::vector<double>& horizons) {
  const TonelliModel& m = d.model;
  if (m.family() != Family::revolution)
    throw DomainError("separatrix scheme: revolution family only");
  const double e = d.energy;
  const double r_min = m.revolution_a() - m.revolution_b();
  const double p1_star = r_min * std::sqrt(2.0 * e);

  // period of the meridian rotation at Clairaut offset eta
  auto period = [&](double eta) {
    const double p1 = p1_star * (1.0 - eta);
    const double r0 = m.revolution_a() + m.revolution_b();  // start at the bulge q2 = 0
    const double p2 = std::sqrt(std::max(0.0, 2.0 * e - p1 * p1 / (r0 * r0)));
    Vec2 q{0.0, 0.0};
    Vec2 p{p1, p2};
    const double dt = 2e-3;
    const double t_cap = 4.0 * horizons.back() + 50.0;
    double t = 0.0;
    while (q.y < 1.0 && t < t_cap) {
      flow_step(m, q, p, dt, e);
      t += dt;
    }
    return t;
  };

  // linear ladder of target periods, calibrated by bisection in log(eta)
  const double p_max = 0.75 * horizons.back();
  const double p_min = d.period_floor > 0.0 ? d.period_floor : std::max(1.0, p_max / d.orbit_count);
  std::vector<double> etas;
  for (int i = 0; i < d.orbit_count; ++i) {
    const double target =
        p_min + (p_max - p_min) * static_cast<double>(i) / std::max(1, d.orbit_count - 1);
    double lo = -36.0, hi = -0.5;  // log eta brackets
    if (period(std::exp(lo)) < target) {
      etas.push_back(std::exp(lo));  // precision floor reached; keep deepest orbit
      continue;
    }
    for (int it = 0; it < 40 && hi - lo > 1e-3; ++it) {
      const double mid = 0.5 * (lo + hi);
      (period(std::exp(mid)) > target ? lo : hi) = mid;
    }
    etas.push_back(std::exp(0.5 * (lo + hi)));
  }

  // uniform time sampling along each calibrated orbit
  std::vector<double> periods;
  double total = 0.0;
  for (const double eta : etas) {
    periods.push_back(period(eta));
    total += periods.back();
  }
  const double ds = total / d.ensemble_size;
  std::vector<PhaseState> states;
  states.reserve(d.ensemble_size);
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const double p1 = p1_star * (1.0 - etas[i]);
    const double r0 = m.revolution_a() + m.revolution_b();
    const double p2 = std::sqrt(std::max(0.0, 2.0 * e - p1 * p1 / (r0 * r0)));
    Vec2 q{0.0, 0.0};
    Vec2 p{p1, p2};
    const int n_pts = std::max(1, static_cast<int>(std::floor(periods[i] / ds)));
    const double step = periods[i] / n_pts;
    const double dt = 2e-3;
    for (int k = 0; k < n_pts && static_cast<int>(states.size()) < d.ensemble_size; ++k) {
      states.push_back({TorusPoint(q), p});
      double t = 0.0;
      while (t < step - 1e-12) {
        const double h = std::min(dt, step - t);
        flow_step(m, q, p, h, e);
        t += h;
      }
    }
  }
  while (static_cast<int>(states.size()) > d.ensemble_size) states.pop_back();
  return states;
}

}  // namespace detail

}  // namespace hpol

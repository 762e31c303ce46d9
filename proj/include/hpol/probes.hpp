#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "hpol/distance.hpp"
#include "hpol/section.hpp"
#include "hpol/slope.hpp"

namespace hpol {

struct PoincareProbeReport {
  SlopeFit map_fit;
  SlopeFit flow_fit;
  std::optional<double> map_slope;
  std::optional<double> flow_slope;
  double max_return_time = 0.0;
  bool violation = false;  // map slope exceeds flow slope by > 0.3
};

struct ProbeOptions {
  std::vector<double> eps_ladder{defaults::kEpsLadder, defaults::kEpsLadder + 4};
  int n_max = 64;  // power of two; return-map horizon cap
  int k_params = 4;
  int k_angles = 16;
  double angle_center = 0.0;
  double angle_width = 0.0;  // <= 0: tuned like the bundle window
  double dt = 1e-3;
  double dt_sample = 5e-3;
  double slope_margin = 0.3;
};

// Compares the polynomial-entropy slope of the Poincare return map with the
// slope of the flow over horizons n * T_return. The flow slope should
// dominate (up to the stated margin): separated orbits of the return map are
// separated orbits of the flow.
inline PoincareProbeReport poincare_inequality_probe(const TonelliModel& model,
                                                     const SectionCurve& section, double energy,
                                                     ProbeOptions opt = {}) {
  // dyadic iterate ladder 2..n_max
  std::vector<double> n_ladder;
  for (int n = 2; n <= opt.n_max; n *= 2) n_ladder.push_back(static_cast<double>(n));

  double width = opt.angle_width;
  if (width <= 0.0) {
    const double eps_ref = std::sqrt(opt.eps_ladder.front() * opt.eps_ladder.back());
    width = std::min(1.5, opt.k_angles * eps_ref / opt.n_max);
  }

  std::vector<PhaseState> states;
  for (int i = 0; i < opt.k_params; ++i) {
    const Vec2 q = section.point_at((i + 0.5) / opt.k_params);
    for (int j = 0; j < opt.k_angles; ++j) {
      const double a = opt.angle_center + width * (static_cast<double>(j) / opt.k_angles - 0.5);
      states.push_back(restrict_to_energy(model, {TorusPoint(q), {std::cos(a), std::sin(a)}},
                                          energy));
    }
  }
  const int k = static_cast<int>(states.size());

  // return-map orbits; no-return and transversality errors propagate
  ReturnOptions ropt;
  ropt.dt = opt.dt;
  ropt.check_on_section = false;
  std::vector<std::vector<PhaseState>> orbits(k);
  double t_ret_max = 0.0;
  for (int i = 0; i < k; ++i) {
    const SectionOrbit so = section_returns(model, section, states[i], opt.n_max - 1, ropt);
    if (!so.complete) throw NoReturnError("poincare probe: orbit lost before n_max returns");
    orbits[i].push_back(states[i]);
    orbits[i].insert(orbits[i].end(), so.states.begin(), so.states.end());
    double prev = 0.0;
    for (const double t : so.times) {
      t_ret_max = std::max(t_ret_max, t - prev);
      prev = t;
    }
  }

  // first-separation iterate per pair per eps -> same slope machinery
  std::vector<double> eps = opt.eps_ladder;
  std::sort(eps.begin(), eps.end());
  FirstSeparationTable map_table;
  map_table.n = k;
  map_table.eps_ladder = eps;
  map_table.t_max = static_cast<double>(opt.n_max);
  const std::size_t npairs = static_cast<std::size_t>(k) * (k - 1) / 2;
  map_table.t_sep.assign(eps.size(),
                         std::vector<double>(npairs, std::numeric_limits<double>::infinity()));
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const std::size_t pk = FirstSeparationTable::pack(k, i, j);
      std::size_t lev = 0;
      for (int s = 0; s < opt.n_max && lev < eps.size(); ++s) {
        const double d = phase_distance(orbits[i][s], orbits[j][s]);
        while (lev < eps.size() && d >= eps[lev]) {
          // horizon n covers iterates 0..n-1
          map_table.t_sep[lev][pk] = static_cast<double>(s + 1);
          ++lev;
        }
      }
    }
  }
  PoincareProbeReport rep;
  rep.max_return_time = t_ret_max;
  rep.map_fit = slopes_from_table(map_table, n_ladder);
  rep.map_fit.scheme = "section-bundle";

  std::vector<double> flow_horizons;
  for (const double n : n_ladder) flow_horizons.push_back(n * t_ret_max);
  EstimateOptions eopt;
  eopt.eps_ladder = opt.eps_ladder;
  eopt.horizons = flow_horizons;
  eopt.dt = opt.dt;
  eopt.dt_sample = opt.dt_sample;
  rep.flow_fit =
      hpol_estimate_with_stepper(hamiltonian_stepper(model), states, eopt, "section-bundle");

  rep.map_slope = rep.map_fit.max_stable_slope();
  rep.flow_slope = rep.flow_fit.max_stable_slope();
  if (rep.map_slope && rep.flow_slope) {
    rep.violation = *rep.map_slope > *rep.flow_slope + opt.slope_margin;
  }
  return rep;
}

}  // namespace hpol

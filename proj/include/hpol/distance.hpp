#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "hpol/errors.hpp"
#include "hpol/integrate.hpp"
#include "hpol/torus.hpp"

namespace hpol {

// Dynamical distance between two equally sampled trajectories:
// max over samples t in [0, horizon] of the phase distance.
inline double dynamical_distance(const Trajectory& a, const Trajectory& b, double horizon) {
  if (std::abs(a.dt_sample - b.dt_sample) > 1e-12)
    throw DomainError("dynamical_distance: trajectories must share dt_sample");
  const auto k_max = static_cast<std::size_t>(std::floor(horizon / a.dt_sample + 1e-9));
  if (k_max >= a.size() || k_max >= b.size())
    throw DomainError("dynamical_distance: horizon exceeds trajectory length");
  double best = 0.0;
  for (std::size_t k = 0; k <= k_max; ++k) {
    best = std::max(best, phase_distance(a.at(k), b.at(k)));
  }
  return best;
}

// Same, abandoning the pair at the first sample where eps is exceeded.
inline double dynamical_distance_early_exit(const Trajectory& a, const Trajectory& b,
                                            double horizon, double eps) {
  if (std::abs(a.dt_sample - b.dt_sample) > 1e-12)
    throw DomainError("dynamical_distance: trajectories must share dt_sample");
  const auto k_max = static_cast<std::size_t>(std::floor(horizon / a.dt_sample + 1e-9));
  if (k_max >= a.size() || k_max >= b.size())
    throw DomainError("dynamical_distance: horizon exceeds trajectory length");
  double best = 0.0;
  for (std::size_t k = 0; k <= k_max; ++k) {
    best = std::max(best, phase_distance(a.at(k), b.at(k)));
    if (best >= eps) return best;
  }
  return best;
}

// First-separation table: t_sep[e][pair(i,j)] is the smallest sampled time at
// which the phase distance of trajectories i and j reaches eps_ladder[e]
// (infinity if it never does before t_max). Filled by integrating the whole
// ensemble in lockstep so no trajectory is ever stored.
struct FirstSeparationTable {
  int n = 0;
  std::vector<double> eps_ladder;
  std::vector<std::vector<double>> t_sep;  // per eps, packed upper triangle
  double t_max = 0.0;

  static std::size_t pack(int n, int i, int j) {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i) * n - static_cast<std::size_t>(i) * (i + 1) / 2 +
           (j - i - 1);
  }
  double at(int e, int i, int j) const { return t_sep[e][pack(n, i, j)]; }
};

// Generic stepper: advances all states by dt. The model-driven one wraps
// flow_step; tests substitute frozen or synthetic dynamics.
using EnsembleStepper = std::function<void(std::vector<PhaseState>&, double)>;

inline EnsembleStepper hamiltonian_stepper(const TonelliModel& m) {
  return [&m](std::vector<PhaseState>& states, double dt) {
    for (auto& s : states) {
      Vec2 q = s.q.vec(), p = s.p;
      const double e = m.hamiltonian(q, p);
      flow_step(m, q, p, dt, e);
      s = {TorusPoint(q), p};
    }
  };
}

inline FirstSeparationTable first_separations(const EnsembleStepper& step,
                                              std::vector<PhaseState> states,
                                              std::vector<double> eps_ladder, double t_max,
                                              double dt, double dt_sample) {
  const int n = static_cast<int>(states.size());
  const int ne = static_cast<int>(eps_ladder.size());
  // ascending: a pair reaches small eps first, then climbs the ladder
  std::sort(eps_ladder.begin(), eps_ladder.end());

  FirstSeparationTable table;
  table.n = n;
  table.eps_ladder = eps_ladder;
  table.t_max = t_max;
  const std::size_t npairs = static_cast<std::size_t>(n) * (n - 1) / 2;
  table.t_sep.assign(ne, std::vector<double>(npairs, std::numeric_limits<double>::infinity()));

  // level[pair] = index of the largest eps not yet attained
  std::vector<int> level(npairs, 0);
  std::vector<std::size_t> active(npairs);
  for (std::size_t k = 0; k < npairs; ++k) active[k] = k;
  std::vector<std::pair<int, int>> unpack(npairs);
  {
    std::size_t k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) unpack[k++] = {i, j};
  }

  const long stride = std::max(1L, std::lround(dt_sample / dt));
  const long nsteps = std::lround(std::ceil(t_max / dt - 1e-12));

  auto scan = [&](double t_now) {
    std::size_t w = 0;
    for (std::size_t idx = 0; idx < active.size(); ++idx) {
      const std::size_t k = active[idx];
      const auto [i, j] = unpack[k];
      const double d = phase_distance(states[i], states[j]);
      int lev = level[k];
      while (lev < ne && d >= table.eps_ladder[lev]) {
        table.t_sep[lev][k] = t_now;
        ++lev;
      }
      level[k] = lev;
      if (lev < ne) active[w++] = k;  // still below the top of the ladder
    }
    active.resize(w);
  };

  scan(0.0);
  for (long s = 0; s < nsteps && !active.empty(); ++s) {
    step(states, dt);
    if ((s + 1) % stride == 0 || s + 1 == nsteps) scan((s + 1) * dt);
  }
  return table;
}

}  // namespace hpol

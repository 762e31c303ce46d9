#pragma once

#include <cmath>
#include <vector>

#include "hpol/defaults.hpp"
#include "hpol/errors.hpp"
#include "hpol/model.hpp"
#include "hpol/torus.hpp"

namespace hpol {

// Time-sampled phase orbit with energy bookkeeping. Sample positions are
// reduced to the fundamental domain; `winding` keeps the unwrapped total
// displacement for rotation vectors.
struct Trajectory {
  PhaseState initial;
  double dt_sample = 0.0;
  double t_final = 0.0;
  std::vector<PhaseState> samples;  // samples[k] at t = k*dt_sample
  std::vector<double> energy;
  Vec2 winding{0.0, 0.0};
  double max_rel_drift = 0.0;

  const PhaseState& at(std::size_t k) const { return samples[k]; }
  std::size_t size() const { return samples.size(); }
};

namespace detail {

// One classical RK4 step on the unreduced phase point.
inline void rk4_step(const TonelliModel& m, Vec2& q, Vec2& p, double dt) {
  const Vec2 k1q = m.grad_p(q, p), k1p = -1.0 * m.grad_q(q, p);
  const Vec2 q2 = q + k1q * (0.5 * dt), p2 = p + k1p * (0.5 * dt);
  const Vec2 k2q = m.grad_p(q2, p2), k2p = -1.0 * m.grad_q(q2, p2);
  const Vec2 q3 = q + k2q * (0.5 * dt), p3 = p + k2p * (0.5 * dt);
  const Vec2 k3q = m.grad_p(q3, p3), k3p = -1.0 * m.grad_q(q3, p3);
  const Vec2 q4 = q + k3q * dt, p4 = p + k3p * dt;
  const Vec2 k4q = m.grad_p(q4, p4), k4p = -1.0 * m.grad_q(q4, p4);
  q += (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (dt / 6.0);
  p += (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (dt / 6.0);
}

// Project p back onto {H = e} along dH/dp (Newton in the shift magnitude).
inline void project_energy(const TonelliModel& m, const Vec2& q, Vec2& p, double e) {
  for (int it = 0; it < 3; ++it) {
    const double h = m.hamiltonian(q, p);
    const double err = h - e;
    if (std::abs(err) < 1e-15 * std::max(1.0, std::abs(e))) return;
    const Vec2 dir = m.grad_p(q, p);
    const double d2 = dir.norm2();
    if (d2 < 1e-30) return;  // at the fiber minimum; nothing to project along
    p -= dir * (err / d2);
  }
}

}  // namespace detail

// Low-level stepper exposed for lockstep ensembles: advances an unreduced
// (q,p) by one projected RK4 step. Returns the pre-projection energy error.
inline double flow_step(const TonelliModel& m, Vec2& q, Vec2& p, double dt, double e) {
  detail::rk4_step(m, q, p, dt);
  const double drift = std::abs(m.hamiltonian(q, p) - e);
  detail::project_energy(m, q, p, e);
  return drift;
}

// Integrate the Hamiltonian flow for time t_final with fixed step dt and
// per-step energy projection; samples every dt_sample (default: every step).
inline Trajectory integrate(const TonelliModel& m, const PhaseState& start, double t_final,
                            double dt, double dt_sample = 0.0) {
  if (!(dt > 0.0)) throw DomainError("integrate: dt must be positive");
  if (t_final < 0.0) throw DomainError("integrate: t_final must be nonnegative");
  if (dt_sample <= 0.0) dt_sample = dt;
  const long stride = std::max(1L, std::lround(dt_sample / dt));
  dt_sample = stride * dt;

  Trajectory traj;
  traj.initial = start;
  traj.dt_sample = dt_sample;
  traj.t_final = t_final;

  Vec2 q = start.q.vec();
  Vec2 p = start.p;
  const double e = m.hamiltonian(q, p);
  const double scale = std::max(1.0, std::abs(e));

  // whole steps only, so samples stay uniformly spaced
  const long nsteps = stride * std::lround(std::ceil(t_final / dt_sample - 1e-12));
  traj.t_final = nsteps * dt;
  traj.samples.reserve(static_cast<std::size_t>(nsteps / stride + 2));
  traj.samples.push_back({TorusPoint(q), p});
  traj.energy.push_back(e);

  for (long k = 0; k < nsteps; ++k) {
    const double drift = flow_step(m, q, p, dt, e);
    if (drift > defaults::kPreProjectionDrift * scale) {
      throw StepSizeError("integrate: per-step energy drift above 1e-6; reduce dt");
    }
    if ((k + 1) % stride == 0) {
      const double h = m.hamiltonian(q, p);
      traj.samples.push_back({TorusPoint(q), p});
      traj.energy.push_back(h);
      traj.max_rel_drift = std::max(traj.max_rel_drift, std::abs(h - e) / scale);
    }
  }
  traj.winding = q - start.q.vec();
  return traj;
}

// Rescale p radially so that H(q, lambda p) = e, to 1e-12.
inline PhaseState restrict_to_energy(const TonelliModel& m, const PhaseState& s, double e) {
  const Vec2 q = s.q.vec();
  if (e < m.hamiltonian(q, Vec2{0.0, 0.0}))
    throw DomainError("restrict_to_energy: e below the fiber minimum");
  const double h0 = m.hamiltonian(q, s.p);
  if (std::abs(h0 - e) <= defaults::kRestrictTol) return s;
  if (s.p.norm2() == 0.0) {
    if (std::abs(e - m.hamiltonian(q, s.p)) <= defaults::kRestrictTol) return s;
    throw DomainError("restrict_to_energy: zero momentum cannot reach the shell");
  }

  // bracket the shell along the ray, then bisect + Newton polish
  double lo = 0.0, hi = 1.0;
  if (h0 < e) {
    while (m.hamiltonian(q, s.p * hi) < e) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e12) throw DomainError("restrict_to_energy: ray does not reach the shell");
    }
  } else {
    hi = 1.0;
    lo = 0.0;
  }
  double lam = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double h = m.hamiltonian(q, s.p * lam);
    if (std::abs(h - e) <= defaults::kRestrictTol) break;
    (h < e ? lo : hi) = lam;
    // Newton from the derivative along the ray, clamped to the bracket
    const double dh = m.grad_p(q, s.p * lam).dot(s.p);
    double next = dh > 0.0 ? lam - (h - e) / dh : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    lam = next;
  }
  return {s.q, s.p * lam};
}

// Integrate forward then backward; used by the reversibility checks.
inline PhaseState integrate_back_and_forth(const TonelliModel& m, const PhaseState& s, double t,
                                           double dt) {
  Vec2 q = s.q.vec(), p = s.p;
  const double e = m.hamiltonian(q, p);
  const long n = std::lround(t / dt);
  for (long k = 0; k < n; ++k) flow_step(m, q, p, dt, e);
  for (long k = 0; k < n; ++k) flow_step(m, q, p, -dt, e);
  return {TorusPoint(q), p};
}

}  // namespace hpol

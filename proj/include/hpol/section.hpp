#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "hpol/defaults.hpp"
#include "hpol/errors.hpp"
#include "hpol/homology.hpp"
#include "hpol/integrate.hpp"
#include "hpol/model.hpp"

namespace hpol {

// Embedded cooriented circle Sigma in T^2.
//
// Crossing detection uses the lifted scalar representation: a function
// theta_hat on R^2 with theta_hat(q + k) = theta_hat(q) + degree . k, whose
// level set {theta_hat = theta0 mod 1} contains the curve. The polyline
// carries the arclength parameterization (normalized to total length 1, so
// the parameterization is isometric up to the constant perimeter factor).
//
// Orientation convention: the tangent is the counterclockwise quarter turn
// of the coorientation normal (the direction of increasing theta_hat), so a
// loop of homology h crosses positively <h, [Sigma]> times and the
// intersection class sigma equals [Sigma].
struct SectionCurve {
  std::function<double(const Vec2&)> theta_hat;  // lifted, defined on R^2
  Vec2 degree{1.0, 0.0};
  double theta0 = 0.0;

  std::vector<Vec2> polyline;  // closed; consecutive points joined by short arcs
  std::vector<double> arclen;  // normalized cumulative arclength per vertex
  double perimeter = 0.0;
  HomologyClass homology{0.0, 1.0};
  HomologyClass sigma{0.0, 1.0};

  double section_tol = 1e-4;

  // signed value whose integer crossings are crossings of Sigma
  double xi(const Vec2& q_lifted) const { return theta_hat(q_lifted) - theta0; }

  Vec2 point_at(double s) const {
    s = reduce_mod1(s);
    std::size_t lo = 0, hi = arclen.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (arclen[mid] <= s ? lo : hi) = mid;
    }
    const double seg = arclen[hi] - arclen[lo];
    const double t = seg > 0.0 ? (s - arclen[lo]) / seg : 0.0;
    const Vec2 d = torus_delta(polyline[lo], polyline[(lo + 1) % polyline.size()]);
    return polyline[lo] + d * t;
  }

  // arclength parameter of the nearest polyline point
  double param(const Vec2& q) const {
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    const std::size_t n = polyline.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = polyline[i];
      const Vec2 d = torus_delta(a, polyline[(i + 1) % n]);
      const Vec2 r = torus_delta(a, q);
      const double len2 = d.norm2();
      double t = len2 > 0.0 ? std::clamp(r.dot(d) / len2, 0.0, 1.0) : 0.0;
      const double dist2 = (r - d * t).norm2();
      if (dist2 < best) {
        best = dist2;
        const double s_next = (i + 1 < n) ? arclen[i + 1] : 1.0;
        best_s = arclen[i] + t * (s_next - arclen[i]);
      }
    }
    return reduce_mod1(best_s);
  }

  double distance_to(const Vec2& q) const {
    const Vec2 on = point_at(param(q));
    return torus_distance(on, q);
  }
};

// Coordinate circle {q[axis] = theta}, the stock section of the flat tests.
inline SectionCurve axis_section(int axis, double theta, int n_vertices = 64) {
  SectionCurve s;
  s.theta0 = theta;
  if (axis == 0) {
    s.theta_hat = [](const Vec2& q) { return q.x; };
    s.degree = {1.0, 0.0};
    s.homology = {0.0, 1.0};
  } else {
    s.theta_hat = [](const Vec2& q) { return q.y; };
    s.degree = {0.0, 1.0};
    s.homology = {-1.0, 0.0};
  }
  s.sigma = s.homology;
  s.polyline.reserve(n_vertices);
  s.arclen.reserve(n_vertices);
  for (int i = 0; i < n_vertices; ++i) {
    const double t = static_cast<double>(i) / n_vertices;
    s.polyline.push_back(axis == 0 ? Vec2{reduce_mod1(theta), t} : Vec2{1.0 - t, reduce_mod1(theta)});
    s.arclen.push_back(t);
  }
  s.perimeter = 1.0;
  return s;
}

struct ReturnMapSample {
  PhaseState entry;
  PhaseState exit;
  double return_time = 0.0;
  double entry_param = 0.0;
  double exit_param = 0.0;
  double normal_speed = 0.0;  // |d xi/dt| / |grad theta_hat| at the crossing
};

struct ReturnOptions {
  double t_max = 0.0;  // <= 0: use 10 * perimeter / min shell speed
  double dt = 1e-3;
  double t_min = defaults::kSectionTMin;
  bool check_on_section = true;
};

namespace detail {

inline Vec2 grad_theta_fd(const SectionCurve& sec, const Vec2& q) {
  const double h = 1e-6;
  return {(sec.theta_hat({q.x + h, q.y}) - sec.theta_hat({q.x - h, q.y})) / (2 * h),
          (sec.theta_hat({q.x, q.y + h}) - sec.theta_hat({q.x, q.y - h})) / (2 * h)};
}

inline double min_shell_speed(const TonelliModel& m, const PhaseState& s, int probes = 32) {
  const double e = m.hamiltonian(s.q.vec(), s.p);
  double vmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < probes; ++i) {
    const double a = two_pi() * i / probes;
    const Vec2 q{reduce_mod1(0.37 * i), reduce_mod1(0.61 * i)};
    try {
      const PhaseState on = restrict_to_energy(m, {TorusPoint(q), Vec2{std::cos(a), std::sin(a)}}, e);
      vmin = std::min(vmin, m.grad_p(on.q.vec(), on.p).norm());
    } catch (const DomainError&) {
    }
  }
  return std::isfinite(vmin) && vmin > 0.0 ? vmin : 1.0;
}

}  // namespace detail

// Successive positive-coorientation crossings of the section. Returns up to
// `count` samples; throws NoReturnError if the first one is missing, and
// truncates (with ok=false inside the result) only on later ones.
struct SectionOrbit {
  std::vector<PhaseState> states;  // crossing states, on the shell
  std::vector<double> times;       // absolute crossing times
  std::vector<double> params;      // section parameters
  std::vector<Vec2> deltas;        // unwrapped q-displacement since the previous crossing
  bool complete = true;
};

inline SectionOrbit section_returns(const TonelliModel& m, const SectionCurve& sec,
                                    const PhaseState& start, int count,
                                    ReturnOptions opt = {}) {
  if (opt.check_on_section && sec.distance_to(start.q.vec()) > std::max(sec.section_tol, 1e-3)) {
    throw DomainError("section_returns: state does not project onto the section");
  }
  double t_max = opt.t_max;
  if (t_max <= 0.0) t_max = 10.0 * std::max(sec.perimeter, 1.0) / detail::min_shell_speed(m, start);

  const double e = m.hamiltonian(start.q.vec(), start.p);
  Vec2 q = start.q.vec(), p = start.p;
  double t = 0.0;
  double w_prev = sec.xi(q);
  Vec2 q_last_cross = q;  // unwrapped
  SectionOrbit orbit;

  const long max_steps = static_cast<long>(std::ceil(t_max * count / opt.dt)) + 4;
  for (long k = 0; k < max_steps && static_cast<int>(orbit.states.size()) < count; ++k) {
    const Vec2 q0 = q;
    const Vec2 p0 = p;
    flow_step(m, q, p, opt.dt, e);
    t += opt.dt;
    const double w = sec.xi(q);
    if (w > w_prev) {
      // positive crossings: integers in (w_prev, w]
      for (double n = std::floor(w_prev) + 1.0; n <= w + 1e-14; n += 1.0) {
        // secant refinement inside [0, dt] from the step start
        double ta = 0.0, tb = opt.dt;
        double fa = w_prev - n, fb = w - n;
        double tc = tb;
        Vec2 qc = q, pc = p;
        for (int it = 0; it < 80 && tb - ta > defaults::kCrossingTimeTol; ++it) {
          tc = (std::abs(fb - fa) > 1e-300) ? ta - fa * (tb - ta) / (fb - fa) : 0.5 * (ta + tb);
          if (!(tc > ta && tc < tb)) tc = 0.5 * (ta + tb);
          qc = q0;
          pc = p0;
          flow_step(m, qc, pc, tc, e);
          const double fc = sec.xi(qc) - n;
          if (fc < 0.0) {
            ta = tc;
            fa = fc;
          } else {
            tb = tc;
            fb = fc;
          }
        }
        const double t_cross = t - opt.dt + tc;
        if (t_cross <= opt.t_min) continue;
        const Vec2 grad = detail::grad_theta_fd(sec, qc);
        const double dxidt = grad.dot(m.grad_p(qc, pc));
        const double normal_speed = std::abs(dxidt) / std::max(grad.norm(), 1e-12);
        if (normal_speed < defaults::kTransversalityFloor) {
          throw TransversalityError("section_returns: tangential crossing");
        }
        detail::project_energy(m, qc, pc, e);
        orbit.states.push_back({TorusPoint(qc), pc});
        orbit.times.push_back(t_cross);
        orbit.params.push_back(sec.param(qc));
        orbit.deltas.push_back(qc - q_last_cross);
        q_last_cross = qc;
        if (static_cast<int>(orbit.states.size()) == count) break;
      }
    }
    w_prev = w;
    if (t > t_max * count) break;
  }
  if (orbit.states.empty()) {
    throw NoReturnError("section_returns: no positive crossing before T_max");
  }
  orbit.complete = static_cast<int>(orbit.states.size()) == count;
  return orbit;
}

// First positive-coorientation crossing after t_min.
inline ReturnMapSample poincare_return(const TonelliModel& m, const SectionCurve& sec,
                                       const PhaseState& start, ReturnOptions opt = {}) {
  const SectionOrbit orbit = section_returns(m, sec, start, 1, opt);
  ReturnMapSample out;
  out.entry = start;
  out.exit = orbit.states[0];
  out.return_time = orbit.times[0];
  out.entry_param = sec.param(start.q.vec());
  out.exit_param = orbit.params[0];
  const Vec2 grad = detail::grad_theta_fd(sec, orbit.states[0].q.vec());
  out.normal_speed = std::abs(grad.dot(m.grad_p(orbit.states[0].q.vec(), orbit.states[0].p))) /
                     std::max(grad.norm(), 1e-12);
  return out;
}

}  // namespace hpol

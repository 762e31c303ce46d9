#pragma once

#include <cmath>

#include "hpol/geom.hpp"

namespace hpol {

inline double reduce_mod1(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r -= 1.0;  // guards x = -1e-17 style rounding
  return r;
}

// Point of T^2 = R^2/Z^2, canonical representative in [0,1)^2.
struct TorusPoint {
  double q1 = 0.0;
  double q2 = 0.0;

  TorusPoint() = default;
  TorusPoint(double a, double b) : q1(reduce_mod1(a)), q2(reduce_mod1(b)) {}
  explicit TorusPoint(const Vec2& v) : TorusPoint(v.x, v.y) {}

  Vec2 vec() const { return {q1, q2}; }
};

inline TorusPoint reduce(const Vec2& v) { return TorusPoint(v); }

// Distance on the torus: minimum over the 9 nearest integer translates,
// exact for representatives in the unit square.
inline double torus_distance(const TorusPoint& a, const TorusPoint& b) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      const double dx = a.q1 - b.q1 + i;
      const double dy = a.q2 - b.q2 + j;
      best = std::min(best, dx * dx + dy * dy);
    }
  }
  return std::sqrt(best);
}

inline double torus_distance(const Vec2& a, const Vec2& b) {
  return torus_distance(TorusPoint(a), TorusPoint(b));
}

// Coordinate-wise wrapped difference in (-1/2, 1/2], the lift of b-a closest to 0.
inline Vec2 torus_delta(const Vec2& a, const Vec2& b) {
  auto wrap = [](double d) {
    d -= std::round(d);
    return d;
  };
  return {wrap(b.x - a.x), wrap(b.y - a.y)};
}

// (q,p) in T*T^2
struct PhaseState {
  TorusPoint q;
  Vec2 p;

  PhaseState() = default;
  PhaseState(const TorusPoint& q_, const Vec2& p_) : q(q_), p(p_) {}

  bool finite() const { return std::isfinite(q.q1) && std::isfinite(q.q2) && p.finite(); }
};

// (q,v) in TT^2
struct TangentState {
  TorusPoint q;
  Vec2 v;

  TangentState() = default;
  TangentState(const TorusPoint& q_, const Vec2& v_) : q(q_), v(v_) {}
};

// max(base distance, fiber distance); dominates d(q,q') as the separation
// arguments require.
inline double phase_distance(const PhaseState& a, const PhaseState& b) {
  return std::max(torus_distance(a.q, b.q), (a.p - b.p).norm());
}

}  // namespace hpol

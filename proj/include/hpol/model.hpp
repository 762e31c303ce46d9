#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "hpol/errors.hpp"
#include "hpol/geom.hpp"
#include "hpol/torus.hpp"

namespace hpol {

enum class Family { flat, revolution, pinched, custom };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::flat: return "flat";
    case Family::revolution: return "revolution";
    case Family::pinched: return "pinched";
    case Family::custom: return "custom";
  }
  return "?";
}

// Tonelli Hamiltonian on T^2 with exact derivatives.
//
// Built-in families are metric Hamiltonians H = <G(q)^{-1} p, p>/2:
//   flat        G(q) = G0 (SPD, constant)
//   revolution  G(q) = diag(r(q2)^2, 1),  r = a + b cos(2 pi q2), a > b >= 0
//   pinched     G(q) = f(q2) Id,          f = 1 + A (1 - cos 2 pi q2), A >= 0
// For A > 0 the unique shortest closed geodesic in class (1,0) is {q2 = 0}.
// Custom models supply H and derivatives via callbacks; the velocity-to-
// momentum map is then inverted by damped Newton.
class TonelliModel {
 public:
  using ScalarFn = std::function<double(const Vec2&, const Vec2&)>;
  using VecFn = std::function<Vec2(const Vec2&, const Vec2&)>;
  using MatFn = std::function<Mat2(const Vec2&, const Vec2&)>;

  static TonelliModel flat(const Mat2& g0) {
    if (!g0.positive_definite()) throw DomainError("flat model: G0 must be SPD");
    TonelliModel m;
    m.family_ = Family::flat;
    m.g0_ = g0;
    m.g0_inv_ = g0.inverse();
    return m;
  }

  static TonelliModel revolution(double a, double b) {
    if (!(a > b && b >= 0.0)) throw DomainError("revolution model: need a > b >= 0");
    TonelliModel m;
    m.family_ = Family::revolution;
    m.a_ = a;
    m.b_ = b;
    return m;
  }

  static TonelliModel pinched(double amplitude) {
    if (amplitude < 0.0) throw DomainError("pinched model: need A >= 0");
    TonelliModel m;
    m.family_ = Family::pinched;
    m.amp_ = amplitude;
    return m;
  }

  static TonelliModel custom(ScalarFn h, VecFn dq, VecFn dp, MatFn dpp) {
    TonelliModel m;
    m.family_ = Family::custom;
    m.h_fn_ = std::move(h);
    m.dq_fn_ = std::move(dq);
    m.dp_fn_ = std::move(dp);
    m.dpp_fn_ = std::move(dpp);
    return m;
  }

  Family family() const { return family_; }
  bool is_metric() const { return family_ != Family::custom; }
  const Mat2& flat_g0() const { return g0_; }
  double revolution_a() const { return a_; }
  double revolution_b() const { return b_; }
  double pinch_amplitude() const { return amp_; }

  // Metric tensor G(q), metric families only.
  Mat2 metric(const Vec2& q) const {
    switch (family_) {
      case Family::flat:
        return g0_;
      case Family::revolution: {
        const double r = a_ + b_ * std::cos(two_pi() * q.y);
        return Mat2::diag(r * r, 1.0);
      }
      case Family::pinched: {
        const double f = conformal(q.y);
        return Mat2::diag(f, f);
      }
      case Family::custom:
        throw DomainError("metric(): custom model has no metric tensor");
    }
    return Mat2::identity();
  }

  double hamiltonian(const Vec2& q, const Vec2& p) const {
    if (!std::isfinite(q.x) || !std::isfinite(q.y) || !p.finite())
      throw DomainError("hamiltonian: non-finite input");
    switch (family_) {
      case Family::flat:
        return 0.5 * g0_inv_.quad(p);
      case Family::revolution: {
        const double r = a_ + b_ * std::cos(two_pi() * q.y);
        return 0.5 * (p.x * p.x / (r * r) + p.y * p.y);
      }
      case Family::pinched:
        return 0.5 * p.norm2() / conformal(q.y);
      case Family::custom:
        return h_fn_(q, p);
    }
    return 0.0;
  }

  double hamiltonian(const PhaseState& s) const { return hamiltonian(s.q.vec(), s.p); }

  Vec2 grad_q(const Vec2& q, const Vec2& p) const {
    switch (family_) {
      case Family::flat:
        return {0.0, 0.0};
      case Family::revolution: {
        const double r = a_ + b_ * std::cos(two_pi() * q.y);
        const double dr = -two_pi() * b_ * std::sin(two_pi() * q.y);
        return {0.0, -p.x * p.x * dr / (r * r * r)};
      }
      case Family::pinched: {
        const double f = conformal(q.y);
        const double df = amp_ * two_pi() * std::sin(two_pi() * q.y);
        return {0.0, -0.5 * p.norm2() * df / (f * f)};
      }
      case Family::custom:
        return dq_fn_(q, p);
    }
    return {0.0, 0.0};
  }

  Vec2 grad_p(const Vec2& q, const Vec2& p) const {
    switch (family_) {
      case Family::flat:
        return g0_inv_.apply(p);
      case Family::revolution: {
        const double r = a_ + b_ * std::cos(two_pi() * q.y);
        return {p.x / (r * r), p.y};
      }
      case Family::pinched:
        return p / conformal(q.y);
      case Family::custom:
        return dp_fn_(q, p);
    }
    return {0.0, 0.0};
  }

  Mat2 hess_pp(const Vec2& q, const Vec2& p) const {
    switch (family_) {
      case Family::flat:
        return g0_inv_;
      case Family::revolution: {
        const double r = a_ + b_ * std::cos(two_pi() * q.y);
        return Mat2::diag(1.0 / (r * r), 1.0);
      }
      case Family::pinched: {
        const double f = conformal(q.y);
        return Mat2::diag(1.0 / f, 1.0 / f);
      }
      case Family::custom:
        return dpp_fn_(q, p);
    }
    return Mat2::identity();
  }

  double lagrangian(const Vec2& q, const Vec2& v) const {
    if (is_metric()) return 0.5 * metric(q).quad(v);
    const Vec2 p = to_momentum_newton(q, v);
    return p.dot(v) - hamiltonian(q, p);
  }

  // Legendre map T*T -> TT: v = dH/dp.
  TangentState legendre_to_velocity(const PhaseState& s) const {
    if (!s.finite()) throw DomainError("legendre_to_velocity: non-finite state");
    return {s.q, grad_p(s.q.vec(), s.p)};
  }

  // Legendre map TT -> T*T: p = dL/dv, inverse of the above.
  PhaseState legendre_to_momentum(const TangentState& t) const {
    if (!t.v.finite()) throw DomainError("legendre_to_momentum: non-finite state");
    if (is_metric()) return {t.q, metric(t.q.vec()).apply(t.v)};
    return {t.q, to_momentum_newton(t.q.vec(), t.v)};
  }

 private:
  double conformal(double q2) const { return 1.0 + amp_ * (1.0 - std::cos(two_pi() * q2)); }

  // Solve dH/dp(q,p) = v by damped Newton; Hess_pp is SPD so the step
  // direction is always defined.
  Vec2 to_momentum_newton(const Vec2& q, const Vec2& v) const {
    Vec2 p{0.0, 0.0};
    for (int it = 0; it < 100; ++it) {
      const Vec2 res = grad_p(q, p) - v;
      if (res.norm() < 1e-12) return p;
      const Vec2 step = hess_pp(q, p).inverse().apply(res);
      double damp = 1.0;
      while (damp > 1e-8 && (grad_p(q, p - step * damp) - v).norm() >= res.norm()) damp *= 0.5;
      p -= step * damp;
    }
    throw NumericError("legendre_to_momentum: Newton did not converge in 100 steps");
  }

  Family family_ = Family::flat;
  Mat2 g0_ = Mat2::identity();
  Mat2 g0_inv_ = Mat2::identity();
  double a_ = 2.0, b_ = 1.0;
  double amp_ = 0.0;
  ScalarFn h_fn_;
  VecFn dq_fn_, dp_fn_;
  MatFn dpp_fn_;
};

// Hamilton's equations dq = dH/dp, dp = -dH/dq.
struct PhaseVelocity {
  Vec2 dq;
  Vec2 dp;
};

inline PhaseVelocity hamiltonian_vector_field(const TonelliModel& m, const PhaseState& s) {
  if (!s.finite()) throw DomainError("hamiltonian_vector_field: non-finite state");
  const Vec2 q = s.q.vec();
  return {m.grad_p(q, s.p), -m.grad_q(q, s.p)};
}

}  // namespace hpol

#pragma once

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <optional>

#include "hpol/defaults.hpp"
#include "hpol/errors.hpp"
#include "hpol/geom.hpp"

namespace hpol {

namespace detail {
inline bool near_integer(double x, double tol = 1e-9) {
  return std::abs(x - std::round(x)) <= tol;
}
}  // namespace detail

// Class in H_1(T^2,R) ~ R^2. Integer classes carry the lattice structure.
struct HomologyClass {
  double h1 = 0.0;
  double h2 = 0.0;

  HomologyClass() = default;
  HomologyClass(double a, double b) : h1(a), h2(b) {}
  explicit HomologyClass(const Vec2& v) : h1(v.x), h2(v.y) {}

  Vec2 vec() const { return {h1, h2}; }
  bool is_integer(double tol = 1e-9) const {
    return detail::near_integer(h1, tol) && detail::near_integer(h2, tol);
  }
  long i1() const { return static_cast<long>(std::llround(h1)); }
  long i2() const { return static_cast<long>(std::llround(h2)); }

  HomologyClass operator+(const HomologyClass& o) const { return {h1 + o.h1, h2 + o.h2}; }
  HomologyClass operator*(double s) const { return {s * h1, s * h2}; }
};

// Class in H^1(T^2,R) ~ R^2; pairs with homology by the dot product.
struct CohomologyClass {
  double c1 = 0.0;
  double c2 = 0.0;

  CohomologyClass() = default;
  CohomologyClass(double a, double b) : c1(a), c2(b) {}
  explicit CohomologyClass(const Vec2& v) : c1(v.x), c2(v.y) {}

  Vec2 vec() const { return {c1, c2}; }
  double pair(const HomologyClass& h) const { return c1 * h.h1 + c2 * h.h2; }
};

// Antisymmetric intersection pairing <h,h'> = h1 h'2 - h2 h'1 on integer classes.
inline long intersection_number(const HomologyClass& a, const HomologyClass& b) {
  if (!a.is_integer() || !b.is_integer()) {
    throw DomainError("intersection_number: inputs must be integer classes");
  }
  return a.i1() * b.i2() - a.i2() * b.i1();
}

inline long content(const HomologyClass& g) {
  return std::gcd(std::abs(g.i1()), std::abs(g.i2()));
}

inline HomologyClass primitive(const HomologyClass& g) {
  const long d = content(g);
  if (d == 0) throw DomainError("primitive: zero class");
  return {static_cast<double>(g.i1() / d), static_cast<double>(g.i2() / d)};
}

// tau = sigma . [rho]: intersections of the minimizing class with the section.
inline long section_period_tau(const HomologyClass& rho, const HomologyClass& sigma) {
  return intersection_number(rho, sigma);
}

// Minimal period under psi^tau of a section orbit whose homology class is
// positively proportional to m[rho]+[Sigma]. The orbit's primitive class h
// crosses Sigma <h,[Sigma]> times, which is its psi-period P; under psi^tau
// the period drops to P/gcd(P,tau).
inline long minimal_period_psi_tau(const HomologyClass& rho, const HomologyClass& sigma,
                                   long m) {
  const long tau = section_period_tau(rho, sigma);
  if (tau <= 0) throw DomainError("minimal_period_psi_tau: need sigma.[rho] > 0");
  HomologyClass g{rho.h1 * static_cast<double>(m) + sigma.h1,
                  rho.h2 * static_cast<double>(m) + sigma.h2};
  const long P = std::abs(intersection_number(primitive(g), sigma));
  return P / std::gcd(P, tau);
}

struct RationalityVerdict {
  bool rational = false;
  HomologyClass cls;    // best primitive class under the cap, when rational
  double angle_error = 0.0;
  int cap = defaults::kRationalityCap;
};

// Rational-direction test with denominator cap Q and angular tolerance:
// scan all primitive integer classes with coordinates up to Q and keep the
// one of smallest approximation quality (angle error scaled by the class
// size, so that high-denominator near-misses such as Fibonacci ratios do not
// pass as rational). The verdict always reports the cap used.
inline RationalityVerdict classify_direction(const Vec2& dir,
                                             int cap = defaults::kRationalityCap,
                                             double angular_tol = defaults::kAngularTol) {
  RationalityVerdict out;
  out.cap = cap;
  const double n = dir.norm();
  if (n == 0.0) throw DomainError("classify_direction: zero direction");
  const Vec2 u = dir / n;
  double best = std::numeric_limits<double>::infinity();
  for (int p = -cap; p <= cap; ++p) {
    for (int q = -cap; q <= cap; ++q) {
      if (p == 0 && q == 0) continue;
      if (std::gcd(std::abs(p), std::abs(q)) != 1) continue;
      const Vec2 w{static_cast<double>(p), static_cast<double>(q)};
      if (w.dot(u) <= 0.0) continue;  // same half-line only
      const double quality = std::abs(u.x * w.y - u.y * w.x);  // sin(angle) * |w|
      if (quality < best) {
        best = quality;
        out.cls = HomologyClass(w);
      }
    }
  }
  out.angle_error = best;
  out.rational = best <= angular_tol;
  return out;
}

}  // namespace hpol

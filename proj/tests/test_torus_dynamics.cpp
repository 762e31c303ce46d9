#include <doctest.h>

#include <cmath>

#include "hpol/geom.hpp"
#include "hpol/homology.hpp"
#include "hpol/model.hpp"
#include "hpol/torus.hpp"

using namespace hpol;

namespace {

// central-difference oracle for dH/dq and dH/dp
PhaseVelocity fd_vector_field(const TonelliModel& m, const Vec2& q, const Vec2& p,
                              double h = 1e-5) {
  auto H = [&](const Vec2& qq, const Vec2& pp) { return m.hamiltonian(qq, pp); };
  Vec2 dq{(H(q, {p.x + h, p.y}) - H(q, {p.x - h, p.y})) / (2 * h),
          (H(q, {p.x, p.y + h}) - H(q, {p.x, p.y - h})) / (2 * h)};
  Vec2 dp{-(H({q.x + h, q.y}, p) - H({q.x - h, q.y}, p)) / (2 * h),
          -(H({q.x, q.y + h}, p) - H({q.x, q.y - h}, p)) / (2 * h)};
  return {dq, dp};
}

// psi^tau-period oracle: walk the cyclic group of section crossings
long period_by_enumeration(const HomologyClass& rho, const HomologyClass& sigma, long m) {
  const long tau = intersection_number(rho, sigma);
  HomologyClass g{rho.h1 * m + sigma.h1, rho.h2 * m + sigma.h2};
  const long P = std::labs(intersection_number(primitive(g), sigma));
  long pos = 0;
  for (long k = 1; k <= P; ++k) {
    pos = (pos + tau) % P;
    if (pos == 0) return k;
  }
  return P;
}

}  // namespace

TEST_CASE("torus points reduce and measure distance") {
  TorusPoint a(0.3, 0.7);
  TorusPoint b(0.3 + 5.0, 0.7 - 3.0);
  CHECK(torus_distance(a, b) == doctest::Approx(0.0).epsilon(1e-14));

  // wraparound shortcut
  CHECK(torus_distance(TorusPoint(0.05, 0.5), TorusPoint(0.95, 0.5)) ==
        doctest::Approx(0.1).epsilon(1e-12));

  // symmetry + triangle inequality on sampled triples
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    TorusPoint x(rng.uniform(), rng.uniform());
    TorusPoint y(rng.uniform(), rng.uniform());
    TorusPoint z(rng.uniform(), rng.uniform());
    CHECK(torus_distance(x, y) == doctest::Approx(torus_distance(y, x)));
    CHECK(torus_distance(x, z) <= torus_distance(x, y) + torus_distance(y, z) + 1e-12);
  }
}

TEST_CASE("hamiltonian closed forms") {
  const auto flat = TonelliModel::flat(Mat2::identity());
  CHECK(flat.hamiltonian({0.3, 0.7}, {1.0, 0.0}) == doctest::Approx(0.5).epsilon(1e-15));

  // pinched with A=0 reduces to the flat case
  const auto pinched0 = TonelliModel::pinched(0.0);
  CHECK(pinched0.hamiltonian({0.11, 0.93}, {0.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-15));

  // revolution a=2,b=1 at q=(0,0): r=3, H = (p1^2/9 + p2^2)/2
  const auto rev = TonelliModel::revolution(2.0, 1.0);
  CHECK(rev.hamiltonian({0.0, 0.0}, {3.0, 0.0}) == doctest::Approx(0.5).epsilon(1e-14));

  CHECK_THROWS_AS(flat.hamiltonian({0.0, 0.0},
                                   {std::numeric_limits<double>::quiet_NaN(), 0.0}),
                  DomainError);
}

TEST_CASE("vector field matches finite differences") {
  // Note: the standard equations dq = dH/dp, dp = -dH/dq; the paper's
  // display order is swapped, see the decisions ledger.
  const auto flat = TonelliModel::flat(Mat2::identity());
  const auto vf = hamiltonian_vector_field(flat, {{0.2, 0.9}, {1.0, 0.0}});
  CHECK(vf.dq.x == doctest::Approx(1.0));
  CHECK(vf.dq.y == doctest::Approx(0.0));
  CHECK(vf.dp.norm() == doctest::Approx(0.0));

  Rng rng(3);
  const auto rev = TonelliModel::revolution(2.0, 1.0);
  const auto pinched = TonelliModel::pinched(0.5);
  const auto pinched0 = TonelliModel::pinched(0.0);
  for (int i = 0; i < 100; ++i) {
    Vec2 q{rng.uniform(), rng.uniform()};
    Vec2 p{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    for (const auto* m : {&rev, &pinched}) {
      const auto a = hamiltonian_vector_field(*m, {TorusPoint(q), p});
      const auto o = fd_vector_field(*m, q, p);
      CHECK((a.dq - o.dq).norm() < 1e-6 * (1.0 + o.dq.norm()));
      CHECK((a.dp - o.dp).norm() < 1e-6 * (1.0 + o.dp.norm()));
    }
    // identity case: A=0 equals flat output
    const auto a0 = hamiltonian_vector_field(pinched0, {TorusPoint(q), p});
    const auto af = hamiltonian_vector_field(flat, {TorusPoint(q), p});
    CHECK((a0.dq - af.dq).norm() == doctest::Approx(0.0));
    CHECK((a0.dp - af.dp).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("tonelli convexity and superlinearity at sampled states") {
  Rng rng(11);
  const auto models = {TonelliModel::flat(Mat2{2.0, 0.3, 1.0}), TonelliModel::revolution(2.0, 1.0),
                       TonelliModel::pinched(0.5)};
  for (const auto& m : models) {
    for (int i = 0; i < 1000; ++i) {
      Vec2 q{rng.uniform(), rng.uniform()};
      Vec2 p{rng.uniform(-10, 10), rng.uniform(-10, 10)};
      CHECK(m.hess_pp(q, p).min_eigenvalue() > 0.0);
    }
    // H(q, lambda p)/lambda grows monotonically along doubling lambda
    for (int i = 0; i < 20; ++i) {
      Vec2 q{rng.uniform(), rng.uniform()};
      const double a = rng.uniform(0.0, two_pi());
      Vec2 p{std::cos(a), std::sin(a)};
      double prev = 0.0;
      for (const double lam : {1.0, 2.0, 4.0, 8.0}) {
        const double val = m.hamiltonian(q, p * lam) / lam;
        CHECK(val > prev);
        prev = val;
      }
    }
  }
}

TEST_CASE("legendre maps invert each other") {
  const auto flat = TonelliModel::flat(Mat2::identity());
  const auto t = flat.legendre_to_velocity({{0.1, 0.2}, {1.0, 2.0}});
  CHECK(t.v.x == doctest::Approx(1.0));
  CHECK(t.v.y == doctest::Approx(2.0));

  Rng rng(5);
  const auto rev = TonelliModel::revolution(2.0, 1.0);
  const auto pinched = TonelliModel::pinched(0.5);
  for (int i = 0; i < 100; ++i) {
    TorusPoint q(rng.uniform(), rng.uniform());
    Vec2 p{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    for (const auto* m : {&rev, &pinched}) {
      // closed form v = G^{-1} p both ways
      const auto ts = m->legendre_to_velocity({q, p});
      const Vec2 v_ref = m->metric(q.vec()).inverse().apply(p);
      CHECK((ts.v - v_ref).norm() < 1e-12);
      const auto back = m->legendre_to_momentum(ts);
      CHECK((back.p - p).norm() < 1e-10);
    }
  }

  // custom model goes through the Newton inversion
  const auto custom = TonelliModel::custom(
      [](const Vec2& q, const Vec2& p) {
        return 0.5 * p.norm2() + 0.1 * std::cos(two_pi() * q.x) * p.x;
      },
      [](const Vec2& q, const Vec2& p) {
        return Vec2{-0.1 * two_pi() * std::sin(two_pi() * q.x) * p.x, 0.0};
      },
      [](const Vec2& q, const Vec2& p) {
        return Vec2{p.x + 0.1 * std::cos(two_pi() * q.x), p.y};
      },
      [](const Vec2&, const Vec2&) { return Mat2::identity(); });
  for (int i = 0; i < 50; ++i) {
    TorusPoint q(rng.uniform(), rng.uniform());
    Vec2 p{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const auto ts = custom.legendre_to_velocity({q, p});
    const auto back = custom.legendre_to_momentum(ts);
    CHECK((back.p - p).norm() < 1e-10);
  }
}

TEST_CASE("metric families agree with the generic legendre transform") {
  Rng rng(13);
  for (const auto& m : {TonelliModel::revolution(2.0, 1.0), TonelliModel::pinched(0.5)}) {
    for (int i = 0; i < 50; ++i) {
      Vec2 q{rng.uniform(), rng.uniform()};
      Vec2 v{rng.uniform(-2, 2), rng.uniform(-2, 2)};
      // L(q,v) = sup_p (p.v - H) attained at p = G v
      const Vec2 p = m.metric(q).apply(v);
      CHECK(m.lagrangian(q, v) == doctest::Approx(p.dot(v) - m.hamiltonian(q, p)).epsilon(1e-10));
    }
  }
}

TEST_CASE("intersection pairing and minimal periods") {
  const HomologyClass e1{1.0, 0.0}, e2{0.0, 1.0};
  CHECK(intersection_number(e1, e2) == 1);
  CHECK(intersection_number(e2, e1) == -1);

  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    HomologyClass h{static_cast<double>(rng.uniform_int(9) - 4),
                    static_cast<double>(rng.uniform_int(9) - 4)};
    HomologyClass g{static_cast<double>(rng.uniform_int(9) - 4),
                    static_cast<double>(rng.uniform_int(9) - 4)};
    CHECK(intersection_number(h, h) == 0);
    CHECK(intersection_number(h, g) == -intersection_number(g, h));
  }
  CHECK_THROWS_AS(intersection_number({0.5, 0.0}, e2), DomainError);

  // sigma=(0,1), [rho]=(1,0), [Sigma]=(0,1): tau = 1, minimal period m
  const HomologyClass rho{1.0, 0.0}, sig{0.0, 1.0};
  CHECK(section_period_tau(rho, sig) == 1);
  for (long m = 1; m <= 10; ++m) {
    CHECK(minimal_period_psi_tau(rho, sig, m) == m);
    CHECK(minimal_period_psi_tau(rho, sig, m) == period_by_enumeration(rho, sig, m));
  }

  // classes whose sum is divisible in H_1 but not in the generated lattice
  const HomologyClass rho2{1.0, 0.0}, sig2{1.0, 2.0};
  CHECK(section_period_tau(rho2, sig2) == 2);
  for (long m = 1; m <= 12; ++m) {
    CHECK(minimal_period_psi_tau(rho2, sig2, m) == m);
    CHECK(minimal_period_psi_tau(rho2, sig2, m) == period_by_enumeration(rho2, sig2, m));
  }
}

TEST_CASE("direction rationality with the denominator cap") {
  auto v = classify_direction({2.0, 0.0});
  CHECK(v.rational);
  CHECK(v.cls.i1() == 1);
  CHECK(v.cls.i2() == 0);

  v = classify_direction({3.0, -2.0});
  CHECK(v.rational);
  CHECK(v.cls.i1() == 3);
  CHECK(v.cls.i2() == -2);

  // golden ratio direction is irrational at this cap
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  v = classify_direction({1.0, phi});
  CHECK_FALSE(v.rational);
  CHECK(v.cap == 32);
}

#include <doctest.h>

#include <cmath>

#include "hpol/alpha.hpp"
#include "hpol/grid.hpp"
#include "hpol/measure.hpp"
#include "hpol/semicontinuity.hpp"
#include "hpol/simplex.hpp"

using namespace hpol;

TEST_CASE("grid fields differentiate and interpolate periodically") {
  const int n = 32;
  GridField u(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      u.at(i, j) = std::sin(two_pi() * i / n) + 0.5 * std::cos(two_pi() * j / n);

  // centered differences approximate the analytic gradient
  const Vec2 d = u.du(5, 9);
  CHECK(d.x == doctest::Approx(two_pi() * std::cos(two_pi() * 5.0 / n)).epsilon(1e-2));
  CHECK(d.y == doctest::Approx(-0.5 * two_pi() * std::sin(two_pi() * 9.0 / n)).epsilon(1e-2));

  // discrete closedness around every plaquette
  CHECK(u.max_plaquette_circulation() < 1e-12);

  // periodic bilinear sampling matches nodes and wraps
  CHECK(u.sample({5.0 / n, 9.0 / n}) == doctest::Approx(u.at(5, 9)));
  CHECK(u.sample({5.0 / n + 3.0, 9.0 / n - 2.0}) == doctest::Approx(u.at(5, 9)));
}

TEST_CASE("alpha_upper closed forms on flat models") {
  // constant subsolution is optimal for q-independent H
  const auto flat = TonelliModel::flat(Mat2::identity());
  const auto r = alpha_upper(flat, {1.0, 0.0}, 32);
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-12));
  double umax = 0.0;
  for (const double v : r.u.values()) umax = std::max(umax, std::abs(v));
  CHECK(umax < 1e-12);

  // alpha(0) = 0 for metric models
  CHECK(alpha_upper(flat, {0.0, 0.0}, 32).value == doctest::Approx(0.0));

  // anisotropic closed form alpha(c) = <G0^{-1} c, c>/2
  const Mat2 g0{4.0, 0.0, 1.0};
  const auto aniso = TonelliModel::flat(g0);
  Rng rng(19);
  for (int i = 0; i < 20; ++i) {
    const Vec2 c{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const double expect = 0.5 * g0.inverse().quad(c);
    CHECK(alpha_upper(aniso, c, 32).value == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("alpha_upper residual is a discrete subsolution certificate") {
  const auto pinched = TonelliModel::pinched(0.5);
  const auto r = alpha_upper_auto(pinched, {0.8, 0.5}, 48, nullptr, false);
  // residual <= 0 everywhere and ~0 somewhere (the argmax)
  double res_max = -1e300;
  for (const double v : r.residual.values()) res_max = std::max(res_max, v);
  CHECK(res_max <= 0.0);
  CHECK(res_max > -1e-9);
  CHECK(r.u.max_plaquette_circulation() < 1e-10);
  CHECK_THROWS_AS(alpha_upper(pinched, {1.0, 0.0}, 8), DomainError);
}

TEST_CASE("alpha refinement is stable on the pinched family") {
  const auto pinched = TonelliModel::pinched(0.5);
  const Vec2 c{0.8, 0.5};
  const double v64 = alpha_upper_auto(pinched, c, 64, nullptr, false).value;
  const double v128 = alpha_upper_auto(pinched, c, 128, nullptr, false).value;
  CHECK(std::abs(v128 - v64) <= 1e-2 * std::abs(v128));
}

TEST_CASE("aubry estimates: full grid on flat, localized on pinched") {
  const auto flat = TonelliModel::flat(Mat2::identity());
  const auto rf = alpha_upper(flat, {0.7, 0.3}, 32);
  CHECK(aubry_estimate(flat, {0.7, 0.3}, rf, 1e-9).coverage == doctest::Approx(1.0));
  // degenerate tolerance returns the whole grid
  CHECK(aubry_estimate(flat, {0.7, 0.3}, rf, 1e300).coverage == doctest::Approx(1.0));

  // the unique (1,0)-minimizer of the pinched metric is {q2 = 0}
  const auto pinched = TonelliModel::pinched(0.5);
  const auto rp = alpha_upper_auto(pinched, {1.0, 0.0}, 48, nullptr, false);
  const auto aubry = aubry_estimate(pinched, {1.0, 0.0}, rp, 1e-6);
  CHECK(aubry.coverage < 0.2);
  CHECK(!aubry.base.empty());
  for (const auto& q : aubry.base) {
    CHECK(std::min(q.q2, 1.0 - q.q2) < 0.05);
  }
  // lifted points form a graph: one momentum per base point
  for (std::size_t i = 0; i < aubry.lifted.size(); ++i) {
    for (std::size_t j = i + 1; j < aubry.lifted.size(); ++j) {
      if (torus_distance(aubry.lifted[i].q, aubry.lifted[j].q) < 1e-12) {
        CHECK((aubry.lifted[i].p - aubry.lifted[j].p).norm() < 1e-12);
      }
    }
  }
}

TEST_CASE("occupation measures certify alpha from below") {
  const auto flat = TonelliModel::flat(Mat2::identity());
  AlphaLowerOptions opt;
  opt.shell_energy = 0.5;
  const auto r = alpha_lower(flat, {1.0, 0.0}, opt);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.measure.mass == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.measure.invariance_tv < 1e-6);
  // the optimal measure concentrates near p = c
  for (const auto& [cell, w] : r.measure.weights) {
    const double ang = r.measure.angle(cell);
    CHECK(std::abs(std::remainder(ang, two_pi())) < 0.05);
  }

  AlphaLowerOptions zero;
  zero.shell_energy = 0.0;
  const auto r0 = alpha_lower(flat, {0.0, 0.0}, zero);
  CHECK(std::abs(r0.value) < 1e-9);

  // rotation vectors: measure version vs trajectory version
  const Vec2 h = rotation_vector(flat, r.measure);
  CHECK((h - Vec2{1.0, 0.0}).norm() < 0.05);
  const auto traj = integrate(flat, {{0.0, 0.0}, {0.25, -0.75}}, 50.0, 1e-3, 0.1);
  CHECK((rotation_vector(traj) - Vec2{0.25, -0.75}).norm() < 1e-9);
}

TEST_CASE("duality bracket holds on flat and pinched instances") {
  const auto aniso = TonelliModel::flat(Mat2{2.0, 0.4, 1.0});
  Rng rng(23);
  for (int i = 0; i < 5; ++i) {
    const Vec2 c{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double upper = alpha_upper(aniso, c, 64).value;
    AlphaLowerOptions opt;
    opt.shell_energy = upper;
    const auto lower = alpha_lower(aniso, c, opt);
    CHECK(lower.value <= upper + defaults::kGapTol);
    CHECK(lower.value >= upper - defaults::kGapTol);
  }
  const auto pinched = TonelliModel::pinched(0.5);
  const double up = alpha_upper_auto(pinched, {1.0, 0.0}, 64, nullptr, false).value;
  AlphaLowerOptions opt;
  opt.shell_energy = up;
  const auto low = alpha_lower(pinched, {1.0, 0.0}, opt);
  CHECK(low.value <= up + 0.05 * std::abs(up));
  CHECK(low.value >= up - 0.05 * std::abs(up));
}

TEST_CASE("semicontinuity probe excess vanishes for constant and flat sequences") {
  const auto flat = TonelliModel::flat(Mat2::identity());
  const Vec2 c{0.6, 0.2};
  const auto rep = semicontinuity_probe(flat, {c, c, c}, c, 32, 1e-8);
  for (const double x : rep.excess) CHECK(x == 0.0);

  std::vector<Vec2> seq;
  for (int j = 0; j < 4; ++j) seq.push_back(c + Vec2{0.2, -0.1} * std::pow(0.5, j));
  const auto rep2 = semicontinuity_probe(flat, seq, c, 32, 1e-8);
  // flat Aubry sets project onto the full torus: excess identically zero
  for (const double x : rep2.excess) CHECK(x == 0.0);
}

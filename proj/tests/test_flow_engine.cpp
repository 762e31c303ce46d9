#include <doctest.h>

#include <cmath>

#include "hpol/distance.hpp"
#include "hpol/integrate.hpp"
#include "hpol/model.hpp"
#include "hpol/section.hpp"

using namespace hpol;

TEST_CASE("flat flow is a straight line and conserves energy exactly") {
  const auto flat = TonelliModel::flat(Mat2::identity());
  const auto traj = integrate(flat, {{0.0, 0.0}, {1.0, 0.0}}, 1.0, 1e-3);
  const auto& last = traj.samples.back();
  CHECK(torus_distance(last.q, TorusPoint(0.0, 0.0)) < 1e-9);  // wraps once
  CHECK((last.p - Vec2{1.0, 0.0}).norm() < 1e-12);
  CHECK(traj.max_rel_drift < 1e-14);
  CHECK(traj.winding.x == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("meridian momentum is conserved on the revolution torus") {
  // H is q1-independent, so p1 is a first integral; an orbit started with
  // p1 = 0 must stay a meridian.
  const auto rev = TonelliModel::revolution(2.0, 1.0);
  const auto traj = integrate(rev, {{0.25, 0.1}, {0.0, 1.0}}, 1000.0, 1e-3, 0.5);
  double max_p1 = 0.0;
  for (const auto& s : traj.samples) max_p1 = std::max(max_p1, std::abs(s.p.x));
  CHECK(max_p1 < 1e-8);
  CHECK(traj.max_rel_drift < 1e-8);
}

TEST_CASE("energy drift stays below tolerance after projection") {
  const auto pinched = TonelliModel::pinched(0.5);
  const auto start = restrict_to_energy(pinched, {{0.3, 0.4}, {1.0, 0.7}}, 0.5);
  const auto traj = integrate(pinched, start, 1000.0, 1e-3, 1.0);
  CHECK(traj.max_rel_drift < 1e-8);
}

TEST_CASE("forward-backward integration returns the start") {
  const auto rev = TonelliModel::revolution(2.0, 1.0);
  const PhaseState start = restrict_to_energy(rev, {{0.12, 0.34}, {2.0, 0.5}}, 0.5);
  const PhaseState back = integrate_back_and_forth(rev, start, 10.0, 1e-3);
  CHECK(torus_distance(back.q, start.q) < 1e-6);
  CHECK((back.p - start.p).norm() < 1e-6);
}

TEST_CASE("restrict_to_energy rescales onto the shell") {
  const auto flat = TonelliModel::flat(Mat2::identity());
  const auto s = restrict_to_energy(flat, {{0.4, 0.9}, {2.0, 0.0}}, 0.5);
  CHECK(s.p.x == doctest::Approx(1.0).epsilon(1e-12));

  // already on the shell: unchanged
  const auto s2 = restrict_to_energy(flat, s, 0.5);
  CHECK((s2.p - s.p).norm() == 0.0);

  // bisection oracle cross-check on the pinched family
  const auto pinched = TonelliModel::pinched(0.5);
  Rng rng(23);
  for (int i = 0; i < 50; ++i) {
    const Vec2 q{rng.uniform(), rng.uniform()};
    const Vec2 p{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    if (p.norm() < 0.1) continue;
    const auto on = restrict_to_energy(pinched, {TorusPoint(q), p}, 0.5);
    CHECK(std::abs(pinched.hamiltonian(on.q.vec(), on.p) - 0.5) < 1e-12);
    // oracle: plain bisection on the ray
    double lo = 0.0, hi = 64.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (pinched.hamiltonian(q, p * mid) < 0.5 ? lo : hi) = mid;
    }
    CHECK((on.p - p * (0.5 * (lo + hi))).norm() < 1e-8);
  }

  CHECK_THROWS_AS(restrict_to_energy(flat, {{0.0, 0.0}, {0.0, 0.0}}, 0.5), DomainError);
}

TEST_CASE("poincare return on the flat torus") {
  const auto flat = TonelliModel::flat(Mat2::identity());
  const auto sec = axis_section(0, 0.0);

  // unit-speed horizontal orbit returns to itself after time 1
  const auto r = poincare_return(flat, sec, {{0.0, 0.5}, {1.0, 0.0}});
  CHECK(r.return_time == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(torus_distance(r.exit.q, TorusPoint(0.0, 0.5)) < 1e-8);
  CHECK((r.exit.p - Vec2{1.0, 0.0}).norm() < 1e-9);

  // irrational slope: the return advances q2 by alpha mod 1
  const double alpha = std::sqrt(2.0) - 1.0;
  const auto r2 = poincare_return(flat, sec, {{0.0, 0.2}, {1.0, alpha}});
  CHECK(torus_distance(r2.exit.q, TorusPoint(0.0, 0.2 + alpha)) < 1e-8);

  // return-time continuity: perturbing the start moves the time a little
  const auto r3 = poincare_return(flat, sec, {{0.0, 0.2 + 1e-6}, {1.0, alpha}});
  CHECK(std::abs(r3.return_time - r2.return_time) < 1e-3);

  // orbit parallel to the section never comes back
  ReturnOptions ropt;
  ropt.t_max = 5.0;
  ropt.check_on_section = false;
  CHECK_THROWS_AS(poincare_return(flat, sec, {{0.5, 0.0}, {0.0, 1.0}}, ropt), NoReturnError);
}

TEST_CASE("dynamical distance on closed-form flat orbits") {
  const auto flat = TonelliModel::flat(Mat2::identity());

  // two equal trajectories
  const auto a = integrate(flat, {{0.1, 0.1}, {1.0, 0.0}}, 8.0, 1e-3, 0.01);
  CHECK(dynamical_distance(a, a, 8.0) == 0.0);

  // shear pair p=(1,0) vs p=(1,delta): base distance grows like T*delta
  // until the wraparound cap 1/2
  const double delta = 0.01;
  const auto b = integrate(flat, {{0.1, 0.1}, {1.0, delta}}, 60.0, 1e-3, 0.01);
  const auto a2 = integrate(flat, {{0.1, 0.1}, {1.0, 0.0}}, 60.0, 1e-3, 0.01);
  for (const double T : {5.0, 10.0, 20.0, 40.0}) {
    const double expect = std::max(delta, std::min(T * delta, 0.5));
    CHECK(dynamical_distance(a2, b, T) == doctest::Approx(expect).epsilon(0.02));
  }

  // monotone in the horizon
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const auto x = integrate(flat, {{rng.uniform(), rng.uniform()},
                                    {rng.uniform(-1, 1), rng.uniform(-1, 1)}},
                             16.0, 1e-2, 0.05);
    const auto y = integrate(flat, {{rng.uniform(), rng.uniform()},
                                    {rng.uniform(-1, 1), rng.uniform(-1, 1)}},
                             16.0, 1e-2, 0.05);
    CHECK(dynamical_distance(x, y, 16.0) >= dynamical_distance(x, y, 8.0));
    CHECK(dynamical_distance(x, y, 8.0) >= phase_distance(x.at(0), y.at(0)));
  }

  CHECK_THROWS_AS(dynamical_distance(a, b, 100.0), DomainError);
}

TEST_CASE("first-separation table matches direct dynamical distances") {
  const auto flat = TonelliModel::flat(Mat2::identity());
  Rng rng(41);
  std::vector<PhaseState> states;
  std::vector<Trajectory> trajs;
  for (int i = 0; i < 12; ++i) {
    PhaseState s{{rng.uniform(), rng.uniform()}, {rng.uniform(-1, 1), rng.uniform(-1, 1)}};
    states.push_back(s);
    trajs.push_back(integrate(flat, s, 16.0, 1e-2, 0.05));
  }
  const std::vector<double> ladder{0.2, 0.1};
  const auto table =
      first_separations(hamiltonian_stepper(flat), states, ladder, 16.0, 1e-2, 0.05);
  for (int e = 0; e < 2; ++e) {
    const double eps = table.eps_ladder[e];
    for (int i = 0; i < 12; ++i) {
      for (int j = i + 1; j < 12; ++j) {
        const double t = table.at(e, i, j);
        for (const double T : {1.0, 4.0, 16.0}) {
          const bool sep_table = t <= T;
          const bool sep_direct = dynamical_distance(trajs[i], trajs[j], T) >= eps;
          CHECK(sep_table == sep_direct);
        }
      }
    }
  }
}

#pragma once

#include <cmath>
#include <optional>
#include <tuple>
#include <vector>

#include "hpol/alpha.hpp"
#include "hpol/defaults.hpp"
#include "hpol/errors.hpp"
#include "hpol/homology.hpp"
#include "hpol/level_curve.hpp"
#include "hpol/measure.hpp"
#include "hpol/section.hpp"
#include "hpol/theta_section.hpp"

namespace hpol {

struct WitnessOptions {
  int m_lo = defaults::kWitnessMLo;
  int m_hi = defaults::kWitnessMHi;
  double energy = 0.5;
  Vec2 face_direction{1.0, 0.0};
  int n_grid = 48;
  int n_curve_samples = 96;
  double aubry_tol = 1e-4;
  double dt = 1e-3;
  double closure_tol = 5e-3;
  int n_orbit = 48;  // graph resolution for orbit closing; finer grids trade
                     // kink oscillation for resolution and usually lose
  // Seed-quality occupation measures: coarse grid with a generous invariance
  // slack localizes the Mather orbit in seconds; the orbit closing supplies
  // the real precision. Hyperbolic non-grid-aligned orbits leak under the
  // interpolated chain, so exact stationarity is unattainable here.
  AlphaLowerOptions lp = [] {
    AlphaLowerOptions o;
    o.nq = 12;
    o.mp = 12;
    o.slack = 0.02;
    o.max_outer = 12;
    o.max_columns = 1200;
    o.max_rows = 400;
    return o;
  }();
};

// One periodic Mather orbit on the section: the full psi-cycle in return
// order plus the index arithmetic needed for Psi-iterate distances.
struct WitnessOrbit {
  int k = 0;  // minimal psi^tau period (the lemma's m)
  Vec2 c_k;
  HomologyClass cls{0, 0};         // k [rho] + [Sigma]
  std::vector<PhaseState> cycle;   // P section points, consecutive returns
  std::vector<double> params;
  double closure_error = 0.0;
  int seed_index = -1;  // cycle index inside J
  double ray_angle = 0.0;
  bool ok = false;
  std::string note;
};

struct WitnessCheck {
  int m = 0;
  int union_size = 0;
  long horizon = 0;  // 4 m tau
  bool complete = false;  // every orbit k in [m, 2m-1] closed and visits J
  bool size_ok = false;
  bool separated = false;
  int pair_failures = 0;
  double min_pair_distance = 0.0;
};

struct WitnessReport {
  bool case3 = true;
  Vec2 c_plus, c_minus;
  HomologyClass rho_cls{1, 0};
  HomologyClass sigma{0, 1};
  long tau = 1;
  double eps0 = 0.0;
  double face_half_width = 0.0;
  double j_lo = 0.0, j_hi = 0.0;  // J as a section-parameter arc
  int m0 = 0;
  double min_transversality = 0.0;
  std::vector<WitnessOrbit> orbits;
  std::vector<WitnessCheck> checks;
  std::vector<std::tuple<int, int, int, double>> failed_pairs;  // (m, i, j, dist)
  double slope = 0.0;  // log union size vs log horizon across m
};

namespace detail {

inline double circle_dist(double a, double b) {
  const double d = std::abs(reduce_mod1(a) - reduce_mod1(b));
  return std::min(d, 1.0 - d);
}

// distance of a parameter to the arc [lo, hi] (cyclic)
inline double dist_to_arc(double s, double lo, double hi) {
  s = reduce_mod1(s);
  const double len = reduce_mod1(hi - lo);
  const double rel = reduce_mod1(s - lo);
  if (rel <= len) return 0.0;
  return std::min(rel - len, 1.0 - rel);
}

// phase point on the subsolution graph over a section parameter
inline PhaseState graph_lift(const TonelliModel& model, const SectionCurve& sec,
                             const AlphaUpperResult& alpha, const Vec2& c, double e, double s) {
  const Vec2 q = sec.point_at(s);
  const Vec2 p = c + alpha.u.sample_du(q);
  return restrict_to_energy(model, {TorusPoint(q), p}, e);
}

// one snapped return with a wrap-proof lift: the parameter increment is
// pinned to the representative matching the trajectory's true displacement
// projected along the section's homology direction
inline double snapped_lift_step(const TonelliModel& model, const SectionCurve& sec,
                                const AlphaUpperResult& alpha, const Vec2& c, double e,
                                double s, const ReturnOptions& ropt) {
  const Vec2 sigma_vec = sec.sigma.vec();
  const PhaseState x = graph_lift(model, sec, alpha, c, e, reduce_mod1(s));
  const SectionOrbit so = section_returns(model, sec, x, 1, ropt);
  const double predicted = so.deltas[0].dot(sigma_vec) / sigma_vec.norm2();
  const double d = reduce_mod1(so.params[0] - s);
  return s + d + std::round(predicted - d);
}

// rotation number estimate of the snapped return map; the first quarter of
// the iterates is burn-in so the estimate reflects the attractor, not the
// transient from the probe point
inline double snapped_rotation(const TonelliModel& model, const SectionCurve& sec,
                               const AlphaUpperResult& alpha, const Vec2& c, double e,
                               double s0, int steps, const ReturnOptions& ropt) {
  double s = s0;
  const int burn = steps / 4;
  for (int j = 0; j < burn; ++j) s = snapped_lift_step(model, sec, alpha, c, e, s, ropt);
  const double s_ref = s;
  for (int j = 0; j < steps; ++j) s = snapped_lift_step(model, sec, alpha, c, e, s, ropt);
  return (s - s_ref) / steps;
}

}  // namespace detail

// psi-cycle of the Mather periodic orbit for c_k. One return of the
// subsolution-graph point defines a circle map f on the section parameter
// (re-projecting onto the graph after each return suppresses the unstable
// fiber drift); the orbit is a period-P point of f, located by a coarse scan
// of the lifted P-step displacement followed by bisection.
inline WitnessOrbit close_periodic_orbit(const TonelliModel& model, const SectionCurve& sec,
                                         const AlphaUpperResult& alpha_k, const Vec2& c_k,
                                         double e, int k, const HomologyClass& rho_cls,
                                         const HomologyClass& sigma, double s_seed,
                                         const WitnessOptions& opt) {
  (void)s_seed;  // every bracket is validated, so the seed only orders ties
  WitnessOrbit orbit;
  orbit.k = k;
  orbit.c_k = c_k;
  orbit.cls = HomologyClass{rho_cls.h1 * k + sigma.h1, rho_cls.h2 * k + sigma.h2};
  const long P = std::labs(intersection_number(primitive(orbit.cls), sigma));

  ReturnOptions ropt;
  ropt.dt = opt.dt;
  ropt.check_on_section = false;
  ropt.t_max = 12.0 * (1.0 + sec.perimeter);

  // snapped circle map: graph point at s -> next positive crossing parameter.
  // The lift of each increment is disambiguated by the trajectory's unwrapped
  // displacement projected on the section's homology direction, which is the
  // only wrap-proof winding signal (parameter increments of these orbits
  // legitimately approach both 0 and 1).
  const Vec2 sigma_vec = sigma.vec();
  const double sigma_n2 = sigma_vec.norm2();
  auto lift_step = [&](double s) -> double {
    return detail::snapped_lift_step(model, sec, alpha_k, c_k, e, s, ropt);
  };
  const double winding = std::round(
      primitive(orbit.cls).vec().dot(sigma_vec) / sigma_n2);  // param turns per period
  auto disp_P = [&](double s) -> double {
    double cur = s;
    for (long j = 0; j < P; ++j) cur = lift_step(cur);
    return cur - s - winding;
  };
  struct Candidate {
    double s = 0.0;
    double closure = std::numeric_limits<double>::infinity();
    std::vector<PhaseState> cycle;
    std::vector<double> params;
  };
  auto build_candidate = [&](double s0) {
    Candidate cand;
    cand.s = s0;
    double s = s0;
    for (long j = 0; j < P; ++j) {
      const PhaseState x = detail::graph_lift(model, sec, alpha_k, c_k, e, reduce_mod1(s));
      cand.cycle.push_back(x);
      cand.params.push_back(reduce_mod1(s));
      s = lift_step(s);
    }
    cand.closure = detail::circle_dist(s, s0) * std::max(sec.perimeter, 1.0);
    // reject collapsed cycles (a period-P' point with P' | P traced P times)
    for (long a = 0; a < P; ++a)
      for (long b = a + 1; b < P; ++b)
        if (detail::circle_dist(cand.params[a], cand.params[b]) < 1e-6)
          cand.closure = std::numeric_limits<double>::infinity();
    return cand;
  };

  try {
    const int scan = std::max(36, static_cast<int>(6 * P));
    std::vector<double> disp(scan);
    for (int i = 0; i < scan; ++i) disp[i] = disp_P(static_cast<double>(i) / scan);

    // promising brackets first: shallow sign changes are real zeros, steep
    // ones are usually first-return branch jumps
    std::vector<std::pair<double, int>> brackets;
    for (int i = 0; i < scan; ++i) {
      const double flo = disp[i];
      const double fhi = disp[(i + 1) % scan];
      if (!((flo <= 0.0 && fhi >= 0.0) || (flo >= 0.0 && fhi <= 0.0))) continue;
      if (std::abs(flo) > 0.75 || std::abs(fhi) > 0.75) continue;
      brackets.emplace_back(std::abs(flo) + std::abs(fhi), i);
    }
    std::sort(brackets.begin(), brackets.end());

    Candidate best;
    int tried = 0;
    for (const auto& [score, i] : brackets) {
      if (tried >= 6 || (best.closure < opt.closure_tol && tried >= 2)) break;
      double flo = disp[i];
      double fhi = disp[(i + 1) % scan];
      double lo = static_cast<double>(i) / scan;
      double hi = static_cast<double>(i + 1) / scan;
      for (int it = 0; it < 44 && hi - lo > 1e-11; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = disp_P(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
          fhi = fm;
        }
        if (std::abs(fm) < 1e-11) {
          lo = hi = mid;
          break;
        }
      }
      ++tried;
      Candidate cand = build_candidate(0.5 * (lo + hi));
      if (cand.closure < best.closure) best = std::move(cand);
    }
    if (!std::isfinite(best.closure)) {
      orbit.note = "no periodic point of the snapped return map";
      return orbit;
    }
    orbit.cycle = std::move(best.cycle);
    orbit.params = std::move(best.params);
    orbit.closure_error = best.closure;
    orbit.ok = orbit.closure_error <= opt.closure_tol;
    if (!orbit.ok) orbit.note = "closure error above tolerance";
  } catch (const std::exception& ex) {
    orbit.note = ex.what();
  }
  return orbit;
}

// Full lower-bound witness: face detection, section, c_k targeting, orbit
// closing, eps0/J calibration, union counting and direct pairwise
// (eps0, 4 m tau)-separation verification by cyclic index arithmetic on the
// snapped periodic cycles.
inline WitnessReport run_witness(const TonelliModel& model, WitnessOptions opt = {}) {
  WitnessReport rep;
  const double e = opt.energy;

  // face at the requested direction
  LevelCurveOptions lopt;
  LevelCurveSample curve = level_curve(model, e, opt.n_curve_samples, opt.n_grid, lopt);
  const Vec2 target = opt.face_direction / opt.face_direction.norm();
  int face_id = -1;
  for (std::size_t f = 0; f < curve.faces.size(); ++f) {
    if (curve.faces[f].normal.dot(target) > 0.999) face_id = static_cast<int>(f);
  }
  if (face_id < 0) {
    rep.case3 = false;
    return rep;
  }
  const FaceInterval& face = curve.faces[face_id];
  const int mid_index =
      (face.first + face.length / 2) % static_cast<int>(curve.samples.size());
  if (classify_case(model, e, curve, mid_index, opt.n_grid, lopt) != 3) {
    rep.case3 = false;
    return rep;
  }
  const auto verdict = classify_direction(face.normal);
  if (!verdict.rational) throw ClassificationConflict("run_witness: face normal irrational");
  rep.rho_cls = verdict.cls;

  // c+ is the endpoint the (m rho + sigma)-normals converge to; with the
  // orientation convention that is the counterclockwise end of the face run.
  // The sampled run undershoots the endpoints by up to a sample spacing, so
  // refine along the supporting line {c . n = const}: the face is exactly
  // where alpha stays at e on that line.
  {
    const Vec2 n_face = face.normal;
    const Vec2 tangent{-n_face.y, n_face.x};  // counterclockwise along the curve
    const Vec2 base = curve.samples[mid_index].c;
    auto on_face = [&](double t) {
      return alpha_upper_auto(model, base + tangent * t, opt.n_grid).value <= e + 1e-4;
    };
    auto endpoint = [&](double sign) {
      double lo = 0.0, hi = 0.25;
      while (on_face(sign * hi) && hi < 4.0) {
        lo = hi;
        hi *= 1.6;
      }
      for (int it = 0; it < 30 && hi - lo > 1e-4; ++it) {
        const double mid = 0.5 * (lo + hi);
        (on_face(sign * mid) ? lo : hi) = mid;
      }
      return base + tangent * (sign * 0.5 * (lo + hi));
    };
    rep.c_plus = endpoint(+1.0);
    rep.c_minus = endpoint(-1.0);
  }
  rep.face_half_width = 0.5 * (rep.c_plus - rep.c_minus).norm();

  // subsolutions and the global section at c+
  const AlphaUpperResult alpha_plus = alpha_upper_auto(model, rep.c_plus, opt.n_grid, nullptr,
                                                       false);
  const auto [c0, l] = choose_base_cohomology(model, rep.c_plus, e, opt.n_grid);
  const AlphaUpperResult alpha_c0 = alpha_upper_auto(model, c0, opt.n_grid, nullptr, false);
  const AubryEstimate aubry_plus = aubry_estimate(model, rep.c_plus, alpha_plus, opt.aubry_tol);
  const SectionBuildReport built =
      construct_section(model, rep.c_plus, c0, alpha_plus, alpha_c0, target,
                        aubry_plus.lifted, l);
  const SectionCurve& sec = built.section;
  rep.sigma = sec.sigma;
  rep.min_transversality = built.min_transversality;
  rep.tau = section_period_tau(rep.rho_cls, rep.sigma);
  if (rep.tau <= 0) throw ConstructionError("run_witness: tau = sigma.[rho] not positive");

  // M(c) across the face interior is one orbit family; its section trace
  // defines the complementary interval I and J = middle third of the widest gap
  const Vec2 c_int = 0.5 * (rep.c_plus + rep.c_minus);
  const AlphaUpperResult alpha_int = alpha_upper_auto(model, c_int, opt.n_grid, nullptr, false);
  const AubryEstimate aubry_int = aubry_estimate(model, c_int, alpha_int, opt.aubry_tol);
  if (aubry_int.lifted.empty()) throw NumericError("run_witness: empty interior Aubry set");
  std::vector<double> mather_params;
  {
    PhaseState x = restrict_to_energy(model, aubry_int.lifted.front(), e);
    ReturnOptions ropt;
    ropt.dt = opt.dt;
    ropt.check_on_section = false;
    const SectionOrbit so =
        section_returns(model, sec, x, static_cast<int>(rep.tau) + 1, ropt);
    for (double s : so.params) mather_params.push_back(s);
  }
  std::sort(mather_params.begin(), mather_params.end());
  double widest = -1.0, gap_lo = 0.0;
  for (std::size_t i = 0; i < mather_params.size(); ++i) {
    const double a = mather_params[i];
    const double b = mather_params[(i + 1) % mather_params.size()];
    const double gap = reduce_mod1(b - a);
    if (gap > widest) {
      widest = gap;
      gap_lo = a;
    }
  }
  rep.j_lo = reduce_mod1(gap_lo + widest / 3.0);
  rep.j_hi = reduce_mod1(gap_lo + 2.0 * widest / 3.0);

  // envelope-normal scan along the curve past c+: secant normals from the
  // coarse samples smear across the corner, so the c_k brackets come from a
  // dedicated table of smoothed-objective gradients
  const double phi_plus = std::atan2(rep.c_plus.y - curve.c_min.y, rep.c_plus.x - curve.c_min.x);
  const double r_guess = (rep.c_plus - curve.c_min).norm();
  const Vec2 face_n = face.normal;
  std::vector<std::pair<double, double>> normal_table;  // (phi, signed normal angle)
  {
    double r_prev = r_guess;
    const GridField* warm = nullptr;
    GridField warm_store;
    for (int i = 0; i <= 36; ++i) {
      const double phi = phi_plus - 0.02 + 0.4 * i / 36.0;
      const Vec2 dir{std::cos(phi), std::sin(phi)};
      AlphaUpperResult r;
      r_prev = level_radius(model, curve.c_min, dir, e, opt.n_grid, lopt.level_tol, &r, warm,
                            r_prev);
      warm_store = r.u;
      warm = &warm_store;
      const Vec2 u = r.grad_c / r.grad_c.norm();
      const double ang = std::atan2(face_n.x * u.y - face_n.y * u.x, face_n.dot(u));
      normal_table.emplace_back(phi, ang);
    }
  }

  const int k_max = 2 * opt.m_hi - 1;
  for (int k = opt.m_lo; k <= k_max; ++k) {
    const Vec2 dir{rep.rho_cls.h1 * k + rep.sigma.h1, rep.rho_cls.h2 * k + rep.sigma.h2};
    const Vec2 u_t = dir / dir.norm();
    const double target_ang = std::atan2(face_n.x * u_t.y - face_n.y * u_t.x, face_n.dot(u_t));
    double phi_lo = 0.0, phi_hi = 0.0;
    bool have = false;
    for (std::size_t i = 0; i + 1 < normal_table.size(); ++i) {
      if (normal_table[i].second <= target_ang && target_ang <= normal_table[i + 1].second) {
        phi_lo = normal_table[i].first;
        phi_hi = normal_table[i + 1].first;
        have = true;
        break;
      }
    }
    WitnessOrbit orbit;
    orbit.k = k;
    if (!have) {
      orbit.note = "no bracket for the target normal";
      rep.orbits.push_back(std::move(orbit));
      continue;
    }
    const NormalTarget tgt = find_c_with_normal(model, e, dir, opt.n_grid, phi_lo, phi_hi,
                                                lopt.level_tol, curve.c_min, r_guess, 12);

    // seed from the occupation measure of c_k
    double s_seed = rep.j_lo;
    try {
      AlphaLowerOptions lp = opt.lp;
      lp.shell_energy = tgt.alpha.value;
      const AlphaLowerResult low = alpha_lower(model, tgt.c, lp);
      double best_w = -1.0;
      Vec2 best_q{0, 0};
      for (const auto& [cell, wgt] : low.measure.weights) {
        if (wgt > best_w) {
          best_w = wgt;
          best_q = low.measure.center(cell);
        }
      }
      // walk the seed point onto the section
      const Vec2 p_seed = tgt.c + tgt.alpha.u.sample_du(best_q);
      PhaseState x = restrict_to_energy(model, {TorusPoint(best_q), p_seed}, e);
      ReturnOptions ropt;
      ropt.dt = opt.dt;
      ropt.check_on_section = false;
      const SectionOrbit so = section_returns(model, sec, x, 1, ropt);
      s_seed = so.params[0];
    } catch (const std::exception&) {
      // keep the J-based fallback seed
    }

    // The fans of adjacent (k,1)-classes are exponentially close near c+, so
    // the level-curve bisection continues on the observable that matters: the
    // rotation number of the snapped return map, which mode-locks at W/P on a
    // parameter window around the exact fan. Rotation increases with the ray
    // angle moving away from the face.
    const HomologyClass cls_k{rep.rho_cls.h1 * k + rep.sigma.h1,
                              rep.rho_cls.h2 * k + rep.sigma.h2};
    const long P_k = std::labs(intersection_number(primitive(cls_k), rep.sigma));
    const double w_k =
        std::round(primitive(cls_k).vec().dot(rep.sigma.vec()) / rep.sigma.vec().norm2());
    const double rho_target = w_k / static_cast<double>(P_k);
    ReturnOptions rot_opt;
    rot_opt.dt = opt.dt;
    rot_opt.check_on_section = false;
    rot_opt.t_max = 12.0 * (1.0 + sec.perimeter);
    const double s_probe = reduce_mod1(gap_lo + 0.5 * widest);

    AlphaUpperResult alpha_phi;
    GridField warm = tgt.alpha.u;
    double lo = phi_lo, hi = phi_hi;
    int closes_tried = 0;
    for (int iter = 0; iter < 22 && !orbit.ok; ++iter) {
      const double phi = (iter == 0) ? tgt.ray_angle : 0.5 * (lo + hi);
      const Vec2 ray{std::cos(phi), std::sin(phi)};
      double radius = 0.0;
      try {
        radius = level_radius(model, curve.c_min, ray, e, opt.n_grid, lopt.level_tol,
                              &alpha_phi, &warm, r_guess);
      } catch (const NumericError&) {
        break;
      }
      warm = alpha_phi.u;
      const Vec2 c_phi = curve.c_min + ray * radius;
      double rho_hat;
      try {
        rho_hat = detail::snapped_rotation(model, sec, alpha_phi, c_phi, e, s_probe,
                                           std::max(32, static_cast<int>(6 * P_k)), rot_opt);
      } catch (const std::exception&) {
        break;
      }
      if (std::abs(rho_hat - rho_target) <= 0.3 / static_cast<double>(P_k) &&
          closes_tried < 6) {
        ++closes_tried;
        WitnessOrbit attempt;
        if (opt.n_orbit > opt.n_grid) {
          const GridField seed_u = prolong(alpha_phi.u, opt.n_orbit);
          AlphaUpperOptions aopt;
          aopt.warm_start = &seed_u;
          aopt.stage_tol = 1e-11;
          aopt.max_iters_per_stage = 900;
          const AlphaUpperResult fine = alpha_upper(model, c_phi, opt.n_orbit, aopt);
          attempt = close_periodic_orbit(model, sec, fine, c_phi, e, k, rep.rho_cls,
                                         rep.sigma, s_seed, opt);
        } else {
          attempt = close_periodic_orbit(model, sec, alpha_phi, c_phi, e, k, rep.rho_cls,
                                         rep.sigma, s_seed, opt);
        }
        attempt.c_k = c_phi;
        attempt.ray_angle = phi;
        if (attempt.ok || orbit.cycle.empty()) orbit = std::move(attempt);
        if (orbit.ok) break;
      }
      if (rho_hat < rho_target) {
        lo = phi;
      } else {
        hi = phi;
      }
      if (hi - lo < 1e-10) break;
    }
    if (orbit.cycle.empty() && orbit.note.empty()) {
      orbit.note = "rotation bisection found no closing window";
    }
    rep.orbits.push_back(std::move(orbit));
  }

  // retry failures bracketed by their closed neighbors: the k-window lies
  // between the ray angles of the nearest closed smaller-k and larger-k
  // orbits. Rounds repeat while progress is made, since each new closure
  // tightens someone else's bracket. The level solves run at a tighter
  // tolerance here and the closing escalates the graph resolution once.
  const double retry_level_tol = std::min(lopt.level_tol, 1e-5);
  for (int round = 0; round < 4; ++round) {
    bool progress = false;
    for (auto& orbit : rep.orbits) {
      if (orbit.ok) continue;
      const int k = orbit.k;
      double phi_above = 0.0, phi_below = 0.0;
      bool have_above = false, have_below = false;
      for (const auto& other : rep.orbits) {
        if (!other.ok) continue;
        if (other.k < k && (!have_above || other.ray_angle < phi_above)) {
          phi_above = other.ray_angle;  // smaller k: larger rotation: larger phi
          have_above = true;
        }
        if (other.k > k && (!have_below || other.ray_angle > phi_below)) {
          phi_below = other.ray_angle;
          have_below = true;
        }
      }
      if (!have_above) continue;
      if (!have_below) phi_below = phi_above - 4e-4;  // deepest k: probe below
      if (!(phi_below < phi_above)) continue;
      const HomologyClass cls_k{rep.rho_cls.h1 * k + rep.sigma.h1,
                                rep.rho_cls.h2 * k + rep.sigma.h2};
      const long P_k = std::labs(intersection_number(primitive(cls_k), rep.sigma));
      const double w_k =
          std::round(primitive(cls_k).vec().dot(rep.sigma.vec()) / rep.sigma.vec().norm2());
      const double rho_target = w_k / static_cast<double>(P_k);
      ReturnOptions rot_opt;
      rot_opt.dt = opt.dt;
      rot_opt.check_on_section = false;
      rot_opt.t_max = 12.0 * (1.0 + sec.perimeter);
      const double s_probe = reduce_mod1(gap_lo + 0.5 * widest);
      AlphaUpperResult alpha_phi;
      GridField warm;
      const GridField* warm_ptr = nullptr;
      double lo = phi_below, hi = phi_above;
      for (int iter = 0; iter < 30 && !orbit.ok; ++iter) {
        const double phi = 0.5 * (lo + hi);
        const Vec2 ray{std::cos(phi), std::sin(phi)};
        double radius = 0.0;
        try {
          radius = level_radius(model, curve.c_min, ray, e, opt.n_grid, retry_level_tol,
                                &alpha_phi, warm_ptr, r_guess);
        } catch (const NumericError&) {
          break;
        }
        warm = alpha_phi.u;
        warm_ptr = &warm;
        const Vec2 c_phi = curve.c_min + ray * radius;
        double rho_hat;
        try {
          rho_hat = detail::snapped_rotation(model, sec, alpha_phi, c_phi, e, s_probe,
                                             std::max(32, static_cast<int>(6 * P_k)), rot_opt);
        } catch (const std::exception&) {
          break;
        }
        if (std::abs(rho_hat - rho_target) <= 0.3 / static_cast<double>(P_k)) {
          WitnessOrbit attempt = close_periodic_orbit(model, sec, alpha_phi, c_phi, e, k,
                                                      rep.rho_cls, rep.sigma, s_probe, opt);
          if (!attempt.ok && round >= 1) {
            // graph-resolution escalation: deep strands need more nodes
            const GridField seed_u = prolong(alpha_phi.u, 2 * opt.n_grid);
            AlphaUpperOptions aopt;
            aopt.warm_start = &seed_u;
            aopt.stage_tol = 1e-11;
            aopt.max_iters_per_stage = 900;
            const AlphaUpperResult fine = alpha_upper(model, c_phi, 2 * opt.n_grid, aopt);
            attempt = close_periodic_orbit(model, sec, fine, c_phi, e, k, rep.rho_cls,
                                           rep.sigma, s_probe, opt);
          }
          attempt.c_k = c_phi;
          attempt.ray_angle = phi;
          if (attempt.ok) {
            orbit = std::move(attempt);
            progress = true;
          }
        }
        if (orbit.ok) break;
        if (rho_hat < rho_target) {
          lo = phi;
        } else {
          hi = phi;
        }
        if (hi - lo < 1e-12) break;
      }
    }
    if (!progress) break;
  }

  // last-resort pass for the deepest classes: their parameter windows sit at
  // or below the level-solve noise floor, so bisection invariants break.
  // One dense scan serves every missing class: each scan point gets a few
  // rotation samples (the solve jitter explores nearby graphs), and a close
  // is attempted for whichever missing class the sample lands on.
  {
    std::vector<WitnessOrbit*> missing;
    for (auto& orbit : rep.orbits)
      if (!orbit.ok) missing.push_back(&orbit);
    double phi_deep_hi = 0.0;
    bool have_any = false;
    for (const auto& other : rep.orbits) {
      if (!other.ok) continue;
      if (!have_any || other.ray_angle < phi_deep_hi) phi_deep_hi = other.ray_angle;
      have_any = true;
    }
    if (!missing.empty() && have_any) {
      ReturnOptions rot_opt;
      rot_opt.dt = opt.dt;
      rot_opt.check_on_section = false;
      rot_opt.t_max = 12.0 * (1.0 + sec.perimeter);
      const double s_probe = reduce_mod1(gap_lo + 0.5 * widest);
      const int n_fine = 2 * opt.n_grid;
      AlphaUpperResult alpha_phi;
      GridField warm;
      const GridField* warm_ptr = nullptr;
      const int scan_points = 20;
      long p_max = 1;
      for (const auto* o : missing) {
        const HomologyClass cls_k{rep.rho_cls.h1 * o->k + rep.sigma.h1,
                                  rep.rho_cls.h2 * o->k + rep.sigma.h2};
        p_max = std::max(p_max, std::labs(intersection_number(primitive(cls_k), rep.sigma)));
      }
      for (int i = 0; i < scan_points; ++i) {
        bool all_done = true;
        for (const auto* o : missing) all_done = all_done && o->ok;
        if (all_done) break;
        const double phi = phi_deep_hi - 2.5e-4 + 4.5e-4 * i / scan_points;
        const Vec2 ray{std::cos(phi), std::sin(phi)};
        double radius = 0.0;
        try {
          radius = level_radius(model, curve.c_min, ray, e, n_fine, 1e-5, &alpha_phi, warm_ptr,
                                r_guess);
        } catch (const NumericError&) {
          continue;
        }
        warm = alpha_phi.u;
        warm_ptr = &warm;
        const Vec2 c_phi = curve.c_min + ray * radius;
        for (int rep2 = 0; rep2 < 3; ++rep2) {
          double rho_hat;
          try {
            rho_hat = detail::snapped_rotation(model, sec, alpha_phi, c_phi, e,
                                               reduce_mod1(s_probe + 0.21 * rep2),
                                               std::max(32, static_cast<int>(4 * p_max)),
                                               rot_opt);
          } catch (const std::exception&) {
            break;
          }
          for (auto* o : missing) {
            if (o->ok) continue;
            const int k = o->k;
            const HomologyClass cls_k{rep.rho_cls.h1 * k + rep.sigma.h1,
                                      rep.rho_cls.h2 * k + rep.sigma.h2};
            const long P_k = std::labs(intersection_number(primitive(cls_k), rep.sigma));
            const double w_k = std::round(primitive(cls_k).vec().dot(rep.sigma.vec()) /
                                          rep.sigma.vec().norm2());
            if (std::abs(rho_hat - w_k / static_cast<double>(P_k)) >
                0.4 / static_cast<double>(P_k))
              continue;
            WitnessOrbit attempt = close_periodic_orbit(model, sec, alpha_phi, c_phi, e, k,
                                                        rep.rho_cls, rep.sigma, s_probe, opt);
            attempt.c_k = c_phi;
            attempt.ray_angle = phi;
            if (attempt.ok) {
              *o = std::move(attempt);
              break;
            }
          }
        }
      }
    }
  }

  // J visits and m0. The middle third is the stated default; when an orbit's
  // crossings hop over it (excursion crossings land at model-dependent spots
  // inside I), shrink-wrap J around the per-orbit crossings nearest the
  // center of the widest gap, still compactly inside I.
  auto assign_seeds = [&]() {
    for (auto& orbit : rep.orbits) {
      orbit.seed_index = -1;
      if (!orbit.ok) continue;
      for (std::size_t i = 0; i < orbit.params.size(); ++i) {
        if (detail::dist_to_arc(orbit.params[i], rep.j_lo, rep.j_hi) == 0.0) {
          orbit.seed_index = static_cast<int>(i);
          break;
        }
      }
    }
  };
  assign_seeds();
  {
    bool all_visit = true;
    for (const auto& orbit : rep.orbits) all_visit = all_visit && (!orbit.ok || orbit.seed_index >= 0);
    if (!all_visit) {
      const double center = reduce_mod1(gap_lo + 0.5 * widest);
      double lo_off = 0.0, hi_off = 0.0;
      bool any = false;
      for (const auto& orbit : rep.orbits) {
        if (!orbit.ok) continue;
        double best = std::numeric_limits<double>::infinity();
        double off = 0.0;
        for (const double s : orbit.params) {
          // offset of s from the gap center, only for params inside the gap
          const double rel = reduce_mod1(s - gap_lo);
          if (rel >= widest) continue;
          const double o = rel - 0.5 * widest;
          if (std::abs(o) < best) {
            best = std::abs(o);
            off = o;
          }
        }
        if (best < std::numeric_limits<double>::infinity()) {
          any = true;
          lo_off = std::min(lo_off, off);
          hi_off = std::max(hi_off, off);
        }
      }
      if (any) {
        const double margin = 0.05 * widest;
        rep.j_lo = reduce_mod1(center + lo_off - margin);
        rep.j_hi = reduce_mod1(center + hi_off + margin);
        assign_seeds();
      }
    }
  }
  rep.m0 = 0;
  for (int m = opt.m_lo; m <= opt.m_hi; ++m) {
    bool all = true;
    for (const auto& orbit : rep.orbits) {
      if (orbit.k < m || orbit.k > 2 * m - 1) continue;
      all = all && orbit.ok && orbit.seed_index >= 0;
    }
    if (all) {
      rep.m0 = m;
      break;
    }
  }

  // eps0: largest dyadic eps with d(q, psi^{+-tau} q) >= 2 eps for all cycle
  // points within eps of J
  const double perim = sec.perimeter;
  for (int t = 1; t <= 40; ++t) {
    const double eps = std::ldexp(0.5, -t);  // 0.25, 0.125, ...
    bool ok = true;
    for (const auto& orbit : rep.orbits) {
      if (!orbit.ok) continue;
      const long P = static_cast<long>(orbit.cycle.size());
      for (long i = 0; i < P && ok; ++i) {
        const double dJ = detail::dist_to_arc(orbit.params[i], rep.j_lo, rep.j_hi) * perim;
        if (dJ > eps) continue;
        const long fwd = (i + rep.tau) % P;
        const long bwd = (i - rep.tau % P + P) % P;
        const double df = torus_distance(orbit.cycle[i].q, orbit.cycle[fwd].q);
        const double db = torus_distance(orbit.cycle[i].q, orbit.cycle[bwd].q);
        if (std::min(df, db) < 2.0 * eps) ok = false;
      }
      if (!ok) break;
    }
    if (ok) {
      rep.eps0 = eps;
      break;
    }
  }

  // union counts and direct pairwise separation checks
  auto psi_iterate = [&](const WitnessOrbit& orbit, long base, long j) -> const PhaseState& {
    const long P = static_cast<long>(orbit.cycle.size());
    return orbit.cycle[static_cast<std::size_t>((base + j) % P)];
  };
  for (int m = opt.m_lo; m <= opt.m_hi; ++m) {
    WitnessCheck chk;
    chk.m = m;
    chk.horizon = 4L * m * rep.tau;
    struct Member {
      const WitnessOrbit* orbit;
      long index;
    };
    std::vector<Member> members;
    bool usable = true;
    for (const auto& orbit : rep.orbits) {
      if (orbit.k < m || orbit.k > 2 * m - 1) continue;
      if (!orbit.ok || orbit.seed_index < 0) {
        usable = false;
        continue;
      }
      const long P = static_cast<long>(orbit.cycle.size());
      // O_{Psi^tau}(x_k): k points stepping by tau through the cycle
      for (long j = 0; j < orbit.k; ++j) {
        members.push_back({&orbit, (orbit.seed_index + j * rep.tau) % P});
      }
    }
    chk.union_size = static_cast<int>(members.size());
    chk.complete = usable;
    chk.size_ok = usable && chk.union_size >= m * m;
    chk.min_pair_distance = std::numeric_limits<double>::infinity();
    chk.separated = usable && rep.eps0 > 0.0;
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        double best = 0.0;
        for (long j = 0; j < chk.horizon; ++j) {
          best = std::max(best,
                          phase_distance(psi_iterate(*members[a].orbit, members[a].index, j),
                                         psi_iterate(*members[b].orbit, members[b].index, j)));
          if (best >= rep.eps0) break;
        }
        chk.min_pair_distance = std::min(chk.min_pair_distance, best);
        if (best < rep.eps0) {
          chk.separated = false;
          ++chk.pair_failures;
          if (rep.failed_pairs.size() < 64) {
            rep.failed_pairs.emplace_back(m, static_cast<int>(a), static_cast<int>(b), best);
          }
        }
      }
    }
    rep.checks.push_back(chk);
  }

  // slope of log union size vs log horizon
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (const auto& chk : rep.checks) {
    if (!chk.complete || chk.union_size < 1) continue;
    const double x = std::log(static_cast<double>(chk.horizon));
    const double y = std::log(static_cast<double>(chk.union_size));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2) rep.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return rep;
}

}  // namespace hpol

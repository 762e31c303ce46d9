// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Headline growth rates are finite-scale slope proxies with the stated
// ladders; the exact finite checks (counts, sandwich, separation) run at
// their full stated sizes.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "hpol/hpol.hpp"

using namespace hpol;

namespace {

int g_failures = 0;

void record(const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

void criterion_1_flat_baseline() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = default_config("flat-baseline");
  cfg.ensemble = 400;
  const auto rep = run_flat_baseline(cfg);
  double slope = 0.0;
  if (rep.summary.contains("max_stable_slope")) slope = rep.summary["max_stable_slope"];
  record("criterion 1: flat baseline slope in [0.8, 1.3]", rep.has_verdict && rep.pass,
         "slope " + fmt(slope) + ", K=400, horizons 2^4..2^12, t=" + fmt(seconds_since(t0)) +
             "s");
}

void criterion_2_revolution() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = default_config("revolution");
  cfg.ensemble = 400;
  const auto rep = run_revolution(cfg);
  double slope = 0.0;
  if (rep.summary.contains("max_stable_slope")) slope = rep.summary["max_stable_slope"];
  record("criterion 2: revolution slope in [1.6, 2.4]", rep.has_verdict && rep.pass,
         "slope " + fmt(slope) + ", t=" + fmt(seconds_since(t0)) + "s");
}

void criterion_3_witness() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = default_config("face-witness");
  cfg.A = 0.5;
  cfg.energy = 0.5;
  cfg.m_lo = 3;
  cfg.m_hi = 8;
  const auto rep = run_face_witness(cfg);
  bool counts_ok = true, sep_ok = true;
  for (const auto& chk : rep.summary["checks"]) {
    counts_ok = counts_ok && chk["union_size"].get<int>() >= chk["required"].get<int>();
    sep_ok = sep_ok && chk["separated"].get<bool>();
  }
  const double slope = rep.summary["slope"];
  const double eps0 = rep.summary["eps0"];
  record("criterion 3a: witness union >= m^2 for m in 3..8", counts_ok,
         "eps0 " + fmt(eps0) + ", tau " + std::to_string(rep.summary["tau"].get<long>()));
  record("criterion 3b: all pairs (eps0, 4 m tau)-separated", sep_ok,
         sep_ok ? "direct pairwise verification" : "failing pairs recorded");
  record("criterion 3c: witness slope >= 1.7", slope >= 1.7,
         "slope " + fmt(slope) + ", t=" + fmt(seconds_since(t0)) + "s");
}

void criterion_4_alpha_closed_forms() {
  const auto t0 = std::chrono::steady_clock::now();
  const Mat2 g0{1.7, 0.35, 0.9};
  const auto flat = TonelliModel::flat(g0);
  Rng rng(2024);
  double worst_value = 0.0, worst_gap = 0.0;
  bool ok = true;
  for (int i = 0; i < 50; ++i) {
    const Vec2 c{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
    const double closed = 0.5 * g0.inverse().quad(c);
    const double upper = alpha_upper(flat, c, 128).value;
    worst_value = std::max(worst_value, std::abs(upper - closed));
    AlphaLowerOptions lopt;
    lopt.shell_energy = upper;
    const double lower = alpha_lower(flat, c, lopt).value;
    worst_gap = std::max(worst_gap, std::abs(upper - lower));
    ok = ok && std::abs(upper - closed) <= 1e-6 && std::abs(upper - lower) <= 1e-3;
  }
  record("criterion 4: flat alpha closed forms at N=128",
         ok, "worst |upper-closed| " + fmt(worst_value) + ", worst duality gap " +
                 fmt(worst_gap) + ", t=" + fmt(seconds_since(t0)) + "s");
}

void criterion_5_homogeneity() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  double worst = 0.0;
  for (const auto& m : {TonelliModel::flat(Mat2{2.0, 0.3, 1.1}), TonelliModel::revolution(2, 1),
                        TonelliModel::pinched(0.5)}) {
    for (const Vec2 c : {Vec2{0.8, 0.5}, Vec2{-0.4, 0.9}}) {
      const double base = alpha_upper_auto(m, c, 48, nullptr, false).value;
      for (const double lam : {0.5, 2.0, 3.0}) {
        const double scaled = alpha_upper_auto(m, c * lam, 48, nullptr, false).value;
        const double rel = std::abs(scaled - lam * lam * base) / std::abs(scaled);
        worst = std::max(worst, rel);
        ok = ok && rel <= 1e-2;
      }
    }
  }
  record("criterion 5: alpha homogeneity of degree 2", ok,
         "worst relative error " + fmt(worst) + ", t=" + fmt(seconds_since(t0)) + "s");
}

void criterion_6_sandwich() {
  Rng rng(404);
  int violations = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const int k = 5 + rng.uniform_int(16);
    std::vector<Vec2> pts;
    for (int i = 0; i < k; ++i) pts.push_back({rng.uniform(), rng.uniform()});
    const double eps = rng.uniform(0.05, 0.4);
    DistanceOracle d = [&pts](int i, int j) { return torus_distance(pts[i], pts[j]); };
    const int s2 = separated_count(d, k, 2 * eps, CountMethod::exact).count;
    const int g = covering_count(d, k, eps);
    const int s1 = separated_count(d, k, eps, CountMethod::exact).count;
    if (!(s2 <= g && g <= s1)) ++violations;
  }
  record("criterion 6: packing/covering sandwich on 200 exact instances", violations == 0,
         std::to_string(violations) + " violations");
}

void criterion_7_iterate_inequality() {
  auto f = [](double x) { return reduce_mod1(2.0 * x + 0.1 * std::sin(two_pi() * x)); };
  auto dist = [](double x, double y) {
    const double d = std::abs(x - y);
    return std::min(d, 1.0 - d);
  };
  Rng rng(505);
  int violations = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const int k = 8 + rng.uniform_int(8);
    std::vector<double> sample;
    for (int i = 0; i < k; ++i) sample.push_back(rng.uniform());
    if (!property_iterate_check(f, dist, sample, 1 + rng.uniform_int(3), 2 + rng.uniform_int(3),
                                0.05 + 0.1 * rng.uniform()))
      ++violations;
  }
  record("criterion 7: iterate-count inequality on 100 exact instances", violations == 0,
         std::to_string(violations) + " violations");
}

void criterion_8_poincare_probe() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto flat = TonelliModel::flat(Mat2::identity());
  ProbeOptions popt;
  popt.k_params = 3;
  popt.k_angles = 20;
  popt.n_max = 64;
  const auto flat_probe = poincare_inequality_probe(flat, axis_section(0, 0.0), 0.5, popt);
  const bool flat_ok =
      flat_probe.map_slope && flat_probe.flow_slope && !flat_probe.violation;
  record("criterion 8a: Poincare slope inequality, flat", flat_ok,
         flat_probe.map_slope && flat_probe.flow_slope
             ? "map " + fmt(*flat_probe.map_slope) + " <= flow " + fmt(*flat_probe.flow_slope) +
                   " + 0.3"
             : "slope missing");

  const auto rev = TonelliModel::revolution(2.0, 1.0);
  ProbeOptions ropt;
  ropt.k_params = 3;
  ropt.k_angles = 20;
  ropt.n_max = 32;
  ropt.angle_center = 0.35;  // q1-rotating band, away from the separatrix
  const auto rev_probe = poincare_inequality_probe(rev, axis_section(0, 0.0), 0.5, ropt);
  const bool rev_ok = rev_probe.map_slope && rev_probe.flow_slope && !rev_probe.violation;
  record("criterion 8b: Poincare slope inequality, revolution", rev_ok,
         (rev_probe.map_slope && rev_probe.flow_slope
              ? "map " + fmt(*rev_probe.map_slope) + " <= flow " + fmt(*rev_probe.flow_slope) +
                    " + 0.3"
              : "slope missing") +
             ", t=" + fmt(seconds_since(t0)) + "s");
}

void criterion_9_classification() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto flat = TonelliModel::flat(Mat2::identity());
  auto curve = level_curve(flat, 0.5, 256, 48);
  int case3 = 0, conflicts = 0;
  for (int i = 0; i < 256; ++i) {
    try {
      if (classify_case(flat, 0.5, curve, i, 48) == 3) ++case3;
    } catch (const ClassificationConflict&) {
      ++conflicts;
    }
  }
  record("criterion 9a: flat has no case-3 sample over 256", case3 == 0 && conflicts == 0,
         std::to_string(case3) + " case-3, " + std::to_string(conflicts) + " conflicts");

  const auto pinched = TonelliModel::pinched(0.5);
  auto pcurve = level_curve(pinched, 0.5, 96, 48);
  bool face_found = false;
  double face_len = 0.0;
  for (const auto& f : pcurve.faces) {
    if (f.normal.dot(Vec2{1.0, 0.0}) > 0.999 && f.length >= 3) {
      const Vec2 c_lo = pcurve.samples[f.first].c;
      const Vec2 c_hi = pcurve.samples[f.last].c;
      face_len = (c_hi - c_lo).norm();
      if (face_len > 0.0) face_found = true;
    }
  }
  record("criterion 9b: pinched case-3 face at (1,0) with c+ != c-", face_found,
         "face length " + fmt(face_len) + " over >= 3 samples, t=" + fmt(seconds_since(t0)) +
             "s");
}

void criterion_10_conservation() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  double worst_drift = 0.0, worst_rev = 0.0;
  for (const auto& m : {TonelliModel::flat(Mat2::identity()), TonelliModel::revolution(2, 1),
                        TonelliModel::pinched(0.5)}) {
    const auto start = restrict_to_energy(m, {{0.13, 0.29}, {1.3, 0.7}}, 0.5);
    const auto traj = integrate(m, start, 1000.0, 1e-3, 1.0);
    worst_drift = std::max(worst_drift, traj.max_rel_drift);
    const auto back = integrate_back_and_forth(m, start, 10.0, 1e-3);
    const double rev_err =
        std::max(torus_distance(back.q, start.q), (back.p - start.p).norm());
    worst_rev = std::max(worst_rev, rev_err);
    ok = ok && traj.max_rel_drift < 1e-8 && rev_err < 1e-6;
  }
  record("criterion 10: energy drift < 1e-8 and reversibility < 1e-6", ok,
         "worst drift " + fmt(worst_drift) + ", worst reversal " + fmt(worst_rev) + ", t=" +
             fmt(seconds_since(t0)) + "s");
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion_6_sandwich();
  criterion_7_iterate_inequality();
  criterion_10_conservation();
  criterion_5_homogeneity();
  criterion_4_alpha_closed_forms();
  criterion_9_classification();
  criterion_8_poincare_probe();
  criterion_1_flat_baseline();
  criterion_2_revolution();
  criterion_3_witness();
  std::printf("acceptance total: %s, %.1f s\n", g_failures == 0 ? "ALL PASS" : "FAILURES",
              seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}

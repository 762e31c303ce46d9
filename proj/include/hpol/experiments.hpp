#pragma once

#include <map>
#include <string>
#include <vector>

#include "hpol/config.hpp"
#include "hpol/io.hpp"
#include "hpol/level_curve.hpp"
#include "hpol/measure.hpp"
#include "hpol/packing.hpp"
#include "hpol/probes.hpp"
#include "hpol/semicontinuity.hpp"
#include "hpol/slope.hpp"
#include "hpol/witness.hpp"

namespace hpol {

struct ExperimentReport {
  std::string name;
  bool has_verdict = true;  // saturation warnings withhold the pass/fail call
  bool pass = false;
  std::string detail;
  Json summary;
  std::map<std::string, std::string> artifacts;  // filename -> contents
};

inline void write_report(const ExperimentReport& rep, const std::string& out_dir) {
  for (const auto& [file, content] : rep.artifacts) {
    write_text_file(out_dir + "/" + file, content);
  }
  write_text_file(out_dir + "/summary.json", rep.summary.dump(2) + "\n");
}

inline ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "flat-baseline") {
    c.model = "flat";
  } else if (experiment == "revolution") {
    c.model = "revolution";
    c.time_unit = 0.003;  // horizon window sized to the near-separatrix dwell cap
    c.dt = 5e-4;
  } else if (experiment == "face-witness") {
    c.model = "pinched";
  } else if (experiment == "property-suite") {
    c.model = "flat";
  } else {
    throw DomainError("unknown experiment '" + experiment + "'");
  }
  return c;
}

namespace detail {

inline SystemDescriptor descriptor_from(const ExperimentConfig& cfg, Scheme fallback) {
  SystemDescriptor d;
  d.model = cfg.build_model();
  d.energy = cfg.energy;
  d.ensemble_size = cfg.ensemble;
  d.seed = cfg.seed;
  d.scheme = fallback;
  if (cfg.scheme == "uniform") d.scheme = Scheme::uniform;
  else if (cfg.scheme == "bundle") d.scheme = Scheme::bundle;
  else if (cfg.scheme == "separatrix") d.scheme = Scheme::separatrix;
  else if (!cfg.scheme.empty()) throw DomainError("unknown scheme '" + cfg.scheme + "'");
  return d;
}

inline EstimateOptions estimate_options(const ExperimentConfig& cfg) {
  EstimateOptions opt;
  opt.eps_ladder = cfg.eps_ladder;
  opt.time_unit = cfg.time_unit;
  opt.dt = cfg.dt;
  opt.dt_sample = cfg.dt_sample;
  opt.horizons.clear();
  for (int k = cfg.horizon_exp_lo; k <= cfg.horizon_exp_hi; ++k) {
    opt.horizons.push_back(std::ldexp(1.0, k) * cfg.time_unit);
  }
  return opt;
}

inline ExperimentReport slope_experiment(const ExperimentConfig& cfg, Scheme scheme,
                                         const char* name, double lo, double hi) {
  const SystemDescriptor d = detail::descriptor_from(cfg, scheme);
  const EstimateOptions opt = detail::estimate_options(cfg);
  const SlopeFit fit = hpol_estimate(d, opt);
  ExperimentReport rep;
  rep.name = name;
  const auto slope = fit.max_stable_slope();
  rep.summary = slope_fit_json(fit);
  rep.summary["experiment"] = name;
  rep.summary["config"] = serialize_config(cfg);
  rep.artifacts["counts.csv"] = counts_csv(fit);
  if (!slope) {
    rep.has_verdict = false;
    rep.detail = "no stable slope (saturation or too few contributing horizons)";
    rep.summary["verdict"] = "no-verdict";
    return rep;
  }
  rep.pass = *slope >= lo && *slope <= hi;
  rep.detail = "max stable slope " + std::to_string(*slope);
  rep.summary["verdict"] = rep.pass ? "pass" : "fail";
  rep.summary["window"] = {lo, hi};
  return rep;
}

}  // namespace detail

// Flat baseline: h_pol proxy of the flat geodesic flow, expected near 1.
inline ExperimentReport run_flat_baseline(const ExperimentConfig& cfg) {
  if (cfg.model != "flat") throw DomainError("run_flat_baseline: model must be flat");
  return detail::slope_experiment(cfg, Scheme::bundle, "flat-baseline", 0.8, 1.3);
}

// Revolution torus: h_pol proxy near 2 on the near-separatrix ensemble.
inline ExperimentReport run_revolution(const ExperimentConfig& cfg) {
  if (cfg.model != "revolution") throw DomainError("run_revolution: model must be revolution");
  if (!(cfg.b > 0.0)) throw DomainError("run_revolution: need b > 0");
  return detail::slope_experiment(cfg, Scheme::separatrix, "revolution", 1.6, 2.4);
}

// Lower-bound witness on the pinched torus.
inline ExperimentReport run_face_witness(const ExperimentConfig& cfg) {
  if (cfg.model != "pinched" || !(cfg.A > 0.0))
    throw DomainError("run_face_witness: model must be pinched with A > 0");
  WitnessOptions opt;
  opt.m_lo = cfg.m_lo;
  opt.m_hi = cfg.m_hi;
  opt.energy = cfg.energy;
  opt.n_grid = cfg.grid;
  opt.n_orbit = cfg.grid;
  opt.n_curve_samples = cfg.curve_samples;
  opt.dt = cfg.dt;
  const TonelliModel model = cfg.build_model();
  const WitnessReport wit = run_witness(model, opt);

  ExperimentReport rep;
  rep.name = "face-witness";
  if (!wit.case3) throw DomainError("run_face_witness: no case-3 face at the requested direction");

  bool all_size = true, all_sep = true;
  Json checks = Json::array();
  std::string pairs_csv = "m,i,j,max_distance\n";
  std::string curve_csv = "k,c1,c2,period,closure_error,ok\n";
  for (const auto& chk : wit.checks) {
    all_size = all_size && chk.size_ok;
    all_sep = all_sep && chk.separated;
    Json j;
    j["m"] = chk.m;
    j["union_size"] = chk.union_size;
    j["required"] = chk.m * chk.m;
    j["horizon"] = chk.horizon;
    j["separated"] = chk.separated;
    j["pair_failures"] = chk.pair_failures;
    j["min_pair_distance"] = chk.min_pair_distance;
    checks.push_back(j);
  }
  for (const auto& [m, i, j, d] : wit.failed_pairs) {
    pairs_csv += std::to_string(m) + "," + std::to_string(i) + "," + std::to_string(j) + "," +
                 csv_double(d) + "\n";
  }
  for (const auto& orbit : wit.orbits) {
    curve_csv += std::to_string(orbit.k) + "," + csv_double(orbit.c_k.x) + "," +
                 csv_double(orbit.c_k.y) + "," + std::to_string(orbit.cycle.size()) + "," +
                 csv_double(orbit.closure_error) + "," + std::to_string(orbit.ok ? 1 : 0) + "\n";
  }
  rep.pass = all_size && all_sep && wit.slope >= 1.7;
  rep.detail = "slope " + std::to_string(wit.slope) + ", eps0 " + std::to_string(wit.eps0);
  rep.summary["experiment"] = "face-witness";
  rep.summary["config"] = serialize_config(cfg);
  rep.summary["c_plus"] = {wit.c_plus.x, wit.c_plus.y};
  rep.summary["c_minus"] = {wit.c_minus.x, wit.c_minus.y};
  rep.summary["face_half_width"] = wit.face_half_width;
  rep.summary["rho"] = {wit.rho_cls.i1(), wit.rho_cls.i2()};
  rep.summary["sigma"] = {wit.sigma.i1(), wit.sigma.i2()};
  rep.summary["tau"] = wit.tau;
  rep.summary["eps0"] = wit.eps0;
  rep.summary["J"] = {wit.j_lo, wit.j_hi};
  rep.summary["m0"] = wit.m0;
  rep.summary["min_transversality"] = wit.min_transversality;
  rep.summary["slope"] = wit.slope;
  rep.summary["checks"] = checks;
  rep.summary["verdict"] = rep.pass ? "pass" : "fail";
  rep.artifacts["witness_pairs.csv"] = pairs_csv;
  rep.artifacts["level_curve.csv"] = curve_csv;
  return rep;
}

// All module invariant suites with one pass/fail row each.
inline ExperimentReport run_property_suite(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.name = "property-suite";
  Json rows = Json::array();
  bool all = true;
  auto record = [&](const std::string& name, bool ok, const std::string& note = "") {
    Json j;
    j["name"] = name;
    j["pass"] = ok;
    if (!note.empty()) j["note"] = note;
    rows.push_back(j);
    all = all && ok;
  };

  Rng rng(cfg.seed);

  // packing/covering sandwich, exact oracles both sides
  {
    bool ok = true;
    for (int inst = 0; inst < 200 && ok; ++inst) {
      const int k = 5 + rng.uniform_int(16);
      std::vector<Vec2> pts;
      for (int i = 0; i < k; ++i) pts.push_back({rng.uniform(), rng.uniform()});
      const double eps = rng.uniform(0.05, 0.4);
      DistanceOracle d = [&pts](int i, int j) { return torus_distance(pts[i], pts[j]); };
      const int s2 = separated_count(d, k, 2 * eps, CountMethod::exact).count;
      const int g = covering_count(d, k, eps);
      const int s1 = separated_count(d, k, eps, CountMethod::exact).count;
      ok = s2 <= g && g <= s1;
    }
    record("packing_covering_sandwich", ok);
  }

  // iterate-count inequality
  {
    auto f = [](double x) { return reduce_mod1(2.0 * x + 0.1 * std::sin(two_pi() * x)); };
    auto dist = [](double x, double y) {
      const double d = std::abs(x - y);
      return std::min(d, 1.0 - d);
    };
    bool ok = true;
    for (int inst = 0; inst < 100 && ok; ++inst) {
      const int k = 8 + rng.uniform_int(8);
      std::vector<double> sample;
      for (int i = 0; i < k; ++i) sample.push_back(rng.uniform());
      ok = property_iterate_check(f, dist, sample, 1 + rng.uniform_int(3), 2 + rng.uniform_int(3),
                                  0.1);
    }
    record("iterate_inequality", ok);
  }

  // duality bracket on flat and pinched
  {
    const auto flat = TonelliModel::flat(Mat2{1.3, 0.2, 0.8});
    bool ok = true;
    double worst = 0.0;
    for (int i = 0; i < 6 && ok; ++i) {
      const Vec2 c{rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)};
      const double upper = alpha_upper(flat, c, 64).value;
      AlphaLowerOptions lopt;
      lopt.shell_energy = upper;
      const double lower = alpha_lower(flat, c, lopt).value;
      worst = std::max(worst, lower - upper);
      ok = lower <= upper + defaults::kGapTol;
    }
    const auto pinched = TonelliModel::pinched(0.5);
    const double up = alpha_upper(pinched, {1.0, 0.0}, 64).value;
    AlphaLowerOptions lopt;
    lopt.shell_energy = up;
    const double low = alpha_lower(pinched, {1.0, 0.0}, lopt).value;
    ok = ok && low <= up + 0.05 * std::abs(up) && low >= up - 0.05 * std::abs(up);
    record("duality_bracket", ok, "worst flat overshoot " + std::to_string(worst));
  }

  // homogeneity of degree 2 on metric families
  {
    bool ok = true;
    for (const auto& m : {TonelliModel::revolution(2.0, 1.0), TonelliModel::pinched(0.5)}) {
      const Vec2 c{0.8, 0.5};
      const double base = alpha_upper_auto(m, c, 48, nullptr, false).value;
      for (const double lam : {0.5, 2.0, 3.0}) {
        const double scaled = alpha_upper_auto(m, c * lam, 48, nullptr, false).value;
        ok = ok && std::abs(scaled - lam * lam * base) <= 1e-2 * std::abs(scaled);
      }
    }
    record("alpha_homogeneity", ok);
  }

  // convexity of alpha (midpoint inequality)
  {
    const auto pinched = TonelliModel::pinched(0.5);
    bool ok = true;
    for (int i = 0; i < 12 && ok; ++i) {
      const Vec2 c1{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const Vec2 c2{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const double a1 = alpha_upper_auto(pinched, c1, 32).value;
      const double a2 = alpha_upper_auto(pinched, c2, 32).value;
      const double mid = alpha_upper_auto(pinched, (c1 + c2) * 0.5, 32).value;
      ok = mid <= 0.5 * (a1 + a2) + 1e-4;
    }
    record("alpha_convexity", ok);
  }

  // Poincare inequality probe on the flat model
  {
    const auto flat = TonelliModel::flat(Mat2::identity());
    ProbeOptions popt;
    popt.k_params = 3;
    popt.k_angles = 16;
    popt.n_max = 64;
    const auto probe = poincare_inequality_probe(flat, axis_section(0, 0.0), 0.5, popt);
    const bool ok = probe.map_slope && probe.flow_slope && !probe.violation;
    record("poincare_inequality_flat", ok,
           probe.map_slope && probe.flow_slope
               ? "map " + std::to_string(*probe.map_slope) + " flow " +
                     std::to_string(*probe.flow_slope)
               : "missing slope");
  }

  // outer semicontinuity of the Aubry set
  {
    const auto pinched = TonelliModel::pinched(0.5);
    std::vector<Vec2> seq;
    for (int j = 0; j < 4; ++j) seq.push_back(Vec2{1.0, 0.634} + Vec2{0.08, 0.05} * std::pow(0.5, j));
    const auto sem = semicontinuity_probe(pinched, seq, {1.0, 0.634}, 48, 1e-4);
    bool ok = sem.excess.back() <= 0.1;
    // constant sequence: excess identically zero
    const auto sem0 = semicontinuity_probe(pinched, {Vec2{0.3, 0.1}, Vec2{0.3, 0.1}}, {0.3, 0.1},
                                           32, 1e-4);
    for (const double x : sem0.excess) ok = ok && x == 0.0;
    record("aubry_semicontinuity", ok);
  }

  // energy conservation and reversibility
  {
    const auto rev = TonelliModel::revolution(2.0, 1.0);
    const auto start = restrict_to_energy(rev, {{0.12, 0.34}, {2.0, 0.5}}, 0.5);
    const auto traj = integrate(rev, start, 1000.0, 1e-3, 1.0);
    const auto back = integrate_back_and_forth(rev, start, 10.0, 1e-3);
    const bool ok = traj.max_rel_drift < defaults::kEnergyDriftTol &&
                    torus_distance(back.q, start.q) < 1e-6 && (back.p - start.p).norm() < 1e-6;
    record("energy_conservation_reversibility", ok,
           "drift " + std::to_string(traj.max_rel_drift));
  }

  // config round-trip
  {
    ExperimentConfig c = cfg;
    c.eps_ladder = {0.31, 0.17, 0.05};
    c.seed = 99;
    const ExperimentConfig back = parse_config(serialize_config(c));
    record("config_roundtrip", back == c);
  }

  rep.pass = all;
  rep.detail = all ? "all properties hold" : "failures recorded";
  rep.summary["experiment"] = "property-suite";
  rep.summary["config"] = serialize_config(cfg);
  rep.summary["rows"] = rows;
  rep.summary["verdict"] = rep.pass ? "pass" : "fail";
  std::string csv = "name,pass\n";
  for (const auto& r : rows) {
    csv += r["name"].get<std::string>() + "," + (r["pass"].get<bool>() ? "1" : "0") + "\n";
  }
  rep.artifacts["counts.csv"] = csv;
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "flat-baseline") return run_flat_baseline(cfg);
  if (cfg.experiment == "revolution") return run_revolution(cfg);
  if (cfg.experiment == "face-witness") return run_face_witness(cfg);
  if (cfg.experiment == "property-suite") return run_property_suite(cfg);
  throw DomainError("unknown experiment '" + cfg.experiment + "'");
}

}  // namespace hpol

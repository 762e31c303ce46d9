// hpol-lab: batch driver for the torus polynomial-entropy experiments.
//
//   hpol-lab <experiment> [--config <file>] [--out <dir>] [--seed <n>] [--threads <n>]
//
// Experiments: flat-baseline, revolution, face-witness, property-suite.
// Configs are line-oriented key=value; outputs land in --out as summary.json
// plus per-experiment CSV tables.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "hpol/hpol.hpp"

int main(int argc, char** argv) {
  CLI::App app{"polynomial-entropy laboratory for Tonelli flows on the two-torus"};
  std::string experiment;
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  int threads = -1;
  bool print_config = false;

  app.add_option("experiment", experiment,
                 "flat-baseline | revolution | face-witness | property-suite")
      ->required();
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--out", out_dir, "output directory (default: from config)");
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--threads", threads, "override the config thread count");
  app.add_flag("--print-config", print_config, "print the effective config and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    hpol::ExperimentConfig cfg = hpol::default_config(experiment);
    if (!config_path.empty()) {
      cfg = hpol::parse_config(hpol::read_text_file(config_path));
      cfg.experiment = experiment;
    }
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (threads >= 0) cfg.threads = threads;
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    if (print_config) {
      std::fputs(hpol::serialize_config(cfg).c_str(), stdout);
      return 0;
    }

    const hpol::ExperimentReport rep = hpol::run_experiment(cfg);
    hpol::write_report(rep, cfg.out_dir);
    if (!rep.has_verdict) {
      std::printf("[%s] no verdict: %s\n", rep.name.c_str(), rep.detail.c_str());
      return 0;
    }
    std::printf("[%s] %s: %s\n", rep.name.c_str(), rep.pass ? "PASS" : "FAIL",
                rep.detail.c_str());
    return rep.pass ? 0 : 1;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
}

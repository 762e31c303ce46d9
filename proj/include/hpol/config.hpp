#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hpol/defaults.hpp"
#include "hpol/errors.hpp"
#include "hpol/geom.hpp"
#include "hpol/model.hpp"

namespace hpol {

// Line-oriented key=value experiment configuration. Unknown keys are
// rejected before any computation; parse(serialize(c)) == c exactly.
struct ExperimentConfig {
  std::string experiment = "flat-baseline";
  std::string model = "flat";
  double g11 = 1.0, g12 = 0.0, g22 = 1.0;  // flat metric
  double a = 2.0, b = 1.0;                 // revolution profile
  double A = 0.5;                          // pinch amplitude
  double energy = 0.5;
  std::vector<double> eps_ladder{defaults::kEpsLadder, defaults::kEpsLadder + 4};
  int horizon_exp_lo = defaults::kHorizonExpLo;
  int horizon_exp_hi = defaults::kHorizonExpHi;
  double time_unit = defaults::kTimeUnit;
  int ensemble = 400;
  std::string scheme;  // empty: experiment default
  int m_lo = defaults::kWitnessMLo;
  int m_hi = defaults::kWitnessMHi;
  int grid = 48;
  int curve_samples = 96;
  double dt = 1e-3;
  double dt_sample = 5e-3;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = ".";

  TonelliModel build_model() const {
    if (model == "flat") return TonelliModel::flat(Mat2{g11, g12, g22});
    if (model == "revolution") return TonelliModel::revolution(a, b);
    if (model == "pinched") return TonelliModel::pinched(A);
    throw DomainError("config: unknown model family '" + model + "'");
  }
};

namespace detail {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string format_ladder(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace detail

inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "experiment=" << c.experiment << "\n";
  os << "model=" << c.model << "\n";
  os << "g11=" << detail::format_double(c.g11) << "\n";
  os << "g12=" << detail::format_double(c.g12) << "\n";
  os << "g22=" << detail::format_double(c.g22) << "\n";
  os << "a=" << detail::format_double(c.a) << "\n";
  os << "b=" << detail::format_double(c.b) << "\n";
  os << "A=" << detail::format_double(c.A) << "\n";
  os << "energy=" << detail::format_double(c.energy) << "\n";
  os << "eps_ladder=" << detail::format_ladder(c.eps_ladder) << "\n";
  os << "horizon_exp_lo=" << c.horizon_exp_lo << "\n";
  os << "horizon_exp_hi=" << c.horizon_exp_hi << "\n";
  os << "time_unit=" << detail::format_double(c.time_unit) << "\n";
  os << "ensemble=" << c.ensemble << "\n";
  os << "scheme=" << c.scheme << "\n";
  os << "m_lo=" << c.m_lo << "\n";
  os << "m_hi=" << c.m_hi << "\n";
  os << "grid=" << c.grid << "\n";
  os << "curve_samples=" << c.curve_samples << "\n";
  os << "dt=" << detail::format_double(c.dt) << "\n";
  os << "dt_sample=" << detail::format_double(c.dt_sample) << "\n";
  os << "seed=" << c.seed << "\n";
  os << "threads=" << c.threads << "\n";
  os << "out_dir=" << c.out_dir << "\n";
  return os.str();
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
      line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    line = line.substr(start);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DomainError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    auto as_double = [&] { return std::stod(val); };
    auto as_int = [&] { return std::stoi(val); };
    if (key == "experiment") c.experiment = val;
    else if (key == "model") c.model = val;
    else if (key == "g11") c.g11 = as_double();
    else if (key == "g12") c.g12 = as_double();
    else if (key == "g22") c.g22 = as_double();
    else if (key == "a") c.a = as_double();
    else if (key == "b") c.b = as_double();
    else if (key == "A") c.A = as_double();
    else if (key == "energy") c.energy = as_double();
    else if (key == "eps_ladder") {
      c.eps_ladder.clear();
      std::istringstream ls(val);
      std::string tok;
      while (std::getline(ls, tok, ',')) c.eps_ladder.push_back(std::stod(tok));
      if (c.eps_ladder.empty()) throw DomainError("config: empty eps_ladder");
    } else if (key == "horizon_exp_lo") c.horizon_exp_lo = as_int();
    else if (key == "horizon_exp_hi") c.horizon_exp_hi = as_int();
    else if (key == "time_unit") c.time_unit = as_double();
    else if (key == "ensemble") c.ensemble = as_int();
    else if (key == "scheme") c.scheme = val;
    else if (key == "m_lo") c.m_lo = as_int();
    else if (key == "m_hi") c.m_hi = as_int();
    else if (key == "grid") c.grid = as_int();
    else if (key == "curve_samples") c.curve_samples = as_int();
    else if (key == "dt") c.dt = as_double();
    else if (key == "dt_sample") c.dt_sample = as_double();
    else if (key == "seed") c.seed = std::stoull(val);
    else if (key == "threads") c.threads = as_int();
    else if (key == "out_dir") c.out_dir = val;
    else throw DomainError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  // schema checks before any computation
  if (c.horizon_exp_hi < c.horizon_exp_lo) throw DomainError("config: horizon ladder inverted");
  if (c.ensemble < 1) throw DomainError("config: ensemble must be positive");
  if (c.m_lo < 1 || c.m_hi < c.m_lo) throw DomainError("config: bad m range");
  if (!(c.dt > 0.0) || !(c.time_unit > 0.0)) throw DomainError("config: bad time steps");
  (void)c.build_model();
  return c;
}

inline bool operator==(const ExperimentConfig& x, const ExperimentConfig& y) {
  return serialize_config(x) == serialize_config(y);
}

}  // namespace hpol

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "hpol/errors.hpp"
#include "hpol/integrate.hpp"
#include "hpol/slope.hpp"

namespace hpol {

using Json = nlohmann::json;

inline void write_text_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open for writing: " + path);
  out << content;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string csv_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// (eps, T, count) rows for every ladder point of a slope fit
inline std::string counts_csv(const SlopeFit& fit) {
  std::string out = "eps,horizon,count,saturated\n";
  for (const auto& row : fit.rows) {
    for (std::size_t h = 0; h < row.horizons.size(); ++h) {
      out += csv_double(row.eps) + "," + csv_double(row.horizons[h]) + "," +
             std::to_string(row.counts[h]) + "," + std::to_string(static_cast<int>(row.saturated[h])) +
             "\n";
    }
  }
  return out;
}

inline Json slope_fit_json(const SlopeFit& fit) {
  Json rows = Json::array();
  for (const auto& r : fit.rows) {
    Json j;
    j["eps"] = r.eps;
    if (r.slope) j["slope"] = *r.slope;
    j["spread"] = std::isfinite(r.spread) ? r.spread : -1.0;
    j["contributing"] = r.contributing;
    j["saturation_warning"] = r.saturation_warning;
    rows.push_back(j);
  }
  Json out;
  out["scheme"] = fit.scheme;
  out["ensemble_size"] = fit.ensemble_size;
  out["rows"] = rows;
  const auto stable = fit.max_stable_slope();
  if (stable) out["max_stable_slope"] = *stable;
  return out;
}

// (t, q1, q2, p1, p2, H) rows
inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,q1,q2,p1,p2,H\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj.at(k);
    out += csv_double(k * traj.dt_sample) + "," + csv_double(s.q.q1) + "," + csv_double(s.q.q2) +
           "," + csv_double(s.p.x) + "," + csv_double(s.p.y) + "," + csv_double(traj.energy[k]) +
           "\n";
  }
  return out;
}

}  // namespace hpol

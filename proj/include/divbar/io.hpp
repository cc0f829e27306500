#pragma once

// CSV artifacts (12 significant digits) and JSON metadata sidecars.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "divbar/errors.hpp"
#include "divbar/mc.hpp"
#include "divbar/model.hpp"
#include "divbar/pde.hpp"
#include "divbar/verification.hpp"

namespace divbar::io {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write to " + path.string() + " failed");
}

inline std::string boundary_csv(const Boundary& b) {
  std::string s = "t,b\n";
  for (std::size_t i = 0; i < b.count(); ++i) s += fmt(b.grid()[i]) + "," + fmt(b[i]) + "\n";
  return s;
}

/// Reads a `t,b` file back into a Boundary; the file must satisfy the
/// boundary invariants.
inline Boundary read_boundary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,b")
    throw ConfigError(path.string() + ": expected header 't,b'");
  std::vector<double> t, b;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError(path.string() + ": malformed row '" + line + "'");
    try {
      t.push_back(std::stod(line.substr(0, comma)));
      b.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ": malformed row '" + line + "'");
    }
  }
  return Boundary(TimeGrid(std::move(t)), std::move(b));
}

/// Header row of x-nodes after a leading `t`, then one row per time node.
inline std::string surface_csv(const ValueSurface& s) {
  std::ostringstream out;
  out << "t";
  for (double x : s.space_grid().nodes()) out << "," << fmt(x);
  out << "\n";
  for (std::size_t i = 0; i < s.rows(); ++i) {
    out << fmt(s.time_grid()[i]);
    for (double v : s.row(i)) out << "," << fmt(v);
    out << "\n";
  }
  return out.str();
}

struct EstimateRow {
  std::string label;
  double t;
  double x;
  McEstimate est;
  double dt;
};

inline std::string estimates_csv(const std::vector<EstimateRow>& rows) {
  std::string s = "label,t,x,mean,std_error,ci_lo,ci_hi,n_paths,dt,seed\n";
  for (const auto& r : rows) {
    s += r.label + "," + fmt(r.t) + "," + fmt(r.x) + "," + fmt(r.est.mean) + "," +
         fmt(r.est.std_error) + "," + fmt(r.est.ci_lo) + "," + fmt(r.est.ci_hi) + "," +
         std::to_string(r.est.n_paths) + "," + fmt(r.dt) + "," + std::to_string(r.est.seed) + "\n";
  }
  return s;
}

inline std::string report_csv(const VerificationReport& rep) {
  std::string s = "check,value,tolerance,pass\n";
  for (const auto& c : rep.checks())
    s += c.name + "," + fmt(c.value) + "," + fmt(c.tolerance) + "," + (c.pass ? "1" : "0") + "\n";
  return s;
}

inline nlohmann::ordered_json grid_meta(std::span<const double> nodes) {
  return {{"count", nodes.size()}, {"first", nodes.front()}, {"last", nodes.back()}};
}

/// Writes `text` to dir/name and `meta` to dir/<stem>.meta.json.
inline void write_with_sidecar(const std::filesystem::path& dir, const std::string& name,
                               const std::string& text, const nlohmann::ordered_json& meta) {
  write_text(dir / name, text);
  const auto stem = std::filesystem::path(name).stem().string();
  write_text(dir / (stem + ".meta.json"), meta.dump(2) + "\n");
}

}  // namespace divbar::io

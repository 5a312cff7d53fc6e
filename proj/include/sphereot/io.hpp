#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sphereot/common.hpp"
#include "sphereot/dssw.hpp"
#include "sphereot/flows.hpp"
#include "sphereot/sphere.hpp"

namespace sphereot {

// ---------------------------------------------------------------------------
// Sample files: CSV, one point per row, header "x0,...,x{d-1}". Rows are
// L2-normalized on load; deviations beyond 1e-6 warn and beyond 1e-3 reject.
// ---------------------------------------------------------------------------

inline std::string expected_sample_header(int d) {
  std::string h;
  for (int j = 0; j < d; ++j) {
    if (j) h += ',';
    h += "x" + std::to_string(j);
  }
  return h;
}

inline Mat load_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sample file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty sample file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  int d = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
  if (line != expected_sample_header(d))
    throw ConfigError("bad sample header in " + path + "; expected " +
                      expected_sample_header(d));
  if (d < 2) throw ConfigError("sample files need d >= 2 columns");

  std::vector<double> values;
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      size_t used = 0;
      double v = std::stod(cell, &used);
      if (used != cell.size()) throw ConfigError("bad number in " + path + ": " + cell);
      values.push_back(v);
      ++cols;
    }
    if (cols != d) throw ConfigError("ragged row in sample file: " + path);
    ++rows;
  }
  if (rows == 0) throw ConfigError("sample file has no rows: " + path);

  Mat pts(rows, d);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = values[static_cast<size_t>(i) * d + j];

  double dev = max_row_norm_deviation(pts);
  if (dev > 1e-3)
    throw ConfigError("sample norms deviate from 1 by " + std::to_string(dev) +
                      " (> 1e-3): " + path);
  if (dev > 1e-6)
    log_msg(LogLevel::Warn,
            "sample norms deviate from 1 by up to " + std::to_string(dev) +
                "; renormalizing " + path);
  return normalize_rows(std::move(pts));
}

inline void save_samples_csv(const std::string& path, const Mat& pts) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write sample file: " + path);
  out << expected_sample_header(static_cast<int>(pts.cols())) << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", pts(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Reports and traces
// ---------------------------------------------------------------------------

/// JSON form of a distance report. Timing is zeroed unless requested so
/// that identical (config, seed) runs emit identical bytes.
inline nlohmann::json report_to_json(const DistanceReport& rep,
                                     bool include_timing = false) {
  nlohmann::json j;
  j["value"] = rep.value;
  j["frames_seed"] = rep.frames_seed;
  j["prefactor"] = rep.prefactor;
  j["wallclock_seconds"] = include_timing ? rep.wallclock_seconds : 0.0;
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& e : rep.per_direction)
    dirs.push_back({{"distance", e.distance}, {"weight", e.weight}});
  j["per_direction"] = std::move(dirs);
  return j;
}

inline DistanceReport report_from_json(const nlohmann::json& j) {
  DistanceReport rep;
  rep.value = j.at("value").get<double>();
  rep.frames_seed = j.at("frames_seed").get<uint64_t>();
  rep.prefactor = j.at("prefactor").get<double>();
  rep.wallclock_seconds = j.at("wallclock_seconds").get<double>();
  for (const auto& e : j.at("per_direction"))
    rep.per_direction.push_back(
        {e.at("distance").get<double>(), e.at("weight").get<double>()});
  return rep;
}

/// Metric trace as NDJSON rows {step, nll, log_w2, wallclock}.
inline void save_metrics_ndjson(const std::string& path,
                                const std::vector<MetricRow>& rows,
                                bool include_timing = false) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write metrics file: " + path);
  for (const auto& r : rows) {
    nlohmann::json j;
    j["step"] = r.step;
    j["nll"] = r.nll;
    j["log_w2"] = r.log_w2;
    j["wallclock"] = include_timing ? r.wallclock : 0.0;
    out << j.dump() << "\n";
  }
}

/// Particle snapshots as CSV rows (step, particle_id, x0..x{d-1}).
inline void save_trajectory_csv(const std::string& path,
                                const std::vector<std::pair<int, Mat>>& snapshots) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trajectory file: " + path);
  if (snapshots.empty()) return;
  int d = static_cast<int>(snapshots.front().second.cols());
  out << "step,particle_id";
  for (int j = 0; j < d; ++j) out << ",x" << j;
  out << "\n";
  char buf[32];
  for (const auto& [step, pts] : snapshots) {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      out << step << ',' << i;
      for (Eigen::Index j = 0; j < pts.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", pts(i, j));
        out << ',' << buf;
      }
      out << "\n";
    }
  }
}

}  // namespace sphereot

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cosdf/experiments/aircraft_table.hpp"
#include "cosdf/experiments/disk.hpp"
#include "cosdf/experiments/runner.hpp"

namespace cosdf::experiments {

/// One point of a tidy plot series.
struct PlotPoint {
  double x = 0.0;
  std::string method;
  double mean = 0.0;
  double std = 0.0;
};

inline constexpr const char* kPlotHeader = "x,method,mean,std";

/// Accuracy against dimension, one series per method.
inline std::vector<PlotPoint> disk_plot_points(const DiskTable& t) {
  std::vector<PlotPoint> pts;
  for (const auto& s : t.summary)
    pts.push_back({static_cast<double>(s.dimension), s.method, s.accuracy.mean, s.accuracy.std});
  return pts;
}

/// Speed of the current iterate against iteration, averaged over trials.
/// Runs that stopped early hold their last value.
inline std::vector<PlotPoint> aircraft_plot_points(const std::vector<std::string>& methods,
                                                   const std::vector<std::string>& run_methods,
                                                   const std::vector<std::vector<double>>& speeds) {
  std::vector<PlotPoint> pts;
  for (const auto& m : methods) {
    std::vector<const std::vector<double>*> runs;
    std::size_t len = 0;
    for (std::size_t i = 0; i < run_methods.size(); ++i)
      if (run_methods[i] == m && !speeds[i].empty()) {
        runs.push_back(&speeds[i]);
        len = std::max(len, speeds[i].size());
      }
    for (std::size_t k = 0; k < len; ++k) {
      std::vector<double> xs;
      for (const auto* r : runs) xs.push_back(k < r->size() ? (*r)[k] : r->back());
      const auto ms = mean_std(xs);
      pts.push_back({static_cast<double>(k + 1), m, ms.mean, ms.std});
    }
  }
  return pts;
}

inline std::vector<PlotPoint> aircraft_plot_points(const AircraftTable& t) {
  std::vector<std::string> methods, run_methods;
  std::vector<std::vector<double>> speeds;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (std::find(methods.begin(), methods.end(), t.rows[i].method) == methods.end())
      methods.push_back(t.rows[i].method);
    run_methods.push_back(t.rows[i].method);
    std::vector<double> v;
    for (const auto& r : t.histories[i].records) v.push_back(r.z[aircraft::SharedIndex::kSpeed]);
    speeds.push_back(std::move(v));
  }
  return aircraft_plot_points(methods, run_methods, speeds);
}

inline void write_plot_csv(std::ostream& out, const std::vector<PlotPoint>& pts) {
  out << kPlotHeader << '\n';
  for (const auto& p : pts) out << fmt(p.x) << ',' << p.method << ',' << fmt(p.mean) << ',' << fmt(p.std) << '\n';
}

inline void save_plot_csv(const std::string& path, const std::vector<PlotPoint>& pts) {
  if (pts.empty()) throw InvalidInput("no plot data for " + path);
  auto out = open_output(path);
  write_plot_csv(out, pts);
  close_output(out, path);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

/// Rows of a headed CSV as column-name maps.
inline std::vector<std::map<std::string, std::string>> read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path + " is empty");
  const auto header = split_csv_line(line);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw InvalidInput(path + ": wrong cell count");
    std::map<std::string, std::string> row;
    for (std::size_t k = 0; k < header.size(); ++k) row[header[k]] = cells[k];
    rows.push_back(std::move(row));
  }
  return rows;
}

inline double parse_number(const std::string& s, const std::string& path) {
  if (s.empty()) return std::nan("");
  try {
    return std::stod(s);
  } catch (const std::logic_error&) {
    throw InvalidInput(path + ": unparsable number '" + s + "'");
  }
}

}  // namespace detail

/// Rebuilds plot points from a finished disk-benchmark directory.
inline std::vector<PlotPoint> load_disk_plot_points(const std::string& dir) {
  const auto path = (std::filesystem::path(dir) / "disk_summary.csv").string();
  std::vector<PlotPoint> pts;
  for (const auto& r : detail::read_csv_table(path))
    pts.push_back({detail::parse_number(r.at("dimension"), path), r.at("method"),
                   detail::parse_number(r.at("mean_accuracy"), path), detail::parse_number(r.at("std_accuracy"), path)});
  return pts;
}

/// Rebuilds plot points from the run histories of a finished aircraft directory.
inline std::vector<PlotPoint> load_aircraft_plot_points(const std::string& dir) {
  const auto root = std::filesystem::path(dir);
  const auto results = (root / "aircraft_results.csv").string();
  std::vector<std::string> methods, run_methods;
  std::vector<std::vector<double>> speeds;
  for (const auto& r : detail::read_csv_table(results)) {
    const auto& m = r.at("method");
    if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
    run_methods.push_back(m);
    std::vector<double> v;
    const auto hist = root / "histories" / (m + "_" + r.at("trial") + ".csv");
    if (std::filesystem::exists(hist)) {
      const auto hp = hist.string();
      for (const auto& h : detail::read_csv_table(hp)) v.push_back(detail::parse_number(h.at("V"), hp));
    }
    speeds.push_back(std::move(v));
  }
  return aircraft_plot_points(methods, run_methods, speeds);
}

/// Writes the plot CSVs for every result set found in `input` into `output`.
/// Returns the files written.
inline std::vector<std::string> export_plot_data(const std::string& input, const std::string& output) {
  const auto in = std::filesystem::path(input);
  if (!std::filesystem::is_directory(in)) throw IoError("no result directory " + input);
  ensure_directory(output);
  std::vector<std::string> files;
  if (std::filesystem::exists(in / "disk_summary.csv")) {
    const auto p = (std::filesystem::path(output) / "disk_accuracy_plot.csv").string();
    save_plot_csv(p, load_disk_plot_points(input));
    files.push_back(p);
  }
  if (std::filesystem::exists(in / "aircraft_results.csv")) {
    const auto p = (std::filesystem::path(output) / "aircraft_speed_plot.csv").string();
    save_plot_csv(p, load_aircraft_plot_points(input));
    files.push_back(p);
  }
  if (files.empty()) throw InvalidInput("no disk or aircraft results in " + input);
  return files;
}

}  // namespace cosdf::experiments

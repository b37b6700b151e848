#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cosdf/core/types.hpp"

namespace cosdf::sdf {

/// One subspace evaluation turned into training data.
struct LabeledSample {
  DesignPoint z;
  bool feasible = true;
  /// Squared distance from z to the feasible set.
  double j_star = 0.0;
  std::optional<DesignPoint> z_proj;
  /// (z - z_proj) / |z - z_proj|, the gradient of sqrt(J*).
  std::optional<Vec> grad_sqrt_j;

  static LabeledSample feasible_at(DesignPoint z) {
    LabeledSample s;
    s.z = std::move(z);
    return s;
  }

  /// Labels from a projection result. Points with j_star <= threshold (or a
  /// degenerate projection direction) are feasible.
  static LabeledSample from_projection(DesignPoint z, const DesignPoint& z_proj, double threshold) {
    LabeledSample s;
    const Vec diff = z - z_proj;
    const double dist = diff.norm();
    s.j_star = dist * dist;
    s.z = std::move(z);
    if (s.j_star <= threshold || dist == 0.0) {
      s.feasible = true;
      return s;
    }
    s.feasible = false;
    s.z_proj = z_proj;
    s.grad_sqrt_j = diff / dist;
    return s;
  }
};

using Dataset = std::vector<LabeledSample>;

namespace detail {
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

/// CSV with header z0..,feasible,j_star,zp0..,g0..; projection and gradient
/// cells are empty for feasible rows.
inline void write_dataset_csv(std::ostream& out, const Dataset& data) {
  if (data.empty()) return;
  const auto d = data.front().z.size();
  for (Eigen::Index i = 0; i < d; ++i) out << 'z' << i << ',';
  out << "feasible,j_star";
  for (Eigen::Index i = 0; i < d; ++i) out << ",zp" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",g" << i;
  out << '\n';
  for (const auto& s : data) {
    for (Eigen::Index i = 0; i < d; ++i) out << detail::fmt(s.z[i]) << ',';
    out << (s.feasible ? 1 : 0) << ',' << detail::fmt(s.j_star);
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << (s.z_proj ? detail::fmt((*s.z_proj)[i]) : "");
    for (Eigen::Index i = 0; i < d; ++i)
      out << ',' << (s.grad_sqrt_j ? detail::fmt((*s.grad_sqrt_j)[i]) : "");
    out << '\n';
  }
}

inline Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("dataset CSV is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 5 || (header.size() - 2) % 3 != 0) throw InvalidInput("malformed dataset header");
  const auto d = static_cast<Eigen::Index>((header.size() - 2) / 3);
  Dataset data;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    while (cells.size() < header.size()) cells.emplace_back();
    if (cells.size() != header.size()) throw InvalidInput("dataset row " + std::to_string(row) + ": wrong cell count");
    LabeledSample s;
    s.z.resize(d);
    try {
      for (Eigen::Index i = 0; i < d; ++i) s.z[i] = std::stod(cells[static_cast<std::size_t>(i)]);
      s.feasible = std::stoi(cells[static_cast<std::size_t>(d)]) != 0;
      s.j_star = std::stod(cells[static_cast<std::size_t>(d + 1)]);
      if (!s.feasible) {
        Vec zp(d), g(d);
        for (Eigen::Index i = 0; i < d; ++i) {
          zp[i] = std::stod(cells[static_cast<std::size_t>(d + 2 + i)]);
          g[i] = std::stod(cells[static_cast<std::size_t>(2 * d + 2 + i)]);
        }
        s.z_proj = zp;
        s.grad_sqrt_j = g;
      }
    } catch (const std::logic_error&) {
      throw InvalidInput("dataset row " + std::to_string(row) + ": unparsable number");
    }
    data.push_back(std::move(s));
  }
  return data;
}

inline void save_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_dataset_csv(out, data);
}

inline Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return read_dataset_csv(in);
}

}  // namespace cosdf::sdf

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cosdf/core/types.hpp"
#include "cosdf/experiments/config.hpp"

namespace cosdf::experiments {

/// Thread count after applying the COSDF_MAX_THREADS cap.
inline int effective_jobs(int requested) {
  int jobs = std::max(1, requested);
  if (const char* cap = std::getenv("COSDF_MAX_THREADS")) {
    const int c = std::atoi(cap);
    if (c >= 1) jobs = std::min(jobs, c);
  }
  return jobs;
}

/// Runs task(i) for i in [0, n) on up to `jobs` threads. Tasks write their
/// own result slots, so the outcome does not depend on scheduling.
inline void run_tasks(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  const auto threads = static_cast<std::size_t>(std::min<std::size_t>(effective_jobs(jobs), n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) task(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::string fmt(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct MeanStd {
  double mean = std::nan("");
  double std = std::nan("");
  std::size_t n = 0;
};

/// Mean and sample standard deviation; std is 0 for a single value.
inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  r.n = xs.size();
  if (xs.empty()) return r;
  double s = 0.0;
  for (double x : xs) s += x;
  r.mean = s / static_cast<double>(xs.size());
  if (xs.size() == 1) {
    r.std = 0.0;
    return r;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return r;
}

/// Median; the mean of the middle pair for even counts.
inline double median(std::vector<double> xs) {
  if (xs.empty()) return std::nan("");
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

inline void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create directory " + dir);
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

inline void close_output(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path);
}

/// manifest.json with the configuration echo, seed, toolkit version and the
/// files written next to it.
inline void write_manifest(const std::string& dir, const ExperimentConfig& cfg, const std::vector<std::string>& files) {
  nlohmann::json j;
  j["toolkit"] = "cosdf";
  j["version"] = kToolkitVersion;
  j["experiment"] = to_string(cfg.experiment);
  j["seed"] = cfg.seed;
  j["config"] = to_json(cfg);
  j["files"] = files;
  const std::string path = (std::filesystem::path(dir) / "manifest.json").string();
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  close_output(out, path);
}

}  // namespace cosdf::experiments

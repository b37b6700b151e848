#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "cosdf/experiments/aircraft_table.hpp"
#include "cosdf/experiments/config.hpp"
#include "cosdf/experiments/disk.hpp"
#include "cosdf/experiments/plots.hpp"
#include "cosdf/nn/serialize.hpp"

using namespace cosdf;
using namespace cosdf::experiments;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kTrialError = 3, kIoError = 4 };

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> trials;
  std::optional<int> jobs;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON configuration file");
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--trials", f.trials, "Number of trials");
  app->add_option("--jobs", f.jobs, "Worker threads (capped by COSDF_MAX_THREADS)");
}

ExperimentConfig resolve(const CommonFlags& f, Experiment e) {
  ExperimentConfig c = f.config.empty() ? default_config(e) : load_config(f.config, e);
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.output = *f.out;
  if (f.trials) c.trials = *f.trials;
  if (f.jobs) c.jobs = *f.jobs;
  c.validate();
  return c;
}

void report_written(const std::string& dir, const std::vector<std::string>& files) {
  for (const auto& f : files) std::cerr << "wrote " << (std::filesystem::path(dir) / f).string() << '\n';
}

int disk_benchmark(const CommonFlags& flags) {
  const auto cfg = resolve(flags, Experiment::DiskBenchmark);
  const auto table = run_disk_benchmark(cfg);
  report_written(cfg.output, save_disk_benchmark(cfg, table));
  for (const auto& s : table.summary)
    std::cout << s.method << " d=" << s.dimension << " accuracy " << s.accuracy.mean << " +/- " << s.accuracy.std
              << '\n';
  return table.any_error() ? kTrialError : kOk;
}

int aircraft_table(const CommonFlags& flags) {
  const auto cfg = resolve(flags, Experiment::Aircraft);
  const auto table = run_aircraft(cfg, &std::cerr);
  report_written(cfg.output, save_aircraft(cfg, table));
  for (const auto& s : table.summary) {
    std::cout << s.method << ": iterations " << s.iterations.mean << " +/- " << s.iterations.std << " (median "
              << s.median_iterations << ")";
    for (std::size_t k = 0; k < s.evaluations.size(); ++k)
      std::cout << ", " << table.discipline_names[k] << " evaluations " << s.evaluations[k].mean << " +/- "
                << s.evaluations[k].std;
    std::cout << ", failures " << s.failures << '/' << s.trials << '\n';
  }
  return table.any_error() ? kTrialError : kOk;
}

int train_sdf_command(const CommonFlags& flags, const std::string& data_flag) {
  auto cfg = resolve(flags, Experiment::TrainSdf);
  if (!data_flag.empty()) cfg.dataset = data_flag;
  sdf::Dataset train, test;
  if (cfg.dataset.empty()) {
    const auto ds = problems::make_disk_dataset(cfg.dimensions.front(), cfg.n_train, cfg.n_test, cfg.seed);
    train = ds.train;
    test = ds.test;
  } else {
    train = sdf::load_dataset_csv(cfg.dataset);
  }
  if (train.empty()) throw InvalidInput("training dataset is empty");
  const auto dim = train.front().z.size();
  sdf::TrainConfig tc = cfg.train_config();
  tc.seed = cfg.seed;
  Vec lo = train.front().z, hi = train.front().z;
  for (const auto& s : train) {
    lo = lo.cwiseMin(s.z);
    hi = hi.cwiseMax(s.z);
  }
  if (cfg.dataset.empty()) {
    lo = Vec::Constant(dim, -problems::kHypersphereHalfWidth);
    hi = Vec::Constant(dim, problems::kHypersphereHalfWidth);
  } else {
    // Regularization box: the data's bounding box, widened where degenerate.
    const Vec pad = ((hi - lo) * 0.05).cwiseMax(1e-3);
    lo -= pad;
    hi += pad;
  }
  tc.box_lower = lo;
  tc.box_upper = hi;
  const auto net = sdf::train_sdf(train, tc);

  ensure_directory(cfg.output);
  const auto dir = std::filesystem::path(cfg.output);
  std::vector<std::string> files = {"network.json", "training_summary.csv"};
  nn::save_network(net, (dir / files[0]).string());
  {
    const auto p = (dir / files[1]).string();
    auto out = open_output(p);
    out << "split,samples,accuracy\n";
    out << "train," << train.size() << ',' << fmt(sdf::accuracy(net, train, sdf::ModelKind::Sdf)) << '\n';
    if (!test.empty()) out << "test," << test.size() << ',' << fmt(sdf::accuracy(net, test, sdf::ModelKind::Sdf)) << '\n';
    close_output(out, p);
  }
  if (cfg.dataset.empty()) {
    files.push_back("train_data.csv");
    sdf::save_dataset_csv((dir / files.back()).string(), train);
  }
  write_manifest(cfg.output, cfg, files);
  report_written(cfg.output, files);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative optimization with signed-distance surrogates"};
  app.require_subcommand(1);

  CommonFlags disk_flags, air_flags, train_flags;
  std::string data_path, plot_input, plot_out;
  auto* disk = app.add_subcommand("disk-benchmark", "Classifier accuracy against input dimension");
  add_common(disk, disk_flags);
  auto* air = app.add_subcommand("aircraft", "Aircraft design comparison of DirectCO, GP and SDF");
  add_common(air, air_flags);
  auto* train = app.add_subcommand("train-sdf", "Train one SDF network on a dataset CSV or a disk dataset");
  add_common(train, train_flags);
  train->add_option("--data", data_path, "Dataset CSV (defaults to a generated disk dataset)");
  auto* plots = app.add_subcommand("export-plots", "Write tidy x,method,mean,std CSVs from a result directory");
  plots->add_option("--input", plot_input, "Result directory")->required();
  plots->add_option("--out", plot_out, "Output directory (defaults to the input directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*disk) return disk_benchmark(disk_flags);
    if (*air) return aircraft_table(air_flags);
    if (*train) return train_sdf_command(train_flags, data_path);
    if (*plots) {
      for (const auto& f : export_plot_data(plot_input, plot_out.empty() ? plot_input : plot_out))
        std::cerr << "wrote " << f << '\n';
      return kOk;
    }
  } catch (const InvalidConfig& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kTrialError;
  }
  return kOk;
}

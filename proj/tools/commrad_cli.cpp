#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "commrad/harness.hpp"

using namespace commrad;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed) cfg = cfg.with_seed(*seed);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  cfg.validate();
  const auto log = run_scenario(cfg);
  write_metrics(cfg.output_dir, log);
  std::ofstream(std::filesystem::path(cfg.output_dir) / "config.json") << serialize_config(cfg);
  std::cout << summary_text(summarize(log));
  std::cout << "wrote " << cfg.output_dir << "\n";
  return 0;
}

std::vector<double> parse_periods(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("--recal-periods: cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--recal-periods: empty list");
  return out;
}

int cmd_sweep(const std::string& config_path, const std::string& periods, const std::vector<std::uint64_t>& seeds,
              const std::string& out_dir, int threads) {
  ExperimentConfig cfg = load_config(config_path);
  const std::filesystem::path dir = out_dir.empty() ? cfg.output_dir : out_dir;
  std::vector<std::uint64_t> seed_list = seeds;
  if (seed_list.empty()) seed_list.push_back(cfg.scene.seed);
  const auto points = run_sweep(cfg, parse_periods(periods), seed_list, dir, threads);
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "sweep.csv");
  write_sweep_csv(csv, points);
  std::ostringstream text;
  write_sweep_csv(text, points);
  std::cout << text.str() << "wrote " << (dir / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_report(const std::string& in_dir) {
  const auto summary = summarize(read_metrics(in_dir));
  write_cdf_tables(in_dir, summary);
  std::ofstream(std::filesystem::path(in_dir) / kSummaryJson) << summary_json(summary);
  std::cout << summary_text(summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar-aided mmWave beam management simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, periods, in_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  int threads = 0;

  auto* run = app.add_subcommand("run", "Simulate one scenario and write metrics");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Override the scene seed");
  run->add_option("--out", out_dir, "Output directory (default: output_dir from the config)");

  auto* sweep = app.add_subcommand("sweep", "Run a scenario across recalibration periods");
  sweep->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sweep->add_option("--recal-periods", periods, "Comma-separated periods in seconds")->required();
  sweep->add_option("--seeds", seeds, "Seeds to run for every period")->delimiter(',');
  sweep->add_option("--out", out_dir, "Output directory");
  sweep->add_option("--threads", threads, "Worker threads (default: hardware concurrency)");

  auto* report = app.add_subcommand("report", "CDF tables and a text summary from a run directory");
  report->add_option("--in", in_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, seed, out_dir);
    if (*sweep) return cmd_sweep(config_path, periods, seeds, out_dir, threads);
    return cmd_report(in_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

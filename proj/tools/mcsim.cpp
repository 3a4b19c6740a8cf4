// Command-line front end: runs a distance or capacity sweep and writes CSVs.

#include <cstdio>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "mcsim/config.hpp"
#include "mcsim/scenario.hpp"

namespace {

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string out = "out";
  int seeds = 0;
  int parallel = 1;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "flat key=value config file");
  cmd->add_option("--set", o.sets, "override one key (key=value), repeatable");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--seeds", o.seeds, "number of runs per point (overrides `runs`)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--parallel", o.parallel, "worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_flag("--quiet", o.quiet, "no progress output");
}

int run(mcsim::ScenarioKind kind, const Options& o) {
  mcsim::ScenarioConfig cfg = mcsim::load_config(o.config, o.sets);
  cfg.scenario = kind;
  if (o.seeds > 0) cfg.runs = o.seeds;
  cfg.validate();

  int parallel = o.parallel;
  if (parallel == 0) parallel = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  std::function<void(std::size_t, std::size_t)> progress;
  if (!o.quiet) {
    progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % 10 == 0) {
        std::fprintf(stderr, "\r%zu/%zu runs", done, total);
        if (done == total) std::fputc('\n', stderr);
      }
    };
  }
  const auto result = mcsim::run_sweep(cfg, parallel, progress);
  mcsim::write_outputs(cfg, result, o.out);
  std::cout << mcsim::summary_text(cfg, result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-connectivity video downlink simulator"};
  app.set_version_flag("--version", std::string(mcsim::kVersion));
  app.require_subcommand(1);

  Options distance_opts;
  Options capacity_opts;
  auto* distance = app.add_subcommand("sweep-distance", "single UE at each configured distance");
  auto* capacity = app.add_subcommand("sweep-capacity", "N randomly dropped UEs for each configured N");
  add_common(distance, distance_opts);
  add_common(capacity, capacity_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (distance->parsed()) return run(mcsim::ScenarioKind::single_ue_distance_sweep, distance_opts);
    return run(mcsim::ScenarioKind::multi_ue_capacity_sweep, capacity_opts);
  } catch (const mcsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

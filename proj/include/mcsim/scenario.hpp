#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mcsim/config.hpp"
#include "mcsim/metrics.hpp"
#include "mcsim/network.hpp"

namespace mcsim {

inline constexpr const char* kVersion = "0.1.0";

/// Hexagonal cell with both gNBs on one vertex; the farthest point (the
/// opposite vertex) lies at max_distance_m.
struct CellGeometry {
  double max_distance_m = 133.0;

  double circumradius() const { return max_distance_m / 2.0; }
  bool contains(double x, double y) const;  // centre at the origin
  /// Ground distance from the gNB vertex to (x, y).
  double distance_to_gnb(double x, double y) const;
};

/// Uniform drop of `n` UEs inside the hexagon; returns their gNB distances.
std::vector<double> drop_ues(int n, const CellGeometry& geometry, RngStream& rng);

/// One (point, policy, seed) job of a sweep.
struct Job {
  std::string point_id;  // distance in metres or UE count
  double point = 0.0;
  Policy policy = Policy::dbtb;
  int run_index = 0;
  RunSpec spec;
};

/// All jobs of the configured sweep, in output order (point, policy, run).
std::vector<Job> plan_jobs(const ScenarioConfig& cfg);

struct AggregateRow {
  std::string point_id;
  double point = 0.0;
  Policy policy = Policy::dbtb;
  int runs = 0;
  MeanCi flr;
  MeanCi satisfied;  // per-run satisfied-UE ratio
  MeanCi fr1_usage;
  MeanCi fr2_usage;
};

struct SweepResult {
  std::vector<Job> jobs;
  std::vector<RunResult> runs;  // parallel to jobs
  std::vector<AggregateRow> aggregates;
};

/// Runs every job, `parallel` at a time. The result does not depend on
/// `parallel`. Failing jobs are rethrown with their (point, policy, seed).
SweepResult run_sweep(const ScenarioConfig& cfg, int parallel = 1,
                      const std::function<void(std::size_t, std::size_t)>& progress = {});

std::vector<AggregateRow> aggregate(const ScenarioConfig& cfg, const std::vector<Job>& jobs,
                                    const std::vector<RunResult>& runs);

/// Capacity per policy for a multi-UE sweep (policies in config order).
std::vector<std::pair<Policy, Capacity>> capacities(const ScenarioConfig& cfg,
                                                    const std::vector<AggregateRow>& rows);

std::string config_header(const ScenarioConfig& cfg);
std::string raw_csv(const ScenarioConfig& cfg, const SweepResult& r);
std::string aggregate_csv(const ScenarioConfig& cfg, const SweepResult& r);
std::string summary_text(const ScenarioConfig& cfg, const SweepResult& r);

/// Writes raw.csv, aggregate.csv and summary.txt into `out_dir`.
void write_outputs(const ScenarioConfig& cfg, const SweepResult& r,
                   const std::filesystem::path& out_dir);

}  // namespace mcsim

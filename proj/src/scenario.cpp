#include "mcsim/scenario.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mcsim {

// Flat-top hexagon centred at the origin; the gNB sits on the vertex (-R, 0).
bool CellGeometry::contains(double x, double y) const {
  const double r = circumradius();
  const double s3 = std::numbers::sqrt3;
  return std::abs(y) <= s3 / 2.0 * r && s3 * std::abs(x) + std::abs(y) <= s3 * r;
}

double CellGeometry::distance_to_gnb(double x, double y) const {
  return std::hypot(x + circumradius(), y);
}

std::vector<double> drop_ues(int n, const CellGeometry& geometry, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("drop_ues needs n >= 1");
  const double r = geometry.circumradius();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    const double x = (2.0 * rng.uniform() - 1.0) * r;
    const double y = (2.0 * rng.uniform() - 1.0) * r;
    if (!geometry.contains(x, y)) continue;
    const double d = geometry.distance_to_gnb(x, y);
    if (d <= 0.0 || d > geometry.max_distance_m) continue;
    out.push_back(d);
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<Job> plan_jobs(const ScenarioConfig& cfg) {
  std::vector<Job> jobs;
  const CellGeometry geometry{cfg.cell_max_distance_m};
  auto add = [&](const std::string& id, double point, const std::vector<double>& distances,
                 Policy p, int run) {
    Job j;
    j.point_id = id;
    j.point = point;
    j.policy = p;
    j.run_index = run;
    j.spec.policy = p;
    j.spec.distances_m = distances;
    j.spec.seed = cfg.base_seed + static_cast<std::uint64_t>(run);
    j.spec.point_id = id;
    jobs.push_back(std::move(j));
  };
  if (cfg.scenario == ScenarioKind::single_ue_distance_sweep) {
    for (double d : cfg.distances_m) {
      for (Policy p : cfg.policies) {
        for (int run = 0; run < cfg.runs; ++run) add(fmt(d), d, {d}, p, run);
      }
    }
  } else {
    for (int n : cfg.ue_counts) {
      for (int run = 0; run < cfg.runs; ++run) {
        // Drops depend on (seed, N) only, so every policy sees the same UEs.
        const std::uint64_t seed =
            cfg.freeze_drops ? cfg.base_seed : cfg.base_seed + static_cast<std::uint64_t>(run);
        RngStream rng(seed, "drop/n" + std::to_string(n));
        const auto distances = drop_ues(n, geometry, rng);
        for (Policy p : cfg.policies) add(std::to_string(n), n, distances, p, run);
      }
    }
    // Restore (point, policy, run) ordering.
    std::stable_sort(jobs.begin(), jobs.end(), [&](const Job& a, const Job& b) {
      if (a.point != b.point) return false;
      auto rank = [&](Policy p) {
        for (std::size_t i = 0; i < cfg.policies.size(); ++i) {
          if (cfg.policies[i] == p) return i;
        }
        return cfg.policies.size();
      };
      return rank(a.policy) < rank(b.policy);
    });
  }
  return jobs;
}

SweepResult run_sweep(const ScenarioConfig& cfg, int parallel,
                      const std::function<void(std::size_t, std::size_t)>& progress) {
  cfg.validate();
  SweepResult out;
  out.jobs = plan_jobs(cfg);
  out.runs.resize(out.jobs.size());

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::string error_where;
  std::mutex progress_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= out.jobs.size()) return;
      {
        std::lock_guard lock(error_mutex);
        if (error) return;
      }
      const Job& job = out.jobs[i];
      try {
        out.runs[i] = simulate(cfg, job.spec);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) {
          error = std::current_exception();
          error_where = "point " + job.point_id + ", policy " + to_string(job.policy) +
                        ", seed " + std::to_string(job.spec.seed);
        }
        return;
      }
      const std::size_t d = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(d, out.jobs.size());
      }
    }
  };

  const int n = std::max(1, parallel);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const std::exception& e) {
      throw std::runtime_error("run failed at " + error_where + ": " + e.what());
    }
  }
  out.aggregates = aggregate(cfg, out.jobs, out.runs);
  return out;
}

std::vector<AggregateRow> aggregate(const ScenarioConfig& cfg, const std::vector<Job>& jobs,
                                    const std::vector<RunResult>& runs) {
  std::vector<AggregateRow> rows;
  std::size_t i = 0;
  while (i < jobs.size()) {
    std::size_t j = i;
    std::vector<double> flrs, sat, u1, u2;
    while (j < jobs.size() && jobs[j].point_id == jobs[i].point_id &&
           jobs[j].policy == jobs[i].policy) {
      const RunResult& r = runs[j];
      for (const auto& ue : r.ues) {
        if (auto v = flr(ue)) flrs.push_back(*v);
      }
      sat.push_back(satisfied_ratio(r, cfg.traffic.flr_qos));
      u1.push_back(r.fr1_usage);
      u2.push_back(r.fr2_usage);
      ++j;
    }
    AggregateRow row;
    row.point_id = jobs[i].point_id;
    row.point = jobs[i].point;
    row.policy = jobs[i].policy;
    row.runs = static_cast<int>(j - i);
    row.flr = mean_ci(flrs);
    row.satisfied = mean_ci(sat);
    row.fr1_usage = mean_ci(u1);
    row.fr2_usage = mean_ci(u2);
    rows.push_back(row);
    i = j;
  }
  return rows;
}

std::vector<std::pair<Policy, Capacity>> capacities(const ScenarioConfig& cfg,
                                                    const std::vector<AggregateRow>& rows) {
  std::vector<std::pair<Policy, Capacity>> out;
  for (Policy p : cfg.policies) {
    std::vector<SweepPoint> points;
    for (const auto& row : rows) {
      if (row.policy == p) points.push_back({static_cast<int>(row.point), row.satisfied.mean});
    }
    std::sort(points.begin(), points.end(),
              [](const SweepPoint& a, const SweepPoint& b) { return a.n_ue < b.n_ue; });
    // Only the contiguous prefix starting at N = 1 is meaningful.
    std::size_t k = 0;
    while (k < points.size() && points[k].n_ue == static_cast<int>(k) + 1) ++k;
    points.resize(k);
    out.emplace_back(p, capacity_from_sweep(points));
  }
  return out;
}

std::string config_header(const ScenarioConfig& cfg) {
  std::ostringstream os;
  os << "# mcsim " << kVersion << "\n";
  for (const auto& [k, v] : cfg.to_map()) os << "# " << k << " = " << v << "\n";
  return os.str();
}

std::string raw_csv(const ScenarioConfig& cfg, const SweepResult& r) {
  std::ostringstream os;
  os << config_header(cfg);
  os << "scenario,policy,point,seed,ue,distance_m,flr,satisfied,fr1_usage,fr2_usage,"
        "frames_generated,frames_on_time\n";
  for (std::size_t i = 0; i < r.jobs.size(); ++i) {
    const Job& job = r.jobs[i];
    const RunResult& run = r.runs[i];
    for (const auto& ue : run.ues) {
      const auto v = flr(ue);
      os << to_string(cfg.scenario) << ',' << to_string(job.policy) << ',' << job.point_id << ','
         << run.seed << ',' << ue.ue_id << ',' << fmt(ue.distance_m) << ','
         << (v ? fmt(*v) : std::string("NA")) << ',' << (satisfied(ue, cfg.traffic.flr_qos) ? 1 : 0)
         << ',' << fmt(run.fr1_usage) << ',' << fmt(run.fr2_usage) << ',' << ue.frames_generated
         << ',' << ue.frames_on_time << '\n';
    }
  }
  return os.str();
}

std::string aggregate_csv(const ScenarioConfig& cfg, const SweepResult& r) {
  std::ostringstream os;
  os << config_header(cfg);
  os << "scenario,policy,point,runs,flr_mean,flr_ci,satisfied_mean,satisfied_ci,"
        "fr1_usage_mean,fr1_usage_ci,fr2_usage_mean,fr2_usage_ci\n";
  for (const auto& row : r.aggregates) {
    os << to_string(cfg.scenario) << ',' << to_string(row.policy) << ',' << row.point_id << ','
       << row.runs << ',' << fmt(row.flr.mean) << ',' << fmt(row.flr.half_width) << ','
       << fmt(row.satisfied.mean) << ',' << fmt(row.satisfied.half_width) << ','
       << fmt(row.fr1_usage.mean) << ',' << fmt(row.fr1_usage.half_width) << ','
       << fmt(row.fr2_usage.mean) << ',' << fmt(row.fr2_usage.half_width) << '\n';
  }
  return os.str();
}

std::string summary_text(const ScenarioConfig& cfg, const SweepResult& r) {
  std::ostringstream os;
  const bool multi = cfg.scenario == ScenarioKind::multi_ue_capacity_sweep;
  os << "scenario: " << to_string(cfg.scenario) << ", " << cfg.runs << " run(s) of "
     << fmt(cfg.sim_time) << " s per point\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %8s %10s %10s %10s %10s\n", "policy",
                multi ? "n_ue" : "dist_m", "flr", "satisfied", "fr1_use", "fr2_use");
  os << line;
  for (const auto& row : r.aggregates) {
    std::snprintf(line, sizeof line, "%-20s %8s %10.4g %10.3f %10.4f %10.4f\n",
                  to_string(row.policy), row.point_id.c_str(), row.flr.mean, row.satisfied.mean,
                  row.fr1_usage.mean, row.fr2_usage.mean);
    os << line;
  }
  if (multi) {
    os << "\ncapacity (largest N with more than 90% satisfied UEs):\n";
    for (const auto& [p, cap] : capacities(cfg, r.aggregates)) {
      os << "  " << to_string(p) << ": " << cap.capacity;
      if (!cap.monotone) os << " (satisfied ratio is non-monotone in N)";
      os << '\n';
    }
  }
  return os.str();
}

void write_outputs(const ScenarioConfig& cfg, const SweepResult& r,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
    f << text;
  };
  write("raw.csv", raw_csv(cfg, r));
  write("aggregate.csv", aggregate_csv(cfg, r));
  write("summary.txt", summary_text(cfg, r));
}

}  // namespace mcsim

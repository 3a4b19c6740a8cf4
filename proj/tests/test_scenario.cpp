#include <array>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "mcsim/scenario.hpp"

using namespace mcsim;

namespace {

// Point-in-convex-polygon on the explicit vertex list of a hexagon with
// circumradius r centred at the origin, vertices at angles k * 60 degrees.
bool in_hex(double x, double y, double r) {
  std::array<std::pair<double, double>, 6> v;
  for (int k = 0; k < 6; ++k) {
    const double a = k * std::numbers::pi / 3.0;
    v[k] = {r * std::cos(a), r * std::sin(a)};
  }
  for (int k = 0; k < 6; ++k) {
    const auto [x1, y1] = v[k];
    const auto [x2, y2] = v[(k + 1) % 6];
    if ((x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) < -1e-12) return false;
  }
  return true;
}

// Fraction of the hexagon's area farther than d from the vertex (-r, 0).
double oracle_tail(double d, double r) {
  const int n = 1500;
  long inside = 0, far = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = -r + 2.0 * r * (i + 0.5) / n;
      const double y = -r + 2.0 * r * (j + 0.5) / n;
      if (!in_hex(x, y, r)) continue;
      ++inside;
      if (std::hypot(x + r, y) > d) ++far;
    }
  }
  return static_cast<double>(far) / static_cast<double>(inside);
}

std::size_t data_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("geometry: the farthest point of the cell is the opposite vertex") {
  const CellGeometry g{133.0};
  CHECK(g.circumradius() == doctest::Approx(66.5));
  CHECK(g.contains(66.5, 0.0));
  CHECK(g.distance_to_gnb(66.5, 0.0) == doctest::Approx(133.0));
  CHECK_FALSE(g.contains(0.0, 60.0));
  CHECK(g.contains(0.0, 57.0));
}

TEST_CASE("geometry agrees with an explicit vertex polygon") {
  const CellGeometry g{133.0};
  RngStream rng(1, "hex");
  for (int i = 0; i < 20000; ++i) {
    const double x = (rng.uniform() * 2 - 1) * 70;
    const double y = (rng.uniform() * 2 - 1) * 70;
    REQUIRE(g.contains(x, y) == in_hex(x, y, 66.5));
  }
}

TEST_CASE("drops: range, determinism and distance distribution") {
  const CellGeometry g{133.0};
  RngStream a(5, "drop"), b(5, "drop");
  const auto da = drop_ues(20000, g, a);
  const auto db = drop_ues(20000, g, b);
  CHECK(da == db);
  int over100 = 0, over120 = 0;
  for (double d : da) {
    REQUIRE(d > 0.0);
    REQUIRE(d <= 133.0);
    over100 += d > 100.0;
    over120 += d > 120.0;
  }
  CHECK(over100 / 20000.0 == doctest::Approx(oracle_tail(100.0, 66.5)).epsilon(0.06));
  CHECK(over120 / 20000.0 == doctest::Approx(oracle_tail(120.0, 66.5)).epsilon(0.2));
  RngStream c(1, "x");
  CHECK_THROWS(drop_ues(0, g, c));
}

TEST_CASE("job plan: single-UE sweep covers points x policies x seeds once") {
  ScenarioConfig cfg;
  const auto jobs = plan_jobs(cfg);
  CHECK(jobs.size() == 7 * 6 * 20);
  std::set<std::tuple<std::string, int, std::uint64_t>> seen;
  for (const auto& j : jobs) {
    REQUIRE(j.spec.distances_m.size() == 1);
    CHECK(j.spec.distances_m[0] == j.point);
    CHECK(j.spec.seed == cfg.base_seed + j.run_index);
    seen.emplace(j.point_id, static_cast<int>(j.policy), j.spec.seed);
  }
  CHECK(seen.size() == jobs.size());
}

TEST_CASE("job plan: every policy sees the same drop for a given (N, run)") {
  ScenarioConfig cfg;
  cfg.scenario = ScenarioKind::multi_ue_capacity_sweep;
  cfg.runs = 3;
  cfg.ue_counts = {2, 5};
  const auto jobs = plan_jobs(cfg);
  CHECK(jobs.size() == 2 * 6 * 3);
  for (const auto& a : jobs) {
    CHECK(a.spec.distances_m.size() == static_cast<std::size_t>(a.point));
    for (const auto& b : jobs) {
      if (a.point == b.point && a.run_index == b.run_index) {
        CHECK(a.spec.distances_m == b.spec.distances_m);
      }
    }
  }
  // Output order: point, then policy in config order, then run.
  CHECK(jobs[0].policy == cfg.policies[0]);
  CHECK(jobs[2].run_index == 2);
  CHECK(jobs[3].policy == cfg.policies[1]);
  cfg.freeze_drops = true;
  const auto frozen = plan_jobs(cfg);
  CHECK(frozen[0].spec.distances_m == frozen[1].spec.distances_m);
}

TEST_CASE("sweep output is identical for any degree of parallelism") {
  ScenarioConfig cfg;
  cfg.scenario = ScenarioKind::multi_ue_capacity_sweep;
  cfg.sim_time = 1.5;
  cfg.runs = 2;
  cfg.ue_counts = {1, 2, 3};
  cfg.policies = {Policy::dbtb, Policy::packet_splitting};
  const auto a = run_sweep(cfg, 1);
  const auto b = run_sweep(cfg, 4);
  CHECK(raw_csv(cfg, a) == raw_csv(cfg, b));
  CHECK(aggregate_csv(cfg, a) == aggregate_csv(cfg, b));
  CHECK(data_rows(raw_csv(cfg, a)) == 2 * 2 * (1 + 2 + 3));
  CHECK(data_rows(aggregate_csv(cfg, a)) == 3 * 2);
  const std::string summary = summary_text(cfg, a);
  CHECK(summary.find("capacity") != std::string::npos);
  CHECK(summary.find("dbtb:") != std::string::npos);
}

TEST_CASE("CSV files echo the resolved configuration") {
  ScenarioConfig cfg;
  cfg.sim_time = 1.0;
  cfg.runs = 1;
  cfg.distances_m = {50.0};
  cfg.policies = {Policy::single_fr1};
  const auto r = run_sweep(cfg, 1);
  const std::string raw = raw_csv(cfg, r);
  CHECK(raw.rfind("# mcsim ", 0) == 0);
  CHECK(raw.find("# sim_time_s = 1\n") != std::string::npos);
  CHECK(raw.find("# policy = single_fr1\n") != std::string::npos);
  CHECK(raw.find("scenario,policy,point,seed,ue,distance_m,flr,satisfied") != std::string::npos);
  CHECK(aggregate_csv(cfg, r).find("flr_mean,flr_ci") != std::string::npos);
}

TEST_CASE("capacity per policy from aggregate rows") {
  ScenarioConfig cfg;
  cfg.policies = {Policy::dbtb};
  std::vector<AggregateRow> rows;
  const double ratios[] = {1.0, 1.0, 0.95, 0.8};
  for (int n = 1; n <= 4; ++n) {
    AggregateRow row;
    row.point = n;
    row.point_id = std::to_string(n);
    row.policy = Policy::dbtb;
    row.satisfied.mean = ratios[n - 1];
    rows.push_back(row);
  }
  const auto caps = capacities(cfg, rows);
  REQUIRE(caps.size() == 1);
  CHECK(caps[0].second.capacity == 3);
}

TEST_CASE("an invalid configuration is rejected before any run") {
  ScenarioConfig cfg;
  cfg.sim_time = 1.0;
  cfg.runs = 1;
  cfg.distances_m = {50.0};
  cfg.fr1.per_attempt_success = 2.0;  // invalid, caught by validation
  CHECK_THROWS(run_sweep(cfg, 1));
}

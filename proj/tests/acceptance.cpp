// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "mcsim/balancer.hpp"
#include "mcsim/network.hpp"
#include "mcsim/scenario.hpp"

using namespace mcsim;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Brute-force deadlines for a queue filled at constant rate c: each entry is
// the tightest of its own fresh deadline and every successor's deadline less
// the airtime of everything in between.
std::vector<double> oracle_deadlines(const std::vector<double>& arrival,
                                     const std::vector<double>& size, double c, double budget) {
  const std::size_t n = arrival.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = i; m < n; ++m) {
      double airtime = 0.0;
      for (std::size_t k = i; k < m; ++k) airtime += size[k] / c;
      best = std::min(best, arrival[m] + budget - size[m] / c - airtime);
    }
    out[i] = best;
  }
  return out;
}

Verdict criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng(20240101, "acceptance/deadline");
  double worst = 0.0;
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    DbtbParams p;
    p.d_qos = 5e-3 + rng.uniform() * 45e-3;
    p.d_retx = rng.uniform() * 0.9 * p.d_qos;
    const double c = 1e6 + rng.uniform() * 999e6;
    StreamQueue q(p, c);
    const int len = static_cast<int>(rng.uniform() * 40) + 1;
    std::vector<double> arrival, size;
    double now = 1.0 + rng.uniform() * 9.0;
    for (int i = 0; i < len; ++i) {
      now += rng.uniform() < 0.3 ? 0.0 : rng.exponential(2e-4);
      const auto bits = static_cast<std::int64_t>(1 + rng.uniform() * 23360);
      // Single deadline against the closed form.
      const double fresh = now + (p.d_qos - p.d_retx) - static_cast<double>(bits) / c;
      const double got = q.push(PdcpPdu{static_cast<Seq>(i), bits, 0, i, now}, now);
      const double e1 = std::abs(got - fresh) / std::abs(fresh);
      worst = std::max(worst, e1);
      if (e1 > 1e-12) ++bad;
      arrival.push_back(now);
      size.push_back(static_cast<double>(bits));
    }
    const auto want = oracle_deadlines(arrival, size, c, p.d_qos - p.d_retx);
    for (int i = 0; i < len; ++i) {
      const double e = std::abs(q.entries()[i].deadline - want[i]) / std::abs(want[i]);
      worst = std::max(worst, e);
      if (e > 1e-12) ++bad;
    }
  }
  const double dt = seconds_since(t0);
  return {bad == 0 && dt < 1.0,
          "1000 queues, max rel err " + fmt("%.2e", worst) + ", mismatches " +
              std::to_string(bad) + ", " + fmt("%.3f", dt) + " s"};
}

Verdict criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng(77, "acceptance/interleave");
  long spacing_violations = 0, resolution_errors = 0, ops = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    DbtbParams p;
    StreamQueue q(p, 50e6 + rng.uniform() * 450e6);
    std::map<Seq, int> acked, forwarded;
    Seq next = 0;
    double now = 0.0;
    const int n_ops = 20 + static_cast<int>(rng.uniform() * 80);
    for (int op = 0; op < n_ops; ++op, ++ops) {
      const double u = rng.uniform();
      if (u < 0.5) {
        now += rng.uniform() < 0.5 ? 0.0 : rng.exponential(5e-4);
        q.push(PdcpPdu{next++, static_cast<std::int64_t>(1 + rng.uniform() * 11680), 0, 0, now},
               now);
      } else if (u < 0.75) {
        // Ack a random batch; may include sequence numbers already resolved.
        std::vector<Seq> batch;
        const int k = 1 + static_cast<int>(rng.uniform() * 4);
        for (int i = 0; i < k && next > 0; ++i) {
          batch.push_back(static_cast<Seq>(rng.uniform() * static_cast<double>(next)));
        }
        for (Seq s : q.acknowledge(batch)) ++acked[s];
      } else if (u < 0.95) {
        if (const auto t = q.next_deadline()) {
          now = std::max(now, *t);
          for (const auto& x : q.pop_expired(now)) ++forwarded[x.seq];
        }
      } else {
        q.set_rate_estimate(q.rate_estimate() * (0.5 + rng.uniform()));
      }
      if (!q.spacing_holds(1e-12)) ++spacing_violations;
    }
    for (const auto& x : q.pop_expired(std::numeric_limits<double>::infinity())) ++forwarded[x.seq];
    for (Seq s = 0; s < next; ++s) {
      const int a = acked.count(s) ? acked[s] : 0;
      const int f = forwarded.count(s) ? forwarded[s] : 0;
      if (a + f != 1) ++resolution_errors;
    }
  }
  const double dt = seconds_since(t0);
  return {spacing_violations == 0 && resolution_errors == 0 && dt < 10.0,
          "10000 interleavings, " + std::to_string(ops) + " ops, spacing violations " +
              std::to_string(spacing_violations) + ", resolution errors " +
              std::to_string(resolution_errors) + ", " + fmt("%.2f", dt) + " s"};
}

RunSpec one_ue(Policy p, double d, std::uint64_t seed) {
  RunSpec s;
  s.policy = p;
  s.distances_m = {d};
  s.seed = seed;
  return s;
}

// (ue, frame) pairs delivered in time.
std::set<std::pair<std::size_t, std::size_t>> on_time_frames(const RunDetail& d) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t u = 0; u < d.frame_outcomes.size(); ++u) {
    for (std::size_t i = 0; i < d.frame_outcomes[u].size(); ++i) {
      if (d.frame_outcomes[u][i] == FrameStatus::delivered_in_time) out.emplace(u, i);
    }
  }
  return out;
}

Verdict criterion3() {
  ScenarioConfig blocked;
  blocked.blockage.mean_unblocked = 0.0;
  blocked.blockage.loss_db = std::numeric_limits<double>::infinity();
  ScenarioConfig ideal;
  ideal.blockage.mean_blocked = 0.0;
  ideal.fr2.per_attempt_success = 1.0;
  ideal.fr2.shadowing_sigma_db = 0.0;

  std::vector<RunSpec> specs;
  for (double d : {10.0, 50.0, 90.0, 133.0}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) specs.push_back(one_ue(Policy::dbtb, d, seed));
  }
  // Loaded cells, where FR1 alone loses frames.
  const CellGeometry cell{blocked.cell_max_distance_m};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RngStream rng(seed, "acceptance/drop");
    RunSpec s;
    s.distances_m = drop_ues(7, cell, rng);
    s.seed = seed;
    specs.push_back(s);
  }

  int mismatched = 0, fr1_touched = 0;
  std::size_t sfr1_lost = 0;
  double fr1_slots = 0.0;
  for (RunSpec s : specs) {
    RunDetail a, b, c;
    s.policy = Policy::dbtb;
    simulate(blocked, s, &a);
    simulate(ideal, s, &c);
    s.policy = Policy::single_fr1;
    const RunResult rb = simulate(blocked, s, &b);
    for (const auto& u : rb.ues) sfr1_lost += u.frames_lost;
    if (on_time_frames(a) != on_time_frames(b)) ++mismatched;
    fr1_slots += c.fr1_slots_used;
    if (c.fr1_slots_used != 0.0) ++fr1_touched;
  }
  const auto runs = std::to_string(specs.size());
  return {mismatched == 0 && fr1_touched == 0,
          "(a) " + std::to_string(specs.size() - mismatched) + "/" + runs +
              " runs with identical on-time frame sets (" + std::to_string(sfr1_lost) +
              " frames lost by FR1 alone); (b) FR1 slots used " + fmt("%g", fr1_slots) + " over " +
              runs + " runs"};
}

struct Table {
  std::map<std::pair<Policy, double>, AggregateRow> rows;
  const AggregateRow& at(Policy p, double x) const { return rows.at({p, x}); }
};

Table tabulate(const SweepResult& r) {
  Table t;
  for (const auto& row : r.aggregates) t.rows[{row.policy, row.point}] = row;
  return t;
}

Verdict criterion4(int parallel) {
  ScenarioConfig cfg;
  cfg.distances_m = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120, 130, 133};
  cfg.policies = {Policy::single_fr1, Policy::single_fr2, Policy::dbtb, Policy::packet_duplication};
  const auto r = run_sweep(cfg, parallel);
  const Table t = tabulate(r);

  bool a = true, c = true, d = true;
  double sfr1_flr = 0, dbtb_flr = 0, dbtb_fr1 = 0, pd_gap = 0;
  double sfr1_lo = 1, sfr1_hi = 0;
  double crossing = -1;
  bool below_before = true;
  for (double x : cfg.distances_m) {
    const auto& s1 = t.at(Policy::single_fr1, x);
    const auto& s2 = t.at(Policy::single_fr2, x);
    const auto& db = t.at(Policy::dbtb, x);
    const auto& pd = t.at(Policy::packet_duplication, x);
    sfr1_flr = std::max(sfr1_flr, s1.flr.mean);
    dbtb_flr = std::max(dbtb_flr, db.flr.mean);
    dbtb_fr1 = std::max(dbtb_fr1, db.fr1_usage.mean);
    sfr1_lo = std::min(sfr1_lo, s1.fr1_usage.mean);
    sfr1_hi = std::max(sfr1_hi, s1.fr1_usage.mean);
    pd_gap = std::max(pd_gap, std::abs(pd.fr1_usage.mean - s1.fr1_usage.mean));
    a = a && s1.flr.mean <= 1e-2;
    c = c && db.flr.mean <= 1e-2 && db.fr1_usage.mean <= 0.05;
    d = d && std::abs(pd.fr1_usage.mean - s1.fr1_usage.mean) <= 0.05 &&
        s1.fr1_usage.mean >= 0.10 && s1.fr1_usage.mean <= 0.20;
    if (crossing < 0 && s2.flr.mean > 1e-2) crossing = x;
    if (crossing < 0) below_before = below_before && s2.flr.mean <= 1e-2;
  }
  const bool b = crossing >= 100 && crossing <= 133 && below_before &&
                 t.at(Policy::single_fr2, 133).flr.mean > 1e-2;
  std::string sfr2;
  for (double x : cfg.distances_m) {
    sfr2 += (sfr2.empty() ? "" : " ") + fmt("%.0f:", x) + fmt("%.4f", t.at(Policy::single_fr2, x).flr.mean);
  }
  return {a && b && c && d,
          std::string("(a) ") + (a ? "ok" : "no") + " max SFR1 FLR " + fmt("%.4f", sfr1_flr) +
              "; (b) " + (b ? "ok" : "no") + " SFR2 first exceeds 1e-2 at " + fmt("%g", crossing) +
              " m; (c) " + (c ? "ok" : "no") + " max DBTB FLR " + fmt("%.4f", dbtb_flr) +
              ", max FR1 use " + fmt("%.4f", dbtb_fr1) + "; (d) " + (d ? "ok" : "no") +
              " SFR1 use " + fmt("%.4f", sfr1_lo) + ".." + fmt("%.4f", sfr1_hi) +
              ", max |PD-SFR1| " + fmt("%.4f", pd_gap) + "\n    SFR2 FLR by distance: " + sfr2};
}

struct CapacityOutcome {
  Verdict c5, c6;
};

CapacityOutcome criteria5and6(int parallel) {
  ScenarioConfig cfg;
  cfg.scenario = ScenarioKind::multi_ue_capacity_sweep;
  const auto r = run_sweep(cfg, parallel);
  std::map<Policy, int> cap;
  std::string caps;
  for (const auto& [p, c] : capacities(cfg, r.aggregates)) {
    cap[p] = c.capacity;
    caps += std::string(caps.empty() ? "" : ", ") + to_string(p) + " " + std::to_string(c.capacity);
  }
  const int db = cap[Policy::dbtb], pd = cap[Policy::packet_duplication],
            s1 = cap[Policy::single_fr1], ps = cap[Policy::packet_splitting],
            ls = cap[Policy::link_switching];
  const bool order = db > pd && pd > s1 && s1 >= ps && ps >= ls;
  const bool r_pd = db >= 1.5 * pd;
  const bool r_s1 = db >= 3 * s1;
  std::string ratios;
  const Table t = tabulate(r);
  for (Policy p : cfg.policies) {
    ratios += std::string("\n    ") + to_string(p) + ":";
    for (int n : cfg.ue_counts) ratios += fmt(" %.3f", t.at(p, n).satisfied.mean);
  }
  CapacityOutcome out;
  out.c5 = {order && r_pd && r_s1,
            "capacities " + caps + "; ordering " + (order ? "ok" : "no") + ", DBTB >= 1.5 PD " +
                (r_pd ? "ok" : "no") + ", DBTB >= 3 SFR1 " + (r_s1 ? "ok" : "no") +
                "\n    satisfied ratio for N = 1.." + std::to_string(cfg.ue_counts.back()) + ":" +
                ratios};
  if (db < 1) {
    out.c6 = {false, "DBTB capacity is 0"};
  } else {
    const double use = t.at(Policy::dbtb, db).fr1_usage.mean;
    out.c6 = {use <= 0.15, "DBTB FR1 usage at N = " + std::to_string(db) + ": " + fmt("%.4f", use)};
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Verdict criterion7(const std::string& cli, const fs::path& work, int parallel) {
  if (cli.empty()) return {false, "no --cli given"};
  const std::string common = " --seeds 3 --set sim_time_s=3 --quiet";
  const std::vector<std::pair<std::string, std::string>> sweeps{
      {"sweep-distance", " --set distances_m=10,70,133"},
      {"sweep-capacity", " --set ue_counts=1-4"}};
  const int wide = std::max(parallel, 4);
  int compared = 0;
  std::string diffs;
  for (const auto& [cmd, extra] : sweeps) {
    std::vector<fs::path> dirs;
    for (int i = 0; i < 3; ++i) {
      const int par = i == 2 ? wide : 1;
      const fs::path out = work / (cmd + "_" + std::to_string(i));
      fs::remove_all(out);
      dirs.push_back(out);
      const std::string line = "\"" + cli + "\" " + cmd + common + extra + " --parallel " +
                               std::to_string(par) + " --out \"" + out.string() + "\" > \"" +
                               (work / (cmd + ".log")).string() + "\"";
      if (std::system(line.c_str()) != 0) return {false, "CLI failed: " + line};
    }
    for (const char* f : {"raw.csv", "aggregate.csv", "summary.txt"}) {
      const std::string ref = slurp(dirs[0] / f);
      for (std::size_t i = 1; i < dirs.size(); ++i) {
        ++compared;
        if (ref.empty() || slurp(dirs[i] / f) != ref) diffs += " " + cmd + "/" + f;
      }
    }
  }
  return {diffs.empty(), std::to_string(compared) +
                             " file comparisons (repeat run and --parallel 1 vs " +
                             std::to_string(wide) + ")" + (diffs.empty() ? "" : ", differ:" + diffs)};
}

Verdict criterion8() {
  ScenarioConfig cfg;
  cfg.sim_time = 10.0;
  RunSpec s;
  s.policy = Policy::packet_duplication;
  s.distances_m = {30.0, 90.0, 133.0};
  s.seed = cfg.base_seed;
  RunDetail det;
  RunResult r;
  try {
    r = simulate(cfg, s, &det);
  } catch (const DedupViolation& e) {
    return {false, std::string("double release: ") + e.what()};
  }
  bool conserved = true;
  for (const auto& u : r.ues) conserved = conserved && u.frames_generated == u.frames_on_time + u.frames_lost;
  const bool enough = det.packets_generated >= 100000;
  return {conserved && enough && det.frames_pending == 0,
          std::to_string(det.packets_generated) + " packets, " +
              std::to_string(det.duplicates_dropped) + " duplicates dropped, 0 double releases, " +
              "frame conservation " + (conserved ? "ok" : "broken")};
}

Verdict criterion9() {
  ScenarioConfig cfg;
  cfg.sim_time = 100.0;
  RunDetail det;
  simulate(cfg, one_ue(Policy::single_fr2, 70.0, cfg.base_seed), &det);
  const auto& b = cfg.blockage;
  const double want = b.stationary_blocked_fraction();
  const double got = det.blocked_fraction.at(0);
  const double rel = std::abs(got - want) / want;
  // Sampling spread of the estimate for exponential dwell times: about
  // (1 - f) * sqrt(2 / cycles) relative.
  const double cycles = cfg.sim_time / (b.mean_blocked + b.mean_unblocked);
  const double sd = (1.0 - want) * std::sqrt(2.0 / cycles);
  return {rel <= 0.05, "blocked fraction " + fmt("%.4f", got) + " vs " + fmt("%.4f", want) +
                           " (rel err " + fmt("%.3f", rel) + "; expected rel spread over " +
                           fmt("%.0f", cfg.sim_time) + " s is " + fmt("%.3f", sd) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string cli;
  std::string work = "acceptance_work";
  int parallel = 0;
  std::vector<int> only;
  app.add_option("--cli", cli, "path to the mcsim executable");
  app.add_option("--work", work, "scratch directory");
  app.add_option("--parallel", parallel, "worker threads for the sweeps (0 = all cores)");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  if (parallel <= 0) parallel = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  fs::create_directories(work);

  const auto wanted = [&](int k) { return only.empty() || std::count(only.begin(), only.end(), k) > 0; };
  int failed = 0;
  const auto report = [&](int k, const Verdict& v, double secs) {
    std::printf("criterion %d: %s  %s  [%.1f s]\n", k, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  };
  const auto run = [&](int k, const std::function<Verdict()>& f) {
    if (!wanted(k)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    report(k, v, seconds_since(t0));
  };

  run(1, criterion1);
  run(2, criterion2);
  run(3, criterion3);
  run(4, [&] { return criterion4(parallel); });
  if (wanted(5) || wanted(6)) {
    const auto t0 = std::chrono::steady_clock::now();
    CapacityOutcome c;
    try {
      c = criteria5and6(parallel);
    } catch (const std::exception& e) {
      c.c5 = c.c6 = {false, std::string("error: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (wanted(5)) report(5, c.c5, secs);
    if (wanted(6)) report(6, c.c6, secs);
  }
  run(7, [&] { return criterion7(cli, work, parallel); });
  run(8, criterion8);
  run(9, criterion9);
  std::printf("%s\n", failed == 0 ? "all criteria passed" : (std::to_string(failed) + " criteria failed").c_str());
  return failed == 0 ? 0 : 1;
}

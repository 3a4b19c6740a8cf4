#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcsim/config.hpp"
#include "mcsim/metrics.hpp"

namespace mcsim {

/// One simulation run: a policy, one UE per distance, and a seed.
struct RunSpec {
  Policy policy = Policy::dbtb;
  std::vector<double> distances_m;
  std::uint64_t seed = 1;
  std::string point_id;
};

/// Extra observations of a run, for tests and diagnostics.
struct RunDetail {
  std::vector<std::vector<FrameStatus>> frame_outcomes;  // per UE, indexed by frame id
  std::vector<double> blocked_fraction;                  // per UE, FR2 blocked time / run time
  double fr1_slots_used = 0.0;
  double fr2_slots_used = 0.0;
  std::uint64_t packets_generated = 0;
  std::uint64_t packets_released = 0;
  std::uint64_t duplicates_dropped = 0;
  std::uint64_t frames_pending = 0;  // counted frames left unsettled (must be 0)
  // DBTB bookkeeping, summed over UEs.
  std::uint64_t dbtb_pdus = 0;
  std::uint64_t dbtb_acked = 0;
  std::uint64_t dbtb_to_fr1 = 0;
  std::uint64_t dbtb_queued_at_end = 0;
  bool dbtb_spacing_ok = true;
  std::uint64_t events = 0;
};

/**
 * Builds the two-gNB cell for `spec`, runs it for cfg.sim_time (plus the
 * delay budget so the last frames settle) and returns the per-UE statistics.
 * Deterministic in (cfg, spec).
 */
RunResult simulate(const ScenarioConfig& cfg, const RunSpec& spec, RunDetail* detail = nullptr);

}  // namespace mcsim

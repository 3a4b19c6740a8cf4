#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mcsim/engine.hpp"
#include "mcsim/pdcp.hpp"

namespace mcsim {

enum class LinkKind : std::uint8_t { fr1, fr2 };

const char* to_string(LinkKind k);

/// Static description of one gNB-UE radio link.
struct LinkParams {
  double carrier_hz = 3.6e9;
  double bandwidth_hz = 100e6;
  double tx_power_dbm = 43.0;
  double gnb_height_m = 10.0;
  double ue_height_m = 1.6;
  double antenna_gain_dbi = 0.0;
  double noise_figure_db = 7.0;
  // Log-distance path loss: pl_const + 10 * pl_exponent * log10(d3d) + 20 log10(f_GHz).
  double pl_const_db = 28.0;
  double pl_exponent = 2.2;
  double shadowing_sigma_db = 4.0;
  double efficiency_cap = 7.4;  // bit/s/Hz
  double slot_duration = 0.5e-3;
  double per_attempt_success = 0.9;
  int max_harq_attempts = 4;
  double harq_rtt = 2e-3;

  void validate() const;
};

/// Path loss in dB at 2D ground distance `distance_m`.
double pathloss_db(const LinkParams& link, double distance_m);

/// Thermal noise over the link bandwidth plus the receiver noise figure, dBm.
double noise_floor_dbm(const LinkParams& link);

/// SINR in dB for a given shadowing draw and blockage attenuation. An infinite
/// `blockage_loss_db` yields -infinity.
double sinr_db(const LinkParams& link, double distance_m, double shadowing_db,
               double blockage_loss_db);

/// Draws a fresh log-normal shadowing term and evaluates sinr_db.
double sinr_at(const LinkParams& link, double distance_m, bool blocked, double blockage_loss_db,
               RngStream& rng);

/// Shannon rate capped at the link's spectral-efficiency ceiling, bits/s.
double rate_of(const LinkParams& link, double sinr_db);

struct BlockageParams {
  double mean_unblocked = 0.5;  // seconds; 0 means permanently blocked
  double mean_blocked = 0.1;    // seconds; 0 means never blocked
  double loss_db = 30.0;        // may be +infinity

  bool enabled() const { return mean_blocked > 0.0; }
  double stationary_blocked_fraction() const;
};

/**
 * Two-state blockage process with exponential dwell times. The initial state
 * is drawn from the stationary distribution. Transitions are scheduled on the
 * simulator; `on_change` runs after every flip.
 */
class BlockageProcess {
 public:
  BlockageProcess(Simulator& sim, BlockageParams params, RngStream rng,
                  std::function<void(bool)> on_change = {});
  BlockageProcess(const BlockageProcess&) = delete;
  BlockageProcess& operator=(const BlockageProcess&) = delete;

  void start();
  bool blocked() const { return blocked_; }
  const BlockageParams& params() const { return params_; }

  /// Total time spent blocked in [start, now].
  double blocked_time() const;

 private:
  void flip();
  void arm();

  Simulator& sim_;
  BlockageParams params_;
  RngStream rng_;
  std::function<void(bool)> on_change_;
  bool blocked_ = false;
  Time since_ = 0.0;
  double accumulated_ = 0.0;
};

using MacPduId = std::uint64_t;

/// MAC PDU id -> PDCP sequence numbers it carries (whole PDUs or segments).
class MacMap {
 public:
  class UnknownMacPdu : public std::logic_error {
   public:
    using std::logic_error::logic_error;
  };

  void record(MacPduId id, std::vector<Seq> seqs);
  /// Returns and removes the sequence numbers carried by `id`.
  std::vector<Seq> on_mac_ack(MacPduId id);
  /// Same bookkeeping for a MAC PDU that exhausted its HARQ attempts.
  std::vector<Seq> on_mac_failure(MacPduId id) { return on_mac_ack(id); }

  bool contains(MacPduId id) const { return map_.count(id) != 0; }
  std::size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }

 private:
  std::unordered_map<MacPduId, std::vector<Seq>> map_;
};

/// Per-gNB resource accounting in slot units. A slot shared among several
/// UEs contributes the fraction actually allocated.
class ResourceLedger {
 public:
  void add_elapsed(double slots);
  void add_used(double slots);
  double slots_elapsed() const { return elapsed_; }
  double slots_used() const { return used_; }
  /// used / elapsed; 0 for an empty window.
  double usage() const;

 private:
  double elapsed_ = 0.0;
  double used_ = 0.0;
};

double resource_usage(const ResourceLedger& ledger);

enum class HarqOutcome : std::uint8_t { delivered, retry, failed };

/**
 * Outcome of one HARQ attempt. The attempt succeeds with the link's
 * per-attempt probability as long as current_rate reaches tb_rate (the rate
 * the transport block needs); otherwise it fails outright.
 */
HarqOutcome harq_attempt(const LinkParams& link, int attempt, double tb_rate,
                         double current_rate, RngStream& rng);

/// Callback signatures used by Gnb.
struct GnbHooks {
  /// A PDCP PDU has been fully received by the UE.
  std::function<void(int ue, const PdcpPdu&, Time)> delivered;
  /// A PDCP PDU is definitively lost on this link (HARQ exhaustion or discard).
  std::function<void(int ue, const PdcpPdu&, Time)> dropped;
};

/**
 * One gNB with a slotted downlink MAC shared by its attached UEs.
 *
 * Every slot: HARQ retransmissions due by then go first, then the rest of the
 * slot is shared max-min fairly (water-filling round robin) among UEs with
 * queued data. Each allocation becomes one MAC PDU whose MAP entry lists the
 * PDCP sequence numbers it carries. Slots are only simulated while there is
 * work; idle slots still count in the ledger.
 */
class Gnb {
 public:
  Gnb(Simulator& sim, LinkKind kind, LinkParams params, std::uint64_t seed, GnbHooks hooks);
  Gnb(const Gnb&) = delete;
  Gnb& operator=(const Gnb&) = delete;

  /// Registers a UE; returns its local index.
  int attach(double distance_m, std::optional<BlockageParams> blockage = std::nullopt);

  void start();

  /// Puts a PDCP PDU into the UE's RLC queue.
  void enqueue(int ue, const PdcpPdu& pdu);

  /// Redraws shadowing for `ue` and returns the rate the link supports now.
  double measure(int ue);

  /// Rate the link supports at this instant (current shadowing and blockage).
  double current_rate(int ue) const;
  bool blocked(int ue) const;
  const BlockageProcess* blockage(int ue) const;

  /// Drops queued PDUs whose age exceeds the limit when they reach the head.
  void set_discard_after(double seconds) { discard_after_ = seconds; }

  /// Ledger window: usage counts only slots inside [from, to).
  void set_accounting_window(Time from, Time to);
  ResourceLedger ledger() const;

  LinkKind kind() const { return kind_; }
  const LinkParams& params() const { return params_; }
  std::size_t rlc_backlog(int ue) const;
  std::size_t in_flight() const;
  std::uint64_t pdus_enqueued() const { return pdus_enqueued_; }
  std::uint64_t pdus_delivered() const { return pdus_delivered_; }
  std::uint64_t pdus_dropped() const { return pdus_dropped_; }

 private:
  struct MacPdu {
    MacPduId id = 0;
    int ue = 0;
    std::vector<std::pair<Seq, std::int64_t>> segments;
    std::int64_t bits = 0;
    double tb_rate = 0.0;   // rate needed to fit the TB into one slot
    double fraction = 0.0;  // share of a slot it occupies
    int attempts = 0;
    Time next_attempt = 0.0;
  };
  struct Live {
    PdcpPdu pdu;
    std::int64_t unsent_bits = 0;
    int outstanding = 0;  // segments inside live MAC PDUs
    bool failed = false;
  };
  struct UeLink {
    UeLink(std::uint64_t seed, const std::string& tag)
        : shadow_rng(seed, tag + "/shadowing"), harq_rng(seed, tag + "/harq") {}
    double distance_m = 0.0;
    double shadowing_db = 0.0;
    double rate = 0.0;
    std::unique_ptr<BlockageProcess> blockage;
    std::deque<Seq> rlc;
    std::int64_t queued_bits = 0;
    std::unordered_map<Seq, Live> live;
    RngStream shadow_rng;
    RngStream harq_rng;
  };

  void refresh_rate(int ue);
  void wake();
  void tick();
  void resolve_outcomes();
  void discard_stale(int ue);
  void drain_into(MacPdu& pdu, UeLink& link, std::int64_t bits);
  void segment_done(int ue, Seq seq, bool ok);
  void fail_pdu(UeLink& link, Live& live);
  void settle_if_done(int ue, Seq seq);
  void count_slot(std::int64_t slot_index, double used);
  bool has_work() const;

  Simulator& sim_;
  LinkKind kind_;
  LinkParams params_;
  std::uint64_t seed_;
  GnbHooks hooks_;
  std::vector<std::unique_ptr<UeLink>> ues_;
  MacMap map_;
  std::deque<MacPdu> retx_;               // awaiting their next attempt
  std::vector<std::pair<MacPdu, bool>> airborne_;  // sent this slot, outcome
  MacPduId next_mac_id_ = 1;
  std::int64_t last_tick_ = -1;
  bool tick_armed_ = false;
  double discard_after_ = 0.0;
  Time window_from_ = 0.0;
  Time window_to_ = 1e300;
  double used_in_window_ = 0.0;
  std::uint64_t pdus_enqueued_ = 0;
  std::uint64_t pdus_delivered_ = 0;
  std::uint64_t pdus_dropped_ = 0;
};

}  // namespace mcsim

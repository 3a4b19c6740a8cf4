#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcsim/engine.hpp"
#include "mcsim/pdcp.hpp"

namespace mcsim {

enum class Policy : std::uint8_t {
  single_fr1,
  single_fr2,
  link_switching,
  packet_duplication,
  packet_splitting,
  dbtb,
};

const char* to_string(Policy p);
Policy parse_policy(std::string_view name);
std::vector<Policy> all_policies();

/// Where the MgNB sends a PDU. `deferred` means held in the DBTB queue with a
/// copy sent to the SgNB.
enum class Route : std::uint8_t { fr1, fr2, both, deferred };

/// Latest per-link rate measurements, bits/s.
struct RateEstimates {
  double fr1 = 0.0;
  double fr2 = 0.0;
  Time last_update = 0.0;
};

Route route_single(Policy which);
/// FR2 only when its estimate is strictly higher; ties go to FR1.
Route route_link_switching(const RateEstimates& est);
/// FR1 with probability fr1 / (fr1 + fr2); FR1 when both estimates are zero.
Route route_packet_splitting(const RateEstimates& est, RngStream& rng);
double splitting_fr1_probability(const RateEstimates& est);
Route route_duplication();
/// DBTB defers to the queue unless the SgNB reports no usable rate, in which
/// case no ack can come back and the PDU goes straight to FR1.
Route route_dbtb(const RateEstimates& est);

struct DbtbParams {
  Time d_qos = 15e-3;
  Time d_retx = 5e-3;
  bool recalc_on_ack = false;
};

/**
 * Transmission-time queue kept by the MgNB for one stream under DBTB.
 *
 * A new PDU of size s gets T = now + (d_qos - d_retx) - s / C, where C is the
 * FR1 rate estimate. Predecessors are then pulled earlier from tail to head,
 * T_n = min(T_n, T_{n+1} - s_n / C), so that the backlog still fits on FR1
 * ahead of the newest deadline. Entries are seq-ascending and, as long as
 * C > 0, spaced by at least s_n / C; deadlines are therefore strictly
 * increasing and only the head needs a live timer.
 */
class StreamQueue {
 public:
  struct Entry {
    PdcpPdu pdu;
    Time deadline = 0.0;
  };

  explicit StreamQueue(DbtbParams params, double rate_estimate = 0.0);

  /// Deadline a PDU of `size_bits` arriving at `now` would get. Returns `now`
  /// when no usable FR1 estimate exists.
  Time compute_deadline(Time now, double size_bits) const;

  /// Appends a PDU with its fresh deadline and pulls predecessors forward.
  Time push(const PdcpPdu& pdu, Time now);

  /// Full tail-to-head pass over the queue.
  void recalc_deadlines();

  /// Removes acknowledged PDUs; unknown sequence numbers are ignored.
  /// Returns the sequence numbers that were actually removed.
  std::vector<Seq> acknowledge(std::span<const Seq> seqs);

  /// Removes and returns every PDU whose deadline is <= now, in seq order.
  std::vector<PdcpPdu> pop_expired(Time now);

  std::optional<Time> next_deadline() const;

  /// Updates C; a lower estimate tightens the queue immediately.
  void set_rate_estimate(double c);
  double rate_estimate() const { return rate_; }

  const std::deque<Entry>& entries() const { return q_; }
  std::size_t size() const { return q_.size(); }
  bool empty() const { return q_.empty(); }
  const DbtbParams& params() const { return params_; }

  /// Checks T_n + s_n / C <= T_{n+1} for all adjacent pairs, up to `tol` seconds.
  bool spacing_holds(double tol = 1e-12) const;

 private:
  void pull_forward_from_tail();

  DbtbParams params_;
  double rate_;
  std::deque<Entry> q_;
};

/**
 * UE-side PDCP receive window: drops duplicates, releases in sequence, and
 * bounds the wait for a missing sequence number by t-Reordering. Pure state
 * machine; the caller owns the timer and calls on_timeout() when it expires.
 */
class UeReceiver {
 public:
  explicit UeReceiver(Time t_reordering);

  /// Accepts one PDU and returns whatever becomes releasable, ascending.
  std::vector<PdcpPdu> receive(const PdcpPdu& pdu, Time now);

  /// Reordering timer expiry: skips the gap and releases what it was holding.
  std::vector<PdcpPdu> on_timeout(Time now);

  /// Expiry time of the running reordering timer, if any.
  std::optional<Time> timer() const { return timer_; }

  Seq next_expected() const { return rx_deliv_; }
  std::size_t buffered() const { return buffer_.size(); }
  std::uint64_t duplicates() const { return duplicates_; }

 private:
  void release_consecutive(std::vector<PdcpPdu>& out);

  Time t_reordering_;
  Seq rx_deliv_ = 0;
  Seq rx_next_ = 0;
  Seq rx_reord_ = 0;
  std::optional<Time> timer_;
  std::map<Seq, PdcpPdu> buffer_;
  std::uint64_t duplicates_ = 0;
};

}  // namespace mcsim

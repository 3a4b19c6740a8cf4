#include "mcsim/radio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mcsim {

const char* to_string(LinkKind k) { return k == LinkKind::fr1 ? "fr1" : "fr2"; }

void LinkParams::validate() const {
  if (!(bandwidth_hz > 0)) throw std::invalid_argument("bandwidth must be positive");
  if (!(carrier_hz > 0)) throw std::invalid_argument("carrier frequency must be positive");
  if (!(per_attempt_success > 0 && per_attempt_success <= 1)) {
    throw std::invalid_argument("per-attempt success must lie in (0, 1]");
  }
  if (!(slot_duration > 0)) throw std::invalid_argument("slot duration must be positive");
  if (max_harq_attempts < 1) throw std::invalid_argument("at least one HARQ attempt is required");
  if (!(harq_rtt >= slot_duration)) throw std::invalid_argument("HARQ RTT shorter than a slot");
  if (!(efficiency_cap > 0)) throw std::invalid_argument("efficiency cap must be positive");
  if (!(shadowing_sigma_db >= 0)) throw std::invalid_argument("shadowing sigma must be >= 0");
}

double pathloss_db(const LinkParams& link, double distance_m) {
  const double dh = link.gnb_height_m - link.ue_height_m;
  const double d3d = std::sqrt(distance_m * distance_m + dh * dh);
  return link.pl_const_db + 10.0 * link.pl_exponent * std::log10(d3d) +
         20.0 * std::log10(link.carrier_hz / 1e9);
}

double noise_floor_dbm(const LinkParams& link) {
  return -174.0 + 10.0 * std::log10(link.bandwidth_hz) + link.noise_figure_db;
}

double sinr_db(const LinkParams& link, double distance_m, double shadowing_db,
               double blockage_loss_db) {
  if (std::isinf(blockage_loss_db) && blockage_loss_db > 0) {
    return -std::numeric_limits<double>::infinity();
  }
  const double rx = link.tx_power_dbm + link.antenna_gain_dbi - pathloss_db(link, distance_m) -
                    shadowing_db - blockage_loss_db;
  return rx - noise_floor_dbm(link);
}

double sinr_at(const LinkParams& link, double distance_m, bool blocked, double blockage_loss_db,
               RngStream& rng) {
  const double shadow = rng.normal(0.0, link.shadowing_sigma_db);
  return sinr_db(link, distance_m, shadow, blocked ? blockage_loss_db : 0.0);
}

double rate_of(const LinkParams& link, double sinr) {
  if (std::isnan(sinr) || sinr == -std::numeric_limits<double>::infinity()) return 0.0;
  const double lin = std::pow(10.0, sinr / 10.0);
  const double se = std::min(std::log2(1.0 + lin), link.efficiency_cap);
  return link.bandwidth_hz * se;
}

double BlockageParams::stationary_blocked_fraction() const {
  if (!enabled()) return 0.0;
  if (mean_unblocked <= 0.0) return 1.0;
  return mean_blocked / (mean_blocked + mean_unblocked);
}

BlockageProcess::BlockageProcess(Simulator& sim, BlockageParams params, RngStream rng,
                                 std::function<void(bool)> on_change)
    : sim_(sim), params_(params), rng_(std::move(rng)), on_change_(std::move(on_change)) {}

void BlockageProcess::start() {
  since_ = sim_.now();
  accumulated_ = 0.0;
  if (!params_.enabled()) {
    blocked_ = false;
    return;
  }
  if (params_.mean_unblocked <= 0.0) {
    blocked_ = true;
    return;
  }
  blocked_ = rng_.bernoulli(params_.stationary_blocked_fraction());
  arm();
}

void BlockageProcess::arm() {
  const double mean = blocked_ ? params_.mean_blocked : params_.mean_unblocked;
  sim_.schedule_in(rng_.exponential(mean), [this] { flip(); });
}

void BlockageProcess::flip() {
  if (blocked_) accumulated_ += sim_.now() - since_;
  since_ = sim_.now();
  blocked_ = !blocked_;
  if (on_change_) on_change_(blocked_);
  arm();
}

double BlockageProcess::blocked_time() const {
  return accumulated_ + (blocked_ ? sim_.now() - since_ : 0.0);
}

void MacMap::record(MacPduId id, std::vector<Seq> seqs) {
  if (!map_.emplace(id, std::move(seqs)).second) {
    throw std::logic_error("MAC PDU id recorded twice");
  }
}

std::vector<Seq> MacMap::on_mac_ack(MacPduId id) {
  auto it = map_.find(id);
  if (it == map_.end()) throw UnknownMacPdu("unknown MAC PDU id " + std::to_string(id));
  std::vector<Seq> seqs = std::move(it->second);
  map_.erase(it);
  return seqs;
}

void ResourceLedger::add_elapsed(double slots) { elapsed_ += slots; }

void ResourceLedger::add_used(double slots) {
  used_ += slots;
  if (used_ > elapsed_ && elapsed_ > 0) used_ = std::min(used_, elapsed_);
}

double ResourceLedger::usage() const { return elapsed_ > 0 ? std::min(used_ / elapsed_, 1.0) : 0.0; }

double resource_usage(const ResourceLedger& ledger) { return ledger.usage(); }

HarqOutcome harq_attempt(const LinkParams& link, int attempt, double tb_rate, double current_rate,
                         RngStream& rng) {
  // The draw is consumed unconditionally so the stream position does not
  // depend on the channel state.
  const bool lucky = rng.bernoulli(link.per_attempt_success);
  const bool carried = tb_rate > 0 && tb_rate <= current_rate * (1.0 + 1e-12);
  if (lucky && carried) return HarqOutcome::delivered;
  return attempt < link.max_harq_attempts ? HarqOutcome::retry : HarqOutcome::failed;
}

Gnb::Gnb(Simulator& sim, LinkKind kind, LinkParams params, std::uint64_t seed, GnbHooks hooks)
    : sim_(sim), kind_(kind), params_(params), seed_(seed), hooks_(std::move(hooks)) {
  params_.validate();
}

int Gnb::attach(double distance_m, std::optional<BlockageParams> blockage) {
  const int idx = static_cast<int>(ues_.size());
  const std::string tag = std::string(to_string(kind_)) + "/ue" + std::to_string(idx);
  auto link = std::make_unique<UeLink>(seed_, tag);
  link->distance_m = distance_m;
  if (blockage) {
    link->blockage = std::make_unique<BlockageProcess>(
        sim_, *blockage, RngStream(seed_, tag + "/blockage"),
        [this, idx](bool) { refresh_rate(idx); });
  }
  ues_.push_back(std::move(link));
  return idx;
}

void Gnb::start() {
  for (int i = 0; i < static_cast<int>(ues_.size()); ++i) {
    if (ues_[i]->blockage) ues_[i]->blockage->start();
    refresh_rate(i);
  }
}

void Gnb::refresh_rate(int ue) {
  UeLink& l = *ues_[ue];
  double loss = 0.0;
  if (l.blockage && l.blockage->blocked()) loss = l.blockage->params().loss_db;
  l.rate = rate_of(params_, sinr_db(params_, l.distance_m, l.shadowing_db, loss));
}

double Gnb::measure(int ue) {
  UeLink& l = *ues_[ue];
  l.shadowing_db = l.shadow_rng.normal(0.0, params_.shadowing_sigma_db);
  refresh_rate(ue);
  return l.rate;
}

double Gnb::current_rate(int ue) const { return ues_[ue]->rate; }

bool Gnb::blocked(int ue) const {
  const auto& b = ues_[ue]->blockage;
  return b && b->blocked();
}

const BlockageProcess* Gnb::blockage(int ue) const { return ues_[ue]->blockage.get(); }

std::size_t Gnb::rlc_backlog(int ue) const { return ues_[ue]->rlc.size(); }

std::size_t Gnb::in_flight() const { return map_.size(); }

void Gnb::enqueue(int ue, const PdcpPdu& pdu) {
  UeLink& l = *ues_[ue];
  if (pdu.size_bits <= 0) throw std::invalid_argument("PDCP PDU without payload");
  if (!l.live.emplace(pdu.seq, Live{pdu, pdu.size_bits, 0, false}).second) {
    throw std::logic_error("PDCP sequence number enqueued twice on one link");
  }
  l.rlc.push_back(pdu.seq);
  ++pdus_enqueued_;
  l.queued_bits += pdu.size_bits;
  wake();
}

void Gnb::set_accounting_window(Time from, Time to) {
  window_from_ = from;
  window_to_ = to;
}

ResourceLedger Gnb::ledger() const {
  ResourceLedger out;
  const Time to = std::min(window_to_, sim_.now());
  if (to > window_from_) {
    out.add_elapsed((to - window_from_) / params_.slot_duration);
    out.add_used(used_in_window_);
  }
  return out;
}

void Gnb::count_slot(std::int64_t slot_index, double used) {
  const Time start = static_cast<double>(slot_index) * params_.slot_duration;
  if (start >= window_from_ && start < window_to_) used_in_window_ += std::min(used, 1.0);
}

bool Gnb::has_work() const {
  if (!retx_.empty() || !airborne_.empty()) return true;
  return std::any_of(ues_.begin(), ues_.end(), [](const auto& l) { return l->queued_bits > 0; });
}

void Gnb::wake() {
  if (tick_armed_) return;
  const double slot = params_.slot_duration;
  auto k = static_cast<std::int64_t>(std::ceil(sim_.now() / slot - 1e-9));
  if (k <= last_tick_) k = last_tick_ + 1;
  tick_armed_ = true;
  sim_.schedule(std::max(static_cast<double>(k) * slot, sim_.now()), [this] { tick(); });
}

void Gnb::resolve_outcomes() {
  const Time now = sim_.now();
  auto done = std::move(airborne_);
  airborne_.clear();
  for (auto& entry : done) {
    MacPdu& pdu = entry.first;
    const bool ok = entry.second;
    if (ok) {
      map_.on_mac_ack(pdu.id);
      for (const auto& [seq, bits] : pdu.segments) segment_done(pdu.ue, seq, true);
    } else if (pdu.attempts < params_.max_harq_attempts) {
      pdu.next_attempt = now - params_.slot_duration + params_.harq_rtt;
      retx_.push_back(std::move(pdu));
    } else {
      map_.on_mac_failure(pdu.id);
      for (const auto& [seq, bits] : pdu.segments) segment_done(pdu.ue, seq, false);
    }
  }
}

void Gnb::segment_done(int ue, Seq seq, bool ok) {
  UeLink& l = *ues_[ue];
  auto it = l.live.find(seq);
  if (it == l.live.end()) throw std::logic_error("segment for unknown PDCP PDU");
  Live& live = it->second;
  --live.outstanding;
  if (!ok && !live.failed) fail_pdu(l, live);
  settle_if_done(ue, seq);
}

void Gnb::fail_pdu(UeLink& l, Live& live) {
  live.failed = true;
  l.queued_bits -= live.unsent_bits;
  live.unsent_bits = 0;  // the stale RLC entry is skipped when it reaches the head
}

void Gnb::settle_if_done(int ue, Seq seq) {
  UeLink& l = *ues_[ue];
  auto it = l.live.find(seq);
  const Live& live = it->second;
  if (live.outstanding > 0 || live.unsent_bits > 0) return;
  const PdcpPdu pdu = live.pdu;
  const bool failed = live.failed;
  l.live.erase(it);
  if (failed) {
    ++pdus_dropped_;
    if (hooks_.dropped) hooks_.dropped(ue, pdu, sim_.now());
  } else {
    ++pdus_delivered_;
    if (hooks_.delivered) hooks_.delivered(ue, pdu, sim_.now());
  }
}

void Gnb::discard_stale(int ue) {
  UeLink& l = *ues_[ue];
  const Time now = sim_.now();
  while (!l.rlc.empty()) {
    const Seq head = l.rlc.front();
    auto it = l.live.find(head);
    if (it == l.live.end() || it->second.unsent_bits == 0) {
      l.rlc.pop_front();
      continue;
    }
    if (discard_after_ <= 0.0 || now - it->second.pdu.created <= discard_after_) break;
    l.rlc.pop_front();
    fail_pdu(l, it->second);
    settle_if_done(ue, head);
  }
}

void Gnb::drain_into(MacPdu& mac, UeLink& l, std::int64_t bits) {
  while (bits > 0 && !l.rlc.empty()) {
    const Seq head = l.rlc.front();
    auto it = l.live.find(head);
    if (it == l.live.end() || it->second.unsent_bits == 0) {
      l.rlc.pop_front();
      continue;
    }
    Live& live = it->second;
    const std::int64_t take = std::min(bits, live.unsent_bits);
    live.unsent_bits -= take;
    ++live.outstanding;
    l.queued_bits -= take;
    bits -= take;
    mac.segments.emplace_back(head, take);
    if (live.unsent_bits == 0) l.rlc.pop_front();
  }
}

void Gnb::tick() {
  tick_armed_ = false;
  const double slot = params_.slot_duration;
  const auto k = static_cast<std::int64_t>(std::llround(sim_.now() / slot));
  last_tick_ = k;

  resolve_outcomes();

  const Time now = sim_.now();
  double used = 0.0;

  // HARQ retransmissions first, oldest first. A retransmission keeps its
  // size but is re-allocated for the current channel; a TB that no longer
  // fits into one slot is sent in a whole slot and fails.
  for (auto it = retx_.begin(); it != retx_.end();) {
    if (it->next_attempt > now + 1e-12) {
      ++it;
      continue;
    }
    UeLink& l = *ues_[it->ue];
    const double need = l.rate > 0 ? static_cast<double>(it->bits) / (l.rate * slot) : 2.0;
    const double take = need <= 1.0 ? need : 1.0;
    if (used + take > 1.0 + 1e-9) {
      ++it;
      continue;
    }
    MacPdu pdu = std::move(*it);
    it = retx_.erase(it);
    ++pdu.attempts;
    pdu.fraction = take;
    used += take;
    const HarqOutcome out = harq_attempt(params_, pdu.attempts, pdu.tb_rate, l.rate, l.harq_rng);
    airborne_.emplace_back(std::move(pdu), out == HarqOutcome::delivered);
  }

  // New data: max-min fair split of what is left of the slot.
  struct Demand {
    int ue;
    double fraction;
  };
  std::vector<Demand> demands;
  for (int i = 0; i < static_cast<int>(ues_.size()); ++i) {
    discard_stale(i);
    const UeLink& l = *ues_[i];
    if (l.queued_bits > 0 && l.rate > 0) {
      demands.push_back({i, static_cast<double>(l.queued_bits) / (l.rate * slot)});
    }
  }
  std::stable_sort(demands.begin(), demands.end(),
                   [](const Demand& a, const Demand& b) { return a.fraction < b.fraction; });
  double left = std::max(0.0, 1.0 - used);
  std::size_t remaining = demands.size();
  std::vector<std::pair<int, double>> grants;
  for (const Demand& d : demands) {
    const double share = left / static_cast<double>(remaining--);
    const double a = std::min(d.fraction, share);
    left -= a;
    grants.emplace_back(d.ue, a);
  }
  std::sort(grants.begin(), grants.end());
  for (const auto& [ue, fraction] : grants) {
    UeLink& l = *ues_[ue];
    const double cap_bits = fraction * l.rate * slot;
    auto bits = static_cast<std::int64_t>(std::floor(cap_bits + 1e-6));
    bits = std::min(bits, l.queued_bits);
    if (bits <= 0) continue;
    MacPdu mac;
    mac.id = next_mac_id_++;
    mac.ue = ue;
    mac.bits = bits;
    mac.tb_rate = static_cast<double>(bits) / slot;
    mac.fraction = static_cast<double>(bits) / (l.rate * slot);
    drain_into(mac, l, bits);
    if (mac.segments.empty()) continue;
    std::vector<Seq> seqs;
    seqs.reserve(mac.segments.size());
    for (const auto& seg : mac.segments) seqs.push_back(seg.first);
    map_.record(mac.id, std::move(seqs));
    mac.attempts = 1;
    used += mac.fraction;
    const HarqOutcome out = harq_attempt(params_, 1, mac.tb_rate, l.rate, l.harq_rng);
    airborne_.emplace_back(std::move(mac), out == HarqOutcome::delivered);
  }

  count_slot(k, used);

  if (has_work()) {
    tick_armed_ = true;
    sim_.schedule(static_cast<double>(k + 1) * slot, [this] { tick(); });
  }
}

}  // namespace mcsim

#include "mcsim/balancer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mcsim {

namespace {
constexpr std::pair<Policy, const char*> kPolicyNames[] = {
    {Policy::single_fr1, "single_fr1"},
    {Policy::single_fr2, "single_fr2"},
    {Policy::link_switching, "link_switching"},
    {Policy::packet_duplication, "packet_duplication"},
    {Policy::packet_splitting, "packet_splitting"},
    {Policy::dbtb, "dbtb"},
};
}  // namespace

const char* to_string(Policy p) {
  for (const auto& [k, v] : kPolicyNames) {
    if (k == p) return v;
  }
  return "?";
}

Policy parse_policy(std::string_view name) {
  for (const auto& [k, v] : kPolicyNames) {
    if (name == v) return k;
  }
  throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

std::vector<Policy> all_policies() {
  std::vector<Policy> out;
  for (const auto& [k, v] : kPolicyNames) out.push_back(k);
  return out;
}

Route route_single(Policy which) {
  switch (which) {
    case Policy::single_fr1:
      return Route::fr1;
    case Policy::single_fr2:
      return Route::fr2;
    default:
      throw std::invalid_argument("route_single expects single_fr1 or single_fr2");
  }
}

Route route_link_switching(const RateEstimates& est) {
  return est.fr2 > est.fr1 ? Route::fr2 : Route::fr1;
}

double splitting_fr1_probability(const RateEstimates& est) {
  const double total = est.fr1 + est.fr2;
  if (!(total > 0)) return 1.0;
  return est.fr1 / total;
}

Route route_packet_splitting(const RateEstimates& est, RngStream& rng) {
  return rng.bernoulli(splitting_fr1_probability(est)) ? Route::fr1 : Route::fr2;
}

Route route_duplication() { return Route::both; }

Route route_dbtb(const RateEstimates& est) { return est.fr2 > 0 ? Route::deferred : Route::fr1; }

StreamQueue::StreamQueue(DbtbParams params, double rate_estimate)
    : params_(params), rate_(rate_estimate) {}

Time StreamQueue::compute_deadline(Time now, double size_bits) const {
  if (!(rate_ > 0)) return now;
  return now + (params_.d_qos - params_.d_retx) - size_bits / rate_;
}

Time StreamQueue::push(const PdcpPdu& pdu, Time now) {
  if (!q_.empty() && pdu.seq <= q_.back().pdu.seq) {
    throw std::logic_error("DBTB queue requires ascending sequence numbers");
  }
  const Time t = compute_deadline(now, static_cast<double>(pdu.size_bits));
  q_.push_back(Entry{pdu, t});
  pull_forward_from_tail();
  return t;
}

// Stops at the first entry left unchanged: everything ahead of it already
// satisfies the spacing relative to it.
void StreamQueue::pull_forward_from_tail() {
  for (std::size_t i = q_.size(); i-- > 1;) {
    Entry& prev = q_[i - 1];
    const double gap = rate_ > 0 ? static_cast<double>(prev.pdu.size_bits) / rate_ : 0.0;
    const Time bound = q_[i].deadline - gap;
    if (prev.deadline <= bound) break;
    prev.deadline = bound;
  }
}

void StreamQueue::recalc_deadlines() {
  for (std::size_t i = q_.size(); i-- > 1;) {
    Entry& prev = q_[i - 1];
    const double gap = rate_ > 0 ? static_cast<double>(prev.pdu.size_bits) / rate_ : 0.0;
    prev.deadline = std::min(prev.deadline, q_[i].deadline - gap);
  }
}

std::vector<Seq> StreamQueue::acknowledge(std::span<const Seq> seqs) {
  std::vector<Seq> removed;
  for (Seq s : seqs) {
    auto it = std::lower_bound(q_.begin(), q_.end(), s,
                               [](const Entry& e, Seq v) { return e.pdu.seq < v; });
    if (it == q_.end() || it->pdu.seq != s) continue;
    q_.erase(it);
    removed.push_back(s);
  }
  if (params_.recalc_on_ack && !removed.empty()) recalc_deadlines();
  return removed;
}

std::vector<PdcpPdu> StreamQueue::pop_expired(Time now) {
  std::vector<PdcpPdu> out;
  while (!q_.empty() && q_.front().deadline <= now) {
    out.push_back(q_.front().pdu);
    q_.pop_front();
  }
  return out;
}

std::optional<Time> StreamQueue::next_deadline() const {
  if (q_.empty()) return std::nullopt;
  return q_.front().deadline;
}

void StreamQueue::set_rate_estimate(double c) {
  const bool tighter = c < rate_;
  rate_ = c;
  if (tighter) recalc_deadlines();
}

bool StreamQueue::spacing_holds(double tol) const {
  if (!(rate_ > 0)) return true;
  for (std::size_t i = 0; i + 1 < q_.size(); ++i) {
    const double need = q_[i].deadline + static_cast<double>(q_[i].pdu.size_bits) / rate_;
    if (need > q_[i + 1].deadline + tol) return false;
  }
  return true;
}

UeReceiver::UeReceiver(Time t_reordering) : t_reordering_(t_reordering) {}

void UeReceiver::release_consecutive(std::vector<PdcpPdu>& out) {
  auto it = buffer_.begin();
  while (it != buffer_.end() && it->first == rx_deliv_) {
    out.push_back(it->second);
    ++rx_deliv_;
    it = buffer_.erase(it);
  }
}

std::vector<PdcpPdu> UeReceiver::receive(const PdcpPdu& pdu, Time now) {
  std::vector<PdcpPdu> out;
  if (pdu.seq < rx_deliv_ || buffer_.count(pdu.seq) != 0) {
    ++duplicates_;
    return out;
  }
  if (pdu.seq == rx_deliv_ && buffer_.empty()) {
    // In-order fast path.
    out.push_back(pdu);
    ++rx_deliv_;
  } else {
    buffer_.emplace(pdu.seq, pdu);
    release_consecutive(out);
  }
  rx_next_ = std::max(rx_next_, pdu.seq + 1);
  if (timer_ && rx_deliv_ >= rx_reord_) timer_.reset();
  if (!timer_ && rx_deliv_ < rx_next_) {
    rx_reord_ = rx_next_;
    timer_ = now + t_reordering_;
  }
  return out;
}

std::vector<PdcpPdu> UeReceiver::on_timeout(Time now) {
  std::vector<PdcpPdu> out;
  timer_.reset();
  while (!buffer_.empty() && buffer_.begin()->first < rx_reord_) {
    out.push_back(buffer_.begin()->second);
    buffer_.erase(buffer_.begin());
  }
  rx_deliv_ = std::max(rx_deliv_, rx_reord_);
  release_consecutive(out);
  if (rx_deliv_ < rx_next_) {
    rx_reord_ = rx_next_;
    timer_ = now + t_reordering_;
  }
  return out;
}

}  // namespace mcsim

#include "mcsim/traffic.hpp"

#include <cmath>
#include <string>

namespace mcsim {

void TrafficConfig::validate() const {
  if (!(mean_bitrate > 0) || !(fps > 0) || !(peak_to_average >= 1.0) || mtu_payload_bits <= 0 ||
      !(d_qos > 0)) {
    throw std::invalid_argument("traffic parameters must be positive (peak_to_average >= 1)");
  }
  if (!(flr_qos > 0 && flr_qos < 1)) throw std::invalid_argument("flr_qos must lie in (0, 1)");
  if (!(size_floor_ratio > 0 && size_floor_ratio <= 1) || !(size_sigma_ratio >= 0)) {
    throw std::invalid_argument("frame size shape parameters out of range");
  }
}

FrameSource::FrameSource(TrafficConfig cfg, RngStream rng) : cfg_(cfg), rng_(std::move(rng)) {
  cfg_.validate();
}

std::int64_t FrameSource::draw_size() {
  const double mean = cfg_.mean_frame_bits();
  if (cfg_.peak_to_average <= 1.0 || cfg_.size_sigma_ratio == 0.0) {
    return std::llround(mean);
  }
  const double lo = cfg_.size_floor_ratio * mean;
  const double hi = cfg_.peak_to_average * mean;
  const double sigma = cfg_.size_sigma_ratio * mean;
  for (;;) {
    const double x = rng_.normal(mean, sigma);
    if (x >= lo && x <= hi) {
      // Rounding must not step outside the truncation bounds.
      const auto bits = static_cast<std::int64_t>(std::floor(x));
      return std::max<std::int64_t>(bits, 1);
    }
  }
}

VideoFrame FrameSource::next_frame(Time gen_time) {
  VideoFrame f;
  f.frame_id = next_id_++;
  f.gen_time = gen_time;
  f.size_bits = draw_size();
  f.packet_count =
      static_cast<std::int32_t>((f.size_bits + cfg_.mtu_payload_bits - 1) / cfg_.mtu_payload_bits);
  return f;
}

std::vector<AppPacket> fragment(const VideoFrame& frame, const TrafficConfig& cfg) {
  if (frame.size_bits <= 0) throw std::invalid_argument("cannot fragment an empty frame");
  const std::int64_t mtu = cfg.mtu_payload_bits;
  const std::int64_t n = (frame.size_bits + mtu - 1) / mtu;
  std::vector<AppPacket> out;
  out.reserve(static_cast<std::size_t>(n));
  std::int64_t left = frame.size_bits;
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t sz = std::min(left, mtu);
    out.push_back(AppPacket{frame.frame_id, static_cast<std::int32_t>(i), sz, frame.gen_time});
    left -= sz;
  }
  return out;
}

FrameTracker::FrameTracker(Time d_qos, Time count_from) : d_qos_(d_qos), count_from_(count_from) {}

void FrameTracker::add(const VideoFrame& frame) {
  if (frame.frame_id != frames_.size()) {
    throw std::logic_error("frames must be added in id order");
  }
  Live l{frame, std::vector<bool>(static_cast<std::size_t>(frame.packet_count), false)};
  l.frame.status = FrameStatus::pending;
  l.frame.delivered_packets = 0;
  frames_.push_back(std::move(l));
  outcomes_.push_back(FrameStatus::pending);
  if (frame.gen_time >= count_from_) ++generated_;
}

std::optional<FrameStatus> FrameTracker::on_app_delivery(const AppPacket& packet, Time arrival) {
  return on_app_delivery(packet.frame_id, packet.packet_index, arrival);
}

std::optional<FrameStatus> FrameTracker::on_app_delivery(std::uint64_t frame_id,
                                                         std::int32_t packet_index,
                                                         Time arrival) {
  if (frame_id >= frames_.size()) throw std::logic_error("delivery for unknown frame");
  Live& l = frames_[frame_id];
  auto idx = static_cast<std::size_t>(packet_index);
  if (idx >= l.seen.size()) throw std::logic_error("packet index out of range");
  if (l.seen[idx]) {
    throw DedupViolation("packet (" + std::to_string(frame_id) + ", " +
                         std::to_string(packet_index) + ") released twice");
  }
  l.seen[idx] = true;
  ++packets_released_;
  if (l.frame.status != FrameStatus::pending) return std::nullopt;
  if (arrival > l.frame.gen_time + d_qos_) return std::nullopt;
  if (++l.frame.delivered_packets == l.frame.packet_count) {
    settle(l, FrameStatus::delivered_in_time);
    return FrameStatus::delivered_in_time;
  }
  return std::nullopt;
}

FrameStatus FrameTracker::finalize(std::uint64_t frame_id) {
  Live& l = frames_.at(frame_id);
  if (l.frame.status == FrameStatus::pending) settle(l, FrameStatus::lost);
  return l.frame.status;
}

void FrameTracker::settle(Live& l, FrameStatus status) {
  l.frame.status = status;
  outcomes_[l.frame.frame_id] = status;
  if (l.frame.gen_time < count_from_) return;
  if (status == FrameStatus::delivered_in_time) ++on_time_;
  else ++lost_;
}

std::uint64_t FrameTracker::frames_pending() const {
  std::uint64_t n = 0;
  for (const auto& l : frames_) {
    if (l.frame.status == FrameStatus::pending && l.frame.gen_time >= count_from_) ++n;
  }
  return n;
}

}  // namespace mcsim

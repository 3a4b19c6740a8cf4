#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mcsim/engine.hpp"

namespace mcsim {

struct TrafficConfig {
  double mean_bitrate = 50e6;     // bits/s
  double fps = 60.0;
  double peak_to_average = 2.0;
  double size_sigma_ratio = 0.25;  // std-dev of the frame size relative to its mean
  double size_floor_ratio = 0.25;  // smallest frame relative to the mean
  std::int64_t mtu_payload_bits = 1460 * 8;
  double d_qos = 15e-3;            // seconds
  double flr_qos = 1e-2;

  double mean_frame_bits() const { return mean_bitrate / fps; }
  double frame_period() const { return 1.0 / fps; }
  void validate() const;
};

enum class FrameStatus : std::uint8_t { pending, delivered_in_time, lost };

struct VideoFrame {
  std::uint64_t frame_id = 0;
  Time gen_time = 0.0;
  std::int64_t size_bits = 0;
  std::int32_t packet_count = 0;
  std::int32_t delivered_packets = 0;
  FrameStatus status = FrameStatus::pending;
};

struct AppPacket {
  std::uint64_t frame_id = 0;
  std::int32_t packet_index = 0;
  std::int64_t size_bits = 0;
  Time gen_time = 0.0;
};

/// Periodic AR/VR source. Frame sizes follow a normal law with
/// sigma = size_sigma_ratio * mean, truncated to
/// [size_floor_ratio, peak_to_average] * mean by rejection.
class FrameSource {
 public:
  FrameSource(TrafficConfig cfg, RngStream rng);

  /// Draw the next frame generated at `gen_time`.
  VideoFrame next_frame(Time gen_time);

  const TrafficConfig& config() const { return cfg_; }

 private:
  std::int64_t draw_size();

  TrafficConfig cfg_;
  RngStream rng_;
  std::uint64_t next_id_ = 0;
};

/// Split a frame into ceil(size / mtu) packets; only the last may be short.
std::vector<AppPacket> fragment(const VideoFrame& frame, const TrafficConfig& cfg);

class DedupViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/**
 * Per-UE frame bookkeeping at the application layer.
 *
 * A frame is delivered-in-time once all its packets have been released by
 * gen_time + d_qos; otherwise finalize() marks it lost at its deadline.
 * Frames generated before `count_from` are tracked but not counted.
 */
class FrameTracker {
 public:
  FrameTracker(Time d_qos, Time count_from);

  void add(const VideoFrame& frame);

  /// Returns the new status when this delivery completes the frame in time.
  std::optional<FrameStatus> on_app_delivery(const AppPacket& packet, Time arrival);
  std::optional<FrameStatus> on_app_delivery(std::uint64_t frame_id, std::int32_t packet_index,
                                             Time arrival);

  /// Deadline handler: marks a still-pending frame lost. Returns its final status.
  FrameStatus finalize(std::uint64_t frame_id);

  std::uint64_t frames_generated() const { return generated_; }
  std::uint64_t frames_on_time() const { return on_time_; }
  std::uint64_t frames_lost() const { return lost_; }
  std::uint64_t frames_pending() const;
  std::uint64_t packets_released() const { return packets_released_; }

  /// Final status of every frame, indexed by frame_id (counted or not).
  const std::vector<FrameStatus>& outcomes() const { return outcomes_; }

 private:
  struct Live {
    VideoFrame frame;
    std::vector<bool> seen;
  };
  void settle(Live& live, FrameStatus status);

  Time d_qos_;
  Time count_from_;
  // Every frame of the run is kept so that a duplicate release is caught
  // even after the frame has been settled.
  std::vector<Live> frames_;
  std::vector<FrameStatus> outcomes_;
  std::uint64_t generated_ = 0;
  std::uint64_t on_time_ = 0;
  std::uint64_t lost_ = 0;
  std::uint64_t packets_released_ = 0;
};

}  // namespace mcsim

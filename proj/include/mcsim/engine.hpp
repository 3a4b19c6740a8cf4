#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mcsim {

/// Simulation time in seconds.
using Time = double;

/// Opaque handle returned by Simulator::schedule. Ids are handed out from a
/// monotone counter and double as the tie-break key between simultaneous
/// events.
struct EventId {
  std::uint64_t value = 0;
  friend bool operator==(EventId a, EventId b) { return a.value == b.value; }
};

class SchedulingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/**
 * Discrete-event core.
 *
 * Events fire in (fire_time, id) lexicographic order. The clock only moves
 * forward: scheduling into the past throws SchedulingError. Cancellation is
 * lazy; canceled entries stay in the heap and are skipped on pop.
 */
class Simulator {
 public:
  using Callback = std::function<void()>;
  /// Observer invoked before each dispatch with (fire_time, id).
  using TraceHook = std::function<void(Time, std::uint64_t)>;

  Time now() const { return now_; }

  EventId schedule(Time at, Callback cb);
  EventId schedule_in(Time delay, Callback cb) { return schedule(now_ + delay, std::move(cb)); }

  /// True iff the event was still pending. A canceled event never fires.
  bool cancel(EventId id);
  bool is_pending(EventId id) const { return callbacks_.count(id.value) != 0; }

  /// Dispatch every event with fire_time <= t_end, then set the clock to t_end.
  void run_until(Time t_end);

  std::uint64_t dispatched() const { return dispatched_; }
  std::size_t pending() const { return callbacks_.size(); }

  void set_trace(TraceHook hook) { trace_ = std::move(hook); }

 private:
  struct Entry {
    Time at;
    std::uint64_t id;
    // std::priority_queue is a max-heap, so "greater" means "fires later".
    bool operator<(const Entry& o) const {
      if (at != o.at) return at > o.at;
      return id > o.id;
    }
  };

  Time now_ = 0.0;
  std::uint64_t next_id_ = 1;
  std::uint64_t dispatched_ = 0;
  std::priority_queue<Entry> heap_;
  std::unordered_map<std::uint64_t, Callback> callbacks_;
  TraceHook trace_;
};

/// 64-bit FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t fnv1a(std::string_view text);

/// splitmix64 finalizer, used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x);

/**
 * A named random stream. Distinct (seed, label) pairs give independent
 * sequences; the same pair always reproduces the same one.
 */
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label);

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  /// Uniform in [0, 1).
  double uniform();
  double exponential(double mean);
  double normal(double mean, double stddev);
  bool bernoulli(double p);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace mcsim

#include "mcsim/engine.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mcsim {

EventId Simulator::schedule(Time at, Callback cb) {
  if (!(at >= now_)) {
    throw SchedulingError("event scheduled in the past: t=" + std::to_string(at) +
                          " now=" + std::to_string(now_));
  }
  const std::uint64_t id = next_id_++;
  heap_.push(Entry{at, id});
  callbacks_.emplace(id, std::move(cb));
  return EventId{id};
}

bool Simulator::cancel(EventId id) { return callbacks_.erase(id.value) != 0; }

void Simulator::run_until(Time t_end) {
  if (t_end < now_) {
    throw SchedulingError("run_until target lies in the past");
  }
  while (!heap_.empty() && heap_.top().at <= t_end) {
    const Entry e = heap_.top();
    heap_.pop();
    auto it = callbacks_.find(e.id);
    if (it == callbacks_.end()) continue;  // canceled
    Callback cb = std::move(it->second);
    callbacks_.erase(it);
    now_ = e.at;
    if (trace_) trace_(e.at, e.id);
    ++dispatched_;
    cb();
  }
  now_ = t_end;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::string_view label)
    : seed_(seed), engine_(splitmix64(splitmix64(seed) ^ fnv1a(label))) {}

// The distributions are written out by hand so that sequences do not depend
// on the standard library's (unspecified) distribution algorithms.
double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RngStream::exponential(double mean) { return -mean * std::log1p(-uniform()); }

double RngStream::normal(double mean, double stddev) {
  // Box-Muller; one of the pair is discarded to keep the stream stateless.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + stddev * z;
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

}  // namespace mcsim

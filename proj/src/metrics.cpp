#include "mcsim/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mcsim {

std::optional<double> flr(const UeStats& s) {
  if (s.frames_generated == 0) return std::nullopt;
  const std::uint64_t missed = s.frames_generated - s.frames_on_time;
  return static_cast<double>(missed) / static_cast<double>(s.frames_generated);
}

bool satisfied(const UeStats& s, double flr_qos) {
  const auto v = flr(s);
  return v && *v <= flr_qos;
}

double satisfied_ratio(const RunResult& run, double flr_qos) {
  if (run.ues.empty()) throw std::invalid_argument("satisfied_ratio needs at least one UE");
  std::size_t ok = 0;
  for (const auto& u : run.ues) ok += satisfied(u, flr_qos) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(run.ues.size());
}

Capacity capacity_from_sweep(std::span<const SweepPoint> points, double threshold) {
  Capacity out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].n_ue != static_cast<int>(i) + 1) {
      throw std::invalid_argument("sweep points must be contiguous from N = 1");
    }
    if (points[i].satisfied_ratio > threshold) out.capacity = points[i].n_ue;
    if (i > 0 && points[i].satisfied_ratio > points[i - 1].satisfied_ratio) out.monotone = false;
  }
  return out;
}

MeanCi mean_ci(std::span<const double> samples, double confidence) {
  MeanCi out;
  out.n = samples.size();
  if (samples.empty()) return out;
  out.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(out.n);
  if (out.n < 2) return out;
  double ss = 0.0;
  for (double x : samples) ss += (x - out.mean) * (x - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(out.n - 1));
  boost::math::students_t dist(static_cast<double>(out.n - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
  out.half_width = t * sd / std::sqrt(static_cast<double>(out.n));
  return out;
}

}  // namespace mcsim

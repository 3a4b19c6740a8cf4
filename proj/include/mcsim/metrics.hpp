#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcsim {

struct UeStats {
  int ue_id = 0;
  double distance_m = 0.0;
  std::uint64_t frames_generated = 0;
  std::uint64_t frames_on_time = 0;
  std::uint64_t frames_lost = 0;
};

/// Fraction of frames not delivered in time; nullopt when no frame counted.
std::optional<double> flr(const UeStats& stats);

/// FLR <= flr_qos. A UE without frames is not satisfied.
bool satisfied(const UeStats& stats, double flr_qos);

struct RunResult {
  std::string point_id;
  std::uint64_t seed = 0;
  std::vector<UeStats> ues;
  double fr1_usage = 0.0;
  double fr2_usage = 0.0;
  std::uint64_t fr1_pdus = 0;  // PDUs put on the FR1 link
};

/// Fraction of UEs in the run whose FLR does not exceed flr_qos.
double satisfied_ratio(const RunResult& run, double flr_qos);

struct SweepPoint {
  int n_ue = 0;
  double satisfied_ratio = 0.0;
};

struct Capacity {
  int capacity = 0;
  bool monotone = true;  // satisfied ratio never increases with N
};

/// Largest N whose mean satisfied ratio strictly exceeds `threshold`
/// (0 if none). Points must be sorted by N and contiguous from 1.
Capacity capacity_from_sweep(std::span<const SweepPoint> points, double threshold = 0.9);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // 95% Student-t; 0 for fewer than two samples
  std::size_t n = 0;
};

MeanCi mean_ci(std::span<const double> samples, double confidence = 0.95);

}  // namespace mcsim

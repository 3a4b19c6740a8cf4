#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcsim/balancer.hpp"
#include "mcsim/radio.hpp"
#include "mcsim/traffic.hpp"

namespace mcsim {

enum class ScenarioKind : std::uint8_t { single_ue_distance_sweep, multi_ue_capacity_sweep };

const char* to_string(ScenarioKind k);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run needs. Defaults reproduce the reference AR/VR scenario.
struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::single_ue_distance_sweep;
  std::vector<Policy> policies = all_policies();
  std::vector<double> distances_m = {10, 30, 50, 70, 90, 110, 130};
  std::vector<int> ue_counts = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};

  double sim_time = 10.0;
  double warmup = 0.5;
  int runs = 20;
  std::uint64_t base_seed = 1;
  bool freeze_drops = false;

  double cell_max_distance_m = 133.0;
  double measurement_period = 10e-3;
  double xn_latency = 1e-3;
  double c_est_smoothing = 0.5;
  double t_reordering = 10e-3;
  double pdcp_discard = 15e-3;  // 0 disables the discard timer

  TrafficConfig traffic;
  DbtbParams dbtb;
  LinkParams fr1;
  LinkParams fr2;
  BlockageParams blockage;

  ScenarioConfig();

  void validate() const;
  /// Flat `key = value` rendering of every key, sorted by key.
  std::map<std::string, std::string> to_map() const;
};

/// Applies one `key=value` assignment. Throws ConfigError on unknown keys or
/// values that do not parse.
void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& value);

/// Parses flat `key = value` text ('#' starts a comment).
ScenarioConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});

/// Loads a config file (empty path means defaults only) and applies
/// `key=value` overrides on top.
ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides = {});

/// Every recognised key, sorted.
std::vector<std::string> config_keys();

}  // namespace mcsim

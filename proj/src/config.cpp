#include "mcsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace mcsim {

const char* to_string(ScenarioKind k) {
  return k == ScenarioKind::single_ue_distance_sweep ? "single_ue_distance_sweep"
                                                      : "multi_ue_capacity_sweep";
}

ScenarioConfig::ScenarioConfig() {
  fr1.carrier_hz = 3.6e9;
  fr1.bandwidth_hz = 100e6;
  fr1.pl_const_db = 28.0;
  fr1.pl_exponent = 2.2;
  fr1.shadowing_sigma_db = 4.0;
  fr1.efficiency_cap = 3.3;
  fr1.slot_duration = 0.5e-3;

  fr2.carrier_hz = 28e9;
  fr2.bandwidth_hz = 1e9;
  fr2.antenna_gain_dbi = 32.0;
  fr2.pl_const_db = 13.54;
  fr2.pl_exponent = 3.908;
  fr2.shadowing_sigma_db = 7.0;
  fr2.efficiency_cap = 7.4;
  fr2.slot_duration = 0.125e-3;
}

namespace {

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("key '" + key + "': cannot parse number '" + v + "'");
  }
  return out;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': cannot parse integer '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Key {
  std::function<std::string(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, const std::string&, const std::string&)> set;
};

using Registry = std::map<std::string, Key>;

// Numeric key stored in SI units but exposed scaled (e.g. ms, MHz).
template <class Field>
void add_scaled(Registry& r, const std::string& name, Field field, double scale) {
  r[name] = Key{[field, scale](const ScenarioConfig& c) { return fmt_num(field(c) / scale); },
                [field, scale](ScenarioConfig& c, const std::string& k, const std::string& v) {
                  field(c) = parse_double(k, v) * scale;
                }};
}

void add_link(Registry& r, const std::string& prefix, LinkParams ScenarioConfig::*link) {
  auto f = [link](auto member) {
    return [link, member](auto& c) -> auto& { return (c.*link).*member; };
  };
  add_scaled(r, prefix + "carrier_ghz", f(&LinkParams::carrier_hz), 1e9);
  add_scaled(r, prefix + "bandwidth_mhz", f(&LinkParams::bandwidth_hz), 1e6);
  add_scaled(r, prefix + "tx_power_dbm", f(&LinkParams::tx_power_dbm), 1.0);
  add_scaled(r, prefix + "antenna_gain_dbi", f(&LinkParams::antenna_gain_dbi), 1.0);
  add_scaled(r, prefix + "noise_figure_db", f(&LinkParams::noise_figure_db), 1.0);
  add_scaled(r, prefix + "pl_const_db", f(&LinkParams::pl_const_db), 1.0);
  add_scaled(r, prefix + "pl_exponent", f(&LinkParams::pl_exponent), 1.0);
  add_scaled(r, prefix + "shadowing_db", f(&LinkParams::shadowing_sigma_db), 1.0);
  add_scaled(r, prefix + "efficiency_cap", f(&LinkParams::efficiency_cap), 1.0);
  add_scaled(r, prefix + "slot_ms", f(&LinkParams::slot_duration), 1e-3);
  add_scaled(r, prefix + "harq_success", f(&LinkParams::per_attempt_success), 1.0);
  add_scaled(r, prefix + "harq_rtt_ms", f(&LinkParams::harq_rtt), 1e-3);
  r[prefix + "harq_max_attempts"] =
      Key{[link](const ScenarioConfig& c) { return std::to_string((c.*link).max_harq_attempts); },
          [link](ScenarioConfig& c, const std::string& k, const std::string& v) {
            (c.*link).max_harq_attempts = static_cast<int>(parse_int(k, v));
          }};
}

#define MCSIM_FIELD(expr) [](auto& c) -> auto& { return c.expr; }

const Registry& registry() {
  static const Registry reg = [] {
    Registry r;
    r["scenario"] = Key{[](const ScenarioConfig& c) { return std::string(to_string(c.scenario)); },
                        [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                          if (v == "single_ue_distance_sweep") {
                            c.scenario = ScenarioKind::single_ue_distance_sweep;
                          } else if (v == "multi_ue_capacity_sweep") {
                            c.scenario = ScenarioKind::multi_ue_capacity_sweep;
                          } else {
                            throw ConfigError("key '" + k + "': unknown scenario '" + v + "'");
                          }
                        }};
    r["policy"] = Key{[](const ScenarioConfig& c) {
                        std::string s;
                        for (auto p : c.policies) s += (s.empty() ? "" : ",") + std::string(to_string(p));
                        return s;
                      },
                      [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                        if (v == "all") {
                          c.policies = all_policies();
                          return;
                        }
                        c.policies.clear();
                        try {
                          for (const auto& p : split(v, ',')) c.policies.push_back(parse_policy(p));
                        } catch (const std::invalid_argument& e) {
                          throw ConfigError("key '" + k + "': " + e.what());
                        }
                      }};
    r["distances_m"] = Key{[](const ScenarioConfig& c) {
                             std::string s;
                             for (double d : c.distances_m) s += (s.empty() ? "" : ",") + fmt_num(d);
                             return s;
                           },
                           [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                             c.distances_m.clear();
                             for (const auto& d : split(v, ',')) c.distances_m.push_back(parse_double(k, d));
                           }};
    r["ue_counts"] = Key{[](const ScenarioConfig& c) {
                           std::string s;
                           for (int n : c.ue_counts) s += (s.empty() ? "" : ",") + std::to_string(n);
                           return s;
                         },
                         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                           c.ue_counts.clear();
                           for (const auto& item : split(v, ',')) {
                             const auto dash = item.find('-');
                             if (dash == std::string::npos) {
                               c.ue_counts.push_back(static_cast<int>(parse_int(k, item)));
                               continue;
                             }
                             const auto lo = parse_int(k, trim(item.substr(0, dash)));
                             const auto hi = parse_int(k, trim(item.substr(dash + 1)));
                             for (auto n = lo; n <= hi; ++n) c.ue_counts.push_back(static_cast<int>(n));
                           }
                         }};
    add_scaled(r, "sim_time_s", MCSIM_FIELD(sim_time), 1.0);
    add_scaled(r, "warmup_s", MCSIM_FIELD(warmup), 1.0);
    r["runs"] = Key{[](const ScenarioConfig& c) { return std::to_string(c.runs); },
                    [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                      c.runs = static_cast<int>(parse_int(k, v));
                    }};
    r["base_seed"] = Key{[](const ScenarioConfig& c) { return std::to_string(c.base_seed); },
                         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                           c.base_seed = static_cast<std::uint64_t>(parse_int(k, v));
                         }};
    r["freeze_drops"] = Key{[](const ScenarioConfig& c) { return std::string(c.freeze_drops ? "true" : "false"); },
                            [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                              c.freeze_drops = parse_bool(k, v);
                            }};
    r["recalc_on_ack"] = Key{[](const ScenarioConfig& c) { return std::string(c.dbtb.recalc_on_ack ? "true" : "false"); },
                             [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                               c.dbtb.recalc_on_ack = parse_bool(k, v);
                             }};
    add_scaled(r, "cell_max_distance_m", MCSIM_FIELD(cell_max_distance_m), 1.0);
    add_scaled(r, "measurement_period_ms", MCSIM_FIELD(measurement_period), 1e-3);
    add_scaled(r, "xn_latency_ms", MCSIM_FIELD(xn_latency), 1e-3);
    add_scaled(r, "c_est_smoothing", MCSIM_FIELD(c_est_smoothing), 1.0);
    add_scaled(r, "t_reordering_ms", MCSIM_FIELD(t_reordering), 1e-3);
    add_scaled(r, "pdcp_discard_ms", MCSIM_FIELD(pdcp_discard), 1e-3);

    add_scaled(r, "bitrate_mbps", MCSIM_FIELD(traffic.mean_bitrate), 1e6);
    add_scaled(r, "fps", MCSIM_FIELD(traffic.fps), 1.0);
    add_scaled(r, "peak_to_average", MCSIM_FIELD(traffic.peak_to_average), 1.0);
    add_scaled(r, "frame_size_sigma", MCSIM_FIELD(traffic.size_sigma_ratio), 1.0);
    add_scaled(r, "frame_size_floor", MCSIM_FIELD(traffic.size_floor_ratio), 1.0);
    r["mtu_payload_bytes"] =
        Key{[](const ScenarioConfig& c) { return std::to_string(c.traffic.mtu_payload_bits / 8); },
            [](ScenarioConfig& c, const std::string& k, const std::string& v) {
              c.traffic.mtu_payload_bits = parse_int(k, v) * 8;
            }};
    add_scaled(r, "d_qos_ms", MCSIM_FIELD(traffic.d_qos), 1e-3);
    add_scaled(r, "flr_qos", MCSIM_FIELD(traffic.flr_qos), 1.0);
    add_scaled(r, "d_retx_ms", MCSIM_FIELD(dbtb.d_retx), 1e-3);

    r["gnb_height_m"] = Key{[](const ScenarioConfig& c) { return fmt_num(c.fr1.gnb_height_m); },
                            [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                              c.fr1.gnb_height_m = c.fr2.gnb_height_m = parse_double(k, v);
                            }};
    r["ue_height_m"] = Key{[](const ScenarioConfig& c) { return fmt_num(c.fr1.ue_height_m); },
                           [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                             c.fr1.ue_height_m = c.fr2.ue_height_m = parse_double(k, v);
                           }};
    add_link(r, "fr1_", &ScenarioConfig::fr1);
    add_link(r, "fr2_", &ScenarioConfig::fr2);

    add_scaled(r, "blockage_mean_unblocked_ms", MCSIM_FIELD(blockage.mean_unblocked), 1e-3);
    add_scaled(r, "blockage_mean_blocked_ms", MCSIM_FIELD(blockage.mean_blocked), 1e-3);
    add_scaled(r, "blockage_loss_db", MCSIM_FIELD(blockage.loss_db), 1.0);
    return r;
  }();
  return reg;
}

#undef MCSIM_FIELD

}  // namespace

void ScenarioConfig::validate() const {
  try {
    traffic.validate();
    fr1.validate();
    fr2.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (policies.empty()) throw ConfigError("no policy selected");
  if (!(sim_time > warmup) || warmup < 0) throw ConfigError("sim_time_s must exceed warmup_s");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (!(dbtb.d_retx >= 0) || dbtb.d_retx > traffic.d_qos) {
    throw ConfigError("d_retx_ms must lie in [0, d_qos_ms]");
  }
  if (!(cell_max_distance_m > 0)) throw ConfigError("cell_max_distance_m must be positive");
  for (double d : distances_m) {
    if (!(d > 0 && d <= 200)) throw ConfigError("distances must lie in (0, 200] m");
  }
  for (int n : ue_counts) {
    if (n < 1) throw ConfigError("ue_counts entries must be >= 1");
  }
  if (!(measurement_period > 0)) throw ConfigError("measurement_period_ms must be positive");
  if (!(xn_latency >= 0)) throw ConfigError("xn_latency_ms must be >= 0");
  if (!(c_est_smoothing > 0 && c_est_smoothing <= 1)) {
    throw ConfigError("c_est_smoothing must lie in (0, 1]");
  }
  if (!(t_reordering >= 0) || !(pdcp_discard >= 0)) throw ConfigError("timers must be >= 0");
  if (!(blockage.mean_blocked >= 0) || !(blockage.mean_unblocked >= 0) || !(blockage.loss_db >= 0)) {
    throw ConfigError("blockage parameters must be >= 0");
  }
}

std::map<std::string, std::string> ScenarioConfig::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [name, key] : registry()) out[name] = key.get(*this);
  return out;
}

void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  const auto& reg = registry();
  auto it = reg.find(key);
  if (it == reg.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(cfg, key, value);
}

namespace {
void apply_line(ScenarioConfig& cfg, const std::string& raw, const std::string& where) {
  std::string line = raw;
  if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
  line = trim(line);
  if (line.empty()) return;
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
  const std::string key = trim(line.substr(0, eq));
  const std::string value = trim(line.substr(eq + 1));
  if (key.empty()) throw ConfigError(where + ": missing key");
  try {
    apply_setting(cfg, key, value);
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}
}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) apply_line(cfg, line, "line " + std::to_string(++lineno));
  for (const auto& o : overrides) {
    if (o.find('=') == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    apply_line(cfg, o, "override");
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_config(text, overrides);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [name, key] : registry()) out.push_back(name);
  return out;
}

}  // namespace mcsim

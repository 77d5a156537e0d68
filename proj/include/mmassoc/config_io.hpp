#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmassoc/baselines.hpp"
#include "mmassoc/engine.hpp"
#include "mmassoc/error.hpp"
#include "mmassoc/rng.hpp"
#include "mmassoc/scenario.hpp"

namespace mmassoc {

using json = nlohmann::json;

namespace detail {

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where.empty() ? "<root>" : where, "must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError(where.empty() ? k : where + "." + k, "unknown key");
  }
}

inline std::string join(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

template <class T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(join(where, key), "wrong type");
  }
}

inline double read_number(const json& obj, const std::string& where, const char* key, double fallback) {
  double v = fallback;
  const auto it = obj.find(key);
  if (it == obj.end()) return v;
  if (!it->is_number()) throw ConfigError(join(where, key), "must be a number");
  v = it->get<double>();
  if (!std::isfinite(v)) throw ConfigError(join(where, key), "must be finite");
  return v;
}

inline Location read_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(where, "must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline ScenarioSpec read_scenario(const json& sj) {
  const std::string w = "scenario";
  if (!sj.is_object()) throw ConfigError(w, "must be an object");
  if (sj.contains("preset")) {
    check_keys(sj, w, {"preset", "bs_height_m"});
    if (!sj["preset"].is_string()) throw ConfigError("scenario.preset", "must be a string");
    auto s = scenario_preset(sj["preset"].get<std::string>());
    s.bs_height = read_number(sj, w, "bs_height_m", s.bs_height);
    return s;
  }
  check_keys(sj, w, {"name", "world", "buildings", "roads", "base_stations", "bs_height_m"});
  for (const char* k : {"world", "roads", "base_stations"})
    if (!sj.contains(k)) throw ConfigError(join(w, k), "missing key");
  ScenarioSpec s;
  s.buildings.clear();
  read(sj, w, "name", s.name);
  const auto& wj = sj["world"];
  check_keys(wj, "scenario.world", {"width_m", "height_m"});
  s.world.width = read_number(wj, "scenario.world", "width_m", 0.0);
  s.world.height = read_number(wj, "scenario.world", "height_m", 0.0);
  if (sj.contains("buildings")) {
    if (!sj["buildings"].is_array()) throw ConfigError("scenario.buildings", "must be an array");
    for (std::size_t k = 0; k < sj["buildings"].size(); ++k) {
      const auto& b = sj["buildings"][k];
      const std::string bw = "scenario.buildings[" + std::to_string(k) + "]";
      if (!b.is_array() || b.size() != 4) throw ConfigError(bw, "must be [x0, y0, x1, y1]");
      for (const auto& v : b)
        if (!v.is_number()) throw ConfigError(bw, "must be [x0, y0, x1, y1]");
      s.buildings.push_back({{b[0].get<double>(), b[1].get<double>()}, {b[2].get<double>(), b[3].get<double>()}});
    }
  }
  const auto& rj = sj["roads"];
  check_keys(rj, "scenario.roads", {"nodes", "edges", "entries", "exits"});
  for (const char* k : {"nodes", "edges", "entries", "exits"})
    if (!rj.contains(k) || !rj[k].is_array()) throw ConfigError(join("scenario.roads", k), "missing array");
  for (std::size_t k = 0; k < rj["nodes"].size(); ++k)
    s.road_nodes.push_back(read_point(rj["nodes"][k], "scenario.roads.nodes[" + std::to_string(k) + "]"));
  try {
    for (const auto& e : rj["edges"]) s.road_edges.push_back(e.get<std::pair<int, int>>());
    s.entries = rj["entries"].get<std::vector<int>>();
    s.exits = rj["exits"].get<std::vector<int>>();
  } catch (const json::exception&) {
    throw ConfigError("scenario.roads", "edges/entries/exits must hold node indices");
  }
  if (!sj["base_stations"].is_array()) throw ConfigError("scenario.base_stations", "must be an array");
  for (std::size_t k = 0; k < sj["base_stations"].size(); ++k)
    s.bs_locations.push_back(
        read_point(sj["base_stations"][k], "scenario.base_stations[" + std::to_string(k) + "]"));
  s.bs_height = read_number(sj, w, "bs_height_m", s.bs_height);
  return s;
}

/// Rejects duplicate keys in any object while parsing.
inline json parse_strict(const std::string& text) {
  std::vector<std::set<std::string>> seen;
  json::parser_callback_t cb = [&](int, json::parse_event_t ev, json& parsed) {
    switch (ev) {
      case json::parse_event_t::object_start:
        seen.emplace_back();
        break;
      case json::parse_event_t::object_end:
        if (!seen.empty()) seen.pop_back();
        break;
      case json::parse_event_t::key: {
        const auto k = parsed.get<std::string>();
        if (!seen.back().insert(k).second) throw ConfigError(k, "duplicate key");
        break;
      }
      default:
        break;
    }
    return true;
  };
  try {
    return json::parse(text, cb);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace detail

inline json scenario_to_json(const ScenarioSpec& s) {
  json j;
  j["name"] = s.name;
  j["world"] = {{"width_m", s.world.width}, {"height_m", s.world.height}};
  j["buildings"] = json::array();
  for (const auto& r : s.buildings) j["buildings"].push_back({r.lo.x, r.lo.y, r.hi.x, r.hi.y});
  json roads;
  roads["nodes"] = json::array();
  for (const auto& p : s.road_nodes) roads["nodes"].push_back({p.x, p.y});
  roads["edges"] = s.road_edges;
  roads["entries"] = s.entries;
  roads["exits"] = s.exits;
  j["roads"] = roads;
  j["base_stations"] = json::array();
  for (const auto& p : s.bs_locations) j["base_stations"].push_back({p.x, p.y});
  j["bs_height_m"] = s.bs_height;
  return j;
}

/// Every setting with defaults filled in; the scenario is always expanded.
inline json effective_config(const SimConfig& c) {
  const auto& r = c.radio;
  json j;
  j["horizon"] = c.horizon;
  j["seed"] = c.seed;
  j["lambda"] = c.lambda;
  j["dt"] = c.dt;
  j["policy"] = std::string(to_string(c.policy));
  j["oracle_mode"] = std::string(to_string(c.oracle_mode));
  j["alpha"] = c.alpha;
  j["p"] = c.p;
  j["alpha_ts"] = c.alpha_ts;
  j["ts_sigma_is_variance"] = c.ts_sigma_is_variance;
  j["zeta"] = r.handover_cost;
  j["reward_unit_bps"] = c.reward_unit;
  j["ts_reward_unit_bps"] = c.ts_reward_unit;
  j["grid"] = {{"velocity_bands", c.grid_v}, {"x_cells", c.grid_x}, {"y_cells", c.grid_y}};
  j["velocity_kmh"] = {{"min", c.velocity.v_min * 3.6}, {"max", c.velocity.v_max * 3.6}};
  j["radio"] = {{"carrier_freq_hz", r.carrier_freq_hz},
                {"bandwidth_hz", r.bandwidth_hz},
                {"tx_power_dbm", linear_to_db(r.tx_power_w) + 30.0},
                {"noise_density_dbm_hz", linear_to_db(r.noise_density_w_per_hz) + 30.0},
                {"main_lobe_gain_db", linear_to_db(r.main_lobe_gain)},
                {"side_lobe_gain_db", linear_to_db(r.side_lobe_gain)},
                {"rician_k_db", linear_to_db(r.rician_k)},
                {"theta_beam_deg", r.theta_beam * 180.0 / std::numbers::pi},
                {"vehicle_height_m", r.vehicle_height},
                {"d_max_m", r.d_max},
                {"r_max_bps", r.r_max},
                {"r_max_headroom", r.r_max_headroom},
                {"rx_beam_alignment", r.rx_beam_alignment}};
  j["scenario"] = scenario_to_json(c.scenario);
  j["exhaustive_limit"] = c.exhaustive_limit;
  j["wcs_iters_per_vehicle"] = c.wcs_iters_per_vehicle;
  j["misid_samples"] = c.misid_samples;
  j["metric_window"] = c.metric_window;
  return j;
}

/// Stable under key reordering: objects are serialized with sorted keys.
inline std::string config_hash(const SimConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(effective_config(c).dump())));
  return buf;
}

/// Builds a validated SimConfig from parsed JSON. `scenario` and `policy` are required.
inline SimConfig config_from_json(const json& j) {
  using detail::read;
  using detail::read_number;
  detail::check_keys(j, "",
                     {"horizon", "seed", "lambda", "dt", "policy", "oracle_mode", "alpha", "p", "alpha_ts",
                      "ts_sigma_is_variance", "zeta", "reward_unit_bps", "ts_reward_unit_bps", "grid", "velocity_kmh",
                      "radio",
                      "scenario", "exhaustive_limit", "wcs_iters_per_vehicle", "misid_samples", "metric_window"});
  for (const char* k : {"scenario", "policy"})
    if (!j.contains(k)) throw ConfigError(k, "missing key");
  SimConfig c;
  read(j, "", "horizon", c.horizon);
  read(j, "", "seed", c.seed);
  c.lambda = read_number(j, "", "lambda", c.lambda);
  c.dt = read_number(j, "", "dt", c.dt);
  if (!j["policy"].is_string()) throw ConfigError("policy", "must be a string");
  const auto pol = parse_policy(j["policy"].get<std::string>());
  if (!pol) throw ConfigError("policy", "unknown policy '" + j["policy"].get<std::string>() + "'");
  c.policy = *pol;
  if (j.contains("oracle_mode")) {
    const auto m = j["oracle_mode"].is_string() ? j["oracle_mode"].get<std::string>() : "";
    if (m == "exhaustive") {
      c.oracle_mode = OracleMode::exhaustive;
    } else if (m == "wcs_reference") {
      c.oracle_mode = OracleMode::wcs_reference;
    } else {
      throw ConfigError("oracle_mode", "must be \"exhaustive\" or \"wcs_reference\"");
    }
  }
  c.alpha = read_number(j, "", "alpha", c.alpha);
  c.p = read_number(j, "", "p", c.p);
  c.alpha_ts = read_number(j, "", "alpha_ts", c.alpha_ts);
  read(j, "", "ts_sigma_is_variance", c.ts_sigma_is_variance);
  c.radio.handover_cost = read_number(j, "", "zeta", c.radio.handover_cost);
  c.reward_unit = read_number(j, "", "reward_unit_bps", c.reward_unit);
  c.ts_reward_unit = read_number(j, "", "ts_reward_unit_bps", c.ts_reward_unit);
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    detail::check_keys(g, "grid", {"velocity_bands", "x_cells", "y_cells"});
    read(g, "grid", "velocity_bands", c.grid_v);
    read(g, "grid", "x_cells", c.grid_x);
    read(g, "grid", "y_cells", c.grid_y);
  }
  if (j.contains("velocity_kmh")) {
    const auto& v = j["velocity_kmh"];
    detail::check_keys(v, "velocity_kmh", {"min", "max"});
    c.velocity.v_min = read_number(v, "velocity_kmh", "min", c.velocity.v_min * 3.6) / 3.6;
    c.velocity.v_max = read_number(v, "velocity_kmh", "max", c.velocity.v_max * 3.6) / 3.6;
  }
  if (j.contains("radio")) {
    const auto& rj = j["radio"];
    const std::string w = "radio";
    detail::check_keys(rj, w,
                       {"carrier_freq_hz", "bandwidth_hz", "tx_power_dbm", "noise_density_dbm_hz",
                        "main_lobe_gain_db", "side_lobe_gain_db", "rician_k_db", "theta_beam_deg",
                        "vehicle_height_m", "d_max_m", "r_max_bps", "r_max_headroom", "rx_beam_alignment"});
    auto& r = c.radio;
    r.carrier_freq_hz = read_number(rj, w, "carrier_freq_hz", r.carrier_freq_hz);
    r.bandwidth_hz = read_number(rj, w, "bandwidth_hz", r.bandwidth_hz);
    r.tx_power_w = dbm_to_watts(read_number(rj, w, "tx_power_dbm", linear_to_db(r.tx_power_w) + 30.0));
    r.noise_density_w_per_hz =
        dbm_to_watts(read_number(rj, w, "noise_density_dbm_hz", linear_to_db(r.noise_density_w_per_hz) + 30.0));
    r.main_lobe_gain = db_to_linear(read_number(rj, w, "main_lobe_gain_db", linear_to_db(r.main_lobe_gain)));
    r.side_lobe_gain = db_to_linear(read_number(rj, w, "side_lobe_gain_db", linear_to_db(r.side_lobe_gain)));
    r.rician_k = db_to_linear(read_number(rj, w, "rician_k_db", linear_to_db(r.rician_k)));
    r.theta_beam =
        read_number(rj, w, "theta_beam_deg", r.theta_beam * 180.0 / std::numbers::pi) * std::numbers::pi / 180.0;
    r.vehicle_height = read_number(rj, w, "vehicle_height_m", r.vehicle_height);
    r.d_max = read_number(rj, w, "d_max_m", r.d_max);
    r.r_max = read_number(rj, w, "r_max_bps", r.r_max);
    r.r_max_headroom = read_number(rj, w, "r_max_headroom", r.r_max_headroom);
    read(rj, w, "rx_beam_alignment", r.rx_beam_alignment);
  }
  c.scenario = detail::read_scenario(j["scenario"]);
  c.radio.bs_height = c.scenario.bs_height;
  read(j, "", "exhaustive_limit", c.exhaustive_limit);
  read(j, "", "wcs_iters_per_vehicle", c.wcs_iters_per_vehicle);
  read(j, "", "misid_samples", c.misid_samples);
  read(j, "", "metric_window", c.metric_window);
  c.validate();
  try {
    Scenario check(c.scenario);
  } catch (const GeometryError& e) {
    throw ConfigError("scenario", e.what());
  }
  return c;
}

inline SimConfig parse_config(const std::string& text) { return config_from_json(detail::parse_strict(text)); }

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace mmassoc

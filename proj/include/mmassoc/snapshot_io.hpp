#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmassoc/cc_ucb.hpp"
#include "mmassoc/engine.hpp"
#include "mmassoc/error.hpp"
#include "mmassoc/ts_agent.hpp"

namespace mmassoc {

inline constexpr const char* kSnapshotFormat = "mmassoc-learner-snapshot";
inline constexpr int kSnapshotVersion = 1;

struct LearnerSnapshot {
  LearnerTables tables;
  std::map<std::uint64_t, TsAgentState> agents;
};

/// Sparse JSON dump: only sampled cells, recorded pseudo-rewards and set floors.
inline nlohmann::json export_snapshot(const LearnerTables& tb, const std::map<std::uint64_t, TsAgentState>& agents) {
  using nlohmann::json;
  const auto& g = tb.grid();
  const auto& prm = tb.params();
  json j;
  j["format"] = kSnapshotFormat;
  j["version"] = kSnapshotVersion;
  j["grid"] = {{"velocity_bands", g.n_v()}, {"x_cells", g.n_x()},         {"y_cells", g.n_y()},
               {"v_min_mps", g.v_min()},    {"v_max_mps", g.v_max()},     {"width_m", g.world().width},
               {"height_m", g.world().height}};
  j["sites"] = json::array();
  for (const auto& s : tb.sites()) j["sites"].push_back({s.location.x, s.location.y, s.antenna_height});
  j["params"] = {{"alpha", prm.alpha},
                 {"p", prm.infraction_p},
                 {"r_max_bps", prm.r_max},
                 {"reward_unit_bps", prm.reward_unit},
                 {"correlated", prm.correlated},
                 {"theta_beam_rad", tb.theta_beam()},
                 {"d_max_m", tb.d_max()}};
  j["rewards"] = json::array();
  j["phi_inf"] = json::array();
  for (std::size_t f = 0; f < g.size(); ++f) {
    const ContextId d = g.unflat(f);
    for (int a = 0; a < tb.arms(); ++a) {
      if (tb.count(d, a) > 0) j["rewards"].push_back({f, a, tb.mu(d, a), tb.count(d, a)});
      if (tb.has_floor(d, a)) j["phi_inf"].push_back({f, a, tb.phi_inf(d, a)});
    }
  }
  std::vector<std::tuple<int, std::size_t, std::size_t, double, std::uint64_t>> phi;
  for (const auto& [key, e] : tb.phi_entries()) {
    const auto [a, src, dst] = tb.decode_phi_key(key);
    phi.emplace_back(a, src, dst, e.mean, e.count);
  }
  std::sort(phi.begin(), phi.end());
  j["phi"] = json::array();
  for (const auto& [a, src, dst, mean, count] : phi) j["phi"].push_back({a, src, dst, mean, count});
  j["stale_floor_events"] = tb.stale_floor_events();
  j["ts_agents"] = json::array();
  for (const auto& [id, ag] : agents) {
    json arms = json::array();
    for (int a = 0; a < ag.arms(); ++a)
      if (ag.pulls(a) > 0) arms.push_back({a, ag.discrepancy(a), ag.pulls(a)});
    j["ts_agents"].push_back({{"id", id}, {"prev_bs", ag.prev_bs()}, {"arms", arms}});
  }
  return j;
}

/// Live and retired TS agents of a finished run.
inline std::map<std::uint64_t, TsAgentState> collect_agents(const Simulation& sim) {
  auto out = sim.retired_agents();
  if (sim.config().policy == PolicyKind::sd_cc_ucb || sim.config().policy == PolicyKind::sd_cc_ucb_no_handover)
    for (const auto& s : sim.vehicles()) out.insert_or_assign(s.state.id, s.ts);
  return out;
}

/// Parses and validates a snapshot; any inconsistency is an IoError.
inline LearnerSnapshot import_snapshot(const nlohmann::json& j) {
  const auto fail = [](const std::string& what) -> void { throw IoError("snapshot: " + what); };
  try {
    if (j.value("format", "") != kSnapshotFormat) fail("unknown format");
    if (j.value("version", -1) != kSnapshotVersion) fail("unsupported version");
    const auto& gj = j.at("grid");
    const ContextGrid grid(gj.at("velocity_bands").get<int>(), gj.at("x_cells").get<int>(),
                           gj.at("y_cells").get<int>(), gj.at("v_min_mps").get<double>(),
                           gj.at("v_max_mps").get<double>(),
                           WorldBounds{gj.at("width_m").get<double>(), gj.at("height_m").get<double>()});
    std::vector<BaseStationSite> sites;
    for (const auto& s : j.at("sites")) {
      if (s.size() != 3) fail("site entries are [x, y, height]");
      sites.push_back({static_cast<int>(sites.size()), {s[0].get<double>(), s[1].get<double>()}, s[2].get<double>()});
    }
    if (sites.empty()) fail("no sites");
    const auto& pj = j.at("params");
    LearnerParams prm;
    prm.alpha = pj.at("alpha").get<double>();
    prm.infraction_p = pj.at("p").get<double>();
    prm.r_max = pj.at("r_max_bps").get<double>();
    prm.reward_unit = pj.at("reward_unit_bps").get<double>();
    prm.correlated = pj.at("correlated").get<bool>();
    LearnerSnapshot snap{LearnerTables(grid, sites, prm, pj.at("theta_beam_rad").get<double>(),
                                       pj.at("d_max_m").get<double>()),
                         {}};
    auto& tb = snap.tables;
    const auto arms = static_cast<std::size_t>(tb.arms());
    const auto check_cell = [&](std::size_t f, std::size_t a) {
      if (f >= grid.size() || a >= arms) fail("index out of range");
    };
    for (const auto& r : j.at("rewards")) {
      if (r.size() != 4) fail("reward entries are [context, arm, mean, count]");
      const auto f = r[0].get<std::size_t>(), a = r[1].get<std::size_t>();
      check_cell(f, a);
      const double mean = r[2].get<double>();
      const auto count = r[3].get<std::uint64_t>();
      if (count == 0 || !std::isfinite(mean) || mean < 0.0 || mean > prm.r_max) fail("invalid reward entry");
      tb.set_reward(grid.unflat(f), static_cast<int>(a), mean, count);
    }
    std::map<std::pair<std::size_t, std::size_t>, double> min_phi;  // (dst, arm) -> smallest mean
    for (const auto& e : j.at("phi")) {
      if (e.size() != 5) fail("phi entries are [arm, src, dst, mean, count]");
      const auto a = e[0].get<std::size_t>(), src = e[1].get<std::size_t>(), dst = e[2].get<std::size_t>();
      check_cell(src, a);
      check_cell(dst, a);
      if (src == dst) fail("phi entry maps a context onto itself");
      const double mean = e[3].get<double>();
      const auto count = e[4].get<std::uint64_t>();
      if (count == 0 || !std::isfinite(mean)) fail("invalid phi entry");
      tb.set_phi(static_cast<int>(a), grid.unflat(src), grid.unflat(dst), {mean, count});
      auto [it, fresh] = min_phi.try_emplace({dst, a}, mean);
      if (!fresh) it->second = std::min(it->second, mean);
    }
    for (const auto& e : j.at("phi_inf")) {
      if (e.size() != 3) fail("phi_inf entries are [context, arm, value]");
      const auto f = e[0].get<std::size_t>(), a = e[1].get<std::size_t>();
      check_cell(f, a);
      const double v = e[2].get<double>();
      const auto it = min_phi.find({f, a});
      if (it == min_phi.end()) fail("floor without any pseudo-reward");
      if (!std::isfinite(v) || v > it->second) fail("floor above a recorded pseudo-reward");
      tb.set_phi_inf(grid.unflat(f), static_cast<int>(a), v);
    }
    for (const auto& [key, v] : min_phi)
      if (!tb.has_floor(grid.unflat(key.first), static_cast<int>(key.second))) fail("pseudo-reward without a floor");
    tb.set_stale_floor_events(j.at("stale_floor_events").get<std::uint64_t>());
    for (const auto& aj : j.at("ts_agents")) {
      TsAgentState ag(tb.arms(), TsParams{});
      const int prev = aj.at("prev_bs").get<int>();
      if (prev < kNoBs || prev >= tb.arms()) fail("agent prev_bs out of range");
      ag.set_prev_bs(prev);
      for (const auto& e : aj.at("arms")) {
        if (e.size() != 3) fail("agent arm entries are [arm, discrepancy, pulls]");
        const auto a = e[0].get<std::size_t>();
        if (a >= arms) fail("agent arm out of range");
        const double disc = e[1].get<double>();
        const auto pulls = e[2].get<std::uint64_t>();
        if (pulls == 0 || !std::isfinite(disc)) fail("invalid agent arm entry");
        ag.restore(static_cast<int>(a), disc, pulls);
      }
      if (!snap.agents.emplace(aj.at("id").get<std::uint64_t>(), ag).second) fail("duplicate agent id");
    }
    return snap;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("snapshot: ") + e.what());
  } catch (const GeometryError& e) {
    throw IoError(std::string("snapshot: ") + e.what());
  } catch (const ContractViolation& e) {
    throw IoError(std::string("snapshot: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace mmassoc

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mmassoc/error.hpp"
#include "mmassoc/geometry.hpp"
#include "mmassoc/mobility.hpp"

namespace mmassoc {

/// Plain description of a world layout, as read from a config.
struct ScenarioSpec {
  std::string name = "custom";
  WorldBounds world{300.0, 300.0};
  std::vector<Rect> buildings;
  std::vector<Location> road_nodes;
  std::vector<std::pair<int, int>> road_edges;
  std::vector<int> entries;
  std::vector<int> exits;
  std::vector<Location> bs_locations;
  double bs_height = 10.0;
};

/// Validated world built from a ScenarioSpec.
struct Scenario {
  ScenarioSpec spec;
  WorldBounds world;
  BuildingMap buildings;
  RoadGraph roads;
  std::vector<BaseStationSite> sites;

  explicit Scenario(ScenarioSpec s) : spec(std::move(s)), world(spec.world) {
    if (!(world.width > 0.0 && world.height > 0.0)) throw GeometryError("world must have positive size");
    buildings = BuildingMap(spec.buildings, world);
    for (const auto& p : spec.road_nodes)
      if (!world.contains(p)) throw GeometryError("road node outside world bounds");
    roads = RoadGraph(spec.road_nodes, spec.road_edges, spec.entries, spec.exits);
    if (spec.bs_locations.empty()) throw GeometryError("scenario has no base stations");
    if (!(spec.bs_height > 0.0)) throw GeometryError("base station height must be positive");
    for (std::size_t j = 0; j < spec.bs_locations.size(); ++j) {
      if (!world.contains(spec.bs_locations[j])) throw GeometryError("base station outside world bounds");
      sites.push_back({static_cast<int>(j), spec.bs_locations[j], spec.bs_height});
    }
  }
};

/// Manhattan grid: three streets each way at 50/150/250 m, sixteen blocks set
/// back 10 m from the street centers, one BS next to every intersection.
inline ScenarioSpec desk_scenario() {
  ScenarioSpec s;
  s.name = "desk";
  s.world = {300.0, 300.0};
  const double streets[3] = {50.0, 150.0, 250.0};
  const std::pair<double, double> blocks[4] = {{0.0, 40.0}, {60.0, 140.0}, {160.0, 240.0}, {260.0, 300.0}};
  for (auto [x0, x1] : blocks)
    for (auto [y0, y1] : blocks) s.buildings.push_back({{x0, y0}, {x1, y1}});

  // 0..8 intersections (ix * 3 + iy), then boundary endpoints.
  for (double x : streets)
    for (double y : streets) s.road_nodes.push_back({x, y});
  const auto node = [](int ix, int iy) { return ix * 3 + iy; };
  for (int ix = 0; ix < 3; ++ix)
    for (int iy = 0; iy < 3; ++iy) {
      if (ix + 1 < 3) s.road_edges.push_back({node(ix, iy), node(ix + 1, iy)});
      if (iy + 1 < 3) s.road_edges.push_back({node(ix, iy), node(ix, iy + 1)});
    }
  for (int k = 0; k < 3; ++k) {
    const double c = streets[k];
    const int south = static_cast<int>(s.road_nodes.size());
    s.road_nodes.push_back({c, 0.0});
    s.road_edges.push_back({south, node(k, 0)});
    const int north = south + 1;
    s.road_nodes.push_back({c, s.world.height});
    s.road_edges.push_back({north, node(k, 2)});
    const int west = south + 2;
    s.road_nodes.push_back({0.0, c});
    s.road_edges.push_back({west, node(0, k)});
    const int east = south + 3;
    s.road_nodes.push_back({s.world.width, c});
    s.road_edges.push_back({east, node(2, k)});
    for (int b : {south, north, west, east}) {
      s.entries.push_back(b);
      s.exits.push_back(b);
    }
  }
  for (double x : streets)
    for (double y : streets) s.bs_locations.push_back({x + 5.0, y + 5.0});
  return s;
}

inline std::vector<std::string> scenario_presets() { return {"desk"}; }

inline ScenarioSpec scenario_preset(const std::string& name) {
  if (name == "desk") return desk_scenario();
  throw ConfigError("scenario.preset", "unknown preset '" + name + "'");
}

}  // namespace mmassoc

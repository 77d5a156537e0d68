#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <utility>
#include <vector>

#include "mmassoc/error.hpp"
#include "mmassoc/geometry.hpp"
#include "mmassoc/rng.hpp"

namespace mmassoc {

struct RoadEdge {
  int a = 0;
  int b = 0;
  double length = 0.0;
};

/// Undirected street graph. Edge lengths are derived from node positions.
class RoadGraph {
 public:
  RoadGraph() = default;
  RoadGraph(std::vector<Location> nodes, const std::vector<std::pair<int, int>>& edges,
            std::vector<int> entries, std::vector<int> exits)
      : nodes_(std::move(nodes)), entries_(std::move(entries)), exits_(std::move(exits)) {
    const int n = static_cast<int>(nodes_.size());
    if (n == 0) throw GeometryError("road graph has no nodes");
    adj_.resize(nodes_.size());
    for (auto [a, b] : edges) {
      if (a < 0 || b < 0 || a >= n || b >= n || a == b) throw GeometryError("invalid road edge");
      const double len = distance(nodes_[a], nodes_[b]);
      if (!(len > 0.0)) throw GeometryError("road edge has zero length");
      edges_.push_back({a, b, len});
      adj_[a].push_back({b, len});
      adj_[b].push_back({a, len});
    }
    for (auto& list : adj_) std::sort(list.begin(), list.end());
    if (entries_.empty() || exits_.empty()) throw GeometryError("road graph needs entries and exits");
    for (int v : entries_)
      if (v < 0 || v >= n) throw GeometryError("entry node out of range");
    for (int v : exits_)
      if (v < 0 || v >= n) throw GeometryError("exit node out of range");
    const auto reach = distances_from(0);
    for (double d : reach)
      if (!std::isfinite(d)) throw GeometryError("road graph is not connected");
    for (int entry : entries_) {
      if (std::none_of(exits_.begin(), exits_.end(), [&](int x) { return x != entry; }))
        throw GeometryError("entry node has no distinct exit");
    }
  }

  std::span<const Location> nodes() const { return nodes_; }
  std::span<const RoadEdge> edges() const { return edges_; }
  std::span<const int> entries() const { return entries_; }
  std::span<const int> exits() const { return exits_; }

  /// Label-setting shortest path. Among equal-length paths the predecessor
  /// with the smallest node index wins.
  std::vector<int> shortest_path(int from, int to) const {
    const std::size_t n = nodes_.size();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<int> pred(n, -1);
    std::vector<bool> done(n, false);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[from] = 0.0;
    pq.push({0.0, from});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (done[u]) continue;
      done[u] = true;
      if (u == to) break;
      for (auto [w, len] : adj_[u]) {
        const double nd = d + len;
        if (nd < dist[w] || (nd == dist[w] && !done[w] && u < pred[w])) {
          dist[w] = nd;
          pred[w] = u;
          pq.push({nd, w});
        }
      }
    }
    if (!std::isfinite(dist[to])) throw GeometryError("no route between nodes");
    std::vector<int> path{to};
    while (path.back() != from) path.push_back(pred[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
  }

  /// Distance from point p to the nearest edge.
  double distance_to_network(Location p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : edges_) {
      const Location a = nodes_[e.a];
      const Location ab = nodes_[e.b] - a;
      const double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
      best = std::min(best, distance(p, a + t * ab));
    }
    return best;
  }

 private:
  std::vector<double> distances_from(int src) const {
    std::vector<double> dist(nodes_.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (auto [w, len] : adj_[u]) {
        if (d + len < dist[w]) {
          dist[w] = d + len;
          pq.push({dist[w], w});
        }
      }
    }
    return dist;
  }

  std::vector<Location> nodes_;
  std::vector<RoadEdge> edges_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
  std::vector<int> entries_;
  std::vector<int> exits_;
};

/// A vehicle's route as a polyline with cumulative arc lengths.
struct Route {
  std::vector<int> nodes;
  std::vector<Location> points;
  std::vector<double> cumulative;  // cumulative[k] = arc length at points[k]

  double length() const { return cumulative.empty() ? 0.0 : cumulative.back(); }

  Location at(double s) const {
    if (s <= 0.0) return points.front();
    if (s >= length()) return points.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    const std::size_t k = static_cast<std::size_t>(it - cumulative.begin()) - 1;
    const double seg = cumulative[k + 1] - cumulative[k];
    return points[k] + ((s - cumulative[k]) / seg) * (points[k + 1] - points[k]);
  }

  static Route from_nodes(const RoadGraph& roads, std::vector<int> node_seq) {
    Route r;
    r.nodes = std::move(node_seq);
    double acc = 0.0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
      const Location p = roads.nodes()[r.nodes[k]];
      if (k > 0) acc += distance(r.points.back(), p);
      r.points.push_back(p);
      r.cumulative.push_back(acc);
    }
    return r;
  }
};

struct VelocityRange {
  double v_min = 20.0 / 3.6;
  double v_max = 80.0 / 3.6;
};

/// Mobile state of one vehicle. Fading lives with the channel model, keyed by id.
struct VehicleState {
  std::uint64_t id = 0;
  Location location;
  double velocity = 0.0;  // m/s
  Route route;
  double route_progress = 0.0;  // meters travelled along the route
  int prev_bs = -1;             // serving BS of the previous period, -1 if none
  Rng motion_rng;               // per-vehicle stream for velocity resampling
};

/// Draws Poisson(lambda) new vehicles, each with a random entry, a random
/// distinct exit, a uniform velocity and a shortest route. Ids are taken from
/// `next_id`, which is advanced.
inline std::vector<VehicleState> spawn_arrivals(Rng& rng, double lambda, const RoadGraph& roads,
                                                const VelocityRange& vr, std::uint64_t& next_id,
                                                std::uint64_t master_seed = 0) {
  if (!(lambda >= 0.0)) throw ContractViolation("arrival rate must be non-negative");
  std::vector<VehicleState> out;
  if (lambda == 0.0) return out;
  const int count = std::poisson_distribution<int>(lambda)(rng);
  const auto entries = roads.entries();
  const auto exits = roads.exits();
  for (int k = 0; k < count; ++k) {
    VehicleState v;
    v.id = next_id++;
    v.motion_rng = make_stream(master_seed, "motion", v.id);
    const int entry = entries[std::uniform_int_distribution<std::size_t>(0, entries.size() - 1)(rng)];
    int exit = entry;
    while (exit == entry) exit = exits[std::uniform_int_distribution<std::size_t>(0, exits.size() - 1)(rng)];
    v.route = Route::from_nodes(roads, roads.shortest_path(entry, exit));
    v.location = v.route.points.front();
    v.velocity = std::uniform_real_distribution<double>(vr.v_min, vr.v_max)(v.motion_rng);
    out.push_back(std::move(v));
  }
  return out;
}

/// Advances a vehicle by one period starting at simulated time `t_now`
/// seconds. Returns false when the vehicle ran off the end of its route.
/// Velocity is redrawn whenever the step crosses a whole second.
inline bool step_vehicle(VehicleState& v, double dt, double t_now, const VelocityRange& vr) {
  if (!(dt > 0.0)) throw ContractViolation("period length must be positive");
  const double next = v.route_progress + v.velocity * dt;
  if (next > v.route.length()) return false;
  v.route_progress = next;
  v.location = v.route.at(next);
  const auto seconds_crossed = static_cast<long long>(std::floor(t_now + dt)) - static_cast<long long>(std::floor(t_now));
  for (long long k = 0; k < seconds_crossed; ++k)
    v.velocity = std::uniform_real_distribution<double>(vr.v_min, vr.v_max)(v.motion_rng);
  return true;
}

/// Where the vehicle will be after one more period at its current velocity.
inline Location projected_location(const VehicleState& v, double dt) {
  return v.route.at(v.route_progress + v.velocity * dt);
}

}  // namespace mmassoc

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mmassoc/error.hpp"
#include "mmassoc/geometry.hpp"

namespace mmassoc {

/// Cell indices of a context in the (velocity, x, y) partition.
struct ContextId {
  int iv = 0;
  int ix = 0;
  int iy = 0;
  friend constexpr bool operator==(ContextId, ContextId) = default;
};

/// Uniform partition of the 3-D context space.
class ContextGrid {
 public:
  ContextGrid() = default;
  ContextGrid(int n_v, int n_x, int n_y, double v_min, double v_max, WorldBounds world)
      : n_v_(n_v), n_x_(n_x), n_y_(n_y), v_min_(v_min), v_max_(v_max), world_(world) {
    if (n_v < 1 || n_x < 1 || n_y < 1) throw GeometryError("context grid counts must be >= 1");
    if (!(v_max > v_min)) throw GeometryError("velocity range must be non-empty");
    if (!(world.width > 0.0 && world.height > 0.0)) throw GeometryError("world must have positive size");
  }

  int n_v() const { return n_v_; }
  int n_x() const { return n_x_; }
  int n_y() const { return n_y_; }
  double v_min() const { return v_min_; }
  double v_max() const { return v_max_; }
  const WorldBounds& world() const { return world_; }
  std::size_t size() const { return static_cast<std::size_t>(n_v_) * n_x_ * n_y_; }
  double cell_width() const { return world_.width / n_x_; }
  double cell_height() const { return world_.height / n_y_; }
  double velocity_step() const { return (v_max_ - v_min_) / n_v_; }

  std::size_t flat(ContextId c) const {
    return (static_cast<std::size_t>(c.iv) * n_x_ + c.ix) * n_y_ + c.iy;
  }
  ContextId unflat(std::size_t f) const {
    const int iy = static_cast<int>(f % n_y_);
    f /= n_y_;
    const int ix = static_cast<int>(f % n_x_);
    return {static_cast<int>(f / n_x_), ix, iy};
  }
  bool valid(ContextId c) const {
    return c.iv >= 0 && c.iv < n_v_ && c.ix >= 0 && c.ix < n_x_ && c.iy >= 0 && c.iy < n_y_;
  }

  Rect cell_rect(int ix, int iy) const {
    return {{ix * cell_width(), iy * cell_height()}, {(ix + 1) * cell_width(), (iy + 1) * cell_height()}};
  }

  /// Velocity interval [lo, hi) of band iv; the top band is closed.
  std::pair<double, double> velocity_interval(int iv) const {
    return {v_min_ + iv * velocity_step(), iv + 1 == n_v_ ? v_max_ : v_min_ + (iv + 1) * velocity_step()};
  }

  /// Band containing `v`, or -1 when v is outside [v_min, v_max].
  int velocity_band(double v) const {
    if (!(v >= v_min_ && v <= v_max_)) return -1;
    return std::min(static_cast<int>(std::floor((v - v_min_) / velocity_step())), n_v_ - 1);
  }

 private:
  int n_v_ = 1, n_x_ = 1, n_y_ = 1;
  double v_min_ = 0.0, v_max_ = 1.0;
  WorldBounds world_{1.0, 1.0};
};

/// Context of a vehicle with the given velocity and location. Velocity is
/// clamped into range; a location outside the world is an error.
inline ContextId context_of(double velocity, Location where, const ContextGrid& grid) {
  if (!grid.world().contains(where)) throw OutOfBoundsError("location outside world bounds");
  const double v = std::clamp(velocity, grid.v_min(), grid.v_max());
  const auto cell = [](double value, double step, int n) {
    return std::min(static_cast<int>(std::floor(value / step)), n - 1);
  };
  return {grid.velocity_band(v), cell(where.x, grid.cell_width(), grid.n_x()),
          cell(where.y, grid.cell_height(), grid.n_y())};
}

/// Contexts whose spatial cell meets `poly` and whose velocity band holds
/// `velocity`, ordered by flat index.
inline std::vector<ContextId> contexts_in_region(const ConvexPolygon& poly, double velocity,
                                                 const ContextGrid& grid) {
  std::vector<ContextId> out;
  const int iv = grid.velocity_band(velocity);
  if (iv < 0) return out;
  const Rect bb = poly.bounding_box();
  const Rect world = grid.world().rect();
  if (bb.hi.x < world.lo.x || bb.lo.x > world.hi.x || bb.hi.y < world.lo.y || bb.lo.y > world.hi.y)
    return out;
  const auto lo_cell = [](double v, double step, int n) {
    return std::clamp(static_cast<int>(std::floor(v / step)) - 1, 0, n - 1);
  };
  const auto hi_cell = [](double v, double step, int n) {
    return std::clamp(static_cast<int>(std::floor(v / step)) + 1, 0, n - 1);
  };
  const int x0 = lo_cell(bb.lo.x, grid.cell_width(), grid.n_x());
  const int x1 = hi_cell(bb.hi.x, grid.cell_width(), grid.n_x());
  const int y0 = lo_cell(bb.lo.y, grid.cell_height(), grid.n_y());
  const int y1 = hi_cell(bb.hi.y, grid.cell_height(), grid.n_y());
  for (int ix = x0; ix <= x1; ++ix) {
    for (int iy = y0; iy <= y1; ++iy) {
      if (polygon_intersects_rect(poly, grid.cell_rect(ix, iy))) out.push_back({iv, ix, iy});
    }
  }
  return out;
}

}  // namespace mmassoc

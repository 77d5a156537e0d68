#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "mmassoc/error.hpp"

namespace mmassoc {

/// Planar point or vector in meters.
struct Location {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Location operator+(Location a, Location b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Location operator-(Location a, Location b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Location operator*(double s, Location a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Location, Location) = default;
};

inline constexpr double dot(Location a, Location b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(Location a, Location b) { return a.x * b.y - a.y * b.x; }
inline double norm(Location a) { return std::hypot(a.x, a.y); }
inline double distance(Location a, Location b) { return norm(a - b); }

/// Axis-aligned rectangle [lo.x, hi.x] x [lo.y, hi.y].
struct Rect {
  Location lo;
  Location hi;

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  double area() const { return width() * height(); }
  bool contains(Location p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  }
  bool contains_interior(Location p) const {
    return p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Euclidean distance from p to the closed rectangle (0 inside).
inline double distance_to_rect(Location p, const Rect& r) {
  const double dx = std::max({r.lo.x - p.x, 0.0, p.x - r.hi.x});
  const double dy = std::max({r.lo.y - p.y, 0.0, p.y - r.hi.y});
  return std::hypot(dx, dy);
}

struct WorldBounds {
  double width = 0.0;
  double height = 0.0;

  bool contains(Location p) const {
    return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.x <= width && p.y >= 0.0 &&
           p.y <= height;
  }
  Rect rect() const { return {{0.0, 0.0}, {width, height}}; }
};

/// Static blockages. Each building is an axis-aligned footprint of infinite height.
class BuildingMap {
 public:
  BuildingMap() = default;
  BuildingMap(std::vector<Rect> rects, const WorldBounds& world) : rects_(std::move(rects)) {
    for (const auto& r : rects_) {
      if (!(r.width() > 0.0 && r.height() > 0.0)) throw GeometryError("building rectangle has no area");
      if (!world.contains(r.lo) || !world.contains(r.hi))
        throw GeometryError("building rectangle outside world bounds");
    }
  }

  std::span<const Rect> rects() const { return rects_; }

 private:
  std::vector<Rect> rects_;
};

/// True when segment a-b passes through the open interior of `r`.
/// Liang-Barsky clipping against open slabs; touching an edge or corner does not block.
inline bool segment_hits_interior(Location a, Location b, const Rect& r) {
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  const double p[2] = {a.x, a.y};
  const double d[2] = {b.x - a.x, b.y - a.y};
  const double lo[2] = {r.lo.x, r.lo.y};
  const double hi[2] = {r.hi.x, r.hi.y};
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (!(p[k] > lo[k] && p[k] < hi[k])) return false;
      continue;
    }
    double t1 = (lo[k] - p[k]) / d[k];
    double t2 = (hi[k] - p[k]) / d[k];
    if (t1 > t2) std::swap(t1, t2);
    t_lo = std::max(t_lo, t1);
    t_hi = std::min(t_hi, t2);
  }
  return std::max(t_lo, 0.0) < std::min(t_hi, 1.0);
}

inline bool los_blocked(Location a, Location b, const BuildingMap& map) {
  for (const auto& r : map.rects()) {
    if (segment_hits_interior(a, b, r)) return true;
  }
  return false;
}

/// Convex polygon with counter-clockwise vertices.
class ConvexPolygon {
 public:
  explicit ConvexPolygon(std::vector<Location> vertices) : v_(std::move(vertices)) {
    if (v_.size() < 3) throw GeometryError("polygon needs at least 3 vertices");
    const std::size_t n = v_.size();
    double area2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Location& p = v_[i];
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw GeometryError("non-finite polygon vertex");
      area2 += cross(p, v_[(i + 1) % n]);
    }
    if (!(area2 > 0.0)) throw GeometryError("polygon must be counter-clockwise with positive area");
    const double tol = 1e-12 * area2;
    for (std::size_t i = 0; i < n; ++i) {
      const Location e1 = v_[(i + 1) % n] - v_[i];
      const Location e2 = v_[(i + 2) % n] - v_[(i + 1) % n];
      if (cross(e1, e2) < -tol) throw GeometryError("polygon is not convex");
    }
  }

  std::span<const Location> vertices() const { return v_; }

  /// Closed containment.
  bool contains(Location q, double eps = 1e-9) const {
    const std::size_t n = v_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Location e = v_[(i + 1) % n] - v_[i];
      const double scale = std::max(1.0, norm(e));
      if (cross(e, q - v_[i]) < -eps * scale) return false;
    }
    return true;
  }

  Rect bounding_box() const {
    Rect b{v_.front(), v_.front()};
    for (const auto& p : v_) {
      b.lo.x = std::min(b.lo.x, p.x);
      b.lo.y = std::min(b.lo.y, p.y);
      b.hi.x = std::max(b.hi.x, p.x);
      b.hi.y = std::max(b.hi.y, p.y);
    }
    return b;
  }

 private:
  std::vector<Location> v_;
};

/// Separating-axis test with the closed-set convention (touching intersects).
inline bool polygon_intersects_rect(const ConvexPolygon& poly, const Rect& rect) {
  const auto verts = poly.vertices();
  const Rect bb = poly.bounding_box();
  if (bb.hi.x < rect.lo.x || bb.lo.x > rect.hi.x || bb.hi.y < rect.lo.y || bb.lo.y > rect.hi.y)
    return false;
  const Location corners[4] = {rect.lo, {rect.hi.x, rect.lo.y}, rect.hi, {rect.lo.x, rect.hi.y}};
  const std::size_t n = verts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Location e = verts[(i + 1) % n] - verts[i];
    const Location axis{e.y, -e.x};  // outward normal for ccw order
    const double poly_max = dot(axis, verts[i]);
    double rect_min = std::numeric_limits<double>::infinity();
    for (const auto& c : corners) rect_min = std::min(rect_min, dot(axis, c));
    const double tol = 1e-12 * std::max(1.0, std::abs(poly_max));
    if (rect_min > poly_max + tol) return false;
  }
  return true;
}

struct BaseStationSite {
  int id = 0;
  Location location;
  double antenna_height = 10.0;
};

/// Signed angle difference wrapped into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

/// Angular half-width cap that keeps the sector quadrilateral strictly convex.
inline constexpr double kMaxBeamHalfSpan = 0.49 * std::numbers::pi;

/// Region extended outward from a BS beam over a vehicle's traverse from
/// `l_start` to `l_end`: the annular sector between the farther endpoint
/// distance and `d_max`, spanning the bearings of both endpoints and widened
/// symmetrically to at least `theta_beam`. Returned as the quadrilateral whose
/// inner and outer edges are chords of the sector's arcs.
inline ConvexPolygon beam_region(Location l_start, Location l_bs, Location l_end, double theta_beam,
                                 double d_max) {
  const Location s = l_start - l_bs;
  const Location e = l_end - l_bs;
  const double r_s = norm(s);
  const double r_e = norm(e);
  if (!(r_s > 0.0) || !(r_e > 0.0)) throw GeometryError("beam region endpoint coincides with BS");
  if (!(theta_beam > 0.0 && theta_beam < std::numbers::pi / 2))
    throw GeometryError("beam width must lie in (0, pi/2)");
  const double r_in = std::max(r_s, r_e);
  if (!(d_max > r_in)) throw GeometryError("d_max must exceed the traverse's distance to the BS");

  const double a_s = std::atan2(s.y, s.x);
  const double span = wrap_angle(std::atan2(e.y, e.x) - a_s);
  const double center = a_s + 0.5 * span;
  const double half = std::min(std::max(0.5 * std::abs(span), 0.5 * theta_beam), kMaxBeamHalfSpan);

  const Location u_lo{std::cos(center - half), std::sin(center - half)};
  const Location u_hi{std::cos(center + half), std::sin(center + half)};
  return ConvexPolygon({l_bs + r_in * u_lo, l_bs + d_max * u_lo, l_bs + d_max * u_hi, l_bs + r_in * u_hi});
}

}  // namespace mmassoc

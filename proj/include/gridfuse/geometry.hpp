#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "gridfuse/grid.hpp"

namespace gridfuse::geom {

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

struct Box {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  [[nodiscard]] bool overlaps(const Box& o, double margin = 0.0) const {
    return min_x - margin < o.max_x && o.min_x - margin < max_x && min_y - margin < o.max_y &&
           o.min_y - margin < max_y;
  }
  [[nodiscard]] bool contains(const Box& o) const {
    return o.min_x >= min_x && o.max_x <= max_x && o.min_y >= min_y && o.max_y <= max_y;
  }
};

// Convex polygon, vertices counter-clockwise.
struct Polygon {
  std::vector<Point2> vertices;

  [[nodiscard]] Box bounds() const {
    Box b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& v : vertices) {
      b.min_x = std::min(b.min_x, v.x);
      b.min_y = std::min(b.min_y, v.y);
      b.max_x = std::max(b.max_x, v.x);
      b.max_y = std::max(b.max_y, v.y);
    }
    return b;
  }

  [[nodiscard]] Point2 centroid() const {
    Point2 c{};
    for (const auto& v : vertices) c = c + v;
    return (1.0 / static_cast<double>(vertices.size())) * c;
  }

  [[nodiscard]] Polygon translated(Point2 d) const {
    Polygon p = *this;
    for (auto& v : p.vertices) v = v + d;
    return p;
  }

  // Inclusive of the boundary.
  [[nodiscard]] bool contains(Point2 p) const {
    const std::size_t n = vertices.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Point2 a = vertices[k];
      const Point2 b = vertices[(k + 1) % n];
      if (cross(b - a, p - a) < 0.0) return false;
    }
    return n >= 3;
  }
};

[[nodiscard]] inline Polygon rectangle(double x0, double y0, double x1, double y1) {
  return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

// Counter-clockwise hull of a point set (monotone chain).
[[nodiscard]] inline Polygon convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  if (pts.size() < 3) return Polygon{pts};
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i - 1] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return Polygon{hull};
}

// Separating-axis test for two convex polygons (touching counts as intersecting).
[[nodiscard]] inline bool intersects(const Polygon& a, const Polygon& b) {
  auto separated_on_axes_of = [](const Polygon& p, const Polygon& q) {
    const std::size_t n = p.vertices.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Point2 e = p.vertices[(k + 1) % n] - p.vertices[k];
      const Point2 axis{-e.y, e.x};
      double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
      double qmin = pmin, qmax = -pmin;
      for (const auto& v : p.vertices) {
        pmin = std::min(pmin, dot(axis, v));
        pmax = std::max(pmax, dot(axis, v));
      }
      for (const auto& v : q.vertices) {
        qmin = std::min(qmin, dot(axis, v));
        qmax = std::max(qmax, dot(axis, v));
      }
      if (pmax < qmin || qmax < pmin) return true;
    }
    return false;
  };
  return !separated_on_axes_of(a, b) && !separated_on_axes_of(b, a);
}

struct RayHit {
  double distance = 0.0;
  Point2 normal;  // unit outward normal of the struck edge
};

// Nearest intersection of the ray origin + t*dir (t > 0, |dir| = 1) with the
// polygon boundary.
[[nodiscard]] inline std::optional<RayHit> ray_intersect(const Polygon& poly, Point2 origin, Point2 dir) {
  std::optional<RayHit> best;
  const std::size_t n = poly.vertices.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Point2 a = poly.vertices[k];
    const Point2 b = poly.vertices[(k + 1) % n];
    const Point2 e = b - a;
    const double denom = cross(dir, e);
    if (denom == 0.0) continue;
    const Point2 ao = a - origin;
    const double t = cross(ao, e) / denom;
    const double u = cross(ao, dir) / denom;
    if (t > 1e-12 && u >= 0.0 && u <= 1.0 && (!best || t < best->distance)) {
      const double len = norm(e);
      best = RayHit{t, {e.y / len, -e.x / len}};
    }
  }
  return best;
}

// Angle in [0, π/2] between the reversed ray and the surface normal.
[[nodiscard]] inline double incidence_angle(Point2 dir, Point2 normal) {
  const double c = std::min(1.0, std::abs(dot(dir, normal)));
  return std::acos(c);
}

// Distance from point p to segment [a, b].
[[nodiscard]] inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return norm(p - (a + t * ab));
}

}  // namespace gridfuse::geom

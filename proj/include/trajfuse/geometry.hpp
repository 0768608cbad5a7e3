#pragma once

#include <cmath>
#include <string_view>
#include <utility>

#include "trajfuse/errors.hpp"

namespace trajfuse {

/// Position in a camera's own floor frame: lateral axis and depth axis, meters.
struct CameraPoint {
  double x_cam = 0.0;
  double z_cam = 0.0;

  friend bool operator==(const CameraPoint&, const CameraPoint&) = default;
};

/// Position in the unified planar landmark, meters.
struct UnifiedPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const UnifiedPoint&, const UnifiedPoint&) = default;
};

inline bool is_finite(const CameraPoint& p) {
  return std::isfinite(p.x_cam) && std::isfinite(p.z_cam);
}

inline bool is_finite(const UnifiedPoint& p) {
  return std::isfinite(p.x) && std::isfinite(p.y);
}

template <typename Point>
void require_finite(const Point& p, std::string_view what) {
  if (!is_finite(p)) {
    throw InvalidInput(std::string(what) + ": non-finite coordinates");
  }
}

inline double distance(const UnifiedPoint& a, const UnifiedPoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline double distance(const CameraPoint& a, const CameraPoint& b) {
  return std::hypot(a.x_cam - b.x_cam, a.z_cam - b.z_cam);
}

/// Planar coordinates of either point kind as (first, second).
inline std::pair<double, double> coords(const CameraPoint& p) { return {p.x_cam, p.z_cam}; }
inline std::pair<double, double> coords(const UnifiedPoint& p) { return {p.x, p.y}; }

/// Triangle area, |cross| / 2. Works for either frame.
template <typename Point>
double triangle_area(const Point& p1, const Point& p2, const Point& p3) {
  require_finite(p1, "triangle_area");
  require_finite(p2, "triangle_area");
  require_finite(p3, "triangle_area");
  const auto [x1, y1] = coords(p1);
  const auto [x2, y2] = coords(p2);
  const auto [x3, y3] = coords(p3);
  const double cross = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1);
  return std::abs(cross) / 2.0;
}

template <typename Point>
double triangle_perimeter(const Point& p1, const Point& p2, const Point& p3) {
  return distance(p1, p2) + distance(p2, p3) + distance(p3, p1);
}

}  // namespace trajfuse

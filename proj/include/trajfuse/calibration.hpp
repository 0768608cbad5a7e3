#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "trajfuse/errors.hpp"
#include "trajfuse/geometry.hpp"

namespace trajfuse {

/// Camera-frame triangles smaller than this (m^2) are treated as collinear.
inline constexpr double kDegeneracyTolerance = 1e-6;

inline constexpr double kDefaultDMax = 2.0;

/// One position known in both the camera frame and the unified frame.
struct CalibrationPair {
  CameraPoint cam;
  UnifiedPoint unified;
  std::string label;

  friend bool operator==(const CalibrationPair&, const CalibrationPair&) = default;
};

/// Which anchors the measurement-quality distance is taken to.
enum class QualityAnchor {
  PointsAndBarycenter,  ///< min over the three points and their barycenter
  BarycenterOnly,
  PointsOnly,
};

class CameraCalibration;

CameraCalibration solve_calibration(std::span<const CalibrationPair> pairs, std::string camera_id,
                                    double d_max = kDefaultDMax);

/// Affine map from one camera's floor frame into the unified landmark:
///
///   x = a1 * x_cam + a2 * z_cam + a3
///   y = b1 * x_cam + b2 * z_cam + b3
///
/// Only constructible through solve_calibration(), so every instance holds
/// three non-collinear calibration points that it reproduces exactly.
class CameraCalibration {
 public:
  const std::string& camera_id() const noexcept { return camera_id_; }
  const std::array<double, 3>& alpha() const noexcept { return alpha_; }
  const std::array<double, 3>& beta() const noexcept { return beta_; }
  const std::array<CalibrationPair, 3>& calibration_points() const noexcept { return points_; }
  const UnifiedPoint& barycenter_unified() const noexcept { return barycenter_; }
  double d_max() const noexcept { return d_max_; }

  /// Camera-frame area of the calibration triangle.
  double area() const {
    return triangle_area(points_[0].cam, points_[1].cam, points_[2].cam);
  }

 private:
  friend CameraCalibration solve_calibration(std::span<const CalibrationPair>, std::string, double);

  CameraCalibration() = default;

  std::string camera_id_;
  std::array<double, 3> alpha_{};
  std::array<double, 3> beta_{};
  std::array<CalibrationPair, 3> points_{};
  UnifiedPoint barycenter_;
  double d_max_ = kDefaultDMax;
};

/// Solves the six affine coefficients from exactly three pairs. The two
/// output rows share one system; it is reduced to 2x2 by subtracting the
/// first point, which keeps the solve well conditioned far from the origin.
inline CameraCalibration solve_calibration(std::span<const CalibrationPair> pairs,
                                           std::string camera_id, double d_max) {
  if (pairs.size() != 3) {
    throw InvalidInput("solve_calibration: exactly 3 pairs required, got " +
                       std::to_string(pairs.size()));
  }
  if (!std::isfinite(d_max) || d_max <= 0.0) {
    throw InvalidInput("solve_calibration: d_max must be positive and finite");
  }
  for (const auto& p : pairs) {
    require_finite(p.cam, "solve_calibration");
    require_finite(p.unified, "solve_calibration");
  }

  const auto& p0 = pairs[0];
  const auto& p1 = pairs[1];
  const auto& p2 = pairs[2];
  if (triangle_area(p0.cam, p1.cam, p2.cam) < kDegeneracyTolerance) {
    throw DegenerateCalibration("degenerate calibration: camera-frame points are collinear or duplicated");
  }

  const double dx1 = p1.cam.x_cam - p0.cam.x_cam;
  const double dz1 = p1.cam.z_cam - p0.cam.z_cam;
  const double dx2 = p2.cam.x_cam - p0.cam.x_cam;
  const double dz2 = p2.cam.z_cam - p0.cam.z_cam;
  const double det = dx1 * dz2 - dx2 * dz1;

  auto solve_row = [&](double u0, double u1, double u2) {
    const double du1 = u1 - u0;
    const double du2 = u2 - u0;
    const double c1 = (du1 * dz2 - du2 * dz1) / det;
    const double c2 = (dx1 * du2 - dx2 * du1) / det;
    const double c3 = u0 - c1 * p0.cam.x_cam - c2 * p0.cam.z_cam;
    return std::array<double, 3>{c1, c2, c3};
  };

  CameraCalibration cal;
  cal.camera_id_ = std::move(camera_id);
  cal.alpha_ = solve_row(p0.unified.x, p1.unified.x, p2.unified.x);
  cal.beta_ = solve_row(p0.unified.y, p1.unified.y, p2.unified.y);
  std::copy(pairs.begin(), pairs.end(), cal.points_.begin());
  cal.barycenter_ = {(p0.unified.x + p1.unified.x + p2.unified.x) / 3.0,
                     (p0.unified.y + p1.unified.y + p2.unified.y) / 3.0};
  cal.d_max_ = d_max;
  return cal;
}

inline UnifiedPoint project(const CameraCalibration& cal, const CameraPoint& p) {
  require_finite(p, "project");
  const auto& a = cal.alpha();
  const auto& b = cal.beta();
  return {a[0] * p.x_cam + a[1] * p.z_cam + a[2], b[0] * p.x_cam + b[1] * p.z_cam + b[2]};
}

/// Distance from `p` to the nearest calibration anchor in the unified frame.
inline double quality_distance(const CameraCalibration& cal, const UnifiedPoint& p,
                               QualityAnchor anchor = QualityAnchor::PointsAndBarycenter) {
  require_finite(p, "quality_distance");
  double best = std::numeric_limits<double>::infinity();
  if (anchor != QualityAnchor::BarycenterOnly) {
    for (const auto& cp : cal.calibration_points()) best = std::min(best, distance(p, cp.unified));
  }
  if (anchor != QualityAnchor::PointsOnly) {
    best = std::min(best, distance(p, cal.barycenter_unified()));
  }
  return best;
}

/// A candidate calibration triple (indices into the candidate list, ascending).
struct RankedSubset {
  std::array<std::size_t, 3> indices{};
  double area = 0.0;
};

/// Enumerates every 3-subset of `candidates`, drops degenerate ones and
/// returns the rest by descending camera-frame area (ties: lexicographic
/// indices). `limit` > 0 truncates the result to the best `limit` entries.
inline std::vector<RankedSubset> select_calibration_set(std::span<const CalibrationPair> candidates,
                                                        std::size_t limit = 0) {
  const std::size_t n = candidates.size();
  if (n < 3) {
    throw InsufficientCandidates("select_calibration_set: need at least 3 candidates, got " +
                                 std::to_string(n));
  }
  std::vector<RankedSubset> ranked;
  ranked.reserve(n * (n - 1) * (n - 2) / 6);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        const double area = triangle_area(candidates[i].cam, candidates[j].cam, candidates[k].cam);
        if (area >= kDegeneracyTolerance) ranked.push_back({{i, j, k}, area});
      }
    }
  }
  if (ranked.empty()) throw NoValidSubset("select_calibration_set: every 3-subset is degenerate");

  auto by_area = [](const RankedSubset& a, const RankedSubset& b) {
    if (a.area != b.area) return a.area > b.area;
    return a.indices < b.indices;
  };
  if (limit > 0 && limit < ranked.size()) {
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(limit),
                      ranked.end(), by_area);
    ranked.resize(limit);
  } else {
    std::sort(ranked.begin(), ranked.end(), by_area);
  }
  return ranked;
}

/// Convenience: the pairs of one ranked subset, in index order.
inline std::array<CalibrationPair, 3> subset_pairs(std::span<const CalibrationPair> candidates,
                                                   const RankedSubset& subset) {
  return {candidates[subset.indices[0]], candidates[subset.indices[1]],
          candidates[subset.indices[2]]};
}

}  // namespace trajfuse

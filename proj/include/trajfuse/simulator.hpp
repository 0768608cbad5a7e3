#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "trajfuse/calibration.hpp"
#include "trajfuse/errors.hpp"
#include "trajfuse/fusion.hpp"
#include "trajfuse/geometry.hpp"

namespace trajfuse {

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Position error sigma(d) = sigma0 + k_quad * d^2 (meters, d = range to the
/// camera) applied independently on both camera axes, plus Gaussian
/// sampling-time jitter.
struct NoiseModel {
  double sigma0 = 0.01;
  double k_quad = 0.0035;
  double jitter_t = 0.005;
  std::uint64_t seed = 0;

  double sigma_at(double range) const { return sigma0 + k_quad * range * range; }

  static NoiseModel none(std::uint64_t seed = 0) { return {0.0, 0.0, 0.0, seed}; }

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

/// A depth camera seen from above. yaw = 0 looks along +y; positive yaw
/// turns the optical axis counter-clockwise. The camera frame has x_cam to
/// the right of the optical axis and z_cam along it.
struct CameraModel {
  std::string camera_id;
  UnifiedPoint position;
  double yaw = 0.0;
  double fov_h = deg_to_rad(60.0);
  double range_min = 0.5;
  double range_max = 5.0;
  double sample_rate = 30.0;
  NoiseModel noise;
  double clock_offset = 0.0;

  void validate() const {
    auto fail = [&](const std::string& why) {
      throw InvalidScenario("camera '" + camera_id + "': " + why);
    };
    if (camera_id.empty()) throw InvalidScenario("camera with empty id");
    if (!is_finite(position) || !std::isfinite(yaw)) fail("non-finite pose");
    if (!(fov_h > 0.0 && fov_h < std::numbers::pi)) fail("fov_h must lie in (0, pi)");
    if (!(range_min >= 0.0 && range_min < range_max) || !std::isfinite(range_max))
      fail("need 0 <= range_min < range_max");
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) fail("sample_rate must be positive");
    if (!std::isfinite(clock_offset)) fail("clock_offset must be finite");
    if (!(noise.sigma0 >= 0.0 && noise.k_quad >= 0.0 && noise.jitter_t >= 0.0))
      fail("noise parameters must be non-negative");
  }

  friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

/// Axis-aligned floor rectangle that blocks line of sight (a desk, a cupboard).
struct Occluder {
  UnifiedPoint min;
  UnifiedPoint max;

  friend bool operator==(const Occluder&, const Occluder&) = default;
};

struct Waypoint {
  double t = 0.0;
  UnifiedPoint pos;

  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

/// Piecewise-linear walk. The walker exists between the first and last
/// waypoint; a single waypoint means standing there for the whole run.
struct WalkerPath {
  std::string walker_id;
  std::vector<Waypoint> waypoints;

  std::optional<UnifiedPoint> position_at(double t) const {
    if (waypoints.empty()) return std::nullopt;
    if (waypoints.size() == 1) return waypoints.front().pos;
    if (t < waypoints.front().t || t > waypoints.back().t) return std::nullopt;
    auto it = std::upper_bound(waypoints.begin(), waypoints.end(), t,
                               [](double v, const Waypoint& w) { return v < w.t; });
    if (it == waypoints.end()) return waypoints.back().pos;
    const Waypoint& hi = *it;
    const Waypoint& lo = *std::prev(it);
    const double u = (t - lo.t) / (hi.t - lo.t);
    return UnifiedPoint{lo.pos.x + u * (hi.pos.x - lo.pos.x), lo.pos.y + u * (hi.pos.y - lo.pos.y)};
  }

  friend bool operator==(const WalkerPath&, const WalkerPath&) = default;
};

struct Scenario {
  std::vector<CameraModel> cameras;
  std::vector<WalkerPath> walkers;
  std::vector<Occluder> occluders;
  double duration = 0.0;
  /// Planar offset of the unified frame's origin in the outdoor grid
  /// (Lambert II easting/northing). Metadata only.
  std::optional<UnifiedPoint> datum_offset;

  void validate() const {
    if (cameras.empty()) throw InvalidScenario("scenario has no cameras");
    if (walkers.empty()) throw InvalidScenario("scenario has no walkers");
    if (!(duration > 0.0) || !std::isfinite(duration)) throw InvalidScenario("duration must be positive");
    std::set<std::string> ids;
    for (const auto& cam : cameras) {
      cam.validate();
      if (!ids.insert(cam.camera_id).second)
        throw InvalidScenario("duplicate camera id '" + cam.camera_id + "'");
    }
    std::set<std::string> walker_ids;
    for (const auto& w : walkers) {
      if (w.walker_id.empty()) throw InvalidScenario("walker with empty id");
      if (!walker_ids.insert(w.walker_id).second)
        throw InvalidScenario("duplicate walker id '" + w.walker_id + "'");
      if (w.waypoints.empty()) throw InvalidScenario("walker '" + w.walker_id + "' has no waypoints");
      for (std::size_t i = 0; i < w.waypoints.size(); ++i) {
        if (!std::isfinite(w.waypoints[i].t) || !is_finite(w.waypoints[i].pos))
          throw InvalidScenario("walker '" + w.walker_id + "' has a non-finite waypoint");
        if (i > 0 && !(w.waypoints[i].t > w.waypoints[i - 1].t))
          throw InvalidScenario("walker '" + w.walker_id + "': waypoint times must strictly increase");
      }
    }
    for (const auto& o : occluders) {
      if (!is_finite(o.min) || !is_finite(o.max) || o.min.x > o.max.x || o.min.y > o.max.y)
        throw InvalidScenario("occluder needs finite min <= max corners");
    }
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// ---------------------------------------------------------------------------
// Camera geometry

namespace detail {

/// Slack on the range/bearing gates so points placed exactly on the gate
/// survive a unified-frame round trip.
inline constexpr double kGateSlack = 1e-9;

inline CameraPoint to_camera_frame(const CameraModel& cam, const UnifiedPoint& p) {
  const double dx = p.x - cam.position.x;
  const double dy = p.y - cam.position.y;
  const double c = std::cos(cam.yaw);
  const double s = std::sin(cam.yaw);
  return {dx * c + dy * s, -dx * s + dy * c};
}

}  // namespace detail

/// Rigid camera-to-unified transform; the affine map a calibration recovers.
inline UnifiedPoint camera_to_unified(const CameraModel& cam, const CameraPoint& p) {
  const double c = std::cos(cam.yaw);
  const double s = std::sin(cam.yaw);
  return {cam.position.x + p.x_cam * c - p.z_cam * s, cam.position.y + p.x_cam * s + p.z_cam * c};
}

/// Camera-frame coordinates of `p`, or nothing if it falls outside the depth
/// range or the horizontal field of view. Noise-free.
inline std::optional<CameraPoint> camera_view(const CameraModel& cam, const UnifiedPoint& p) {
  require_finite(p, "camera_view");
  const CameraPoint local = detail::to_camera_frame(cam, p);
  if (local.z_cam < cam.range_min - detail::kGateSlack || local.z_cam > cam.range_max + detail::kGateSlack) {
    return std::nullopt;
  }
  const double bearing = std::abs(std::atan2(local.x_cam, local.z_cam));
  if (bearing > cam.fov_h / 2.0 + detail::kGateSlack) return std::nullopt;
  return local;
}

/// True when the segment from `from` to `to` crosses the rectangle.
inline bool segment_hits(const Occluder& box, const UnifiedPoint& from, const UnifiedPoint& to) {
  double t0 = 0.0, t1 = 1.0;
  const double d[2] = {to.x - from.x, to.y - from.y};
  const double lo[2] = {box.min.x - from.x, box.min.y - from.y};
  const double hi[2] = {box.max.x - from.x, box.max.y - from.y};
  for (int axis = 0; axis < 2; ++axis) {
    if (d[axis] == 0.0) {
      if (lo[axis] > 0.0 || hi[axis] < 0.0) return false;
      continue;
    }
    double a = lo[axis] / d[axis];
    double b = hi[axis] / d[axis];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Calibration grid

namespace detail {

/// Square lattice of spacing `s`: rows at depths z_lo, z_lo + s, ... <= z_hi,
/// columns at integer multiples of `s` inside the field of view. Rows run
/// near to far; each row is listed from the axis outwards, left first.
inline std::vector<CameraPoint> square_lattice(double s, double z_lo, double z_hi, double half_tan) {
  std::vector<CameraPoint> pts;
  for (int i = 0;; ++i) {
    const double z = z_lo + i * s;
    if (z > z_hi + kGateSlack) break;
    const int half = static_cast<int>(std::floor(z * half_tan / s + kGateSlack));
    pts.push_back({0.0, z});
    for (int j = 1; j <= half; ++j) {
      pts.push_back({-j * s, z});
      pts.push_back({j * s, z});
    }
  }
  return pts;
}

inline bool collinear(std::span<const CameraPoint> pts) {
  for (std::size_t k = 2; k < pts.size(); ++k) {
    if (triangle_area(pts[0], pts[1], pts[k]) >= kDegeneracyTolerance) return false;
  }
  return true;
}

}  // namespace detail

/// Regular floor grid of `n` points between 1 m and 5 m of depth (clipped to
/// the camera range) inside the horizontal field of view.
///
/// The grid is a square lattice anchored on the optical axis at the nearest
/// depth. The spacing is the largest multiple of 0.1 mm whose lattice holds
/// at least `n` points; the first `n` are kept (near rows first, each row
/// from the axis outwards), so only the far row may be trimmed at its ends.
/// For the default camera this is a 0.571 m lattice of rows holding
/// 3, 3, 5, 5, 7, 7, 9, 8 points.
inline std::vector<CalibrationPair> generate_grid(const CameraModel& cam, std::size_t n = 47) {
  if (n < 3) throw InvalidInput("generate_grid: need at least 3 points");
  cam.validate();
  const double z_lo = std::max(1.0, cam.range_min);
  const double z_hi = std::min(5.0, cam.range_max);
  if (!(z_hi > z_lo)) throw InvalidInput("generate_grid: camera range does not cover 1-5 m");
  const double half_tan = std::tan(cam.fov_h / 2.0);

  constexpr double kStep = 1e-4;
  std::vector<CameraPoint> chosen;
  for (auto k = static_cast<long>(std::floor((z_hi - z_lo) / kStep)); k > 0; --k) {
    auto pts = detail::square_lattice(static_cast<double>(k) * kStep, z_lo, z_hi, half_tan);
    if (pts.size() < n) continue;
    pts.resize(n);
    if (detail::collinear(pts)) continue;
    chosen = std::move(pts);
    break;
  }
  if (chosen.empty()) throw InvalidInput("generate_grid: no lattice fits " + std::to_string(n) + " points");

  std::vector<CalibrationPair> grid;
  grid.reserve(n);
  for (const auto& cp : chosen) {
    char label[16];
    std::snprintf(label, sizeof label, "g%02zu", grid.size());
    grid.push_back({cp, camera_to_unified(cam, cp), label});
  }
  return grid;
}

/// Seeded standard normal source; one per camera substream.
class NoiseSource {
 public:
  /// Substream `stream` of `seed`; both words feed a seed_seq so nearby
  /// seeds and stream indices give unrelated sequences.
  NoiseSource(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  double normal(double sigma) {
    if (sigma <= 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma)(engine_);
  }

 private:
  std::mt19937_64 engine_;
};

/// Camera-frame measurement of a true camera-frame point under `noise`.
inline CameraPoint measure(const NoiseModel& noise, const CameraPoint& truth, NoiseSource& rng) {
  const double sigma = noise.sigma_at(std::hypot(truth.x_cam, truth.z_cam));
  const double ex = rng.normal(sigma);
  const double ez = rng.normal(sigma);
  return {truth.x_cam + ex, truth.z_cam + ez};
}

/// The grid as a person standing on each point would be measured: camera
/// coordinates perturbed by the camera's noise model, unified kept exact.
inline std::vector<CalibrationPair> measure_grid(const CameraModel& cam, std::span<const CalibrationPair> grid,
                                                 std::uint64_t seed, std::uint64_t stream = 0) {
  NoiseSource rng(seed, stream);
  std::vector<CalibrationPair> out(grid.begin(), grid.end());
  for (auto& p : out) p.cam = measure(cam.noise, p.cam, rng);
  return out;
}

// ---------------------------------------------------------------------------
// Stream simulation

struct GroundTruthRecord {
  std::string camera_id;
  double t = 0.0;       ///< timestamp as reported by the camera (includes clock offset)
  double t_true = 0.0;  ///< scenario time the walker was sampled at
  std::string walker_id;
  UnifiedPoint pos;

  friend bool operator==(const GroundTruthRecord&, const GroundTruthRecord&) = default;
};

struct SimulationResult {
  std::map<std::string, std::vector<Detection>> detections;  ///< by camera id, time ordered
  std::vector<GroundTruthRecord> ground_truth;                ///< parallel to detections, camera by camera
};

/// Samples every walker from every camera. Camera i draws from substream i
/// of its own noise seed, so cameras are independent of each other and of
/// their order of generation. Each tick draws its time jitter first
/// (clamped to 40% of the frame period), then two position deviates per
/// visible walker.
inline SimulationResult simulate(const Scenario& sc) {
  sc.validate();
  SimulationResult result;
  for (std::size_t ci = 0; ci < sc.cameras.size(); ++ci) {
    const CameraModel& cam = sc.cameras[ci];
    NoiseSource rng(cam.noise.seed, ci);
    auto& stream = result.detections[cam.camera_id];
    const double period = 1.0 / cam.sample_rate;
    const double jitter_cap = 0.4 * period;
    for (std::size_t k = 0;; ++k) {
      const double nominal = static_cast<double>(k) / cam.sample_rate;
      if (nominal > sc.duration) break;
      const double jitter = std::clamp(rng.normal(cam.noise.jitter_t), -jitter_cap, jitter_cap);
      const double t_true = nominal + jitter;
      for (const auto& walker : sc.walkers) {
        const auto pos = walker.position_at(t_true);
        if (!pos) continue;
        const auto local = camera_view(cam, *pos);
        if (!local) continue;
        const bool blocked = std::any_of(sc.occluders.begin(), sc.occluders.end(), [&](const Occluder& o) {
          return segment_hits(o, cam.position, *pos);
        });
        if (blocked) continue;
        const CameraPoint measured = measure(cam.noise, *local, rng);
        const double t_reported = t_true + cam.clock_offset;
        stream.push_back({cam.camera_id, t_reported, measured, walker.walker_id, std::nullopt});
        result.ground_truth.push_back({cam.camera_id, t_reported, t_true, walker.walker_id, *pos});
      }
    }
  }
  return result;
}

}  // namespace trajfuse

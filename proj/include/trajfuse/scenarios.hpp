#pragma once

#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string>
#include <vector>

#include "trajfuse/simulator.hpp"

namespace trajfuse::scenarios {

inline constexpr double kWalkingSpeed = 1.2;  // m/s

/// Walker following `points` at constant `speed`, leaving the first point at `start`.
inline WalkerPath walk(std::string id, double start, std::initializer_list<UnifiedPoint> points,
                       double speed = kWalkingSpeed) {
  WalkerPath path{std::move(id), {}};
  double t = start;
  const UnifiedPoint* prev = nullptr;
  for (const auto& p : points) {
    if (prev) t += distance(*prev, p) / speed;
    path.waypoints.push_back({t, p});
    prev = &p;
  }
  return path;
}

/// Two cameras on opposite walls of a 6 m x 4 m office: K1 on the right
/// wall looking left, K2 on the left wall looking right. The shared field
/// of view is the middle of the room.
inline std::vector<CameraModel> office_cameras(std::uint64_t seed) {
  CameraModel k1;
  k1.camera_id = "K1";
  k1.position = {6.0, 2.0};
  k1.yaw = std::numbers::pi / 2.0;
  k1.noise.seed = seed;
  CameraModel k2;
  k2.camera_id = "K2";
  k2.position = {0.0, 2.0};
  k2.yaw = -std::numbers::pi / 2.0;
  k2.noise.seed = seed + 1;
  return {k1, k2};
}

/// Path from the door (bottom right, seen only by K2) around the desks to
/// the far left corner.
inline WalkerPath office_path(std::string id, double start) {
  return walk(std::move(id), start, {{4.8, 0.5}, {4.4, 1.1}, {3.2, 1.3}, {2.4, 2.2}, {1.6, 2.9}, {0.6, 3.6}});
}

/// One person crossing the office.
inline Scenario office(std::uint64_t seed = 1) {
  Scenario sc;
  sc.cameras = office_cameras(seed);
  sc.walkers = {office_path("W1", 0.0)};
  sc.duration = 8.0;
  return sc;
}

/// Two people on the identical office path, `gap` seconds apart.
inline Scenario followers(std::uint64_t seed = 1, double gap = 1.0) {
  Scenario sc;
  sc.cameras = office_cameras(seed);
  sc.walkers = {office_path("W1", 0.0), office_path("W2", gap)};
  sc.duration = 8.0 + gap;
  return sc;
}

/// Five people on distinct, partly crossing paths through the shared area.
inline Scenario five_walkers(std::uint64_t seed = 1) {
  Scenario sc;
  sc.cameras = office_cameras(seed);
  sc.walkers = {
      office_path("W1", 0.0),
      walk("W2", 1.0, {{0.9, 3.0}, {3.0, 3.1}, {5.0, 2.6}}),
      walk("W3", 2.0, {{3.0, 0.4}, {3.1, 2.0}, {2.8, 3.6}}),
      walk("W4", 3.0, {{1.2, 1.2}, {3.0, 2.2}, {4.9, 3.0}}),
      walk("W5", 0.5, {{4.8, 3.4}, {3.4, 2.6}, {1.4, 1.6}}),
  };
  sc.duration = 10.0;
  return sc;
}

}  // namespace trajfuse::scenarios

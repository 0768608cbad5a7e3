#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "trajfuse/calibration.hpp"
#include "trajfuse/scenarios.hpp"
#include "trajfuse/simulator.hpp"

namespace trajfuse {
namespace {

CameraModel origin_camera() {
  CameraModel cam;
  cam.camera_id = "C";
  cam.position = {0, 0};
  return cam;
}

Scenario static_scenario() {
  Scenario sc;
  auto k1 = origin_camera();
  k1.camera_id = "K1";
  k1.noise = NoiseModel::none(7);
  auto k2 = k1;
  k2.camera_id = "K2";
  sc.cameras = {k1, k2};
  sc.walkers = {{"W", {{0.0, {0.0, 2.0}}}}};
  sc.duration = 1.0;
  return sc;
}

TEST(CameraView, Examples) {
  const auto cam = origin_camera();
  const auto on_axis = camera_view(cam, {0, 2});
  ASSERT_TRUE(on_axis);
  EXPECT_NEAR(on_axis->x_cam, 0.0, 1e-15);
  EXPECT_NEAR(on_axis->z_cam, 2.0, 1e-15);
  EXPECT_FALSE(camera_view(cam, {0, 6}));
  EXPECT_FALSE(camera_view(cam, {2, 2}));
  EXPECT_FALSE(camera_view(cam, {0, 0.4}));
  EXPECT_FALSE(camera_view(cam, {0, -2}));
  EXPECT_THROW(camera_view(cam, {NAN, 1}), InvalidInput);
}

TEST(CameraView, AxesFollowYaw) {
  auto cam = origin_camera();
  cam.position = {6, 2};
  cam.yaw = std::numbers::pi / 2;  // looking towards -x
  const auto p = camera_view(cam, {4, 1.5});
  ASSERT_TRUE(p);
  EXPECT_NEAR(p->z_cam, 2.0, 1e-12);
  EXPECT_NEAR(p->x_cam, -0.5, 1e-12);  // facing -x, the -y side is on the left
}

TEST(CameraViewProperty, InverseOfRigidTransform) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-8, 8), yaw(-4, 4);
  int accepted = 0;
  for (int i = 0; i < 20000; ++i) {
    auto cam = origin_camera();
    cam.position = {u(rng), u(rng)};
    cam.yaw = yaw(rng);
    const UnifiedPoint p{u(rng), u(rng)};
    const auto local = camera_view(cam, p);
    if (!local) continue;
    ++accepted;
    const auto back = camera_to_unified(cam, *local);
    EXPECT_NEAR(back.x, p.x, 1e-9);
    EXPECT_NEAR(back.y, p.y, 1e-9);
    EXPECT_GE(local->z_cam, cam.range_min - 1e-9);
    EXPECT_LE(local->z_cam, cam.range_max + 1e-9);
    EXPECT_LE(std::abs(std::atan2(local->x_cam, local->z_cam)), cam.fov_h / 2 + 1e-9);
  }
  EXPECT_GT(accepted, 100);
}

TEST(Simulate, StaticWalkerGivesIdenticalDetections) {
  const auto result = simulate(static_scenario());
  const auto& dets = result.detections.at("K1");
  EXPECT_TRUE(dets.size() == 30 || dets.size() == 31);
  for (std::size_t k = 0; k < dets.size(); ++k) {
    EXPECT_NEAR(dets[k].pos_cam.x_cam, 0.0, 1e-15);
    EXPECT_NEAR(dets[k].pos_cam.z_cam, 2.0, 1e-15);
    EXPECT_EQ(dets[k].person_hint, "W");
    EXPECT_EQ(dets[k].t, static_cast<double>(k) / 30.0);
  }
  EXPECT_EQ(result.ground_truth.size(), 2 * dets.size());
}

TEST(Simulate, ClockOffsetShiftsTimestamps) {
  auto sc = static_scenario();
  sc.cameras[1].clock_offset = 1.0;
  const auto result = simulate(sc);
  const auto& a = result.detections.at("K1");
  const auto& b = result.detections.at("K2");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(b[k].t, a[k].t + 1.0);
}

TEST(Simulate, OfficeWalkerSeenByK2First) {
  const auto result = simulate(scenarios::office(3));
  const auto& k1 = result.detections.at("K1");
  const auto& k2 = result.detections.at("K2");
  ASSERT_FALSE(k1.empty());
  ASSERT_FALSE(k2.empty());
  EXPECT_LT(k2.front().t, k1.front().t);
  const double overlap = std::min(k1.back().t, k2.back().t) - std::max(k1.front().t, k2.front().t);
  EXPECT_GT(overlap, 1.0);
}

TEST(Simulate, DeterministicAndSeedSensitive) {
  const auto a = simulate(scenarios::five_walkers(9));
  const auto b = simulate(scenarios::five_walkers(9));
  EXPECT_EQ(a.detections, b.detections);
  EXPECT_EQ(a.ground_truth, b.ground_truth);
  const auto c = simulate(scenarios::five_walkers(10));
  EXPECT_NE(a.detections, c.detections);
}

TEST(Simulate, CameraStreamIndependentOfOtherCameras) {
  auto sc = scenarios::office(4);
  const auto both = simulate(sc);
  sc.cameras[1].noise.seed = 999;
  const auto changed = simulate(sc);
  EXPECT_EQ(both.detections.at("K1"), changed.detections.at("K1"));
  EXPECT_NE(both.detections.at("K2"), changed.detections.at("K2"));
}

TEST(Simulate, ZeroNoiseProjectionRecoversTruth) {
  auto sc = scenarios::five_walkers(2);
  for (auto& cam : sc.cameras) cam.noise = NoiseModel::none();
  const auto result = simulate(sc);
  std::mt19937_64 rng(43);
  for (const auto& cam : sc.cameras) {
    const auto grid = generate_grid(cam);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    std::array<CalibrationPair, 3> triple;
    do {
      triple = {grid[pick(rng)], grid[pick(rng)], grid[pick(rng)]};
    } while (triangle_area(triple[0].cam, triple[1].cam, triple[2].cam) < kDegeneracyTolerance);
    const auto cal = solve_calibration(triple, cam.camera_id);
    std::size_t gi = 0;
    for (const auto& d : result.detections.at(cam.camera_id)) {
      while (result.ground_truth[gi].camera_id != cam.camera_id) ++gi;
      const auto& truth = result.ground_truth[gi++];
      EXPECT_EQ(truth.t, d.t);
      const auto p = project(cal, d.pos_cam);
      EXPECT_LE(distance(p, truth.pos), 1e-9);
    }
  }
}

TEST(Simulate, OccluderBlocksLineOfSight) {
  auto sc = static_scenario();
  sc.occluders = {{{-0.5, 0.9}, {0.5, 1.1}}};
  const auto blocked = simulate(sc);
  EXPECT_TRUE(blocked.detections.at("K1").empty());
  sc.occluders = {{{1.0, 0.9}, {2.0, 1.1}}};
  EXPECT_FALSE(simulate(sc).detections.at("K1").empty());
}

TEST(Simulate, JitterStaysWithinFramePeriod) {
  auto sc = static_scenario();
  sc.cameras[0].noise.jitter_t = 0.5;  // large enough to hit the clamp
  const auto result = simulate(sc);
  const auto& dets = result.detections.at("K1");
  for (std::size_t k = 0; k < dets.size(); ++k) {
    EXPECT_LE(std::abs(dets[k].t - static_cast<double>(k) / 30.0), 0.4 / 30.0 + 1e-12);
  }
}

TEST(Simulate, InvalidScenarios) {
  auto sc = static_scenario();
  sc.duration = 0;
  EXPECT_THROW(simulate(sc), InvalidScenario);
  sc = static_scenario();
  sc.cameras.clear();
  EXPECT_THROW(simulate(sc), InvalidScenario);
  sc = static_scenario();
  sc.walkers.clear();
  EXPECT_THROW(simulate(sc), InvalidScenario);
  sc = static_scenario();
  sc.walkers[0].waypoints = {{1.0, {0, 2}}, {1.0, {0, 3}}};
  EXPECT_THROW(simulate(sc), InvalidScenario);
  sc = static_scenario();
  sc.cameras[0].fov_h = std::numbers::pi;
  EXPECT_THROW(simulate(sc), InvalidScenario);
  sc = static_scenario();
  sc.cameras[0].range_min = 6;
  EXPECT_THROW(simulate(sc), InvalidScenario);
  sc = static_scenario();
  sc.cameras[1].camera_id = "K1";
  EXPECT_THROW(simulate(sc), InvalidScenario);
  sc = static_scenario();
  sc.cameras[0].noise.sigma0 = -0.1;
  EXPECT_THROW(simulate(sc), InvalidScenario);
}

TEST(WalkerPath, Interpolates) {
  const WalkerPath w{"W", {{1.0, {0, 0}}, {3.0, {2, 4}}}};
  EXPECT_FALSE(w.position_at(0.5));
  EXPECT_EQ(*w.position_at(2.0), (UnifiedPoint{1, 2}));
  EXPECT_EQ(*w.position_at(3.0), (UnifiedPoint{2, 4}));
  EXPECT_FALSE(w.position_at(3.5));
}

TEST(GenerateGrid, MinimalGrid) {
  const auto cam = origin_camera();
  const auto grid = generate_grid(cam, 3);
  ASSERT_EQ(grid.size(), 3u);
  EXPECT_GE(triangle_area(grid[0].cam, grid[1].cam, grid[2].cam), kDegeneracyTolerance);
  EXPECT_THROW(generate_grid(cam, 2), InvalidInput);
}

class GridOnCamera : public ::testing::TestWithParam<std::size_t> {};

TEST_P(GridOnCamera, PointsInsideTrapezoidAndRoundTrip) {
  auto cam = origin_camera();
  cam.position = {3, -1};
  cam.yaw = 0.7;
  const auto grid = generate_grid(cam, GetParam());
  ASSERT_EQ(grid.size(), GetParam());
  std::set<std::pair<double, double>> distinct;
  for (const auto& p : grid) {
    EXPECT_GE(p.cam.z_cam, 1.0 - 1e-12);
    EXPECT_LE(p.cam.z_cam, 5.0 + 1e-12);
    EXPECT_LE(std::abs(std::atan2(p.cam.x_cam, p.cam.z_cam)), cam.fov_h / 2 + 1e-9);
    const auto back = camera_view(cam, p.unified);
    ASSERT_TRUE(back) << p.label;
    EXPECT_NEAR(back->x_cam, p.cam.x_cam, 1e-9);
    EXPECT_NEAR(back->z_cam, p.cam.z_cam, 1e-9);
    distinct.insert({p.cam.x_cam, p.cam.z_cam});
  }
  EXPECT_EQ(distinct.size(), grid.size());
}

INSTANTIATE_TEST_SUITE_P(Sizes, GridOnCamera, ::testing::Values(3, 4, 10, 47, 100));

TEST(GenerateGrid, DefaultLayoutIsRegular) {
  const auto grid = generate_grid(origin_camera());
  ASSERT_EQ(grid.size(), 47u);
  EXPECT_EQ(grid.front().label, "g00");
  EXPECT_EQ(grid.back().label, "g46");
  // Lattice spacing: neighbours along a row and between rows are equidistant.
  const double s = grid[1].cam.x_cam < 0 ? -grid[1].cam.x_cam : grid[1].cam.x_cam;
  for (const auto& p : grid) {
    const double col = p.cam.x_cam / s;
    const double row = (p.cam.z_cam - 1.0) / s;
    EXPECT_NEAR(col, std::round(col), 1e-9);
    EXPECT_NEAR(row, std::round(row), 1e-9);
  }
  EXPECT_LE(grid.back().cam.z_cam, 5.0);
  EXPECT_GT(grid.back().cam.z_cam, 5.0 - s);
}

TEST(NoiseProperty, EmpiricalSigmaMatchesModel) {
  NoiseModel noise;
  NoiseSource rng(12345, 0);
  for (double d : {1.0, 3.0, 5.0}) {
    const CameraPoint truth{0.0, d};
    const int n = 20000;
    double sx = 0, sz = 0;
    for (int i = 0; i < n; ++i) {
      const auto m = measure(noise, truth, rng);
      sx += (m.x_cam - truth.x_cam) * (m.x_cam - truth.x_cam);
      sz += (m.z_cam - truth.z_cam) * (m.z_cam - truth.z_cam);
    }
    const double expected = 0.01 + 0.0035 * d * d;
    EXPECT_NEAR(std::sqrt(sx / n), expected, 0.1 * expected) << "d = " << d;
    EXPECT_NEAR(std::sqrt(sz / n), expected, 0.1 * expected) << "d = " << d;
  }
}

TEST(NoiseSource, StreamsDiffer) {
  NoiseSource a(1, 0), b(1, 1), c(1, 0);
  const double va = a.normal(1.0), vb = b.normal(1.0), vc = c.normal(1.0);
  EXPECT_NE(va, vb);
  EXPECT_EQ(va, vc);
  EXPECT_EQ(a.normal(0.0), 0.0);
}

TEST(MeasureGrid, KeepsUnifiedExact) {
  auto cam = origin_camera();
  const auto grid = generate_grid(cam);
  const auto measured = measure_grid(cam, grid, 5);
  ASSERT_EQ(measured.size(), grid.size());
  bool moved = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(measured[i].unified, grid[i].unified);
    EXPECT_EQ(measured[i].label, grid[i].label);
    moved = moved || !(measured[i].cam == grid[i].cam);
  }
  EXPECT_TRUE(moved);
}

}  // namespace
}  // namespace trajfuse

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "test_support.hpp"
#include "trajfuse/calibration.hpp"
#include "trajfuse/simulator.hpp"

namespace trajfuse {
namespace {

using testing::random_affine;
using testing::random_point;
using testing::random_triangle;

std::array<CalibrationPair, 3> make_pairs(std::array<CameraPoint, 3> cam, std::array<UnifiedPoint, 3> uni) {
  return {CalibrationPair{cam[0], uni[0], "p1"}, CalibrationPair{cam[1], uni[1], "p2"},
          CalibrationPair{cam[2], uni[2], "p3"}};
}

void expect_coefficients(const CameraCalibration& cal, std::array<double, 3> alpha, std::array<double, 3> beta) {
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(cal.alpha()[i], alpha[i], 1e-12) << "alpha" << i + 1;
    EXPECT_NEAR(cal.beta()[i], beta[i], 1e-12) << "beta" << i + 1;
  }
}

TEST(SolveCalibration, IdentityMap) {
  const auto cal = solve_calibration(make_pairs({{{0, 0}, {1, 0}, {0, 1}}}, {{{0, 0}, {1, 0}, {0, 1}}}), "K");
  expect_coefficients(cal, {1, 0, 0}, {0, 1, 0});
}

TEST(SolveCalibration, PureTranslation) {
  const auto cal = solve_calibration(make_pairs({{{0, 0}, {1, 0}, {0, 1}}}, {{{10, 20}, {11, 20}, {10, 21}}}), "K");
  expect_coefficients(cal, {1, 0, 10}, {0, 1, 20});
}

TEST(SolveCalibration, QuarterTurn) {
  const auto cal = solve_calibration(make_pairs({{{0, 0}, {1, 0}, {0, 1}}}, {{{0, 0}, {0, 1}, {-1, 0}}}), "K");
  expect_coefficients(cal, {0, -1, 0}, {1, 0, 0});
}

TEST(SolveCalibration, CollinearCameraPointsAreDegenerate) {
  EXPECT_THROW(solve_calibration(make_pairs({{{0, 0}, {1, 1}, {2, 2}}}, {{{0, 0}, {5, 1}, {3, 7}}}), "K"),
               DegenerateCalibration);
}

TEST(SolveCalibration, DuplicatedCameraPointIsDegenerate) {
  EXPECT_THROW(solve_calibration(make_pairs({{{1, 2}, {1, 2}, {0, 5}}}, {{{0, 0}, {1, 0}, {0, 1}}}), "K"),
               DegenerateCalibration);
}

TEST(SolveCalibration, AreaJustBelowToleranceIsDegenerate) {
  // base 1 m, height 1.9e-6 m -> area 0.95e-6 m^2
  EXPECT_THROW(solve_calibration(make_pairs({{{0, 0}, {1, 0}, {0.5, 1.9e-6}}}, {{{0, 0}, {1, 0}, {0, 1}}}), "K"),
               DegenerateCalibration);
  EXPECT_NO_THROW(solve_calibration(make_pairs({{{0, 0}, {1, 0}, {0.5, 2.1e-6}}}, {{{0, 0}, {1, 0}, {0, 1}}}), "K"));
}

TEST(SolveCalibration, RejectsBadInput) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto good = make_pairs({{{0, 0}, {1, 0}, {0, 1}}}, {{{0, 0}, {1, 0}, {0, 1}}});
  EXPECT_THROW(solve_calibration(make_pairs({{{nan, 0}, {1, 0}, {0, 1}}}, {{{0, 0}, {1, 0}, {0, 1}}}), "K"),
               InvalidInput);
  EXPECT_THROW(solve_calibration(make_pairs({{{0, 0}, {1, 0}, {0, 1}}}, {{{0, 0}, {1, INFINITY}, {0, 1}}}), "K"),
               InvalidInput);
  EXPECT_THROW(solve_calibration(good, "K", 0.0), InvalidInput);
  EXPECT_THROW(solve_calibration(good, "K", -1.0), InvalidInput);
  EXPECT_THROW(solve_calibration(std::span(good).first(2), "K"), InvalidInput);
}

TEST(SolveCalibration, StoresMetadata) {
  const auto cal =
      solve_calibration(make_pairs({{{0, 0}, {2, 0}, {0, 2}}}, {{{0, 0}, {2, 0}, {0, 2}}}), "K7", 3.5);
  EXPECT_EQ(cal.camera_id(), "K7");
  EXPECT_DOUBLE_EQ(cal.d_max(), 3.5);
  EXPECT_NEAR(cal.barycenter_unified().x, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(cal.barycenter_unified().y, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(cal.area(), 2.0);
  EXPECT_EQ(cal.calibration_points()[1].label, "p2");
}

TEST(Project, Examples) {
  const auto translation =
      solve_calibration(make_pairs({{{0, 0}, {1, 0}, {0, 1}}}, {{{10, 20}, {11, 20}, {10, 21}}}), "K");
  const auto p = project(translation, {3, 4});
  EXPECT_NEAR(p.x, 13.0, 1e-12);
  EXPECT_NEAR(p.y, 24.0, 1e-12);

  const auto turn = solve_calibration(make_pairs({{{0, 0}, {1, 0}, {0, 1}}}, {{{0, 0}, {0, 1}, {-1, 0}}}), "K");
  const auto q = project(turn, {2, 5});
  EXPECT_NEAR(q.x, -5.0, 1e-12);
  EXPECT_NEAR(q.y, 2.0, 1e-12);

  EXPECT_THROW(project(turn, {NAN, 1.0}), InvalidInput);
}

TEST(Project, ReproducesCalibrationPointsFarFromOrigin) {
  // Lambert-scale unified coordinates.
  const auto pairs = make_pairs({{{-1.3, 1.1}, {2.2, 4.7}, {0.4, 3.0}}},
                                {{{601234.5, 2101765.25}, {601238.0, 2101761.0}, {601236.1, 2101763.9}}});
  const auto cal = solve_calibration(pairs, "K");
  for (const auto& p : pairs) {
    const auto u = project(cal, p.cam);
    EXPECT_NEAR(u.x, p.unified.x, 1e-9);
    EXPECT_NEAR(u.y, p.unified.y, 1e-9);
  }
}

TEST(SolveCalibrationProperty, RecoversRandomAffineMaps) {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 500; ++trial) {
    const auto map = random_affine(rng);
    const auto tri = random_triangle(rng);
    const auto cal = solve_calibration(make_pairs(tri, {map(tri[0]), map(tri[1]), map(tri[2])}), "K");
    for (const auto& cp : cal.calibration_points()) {
      const auto u = project(cal, cp.cam);
      ASSERT_NEAR(u.x, cp.unified.x, 1e-9);
      ASSERT_NEAR(u.y, cp.unified.y, 1e-9);
    }
    for (int k = 0; k < 100; ++k) {
      const auto p = random_point(rng);
      const auto expected = map(p);
      const auto got = project(cal, p);
      ASSERT_LE(std::hypot(got.x - expected.x, got.y - expected.y), 1e-9) << "trial " << trial;
    }
  }
}

TEST(TriangleArea, Examples) {
  EXPECT_DOUBLE_EQ(triangle_area(CameraPoint{0, 0}, CameraPoint{2, 0}, CameraPoint{0, 2}), 2.0);
  EXPECT_DOUBLE_EQ(triangle_area(CameraPoint{0, 0}, CameraPoint{1, 1}, CameraPoint{2, 2}), 0.0);
  EXPECT_DOUBLE_EQ(triangle_area(UnifiedPoint{0, 0}, UnifiedPoint{3, 0}, UnifiedPoint{0, 1}), 1.5);
  EXPECT_THROW(triangle_area(CameraPoint{0, 0}, CameraPoint{NAN, 0}, CameraPoint{0, 1}), InvalidInput);
}

TEST(TriangleAreaProperty, PermutationAndTranslationInvariant) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<CameraPoint, 3> t{random_point(rng), random_point(rng), random_point(rng)};
    const double area = triangle_area(t[0], t[1], t[2]);
    std::array<int, 3> idx{0, 1, 2};
    while (std::next_permutation(idx.begin(), idx.end())) {
      EXPECT_NEAR(triangle_area(t[idx[0]], t[idx[1]], t[idx[2]]), area, 1e-12);
    }
    const auto shift = random_point(rng, -100, 100);
    auto moved = t;
    for (auto& p : moved) p = {p.x_cam + shift.x_cam, p.z_cam + shift.z_cam};
    EXPECT_NEAR(triangle_area(moved[0], moved[1], moved[2]), area, 1e-9);
  }
}

class QualityDistanceTest : public ::testing::Test {
 protected:
  CameraCalibration cal =
      solve_calibration(make_pairs({{{0, 0}, {2, 0}, {0, 2}}}, {{{0, 0}, {2, 0}, {0, 2}}}), "K");
};

TEST_F(QualityDistanceTest, OnCalibrationPointAndBarycenter) {
  EXPECT_DOUBLE_EQ(quality_distance(cal, {0, 0}), 0.0);
  EXPECT_NEAR(quality_distance(cal, {2.0 / 3.0, 2.0 / 3.0}), 0.0, 1e-15);
}

TEST_F(QualityDistanceTest, BarycenterBeatsVertices) {
  // Hand check of the four candidate distances from (1, 1).
  const double to_vertex = std::sqrt(2.0);   // (0,0), (2,0), (0,2) are all sqrt(2) away
  const double to_bary = std::sqrt(2.0) / 3.0;  // (1/3, 1/3) offset
  EXPECT_NEAR(quality_distance(cal, {1, 1}), std::min(to_vertex, to_bary), 1e-12);
  EXPECT_NEAR(quality_distance(cal, {1, 1}), 0.4714, 5e-5);
}

TEST_F(QualityDistanceTest, AlternativeAnchors) {
  EXPECT_NEAR(quality_distance(cal, {1, 1}, QualityAnchor::PointsOnly), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(quality_distance(cal, {0, 0}, QualityAnchor::BarycenterOnly), std::sqrt(8.0) / 3.0, 1e-12);
  EXPECT_THROW(quality_distance(cal, {INFINITY, 0}), InvalidInput);
}

TEST_F(QualityDistanceTest, ZeroOnlyAtAnchorsAndLipschitz) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto a = random_point(rng, -3, 5);
    const auto b = random_point(rng, -3, 5);
    const UnifiedPoint pa{a.x_cam, a.z_cam};
    const UnifiedPoint pb{b.x_cam, b.z_cam};
    EXPECT_LE(std::abs(quality_distance(cal, pa) - quality_distance(cal, pb)), distance(pa, pb) + 1e-12);
    EXPECT_GT(quality_distance(cal, pa), 0.0);
  }
}

TEST(SelectCalibrationSet, DominantTriangle) {
  const std::vector<CalibrationPair> cands{
      {{0, 0}, {0, 0}, "a"}, {{4, 0}, {4, 0}, "b"}, {{0, 4}, {0, 4}, "c"}, {{1, 1}, {1, 1}, "d"}};
  const auto ranked = select_calibration_set(cands);
  ASSERT_EQ(ranked.size(), 4u);
  EXPECT_EQ(ranked.front().indices, (std::array<std::size_t, 3>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(ranked.front().area, 8.0);
  EXPECT_EQ(select_calibration_set(cands, 2).size(), 2u);
}

TEST(SelectCalibrationSet, Errors) {
  const std::vector<CalibrationPair> collinear{{{0, 0}, {0, 0}, ""}, {{1, 1}, {0, 0}, ""}, {{2, 2}, {0, 0}, ""}};
  EXPECT_THROW(select_calibration_set(collinear), NoValidSubset);
  EXPECT_THROW(select_calibration_set(std::span(collinear).first(2)), InsufficientCandidates);
}

// Determinant form of the triangle area, kept apart from the library's
// cross-product routine.
double oracle_area(const CameraPoint& a, const CameraPoint& b, const CameraPoint& c) {
  const double det = a.x_cam * (b.z_cam - c.z_cam) + b.x_cam * (c.z_cam - a.z_cam) + c.x_cam * (a.z_cam - b.z_cam);
  return 0.5 * std::abs(det);
}

TEST(SelectCalibrationSet, GridTopMatchesExhaustiveEnumeration) {
  CameraModel cam;
  cam.camera_id = "K";
  const auto grid = generate_grid(cam);
  ASSERT_EQ(grid.size(), 47u);

  double best = 0.0;
  std::size_t subsets = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = i + 1; j < grid.size(); ++j)
      for (std::size_t k = j + 1; k < grid.size(); ++k, ++subsets)
        best = std::max(best, oracle_area(grid[i].cam, grid[j].cam, grid[k].cam));
  EXPECT_EQ(subsets, 16215u);

  const auto ranked = select_calibration_set(grid);
  EXPECT_NEAR(ranked.front().area, best, 1e-12);
  for (std::size_t r = 1; r < ranked.size(); ++r) ASSERT_GE(ranked[r - 1].area, ranked[r].area);
}

TEST(SelectCalibrationSetProperty, ScalingKeepsRanking) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CalibrationPair> cands;
    for (int i = 0; i < 9; ++i) cands.push_back({random_point(rng), {0, 0}, ""});
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    const double s = scale(rng);
    auto scaled = cands;
    for (auto& c : scaled) c.cam = {c.cam.x_cam * s, c.cam.z_cam * s};
    const auto r1 = select_calibration_set(cands);
    const auto r2 = select_calibration_set(scaled);
    ASSERT_EQ(r1.size(), r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
      EXPECT_EQ(r1[i].indices, r2[i].indices);
      EXPECT_NEAR(r2[i].area, r1[i].area * s * s, 1e-9 * std::max(1.0, r2[i].area));
    }
  }
}

}  // namespace
}  // namespace trajfuse

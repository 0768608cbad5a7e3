#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "trajfuse/calibration.hpp"
#include "trajfuse/fusion.hpp"
#include "trajfuse/simulator.hpp"
#include "trajfuse/stats.hpp"

namespace trajfuse {

struct CalibrationStudyRow {
  std::array<std::size_t, 3> subset{};
  double area = 0.0;
  double perimeter = 0.0;
  double mean_error = 0.0;
};

struct SeparationStudyRow {
  double offset = 0.0;
  double C = 0.0;
  std::size_t n_pairs = 0;
};

/// Mean unified-frame distance between projected and reference positions.
inline double mean_projection_error(const CameraCalibration& cal, std::span<const CalibrationPair> holdout) {
  if (holdout.empty()) throw InvalidInput("mean_projection_error: empty holdout");
  double sum = 0.0;
  for (const auto& p : holdout) sum += distance(project(cal, p.cam), p.unified);
  return sum / static_cast<double>(holdout.size());
}

/// Calibrates from every non-degenerate 3-subset of `grid` (camera side as
/// measured, unified side exact) and scores each calibration on the
/// remaining points. Rows come out in lexicographic subset order; area and
/// perimeter are those of the measured camera-frame triangle.
inline std::vector<CalibrationStudyRow> calibration_study(std::span<const CalibrationPair> grid) {
  const std::size_t n = grid.size();
  if (n < 4) throw InvalidInput("calibration_study: need at least 4 grid points");
  std::vector<CalibrationStudyRow> rows;
  rows.reserve(n * (n - 1) * (n - 2) / 6);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        const double area = triangle_area(grid[i].cam, grid[j].cam, grid[k].cam);
        if (area < kDegeneracyTolerance) continue;
        const std::array<CalibrationPair, 3> triple{grid[i], grid[j], grid[k]};
        const auto cal = solve_calibration(triple, "study");
        double sum = 0.0;
        for (std::size_t h = 0; h < n; ++h) {
          if (h == i || h == j || h == k) continue;
          sum += distance(project(cal, grid[h].cam), grid[h].unified);
        }
        rows.push_back({{i, j, k},
                        area,
                        triangle_perimeter(grid[i].cam, grid[j].cam, grid[k].cam),
                        sum / static_cast<double>(n - 3)});
      }
    }
  }
  return rows;
}

/// Largest mean error in each of `bins` equal-count bins of ascending area.
inline std::vector<double> max_error_by_area_bin(std::span<const CalibrationStudyRow> rows, std::size_t bins = 5) {
  if (rows.size() < bins || bins == 0) throw InvalidInput("max_error_by_area_bin: fewer rows than bins");
  std::vector<const CalibrationStudyRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->area < b->area; });
  std::vector<double> out(bins, 0.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const std::size_t b = i * bins / sorted.size();
    out[b] = std::max(out[b], sorted[i]->mean_error);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline on simulated data

/// Noise substream reserved for calibration-point measurements of camera i.
inline constexpr std::uint64_t kCalibrationStream = 1000;

/// Calibrates a simulated camera the way an installer would: measures the
/// default 47-point grid once with the camera's noise, then solves from the
/// largest-area triple of the measured points.
inline CameraCalibration calibrate_from_grid(const CameraModel& cam, std::uint64_t stream,
                                             double d_max = kDefaultDMax) {
  const auto grid = generate_grid(cam);
  const auto measured = measure_grid(cam, grid, cam.noise.seed, kCalibrationStream + stream);
  const auto best = select_calibration_set(measured, 1).front();
  return solve_calibration(subset_pairs(measured, best), cam.camera_id, d_max);
}

struct PipelineRun {
  SimulationResult simulation;
  std::map<std::string, CameraCalibration> calibrations;
  TracksByCamera tracks;
  MatchResult matching;
  std::vector<Track> fused;
};

inline PipelineRun run_pipeline(const Scenario& sc, const MergeConfig& cfg,
                                QualityAnchor anchor = QualityAnchor::PointsAndBarycenter) {
  PipelineRun run;
  run.simulation = simulate(sc);
  for (std::size_t ci = 0; ci < sc.cameras.size(); ++ci) {
    const auto& cam = sc.cameras[ci];
    auto cal = calibrate_from_grid(cam, ci, cfg.d_max);
    run.tracks[cam.camera_id] = build_tracks(cal, run.simulation.detections.at(cam.camera_id), anchor);
    run.calibrations.emplace(cam.camera_id, std::move(cal));
  }
  run.matching = match_tracks(run.tracks, cfg);
  run.fused = merge_tracks(run.tracks, run.matching.matches, cfg);
  return run;
}

/// Correlates the first walker's tracks in the first two cameras while the
/// timestamps of camera `shifted` (0 or 1) are delayed by each offset. One
/// simulation serves every offset so only the offset changes between rows.
///
/// C is an unnormalised sum, so a shift that widens the time overlap of the
/// two streams adds pairs and can raise C at small offsets. Delay the camera
/// whose view of the walker starts later to isolate the position mismatch.
inline std::vector<SeparationStudyRow> separation_study(const Scenario& sc, std::span<const double> offsets,
                                                        const MergeConfig& cfg = {}, std::size_t shifted = 0) {
  if (sc.cameras.size() < 2) throw InvalidScenario("separation_study: need at least 2 cameras");
  if (shifted > 1) throw InvalidInput("separation_study: shifted camera must be 0 or 1");
  sc.validate();
  const auto sim = simulate(sc);
  const std::string& walker = sc.walkers.front().walker_id;

  std::array<Track, 2> base;
  for (std::size_t ci = 0; ci < 2; ++ci) {
    const auto& cam = sc.cameras[ci];
    const auto cal = calibrate_from_grid(cam, ci, cfg.d_max);
    const auto tracks = build_tracks(cal, sim.detections.at(cam.camera_id));
    const std::string id = cam.camera_id + "/" + walker;
    auto it = std::find_if(tracks.begin(), tracks.end(), [&](const Track& t) { return t.track_id == id; });
    if (it == tracks.end()) {
      throw InvalidScenario("separation_study: camera '" + cam.camera_id + "' never sees walker '" + walker + "'");
    }
    base[ci] = *it;
  }
  if (trajectory_correlation(base[0], base[1], cfg).n_pairs() == 0) {
    throw InvalidScenario("separation_study: the two cameras never observe the walker at the same time");
  }

  std::vector<SeparationStudyRow> rows;
  for (double offset : offsets) {
    if (!std::isfinite(offset) || offset < 0.0) throw InvalidInput("separation_study: offsets must be >= 0");
    std::array<Track, 2> pair = base;
    for (auto& s : pair[shifted].samples) s.t += offset;
    const auto report = trajectory_correlation(pair[0], pair[1], cfg);
    rows.push_back({offset, report.C, report.n_pairs()});
  }
  return rows;
}

struct MatchingReport {
  double accuracy = 0.0;                ///< fraction of fused tracks that are >= 95% one walker
  std::size_t fused_tracks = 0;
  std::size_t pure_tracks = 0;
  std::size_t multi_camera_walkers = 0;  ///< walkers seen by at least two cameras
  std::size_t merged_walkers = 0;        ///< of those, walkers whose every track ended in one fused track
};

namespace detail {

/// Walker id from a single-camera track id "<camera>/<walker>".
inline std::string walker_of(const std::string& track_id) {
  const auto slash = track_id.find('/');
  return slash == std::string::npos ? track_id : track_id.substr(slash + 1);
}

}  // namespace detail

/// Scores a pipeline run against the simulator's walker labels. A fused
/// sample is attributed to the walker of the track it took its timestamp from.
inline MatchingReport score_matching(const PipelineRun& run) {
  MatchingReport rep;
  rep.fused_tracks = run.fused.size();

  std::map<std::string, std::set<std::size_t>> fused_of_walker;
  std::map<std::string, std::set<std::string>> cameras_of_walker;
  for (const auto& [camera, tracks] : run.tracks) {
    for (const auto& t : tracks) cameras_of_walker[detail::walker_of(t.track_id)].insert(camera);
  }

  for (std::size_t fi = 0; fi < run.fused.size(); ++fi) {
    const auto& fused = run.fused[fi];
    std::map<std::string, std::string> walker_by_camera;
    std::size_t start = 0;
    const std::string& id = fused.track_id;
    while (start <= id.size()) {
      const auto end = std::min(id.find('+', start), id.size());
      const std::string part = id.substr(start, end - start);
      const auto slash = part.find('/');
      walker_by_camera[part.substr(0, slash)] = detail::walker_of(part);
      fused_of_walker[detail::walker_of(part)].insert(fi);
      start = end + 1;
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& s : fused.samples) ++counts[walker_by_camera[s.source_camera]];
    std::size_t dominant = 0;
    for (const auto& [w, c] : counts) dominant = std::max(dominant, c);
    if (!fused.samples.empty() &&
        static_cast<double>(dominant) >= 0.95 * static_cast<double>(fused.samples.size())) {
      ++rep.pure_tracks;
    }
  }
  for (const auto& [walker, cams] : cameras_of_walker) {
    if (cams.size() < 2) continue;
    ++rep.multi_camera_walkers;
    const auto& f = fused_of_walker[walker];
    if (f.size() == 1 && run.fused[*f.begin()].contributing_cameras.size() >= cams.size()) {
      // one fused track carrying all of this walker's cameras, and nobody else's
      bool exclusive = true;
      for (const auto& [other, fs] : fused_of_walker) {
        if (other != walker && fs.contains(*f.begin())) exclusive = false;
      }
      if (exclusive) ++rep.merged_walkers;
    }
  }
  rep.accuracy = rep.fused_tracks == 0
                     ? 0.0
                     : static_cast<double>(rep.pure_tracks) / static_cast<double>(rep.fused_tracks);
  return rep;
}

inline MatchingReport matching_accuracy(const Scenario& sc, const MergeConfig& cfg = {}) {
  return score_matching(run_pipeline(sc, cfg));
}

}  // namespace trajfuse

#pragma once

// Command-line front end. Kept in a header so the test suite can drive the
// exact code the `trajfuse` binary runs.
//
// Exit codes: 0 success, 1 usage or parse error, 2 domain error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trajfuse/trajfuse.hpp"

namespace trajfuse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDomain = 2;

/// Calibration triangles below this area draw a warning.
inline constexpr double kSmallTriangleArea = 1.5;

namespace detail {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  bool strict = false;
  std::string output_dir;
};

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return in;
}

/// Writes through `fn` to `path`, or to `fallback` when `path` is empty.
template <typename Fn>
void with_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  fn(out);
}

inline std::string in_dir(const std::string& dir, const std::string& name) {
  return dir.empty() ? name : (fs::path(dir) / name).string();
}

inline io::PipelineConfig load_config(const GlobalOptions& g) {
  if (g.config_path.empty()) return {};
  auto in = open_in(g.config_path);
  auto cfg = io::read_pipeline_config(in);
  // calibration paths are relative to the config file
  const auto base = fs::path(g.config_path).parent_path();
  for (auto& [cam, path] : cfg.calibrations) {
    if (fs::path(path).is_relative()) path = (base / path).string();
  }
  return cfg;
}

inline CameraCalibration load_calibration(const std::string& path) {
  auto in = open_in(path);
  return io::read_calibration(in);
}

inline std::string first_content_line(const std::string& path) {
  auto in = open_in(path);
  std::string raw;
  while (std::getline(in, raw)) {
    const auto line = io::detail::trim(raw);
    if (!line.empty() && line.front() != '#') return std::string(line);
  }
  return {};
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  std::string pairs;
  std::string camera_id;
  double d_max = kDefaultDMax;
  bool select = false;
  std::string output;
};

inline int run_calibrate(const CalibrateArgs& a, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  auto in = open_in(a.pairs);
  auto pairs = io::read_pairs(in);
  if (pairs.size() < 3) {
    err << "error: " << a.pairs << ": need 3 calibration pairs, found " << pairs.size() << '\n';
    return kExitUsage;
  }
  if (pairs.size() > 3 && !a.select) {
    err << "error: " << a.pairs << " holds " << pairs.size()
        << " pairs; pass --select to pick the largest-area triple\n";
    return kExitUsage;
  }
  std::array<CalibrationPair, 3> chosen{pairs[0], pairs[1], pairs[2]};
  if (pairs.size() > 3) {
    const auto best = select_calibration_set(pairs, 1).front();
    chosen = subset_pairs(pairs, best);
    err << "selected " << chosen[0].label << ", " << chosen[1].label << ", " << chosen[2].label << " out of "
        << pairs.size() << " candidates\n";
  }
  const auto cal = solve_calibration(chosen, a.camera_id, a.d_max);
  err << "triangle area: " << io::format_double(cal.area()) << " m^2\n";
  if (cal.area() < kSmallTriangleArea) {
    err << "warning: calibration triangle area below " << kSmallTriangleArea
        << " m^2; expect larger projection errors\n";
  }
  std::string path = a.output;
  if (path.empty() && !g.output_dir.empty()) path = in_dir(g.output_dir, a.camera_id + ".cal");
  with_output(path, out, [&](std::ostream& o) { io::write_calibration(o, cal); });
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ProjectArgs {
  std::string calibration;
  std::string detections;
  std::string output;
  std::string anchor;
};

inline int run_project(const ProjectArgs& a, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  const auto cfg = load_config(g);
  const auto anchor = a.anchor.empty() ? cfg.anchor : io::parse_quality_anchor(a.anchor);
  const auto cal = load_calibration(a.calibration);

  auto in = open_in(a.detections);
  std::vector<io::LineIssue> issues;
  std::vector<std::size_t> lines;
  const auto detections = io::read_detections(in, g.strict ? nullptr : &issues, &lines);
  for (const auto& issue : issues) err << "warning: " << a.detections << ": " << issue.message << " (skipped)\n";
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].camera_id != cal.camera_id()) {
      err << "warning: " << a.detections << ": line " << lines[i] << ": camera '" << detections[i].camera_id
          << "' does not match calibration camera '" << cal.camera_id() << "'\n";
    }
  }
  const auto tracks = build_tracks(cal, detections, anchor);
  std::string path = a.output;
  if (path.empty() && !g.output_dir.empty()) path = in_dir(g.output_dir, cal.camera_id() + ".samples.csv");
  with_output(path, out, [&](std::ostream& o) { io::write_samples(o, tracks); });
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct MergeArgs {
  std::vector<std::string> inputs;
  std::vector<std::string> calibrations;  ///< CAMERA=FILE
  std::optional<double> threshold;
  std::optional<double> max_pair_dt;
  std::optional<double> d_max;
  std::string fused;
  std::string report;
  std::string pairs_detail;
};

inline int run_merge(const MergeArgs& a, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  auto cfg = load_config(g);
  if (a.threshold) cfg.merge.threshold = *a.threshold;
  if (a.max_pair_dt) cfg.merge.max_pair_dt = *a.max_pair_dt;
  if (a.d_max) cfg.merge.d_max = *a.d_max;
  cfg.merge.validate();
  for (const auto& spec : a.calibrations) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      err << "error: --calibration expects CAMERA=FILE, got '" << spec << "'\n";
      return kExitUsage;
    }
    cfg.calibrations[spec.substr(0, eq)] = spec.substr(eq + 1);
  }

  TracksByCamera tracks;
  std::set<std::string> seen_ids;
  auto add_track = [&](Track t, const std::string& file) {
    if (!seen_ids.insert(t.track_id).second) {
      throw ParseError(file + ": track id '" + t.track_id + "' already read from another input");
    }
    const std::string camera = *t.contributing_cameras.begin();
    tracks[camera].push_back(std::move(t));
  };

  for (const auto& file : a.inputs) {
    const auto head = first_content_line(file);
    auto in = open_in(file);
    std::vector<io::LineIssue> issues;
    if (head == io::kDetectionsHeader) {
      const auto detections = io::read_detections(in, g.strict ? nullptr : &issues);
      std::map<std::string, std::vector<Detection>> by_camera;
      for (const auto& d : detections) by_camera[d.camera_id].push_back(d);
      for (const auto& [camera, dets] : by_camera) {
        const auto it = cfg.calibrations.find(camera);
        if (it == cfg.calibrations.end()) {
          throw ParseError(file + ": no calibration for camera '" + camera + "' (use --calibration or --config)");
        }
        const auto cal = load_calibration(it->second);
        for (auto& t : build_tracks(cal, dets, cfg.anchor)) add_track(std::move(t), file);
      }
    } else {
      for (auto& t : io::read_samples(in, g.strict ? nullptr : &issues)) add_track(std::move(t), file);
    }
    for (const auto& issue : issues) err << "warning: " << file << ": " << issue.message << " (skipped)\n";
  }

  const auto matching = match_tracks(tracks, cfg.merge);
  const auto fused = merge_tracks(tracks, matching.matches, cfg.merge);

  const std::string dir = g.output_dir.empty() ? "." : g.output_dir;
  const std::string fused_path = a.fused.empty() ? in_dir(dir, "fused_tracks.csv") : a.fused;
  const std::string report_path = a.report.empty() ? in_dir(dir, "correlation_report.csv") : a.report;
  with_output(fused_path == "-" ? "" : fused_path, out, [&](std::ostream& o) {
    if (cfg.datum_offset) {
      o << "# datum_offset " << io::format_double(cfg.datum_offset->x) << ' '
        << io::format_double(cfg.datum_offset->y) << '\n';
    }
    io::write_fused(o, fused);
  });
  with_output(report_path == "-" ? "" : report_path, out,
              [&](std::ostream& o) { io::write_candidates(o, matching.candidates, cfg.merge.threshold); });
  if (!a.pairs_detail.empty()) {
    with_output(a.pairs_detail, out, [&](std::ostream& o) {
      o << io::kPairsDetailHeader << '\n';
      for (const auto& c : matching.candidates) io::write_report_pairs(o, c.report, false);
    });
  }
  err << tracks.size() << " camera(s), " << matching.candidates.size() << " candidate pair(s), "
      << matching.matches.size() << " match(es), " << fused.size() << " fused track(s)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
};

/// Replaces every camera's noise seed with seed + camera index.
inline void reseed(Scenario& sc, std::uint64_t seed) {
  for (std::size_t i = 0; i < sc.cameras.size(); ++i) sc.cameras[i].noise.seed = seed + i;
}

inline int run_simulate(const SimulateArgs& a, const GlobalOptions& g, std::ostream&, std::ostream& err) {
  auto in = open_in(a.scenario);
  auto sc = io::read_scenario(in);
  if (g.seed) reseed(sc, *g.seed);
  const auto result = simulate(sc);
  const std::string dir = g.output_dir.empty() ? "." : g.output_dir;
  for (const auto& cam : sc.cameras) {
    const auto& dets = result.detections.at(cam.camera_id);
    with_output(in_dir(dir, cam.camera_id + ".detections.csv"), err,
                [&](std::ostream& o) { io::write_detections(o, dets); });
    err << cam.camera_id << ": " << dets.size() << " detection(s)\n";
  }
  with_output(in_dir(dir, "ground_truth.csv"), err,
              [&](std::ostream& o) { io::write_ground_truth(o, result.ground_truth); });
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string study;
  std::string scenario;
  std::string preset;
  std::size_t camera_index = 0;
  std::size_t points = 47;
  bool zero_noise = false;
  std::vector<double> offsets{0.0, 0.25, 0.5, 1.0, 2.0};
  std::size_t shifted_camera = 0;
  std::size_t runs = 1;
  std::string output;
};

inline Scenario preset_scenario(const std::string& name, std::uint64_t seed) {
  if (name == "office") return scenarios::office(seed);
  if (name == "followers") return scenarios::followers(seed);
  if (name == "five") return scenarios::five_walkers(seed);
  throw ParseError("unknown preset '" + name + "'");
}

inline int run_evaluate(const EvaluateArgs& a, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  const auto cfg = load_config(g);
  const std::uint64_t seed = g.seed.value_or(1);
  std::optional<Scenario> from_file;
  if (!a.scenario.empty()) {
    auto in = open_in(a.scenario);
    from_file = io::read_scenario(in);
    if (g.seed) reseed(*from_file, seed);
  }
  auto scenario_for = [&](std::uint64_t run_seed, const char* fallback) {
    if (from_file) {
      Scenario sc = *from_file;
      if (run_seed != seed) reseed(sc, run_seed);
      return sc;
    }
    return preset_scenario(a.preset.empty() ? fallback : a.preset, run_seed);
  };

  if (a.study == "calibration") {
    CameraModel cam;
    cam.camera_id = "C";
    cam.noise.seed = seed;
    if (from_file) {
      if (a.camera_index >= from_file->cameras.size()) {
        err << "error: --camera-index " << a.camera_index << " out of range\n";
        return kExitUsage;
      }
      cam = from_file->cameras[a.camera_index];
    }
    if (a.zero_noise) cam.noise = NoiseModel::none(cam.noise.seed);
    const auto grid = generate_grid(cam, a.points);
    const auto measured = measure_grid(cam, grid, cam.noise.seed);
    const auto rows = calibration_study(measured);
    with_output(a.output, out, [&](std::ostream& o) { io::write_calibration_study(o, rows); });
    std::vector<double> area, perimeter, error;
    for (const auto& r : rows) {
      area.push_back(r.area);
      perimeter.push_back(r.perimeter);
      error.push_back(r.mean_error);
    }
    err << rows.size() << " subsets; spearman(area, error) = " << io::format_double(stats::spearman(area, error))
        << ", spearman(perimeter, error) = " << io::format_double(stats::spearman(perimeter, error)) << '\n';
    return kExitOk;
  }
  if (a.study == "separation") {
    const auto rows = separation_study(scenario_for(seed, "office"), a.offsets, cfg.merge, a.shifted_camera);
    with_output(a.output, out, [&](std::ostream& o) { io::write_separation_study(o, rows); });
    return kExitOk;
  }
  // matching
  std::vector<io::MatchingStudyRow> rows;
  for (std::size_t r = 0; r < a.runs; ++r) {
    const std::uint64_t run_seed = seed + r;
    rows.push_back({run_seed, matching_accuracy(scenario_for(run_seed, "five"), cfg.merge)});
  }
  with_output(a.output, out, [&](std::ostream& o) { io::write_matching_study(o, rows); });
  return kExitOk;
}

}  // namespace detail

/// Parses `args` (without the program name) and runs the chosen command.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace detail;
  CLI::App app{"Multi-camera trajectory calibration, fusion and simulation", "trajfuse"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Base noise seed (camera i uses seed + i)");
  app.add_option("--config", g.config_path, "Pipeline configuration (JSON)");
  app.add_flag("--strict", g.strict, "Abort on the first malformed input line");
  app.add_option("--output-dir", g.output_dir, "Directory for output files");

  CalibrateArgs cal_args;
  auto* calibrate = app.add_subcommand("calibrate", "Solve a camera calibration from point pairs");
  calibrate->add_option("--pairs", cal_args.pairs, "CSV of calibration pairs (label,x_cam,z_cam,x,y)")->required();
  calibrate->add_option("--camera-id", cal_args.camera_id, "Camera identifier")->required();
  calibrate->add_option("--d-max", cal_args.d_max, "Quality distance cap in meters")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  calibrate->add_flag("--select", cal_args.select, "Pick the largest-area triple among more than 3 pairs");
  calibrate->add_option("-o,--output", cal_args.output, "Calibration file to write (default: stdout)");

  ProjectArgs proj_args;
  auto* project_cmd = app.add_subcommand("project", "Project a detection stream into the unified landmark");
  project_cmd->add_option("--calibration", proj_args.calibration, "Calibration file")->required();
  project_cmd->add_option("--detections", proj_args.detections, "Detection stream (CSV)")->required();
  project_cmd->add_option("-o,--output", proj_args.output, "Samples file to write (default: stdout)");
  project_cmd->add_option("--quality-anchor", proj_args.anchor, "points_and_barycenter, barycenter or points")
      ->check(CLI::IsMember({"points_and_barycenter", "barycenter", "points"}));

  MergeArgs merge_args;
  auto* merge = app.add_subcommand("merge", "Match and fuse per-camera tracks");
  merge->add_option("inputs", merge_args.inputs, "Sample or detection files")->required()->check(CLI::ExistingFile);
  merge->add_option("--calibration", merge_args.calibrations, "CAMERA=FILE for detection inputs");
  merge->add_option("--threshold", merge_args.threshold, "Minimum correlation to merge");
  merge->add_option("--max-pair-dt", merge_args.max_pair_dt, "Largest time gap between paired samples (s)");
  merge->add_option("--d-max", merge_args.d_max, "Quality distance cap in meters");
  merge->add_option("--fused", merge_args.fused, "Fused track file (default: <output-dir>/fused_tracks.csv)");
  merge->add_option("--report", merge_args.report,
                    "Correlation report (default: <output-dir>/correlation_report.csv)");
  merge->add_option("--pairs-detail", merge_args.pairs_detail, "Also write every paired sample's terms");

  SimulateArgs sim_args;
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate detection streams from a scenario");
  simulate_cmd->add_option("scenario", sim_args.scenario, "Scenario file (JSON)")->required();

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Run a calibration, separation or matching study");
  evaluate->add_option("study", eval_args.study, "calibration, separation or matching")
      ->required()
      ->check(CLI::IsMember({"calibration", "separation", "matching"}));
  evaluate->add_option("--scenario", eval_args.scenario, "Scenario file (JSON)");
  evaluate->add_option("--preset", eval_args.preset, "Built-in scenario: office, followers or five")
      ->check(CLI::IsMember({"office", "followers", "five"}));
  evaluate->add_option("--camera-index", eval_args.camera_index, "Scenario camera for the calibration study");
  evaluate->add_option("--points", eval_args.points, "Grid size for the calibration study")->capture_default_str();
  evaluate->add_flag("--zero-noise", eval_args.zero_noise, "Calibration study without measurement noise");
  evaluate->add_option("--offsets", eval_args.offsets, "Time offsets for the separation study (s)")
      ->delimiter(',');
  evaluate->add_option("--shifted-camera", eval_args.shifted_camera, "Camera (0 or 1) whose clock is offset");
  evaluate->add_option("--runs", eval_args.runs, "Seeded runs for the matching study")->capture_default_str();
  evaluate->add_option("-o,--output", eval_args.output, "Table to write (default: stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*calibrate) return run_calibrate(cal_args, g, out, err);
    if (*project_cmd) return run_project(proj_args, g, out, err);
    if (*merge) return run_merge(merge_args, g, out, err);
    if (*simulate_cmd) return run_simulate(sim_args, g, out, err);
    return run_evaluate(eval_args, g, out, err);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace trajfuse::cli

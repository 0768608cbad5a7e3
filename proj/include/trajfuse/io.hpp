#pragma once

// Text codecs for every file the pipeline reads or writes. Tables are CSV
// with a mandatory header row; '#' lines and blank lines are ignored on
// read. Floats are written with 9 significant digits.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "trajfuse/calibration.hpp"
#include "trajfuse/errors.hpp"
#include "trajfuse/evaluation.hpp"
#include "trajfuse/fusion.hpp"
#include "trajfuse/simulator.hpp"

namespace trajfuse::io {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// `v` rounded to what format_double() would write.
inline double round_9(double v) { return std::strtod(format_double(v).c_str(), nullptr); }

/// A malformed line skipped by a lenient reader.
struct LineIssue {
  std::size_t line = 0;
  std::string message;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError("field '" + std::string(field) + "': not a number: '" + std::string(s) + "'", line);
  }
  if (!std::isfinite(v)) throw ParseError("field '" + std::string(field) + "': non-finite value", line);
  return v;
}

inline void check_token(std::string_view s, std::string_view what) {
  if (s.find_first_of(",\n\r") != std::string_view::npos) {
    throw InvalidInput(std::string(what) + " may not contain commas or line breaks: '" + std::string(s) + "'");
  }
}

/// Reads a CSV table whose header must equal `header`. Calls `row(fields,
/// line)` for each data line. An input with no content at all is an empty
/// table. A ParseError thrown by `row` aborts the read
/// when `issues` is null and is otherwise recorded and the line skipped.
template <typename RowFn>
void read_table(std::istream& in, std::string_view header, std::vector<LineIssue>* issues, RowFn&& row) {
  const auto columns = split(header, ',').size();
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!have_header) {
      if (line != header) {
        throw ParseError("expected header '" + std::string(header) + "', got '" + std::string(line) + "'", line_no);
      }
      have_header = true;
      continue;
    }
    try {
      const auto fields = split(line, ',');
      if (fields.size() != columns) {
        throw ParseError("expected " + std::to_string(columns) + " fields, got " + std::to_string(fields.size()),
                         line_no);
      }
      row(fields, line_no);
    } catch (const ParseError& e) {
      if (!issues) throw;
      issues->push_back({line_no, e.what()});
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Calibration pairs

inline constexpr std::string_view kPairsHeader = "label,x_cam,z_cam,x,y";

inline std::vector<CalibrationPair> read_pairs(std::istream& in) {
  std::vector<CalibrationPair> out;
  detail::read_table(in, kPairsHeader, nullptr, [&](const auto& f, std::size_t line) {
    out.push_back({{detail::parse_double(f[1], "x_cam", line), detail::parse_double(f[2], "z_cam", line)},
                   {detail::parse_double(f[3], "x", line), detail::parse_double(f[4], "y", line)},
                   std::string(f[0])});
  });
  return out;
}

inline void write_pairs(std::ostream& out, std::span<const CalibrationPair> pairs) {
  out << kPairsHeader << '\n';
  for (const auto& p : pairs) {
    detail::check_token(p.label, "label");
    out << p.label << ',' << format_double(p.cam.x_cam) << ',' << format_double(p.cam.z_cam) << ','
        << format_double(p.unified.x) << ',' << format_double(p.unified.y) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Calibration file
//
//   # trajfuse calibration
//   camera_id K1
//   d_max 2
//   point <x_cam> <z_cam> <x> <y> [label...]     (three lines)
//   alpha <a1> <a2> <a3>                         (derived, informational)
//   beta <b1> <b2> <b3>                          (derived, informational)
//   area <m^2>                                   (derived, informational)
//
// The three points are authoritative: the coefficients are re-solved on
// read, so a file reproduces its own points exactly whatever the rounding.

inline void write_calibration(std::ostream& out, const CameraCalibration& cal) {
  out << "# trajfuse calibration\n";
  out << "camera_id " << cal.camera_id() << '\n';
  out << "d_max " << format_double(cal.d_max()) << '\n';
  for (const auto& p : cal.calibration_points()) {
    out << "point " << format_double(p.cam.x_cam) << ' ' << format_double(p.cam.z_cam) << ' '
        << format_double(p.unified.x) << ' ' << format_double(p.unified.y);
    if (!p.label.empty()) out << ' ' << p.label;
    out << '\n';
  }
  const auto& a = cal.alpha();
  const auto& b = cal.beta();
  out << "alpha " << format_double(a[0]) << ' ' << format_double(a[1]) << ' ' << format_double(a[2]) << '\n';
  out << "beta " << format_double(b[0]) << ' ' << format_double(b[1]) << ' ' << format_double(b[2]) << '\n';
  out << "area " << format_double(cal.area()) << '\n';
}

inline CameraCalibration read_calibration(std::istream& in) {
  std::optional<std::string> camera_id;
  double d_max = kDefaultDMax;
  std::vector<CalibrationPair> points;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto sp = line.find(' ');
    const auto key = line.substr(0, sp);
    const auto rest = sp == std::string_view::npos ? std::string_view{} : detail::trim(line.substr(sp + 1));
    if (key == "camera_id") {
      if (rest.empty()) throw ParseError("camera_id is empty", line_no);
      camera_id = std::string(rest);
    } else if (key == "d_max") {
      d_max = detail::parse_double(rest, "d_max", line_no);
    } else if (key == "point") {
      std::vector<std::string_view> tok;
      std::string_view r = rest;
      for (int i = 0; i < 4; ++i) {
        const auto s = r.find(' ');
        tok.push_back(r.substr(0, s));
        r = s == std::string_view::npos ? std::string_view{} : detail::trim(r.substr(s + 1));
      }
      points.push_back({{detail::parse_double(tok[0], "point.x_cam", line_no),
                         detail::parse_double(tok[1], "point.z_cam", line_no)},
                        {detail::parse_double(tok[2], "point.x", line_no),
                         detail::parse_double(tok[3], "point.y", line_no)},
                        std::string(r)});
    } else if (key == "alpha" || key == "beta" || key == "area") {
      // derived
    } else {
      throw ParseError("unknown key '" + std::string(key) + "'", line_no);
    }
  }
  if (!camera_id) throw ParseError("calibration: missing field 'camera_id'");
  if (points.size() != 3) {
    throw ParseError("calibration: expected 3 'point' lines, got " + std::to_string(points.size()));
  }
  return solve_calibration(points, *camera_id, d_max);
}

// ---------------------------------------------------------------------------
// Detection stream

inline constexpr std::string_view kDetectionsHeader = "camera_id,t,x_cam,z_cam,person_hint,vertical";

/// `lines`, when given, receives the 1-based source line of each detection.
inline std::vector<Detection> read_detections(std::istream& in, std::vector<LineIssue>* issues = nullptr,
                                              std::vector<std::size_t>* lines = nullptr) {
  std::vector<Detection> out;
  detail::read_table(in, kDetectionsHeader, issues, [&](const auto& f, std::size_t line) {
    if (f[0].empty()) throw ParseError("field 'camera_id' is empty", line);
    Detection d;
    d.camera_id = std::string(f[0]);
    d.t = detail::parse_double(f[1], "t", line);
    d.pos_cam = {detail::parse_double(f[2], "x_cam", line), detail::parse_double(f[3], "z_cam", line)};
    if (!f[4].empty()) d.person_hint = std::string(f[4]);
    if (!f[5].empty()) d.vertical = detail::parse_double(f[5], "vertical", line);
    out.push_back(std::move(d));
    if (lines) lines->push_back(line);
  });
  return out;
}

inline void write_detections(std::ostream& out, std::span<const Detection> detections) {
  out << kDetectionsHeader << '\n';
  for (const auto& d : detections) {
    detail::check_token(d.camera_id, "camera_id");
    if (d.person_hint) detail::check_token(*d.person_hint, "person_hint");
    out << d.camera_id << ',' << format_double(d.t) << ',' << format_double(d.pos_cam.x_cam) << ','
        << format_double(d.pos_cam.z_cam) << ',' << d.person_hint.value_or("") << ','
        << (d.vertical ? format_double(*d.vertical) : "") << '\n';
  }
}

// ---------------------------------------------------------------------------
// Projected samples (output of `project`, input of `merge`)

inline constexpr std::string_view kSamplesHeader = "camera_id,track_id,t,x,y,quality";

/// Tracks in file order of first appearance; samples sorted by time.
inline std::vector<Track> read_samples(std::istream& in, std::vector<LineIssue>* issues = nullptr) {
  std::vector<Track> tracks;
  std::map<std::string, std::size_t> index;
  detail::read_table(in, kSamplesHeader, issues, [&](const auto& f, std::size_t line) {
    if (f[0].empty() || f[1].empty()) throw ParseError("camera_id and track_id must be non-empty", line);
    Sample s{detail::parse_double(f[2], "t", line),
             {detail::parse_double(f[3], "x", line), detail::parse_double(f[4], "y", line)},
             detail::parse_double(f[5], "quality", line),
             std::string(f[0])};
    if (s.quality < 0.0 || s.quality > 1.0) throw ParseError("field 'quality' outside [0, 1]", line);
    const std::string id(f[1]);
    auto [it, inserted] = index.emplace(id, tracks.size());
    if (inserted) tracks.push_back({id, {}, {}});
    Track& t = tracks[it->second];
    if (!t.contributing_cameras.empty() && !t.contributing_cameras.contains(s.source_camera)) {
      throw ParseError("track '" + id + "' appears under two cameras", line);
    }
    t.contributing_cameras.insert(s.source_camera);
    t.samples.push_back(std::move(s));
  });
  for (auto& t : tracks) {
    std::stable_sort(t.samples.begin(), t.samples.end(), [](const Sample& a, const Sample& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < t.samples.size(); ++i) {
      if (t.samples[i].t == t.samples[i - 1].t) {
        throw ParseError("track '" + t.track_id + "' has two samples at t=" + format_double(t.samples[i].t));
      }
    }
  }
  return tracks;
}

inline void write_samples(std::ostream& out, std::span<const Track> tracks) {
  out << kSamplesHeader << '\n';
  for (const auto& t : tracks) {
    detail::check_token(t.track_id, "track_id");
    for (const auto& s : t.samples) {
      out << s.source_camera << ',' << t.track_id << ',' << format_double(s.t) << ',' << format_double(s.pos.x)
          << ',' << format_double(s.pos.y) << ',' << format_double(s.quality) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Fused tracks

inline constexpr std::string_view kFusedHeader = "track_id,t,x,y,quality,source_camera";

inline void write_fused(std::ostream& out, std::span<const Track> tracks) {
  out << kFusedHeader << '\n';
  for (const auto& t : tracks) {
    detail::check_token(t.track_id, "track_id");
    for (const auto& s : t.samples) {
      out << t.track_id << ',' << format_double(s.t) << ',' << format_double(s.pos.x) << ','
          << format_double(s.pos.y) << ',' << format_double(s.quality) << ',' << s.source_camera << '\n';
    }
  }
}

inline std::vector<Track> read_fused(std::istream& in) {
  std::vector<Track> tracks;
  std::map<std::string, std::size_t> index;
  detail::read_table(in, kFusedHeader, nullptr, [&](const auto& f, std::size_t line) {
    const std::string id(f[0]);
    auto [it, inserted] = index.emplace(id, tracks.size());
    if (inserted) tracks.push_back({id, {}, {}});
    Sample s{detail::parse_double(f[1], "t", line),
             {detail::parse_double(f[2], "x", line), detail::parse_double(f[3], "y", line)},
             detail::parse_double(f[4], "quality", line),
             std::string(f[5])};
    tracks[it->second].contributing_cameras.insert(s.source_camera);
    tracks[it->second].samples.push_back(std::move(s));
  });
  return tracks;
}

// ---------------------------------------------------------------------------
// Correlation reports

inline constexpr std::string_view kCandidatesHeader = "track_a,track_b,camera_a,camera_b,C,n_pairs,mean_C,threshold,decision";

inline void write_candidates(std::ostream& out, std::span<const CandidatePair> candidates, double threshold) {
  out << kCandidatesHeader << '\n';
  for (const auto& c : candidates) {
    out << c.report.track_pair.first << ',' << c.report.track_pair.second << ',' << c.camera_a << ','
        << c.camera_b << ',' << format_double(c.report.C) << ',' << c.report.n_pairs() << ','
        << format_double(c.report.mean_C()) << ',' << format_double(threshold) << ',' << to_string(c.decision)
        << '\n';
  }
}

inline constexpr std::string_view kPairsDetailHeader = "track_a,track_b,t_a,t_b,delta_t,d,Q,D,C";

/// Per-pair terms of one report, for plotting the correlation build-up.
inline void write_report_pairs(std::ostream& out, const CorrelationReport& report, bool header = true) {
  if (header) out << kPairsDetailHeader << '\n';
  for (const auto& p : report.pairs) {
    out << report.track_pair.first << ',' << report.track_pair.second << ',' << format_double(p.a.t) << ','
        << format_double(p.b.t) << ',' << format_double(p.delta_t) << ',' << format_double(p.d) << ','
        << format_double(p.Q) << ',' << format_double(p.D) << ',' << format_double(p.C) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Ground truth

inline constexpr std::string_view kGroundTruthHeader = "camera_id,t,t_true,walker_id,x,y";

inline void write_ground_truth(std::ostream& out, std::span<const GroundTruthRecord> records) {
  out << kGroundTruthHeader << '\n';
  for (const auto& r : records) {
    out << r.camera_id << ',' << format_double(r.t) << ',' << format_double(r.t_true) << ',' << r.walker_id << ','
        << format_double(r.pos.x) << ',' << format_double(r.pos.y) << '\n';
  }
}

inline std::vector<GroundTruthRecord> read_ground_truth(std::istream& in) {
  std::vector<GroundTruthRecord> out;
  detail::read_table(in, kGroundTruthHeader, nullptr, [&](const auto& f, std::size_t line) {
    out.push_back({std::string(f[0]), detail::parse_double(f[1], "t", line),
                   detail::parse_double(f[2], "t_true", line), std::string(f[3]),
                   {detail::parse_double(f[4], "x", line), detail::parse_double(f[5], "y", line)}});
  });
  return out;
}

// ---------------------------------------------------------------------------
// Study tables

inline void write_calibration_study(std::ostream& out, std::span<const CalibrationStudyRow> rows) {
  out << "i,j,k,area,perimeter,mean_error\n";
  for (const auto& r : rows) {
    out << r.subset[0] << ',' << r.subset[1] << ',' << r.subset[2] << ',' << format_double(r.area) << ','
        << format_double(r.perimeter) << ',' << format_double(r.mean_error) << '\n';
  }
}

inline void write_separation_study(std::ostream& out, std::span<const SeparationStudyRow> rows) {
  out << "offset,C,n_pairs\n";
  for (const auto& r : rows) out << format_double(r.offset) << ',' << format_double(r.C) << ',' << r.n_pairs << '\n';
}

struct MatchingStudyRow {
  std::uint64_t seed = 0;
  MatchingReport report;
};

inline void write_matching_study(std::ostream& out, std::span<const MatchingStudyRow> rows) {
  out << "seed,accuracy,fused_tracks,pure_tracks,multi_camera_walkers,merged_walkers\n";
  for (const auto& r : rows) {
    out << r.seed << ',' << format_double(r.report.accuracy) << ',' << r.report.fused_tracks << ','
        << r.report.pure_tracks << ',' << r.report.multi_camera_walkers << ',' << r.report.merged_walkers << '\n';
  }
}

// ---------------------------------------------------------------------------
// Scenario (JSON)
//
// {
//   "duration": 8,
//   "seed": 1,                         optional; default for camera noise seeds
//   "datum_offset": [x, y],            optional
//   "cameras": [{ "id": "K1", "position": [6, 2], "yaw_deg": 90,
//                 "fov_deg": 60, "range": [0.5, 5], "sample_rate": 30,
//                 "clock_offset": 0,
//                 "noise": { "sigma0": 0.01, "k_quad": 0.0035,
//                            "jitter_t": 0.005, "seed": 1 } }],
//   "walkers": [{ "id": "W1", "waypoints": [[t, x, y], ...] }],
//   "occluders": [{ "min": [x, y], "max": [x, y] }]
// }
//
// Only duration, cameras[].id/position/yaw_deg and walkers[].id/waypoints
// are required. A camera without noise.seed gets seed + its index.

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError("scenario: missing field '" + path + key + "'");
  return obj.at(key);
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError("scenario: field '" + path + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError("scenario: field '" + path + "' must be finite");
  return d;
}

inline double number_or(const json& obj, const std::string& key, double fallback, const std::string& path) {
  return obj.contains(key) ? number(obj.at(key), path + key) : fallback;
}

inline UnifiedPoint point(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) throw ParseError("scenario: field '" + path + "' must be [x, y]");
  return {number(v[0], path + "[0]"), number(v[1], path + "[1]")};
}

inline std::string text(const json& v, const std::string& path) {
  if (!v.is_string() || v.get<std::string>().empty())
    throw ParseError("scenario: field '" + path + "' must be a non-empty string");
  return v.get<std::string>();
}

inline json num(double v) { return round_9(v); }

inline json pt(const UnifiedPoint& p) { return json::array({num(p.x), num(p.y)}); }

inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::require;
  Scenario sc;
  sc.duration = detail::number(require(j, "duration", ""), "duration");
  std::uint64_t base_seed = 0;
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ParseError("scenario: field 'seed' must be a non-negative integer");
    base_seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("datum_offset")) sc.datum_offset = detail::point(j.at("datum_offset"), "datum_offset");

  const auto& cams = require(j, "cameras", "");
  if (!cams.is_array()) throw ParseError("scenario: field 'cameras' must be an array");
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const auto& c = cams[i];
    const std::string path = "cameras[" + std::to_string(i) + "].";
    CameraModel cam;
    cam.camera_id = detail::text(require(c, "id", path), path + "id");
    cam.position = detail::point(require(c, "position", path), path + "position");
    cam.yaw = deg_to_rad(detail::number(require(c, "yaw_deg", path), path + "yaw_deg"));
    cam.fov_h = deg_to_rad(detail::number_or(c, "fov_deg", 60.0, path));
    if (c.contains("range")) {
      const auto r = detail::point(c.at("range"), path + "range");
      cam.range_min = r.x;
      cam.range_max = r.y;
    }
    cam.sample_rate = detail::number_or(c, "sample_rate", cam.sample_rate, path);
    cam.clock_offset = detail::number_or(c, "clock_offset", 0.0, path);
    cam.noise.seed = base_seed + i;
    if (c.contains("noise")) {
      const auto& n = c.at("noise");
      const std::string np = path + "noise.";
      cam.noise.sigma0 = detail::number_or(n, "sigma0", cam.noise.sigma0, np);
      cam.noise.k_quad = detail::number_or(n, "k_quad", cam.noise.k_quad, np);
      cam.noise.jitter_t = detail::number_or(n, "jitter_t", cam.noise.jitter_t, np);
      if (n.contains("seed")) {
        if (!n.at("seed").is_number_unsigned())
          throw ParseError("scenario: field '" + np + "seed' must be a non-negative integer");
        cam.noise.seed = n.at("seed").get<std::uint64_t>();
      }
    }
    sc.cameras.push_back(std::move(cam));
  }

  const auto& walkers = require(j, "walkers", "");
  if (!walkers.is_array()) throw ParseError("scenario: field 'walkers' must be an array");
  for (std::size_t i = 0; i < walkers.size(); ++i) {
    const auto& w = walkers[i];
    const std::string path = "walkers[" + std::to_string(i) + "].";
    WalkerPath walker;
    walker.walker_id = detail::text(require(w, "id", path), path + "id");
    const auto& wps = require(w, "waypoints", path);
    if (!wps.is_array()) throw ParseError("scenario: field '" + path + "waypoints' must be an array");
    for (std::size_t k = 0; k < wps.size(); ++k) {
      const std::string wp = path + "waypoints[" + std::to_string(k) + "]";
      if (!wps[k].is_array() || wps[k].size() != 3) throw ParseError("scenario: field '" + wp + "' must be [t, x, y]");
      walker.waypoints.push_back(
          {detail::number(wps[k][0], wp), {detail::number(wps[k][1], wp), detail::number(wps[k][2], wp)}});
    }
    sc.walkers.push_back(std::move(walker));
  }

  if (j.contains("occluders")) {
    const auto& occ = j.at("occluders");
    if (!occ.is_array()) throw ParseError("scenario: field 'occluders' must be an array");
    for (std::size_t i = 0; i < occ.size(); ++i) {
      const std::string path = "occluders[" + std::to_string(i) + "].";
      sc.occluders.push_back({detail::point(require(occ[i], "min", path), path + "min"),
                              detail::point(require(occ[i], "max", path), path + "max")});
    }
  }
  sc.validate();
  return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  using detail::num;
  using detail::pt;
  nlohmann::json j;
  j["duration"] = num(sc.duration);
  if (sc.datum_offset) j["datum_offset"] = pt(*sc.datum_offset);
  j["cameras"] = nlohmann::json::array();
  for (const auto& c : sc.cameras) {
    j["cameras"].push_back({{"id", c.camera_id},
                            {"position", pt(c.position)},
                            {"yaw_deg", num(detail::rad_to_deg(c.yaw))},
                            {"fov_deg", num(detail::rad_to_deg(c.fov_h))},
                            {"range", nlohmann::json::array({num(c.range_min), num(c.range_max)})},
                            {"sample_rate", num(c.sample_rate)},
                            {"clock_offset", num(c.clock_offset)},
                            {"noise",
                             {{"sigma0", num(c.noise.sigma0)},
                              {"k_quad", num(c.noise.k_quad)},
                              {"jitter_t", num(c.noise.jitter_t)},
                              {"seed", c.noise.seed}}}});
  }
  j["walkers"] = nlohmann::json::array();
  for (const auto& w : sc.walkers) {
    auto wps = nlohmann::json::array();
    for (const auto& p : w.waypoints) wps.push_back({num(p.t), num(p.pos.x), num(p.pos.y)});
    j["walkers"].push_back({{"id", w.walker_id}, {"waypoints", wps}});
  }
  if (!sc.occluders.empty()) {
    j["occluders"] = nlohmann::json::array();
    for (const auto& o : sc.occluders) j["occluders"].push_back({{"min", pt(o.min)}, {"max", pt(o.max)}});
  }
  return j;
}

inline Scenario read_scenario(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  return scenario_from_json(j);
}

inline void write_scenario(std::ostream& out, const Scenario& sc) { out << scenario_to_json(sc).dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// Pipeline configuration (JSON)
//
// { "threshold": 5, "max_pair_dt": 0.7071, "d_max": 2,
//   "quality_anchor": "points_and_barycenter" | "barycenter" | "points",
//   "calibrations": { "K1": "K1.cal", ... },
//   "datum_offset": [x, y] }
//
// Every field is optional.

struct PipelineConfig {
  MergeConfig merge;
  QualityAnchor anchor = QualityAnchor::PointsAndBarycenter;
  std::map<std::string, std::string> calibrations;  ///< camera id -> calibration file
  std::optional<UnifiedPoint> datum_offset;
};

inline QualityAnchor parse_quality_anchor(std::string_view s) {
  if (s == "points_and_barycenter") return QualityAnchor::PointsAndBarycenter;
  if (s == "barycenter") return QualityAnchor::BarycenterOnly;
  if (s == "points") return QualityAnchor::PointsOnly;
  throw ParseError("unknown quality anchor '" + std::string(s) + "'");
}

inline const char* to_string(QualityAnchor a) {
  switch (a) {
    case QualityAnchor::PointsAndBarycenter: return "points_and_barycenter";
    case QualityAnchor::BarycenterOnly: return "barycenter";
    case QualityAnchor::PointsOnly: return "points";
  }
  return "points_and_barycenter";
}

inline PipelineConfig read_pipeline_config(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config: top level must be an object");
  PipelineConfig cfg;
  auto field = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ParseError(std::string("config: field '") + key + "' must be a number");
    return j.at(key).get<double>();
  };
  cfg.merge.threshold = field("threshold", cfg.merge.threshold);
  cfg.merge.max_pair_dt = field("max_pair_dt", cfg.merge.max_pair_dt);
  cfg.merge.d_max = field("d_max", cfg.merge.d_max);
  try {
    cfg.merge.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (j.contains("quality_anchor")) {
    if (!j.at("quality_anchor").is_string()) throw ParseError("config: field 'quality_anchor' must be a string");
    cfg.anchor = parse_quality_anchor(j.at("quality_anchor").get<std::string>());
  }
  if (j.contains("calibrations")) {
    const auto& c = j.at("calibrations");
    if (!c.is_object()) throw ParseError("config: field 'calibrations' must be an object");
    for (const auto& [cam, path] : c.items()) {
      if (!path.is_string()) throw ParseError("config: calibrations." + cam + " must be a path string");
      cfg.calibrations[cam] = path.get<std::string>();
    }
  }
  if (j.contains("datum_offset")) {
    try {
      cfg.datum_offset = detail::point(j.at("datum_offset"), "datum_offset");
    } catch (const ParseError&) {
      throw ParseError("config: field 'datum_offset' must be [x, y]");
    }
  }
  return cfg;
}

}  // namespace trajfuse::io

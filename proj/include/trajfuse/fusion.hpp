#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "trajfuse/calibration.hpp"
#include "trajfuse/errors.hpp"
#include "trajfuse/geometry.hpp"

namespace trajfuse {

/// One center-of-mass measurement from one camera.
struct Detection {
  std::string camera_id;
  double t = 0.0;
  CameraPoint pos_cam;
  std::optional<std::string> person_hint;
  /// Height above floor if the source reported one. Carried, never used.
  std::optional<double> vertical;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// A detection projected into the unified landmark with its measurement quality.
struct Sample {
  double t = 0.0;
  UnifiedPoint pos;
  double quality = 0.0;
  std::string source_camera;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Track {
  std::string track_id;
  std::vector<Sample> samples;
  std::set<std::string> contributing_cameras;

  friend bool operator==(const Track&, const Track&) = default;
};

struct PairedSample {
  Sample a;
  Sample b;
  double delta_t = 0.0;
  double d = 0.0;
  double Q = 0.0;  ///< quality factor of the association
  double D = 0.0;  ///< distance factor, may be negative
  double C = 0.0;  ///< D * Q
};

struct CorrelationReport {
  std::pair<std::string, std::string> track_pair;
  double C = 0.0;
  std::vector<PairedSample> pairs;

  std::size_t n_pairs() const noexcept { return pairs.size(); }
  /// Diagnostic only; matching decisions use the raw sum.
  double mean_C() const noexcept { return pairs.empty() ? 0.0 : C / static_cast<double>(pairs.size()); }
};

/// Time gap at which the time quality term reaches zero, 1/sqrt(2) s.
inline constexpr double kZeroTimeQualityDt = std::numbers::sqrt2 / 2.0;

struct MergeConfig {
  double threshold = 5.0;
  double max_pair_dt = kZeroTimeQualityDt;
  double d_max = kDefaultDMax;

  void validate() const {
    if (!std::isfinite(threshold)) throw InvalidInput("MergeConfig: threshold must be finite");
    if (!std::isfinite(max_pair_dt) || max_pair_dt <= 0.0)
      throw InvalidInput("MergeConfig: max_pair_dt must be positive");
    if (!std::isfinite(d_max) || d_max <= 0.0) throw InvalidInput("MergeConfig: d_max must be positive");
  }
};

// ---------------------------------------------------------------------------
// Quality and correlation terms

/// 1 - min(d, d_max) / d_max where d is the distance to the calibration anchors.
inline double quality_measure(const CameraCalibration& cal, const UnifiedPoint& p,
                              QualityAnchor anchor = QualityAnchor::PointsAndBarycenter) {
  const double d = quality_distance(cal, p, anchor);
  const double d_max = cal.d_max();
  return 1.0 - std::min(d, d_max) / d_max;
}

inline double quality_time(double delta_t) {
  if (!std::isfinite(delta_t) || delta_t < 0.0) {
    throw InvalidInput("quality_time: delta_t must be finite and non-negative");
  }
  const double q = 1.0 - 2.0 * delta_t * delta_t;
  // Inputs rounding to 1/sqrt(2) from either side land exactly on zero.
  return q <= 4.0 * std::numeric_limits<double>::epsilon() ? 0.0 : q;
}

inline PairedSample sample_correlation(const Sample& a, const Sample& b) {
  if (a.source_camera == b.source_camera) {
    throw InvalidInput("sample_correlation: both samples come from camera '" + a.source_camera + "'");
  }
  PairedSample ps;
  ps.a = a;
  ps.b = b;
  ps.delta_t = std::abs(a.t - b.t);
  ps.d = distance(a.pos, b.pos);
  ps.Q = a.quality * b.quality * quality_time(ps.delta_t);
  ps.D = 1.0 - ps.d * ps.d;
  ps.C = ps.D * ps.Q;
  return ps;
}

// ---------------------------------------------------------------------------
// Tracks

/// Groups one camera's detections into tracks by person hint, projects them
/// and attaches the measurement quality. Track ids are "<camera>/<hint>";
/// detections without a hint share the hint "_". Samples are attributed to
/// the calibration's camera, whose frame they were measured in.
inline std::vector<Track> build_tracks(const CameraCalibration& cal, std::span<const Detection> detections,
                                       QualityAnchor anchor = QualityAnchor::PointsAndBarycenter) {
  std::map<std::string, std::vector<Sample>> by_hint;
  for (const auto& det : detections) {
    if (!std::isfinite(det.t)) throw InvalidInput("build_tracks: non-finite timestamp");
    const UnifiedPoint pos = project(cal, det.pos_cam);
    by_hint[det.person_hint.value_or("_")].push_back(
        {det.t, pos, quality_measure(cal, pos, anchor), cal.camera_id()});
  }
  std::vector<Track> tracks;
  tracks.reserve(by_hint.size());
  for (auto& [hint, samples] : by_hint) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const Sample& a, const Sample& b) { return a.t < b.t; });
    Track track;
    track.track_id = cal.camera_id() + "/" + hint;
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (samples[i].t == samples[i - 1].t) {
        throw InvalidInput("build_tracks: duplicate timestamp in track " + track.track_id);
      }
    }
    track.samples = std::move(samples);
    track.contributing_cameras.insert(cal.camera_id());
    tracks.push_back(std::move(track));
  }
  return tracks;
}

namespace detail {

/// Index pairs (into ta, into tb) chosen by the nearest-in-time greedy rule,
/// ordered by the ta index.
inline std::vector<std::pair<std::size_t, std::size_t>> pair_indices(const Track& ta, const Track& tb,
                                                                     double max_dt) {
  const bool a_drives = ta.samples.size() <= tb.samples.size();
  const auto& drv = a_drives ? ta.samples : tb.samples;
  const auto& oth = a_drives ? tb.samples : ta.samples;

  struct Edge {
    double dt;
    double ta_t;
    double tb_t;
    std::size_t ia;
    std::size_t ib;
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < drv.size(); ++i) {
    const double t = drv[i].t;
    auto lo = std::lower_bound(oth.begin(), oth.end(), t - max_dt,
                               [](const Sample& s, double v) { return s.t < v; });
    for (auto it = lo; it != oth.end() && it->t <= t + max_dt; ++it) {
      const double dt = std::abs(it->t - t);
      if (dt > max_dt) continue;
      const auto j = static_cast<std::size_t>(it - oth.begin());
      const std::size_t ia = a_drives ? i : j;
      const std::size_t ib = a_drives ? j : i;
      edges.push_back({dt, ta.samples[ia].t, tb.samples[ib].t, ia, ib});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.dt, x.ta_t, x.tb_t) < std::tie(y.dt, y.ta_t, y.tb_t);
  });

  std::vector<bool> used_a(ta.samples.size(), false);
  std::vector<bool> used_b(tb.samples.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : edges) {
    if (used_a[e.ia] || used_b[e.ib]) continue;
    used_a[e.ia] = used_b[e.ib] = true;
    out.emplace_back(e.ia, e.ib);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Pairs samples of two tracks: every sample of the shorter track takes its
/// nearest-in-time partner within `max_pair_dt`, accepted greedily by
/// ascending gap (ties: earlier ta sample, then earlier tb sample). Each
/// sample is used at most once. `a` of every pair comes from `ta`.
inline std::vector<PairedSample> pair_samples(const Track& ta, const Track& tb, const MergeConfig& cfg) {
  std::vector<PairedSample> out;
  for (const auto& [ia, ib] : detail::pair_indices(ta, tb, cfg.max_pair_dt)) {
    out.push_back(sample_correlation(ta.samples[ia], tb.samples[ib]));
  }
  return out;
}

inline CorrelationReport trajectory_correlation(const Track& ta, const Track& tb, const MergeConfig& cfg) {
  CorrelationReport report;
  report.track_pair = {ta.track_id, tb.track_id};
  report.pairs = pair_samples(ta, tb, cfg);
  for (const auto& p : report.pairs) report.C += p.C;
  return report;
}

// ---------------------------------------------------------------------------
// Matching and merging

using TracksByCamera = std::map<std::string, std::vector<Track>>;

enum class MatchDecision {
  Accepted,
  BelowThreshold,
  Superseded,  ///< above threshold but a higher correlation claimed a track first
};

inline const char* to_string(MatchDecision d) {
  switch (d) {
    case MatchDecision::Accepted: return "accepted";
    case MatchDecision::BelowThreshold: return "below_threshold";
    case MatchDecision::Superseded: return "superseded";
  }
  return "unknown";
}

struct CandidatePair {
  std::string camera_a;
  std::string camera_b;
  CorrelationReport report;
  MatchDecision decision = MatchDecision::BelowThreshold;
};

struct Match {
  std::string track_a;
  std::string track_b;
  double C = 0.0;
};

struct MatchResult {
  std::vector<Match> matches;            ///< in acceptance order (descending C)
  std::vector<CandidatePair> candidates;  ///< every cross-camera pair
};

/// Decides scored candidates in place: those below `threshold` are
/// rejected, the rest accepted greedily by descending C (ties keep input
/// order) unless one of their tracks is already matched against the other
/// track's camera. Returns the accepted matches in acceptance order.
inline std::vector<Match> assign_matches(std::vector<CandidatePair>& candidates, double threshold) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    candidates[i].decision = MatchDecision::BelowThreshold;
    if (candidates[i].report.C >= threshold) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return candidates[x].report.C > candidates[y].report.C;
  });

  // (track id, other camera) already claimed
  std::set<std::pair<std::string, std::string>> claimed;
  std::vector<Match> matches;
  for (std::size_t idx : order) {
    auto& cand = candidates[idx];
    const auto& [id_a, id_b] = cand.report.track_pair;
    if (claimed.contains({id_a, cand.camera_b}) || claimed.contains({id_b, cand.camera_a})) {
      cand.decision = MatchDecision::Superseded;
      continue;
    }
    claimed.insert({id_a, cand.camera_b});
    claimed.insert({id_b, cand.camera_a});
    cand.decision = MatchDecision::Accepted;
    matches.push_back({id_a, id_b, cand.report.C});
  }
  return matches;
}

/// Scores every cross-camera track pair and decides them with
/// assign_matches(). Candidates are listed camera pair by camera pair in
/// map order.
inline MatchResult match_tracks(const TracksByCamera& tracks_by_camera, const MergeConfig& cfg) {
  cfg.validate();
  MatchResult result;
  for (auto ia = tracks_by_camera.begin(); ia != tracks_by_camera.end(); ++ia) {
    for (auto ib = std::next(ia); ib != tracks_by_camera.end(); ++ib) {
      for (const auto& ta : ia->second) {
        for (const auto& tb : ib->second) {
          result.candidates.push_back(
              {ia->first, ib->first, trajectory_correlation(ta, tb, cfg), MatchDecision::BelowThreshold});
        }
      }
    }
  }
  result.matches = assign_matches(result.candidates, cfg.threshold);
  return result;
}

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  /// Attaches the root of `b` under the root of `a`.
  void unite(std::size_t a, std::size_t b) { parent_[find(b)] = find(a); }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// Fuses matched tracks. Matches are closed transitively; within each group
/// of tracks, samples paired along the match edges collapse into one sample
/// at the earliest member's timestamp with the quality-weighted mean
/// position and the best member quality. Unpaired samples pass through and
/// unmatched tracks are returned unchanged. Output order follows the first
/// appearance of each group in `tracks_by_camera`.
inline std::vector<Track> merge_tracks(const TracksByCamera& tracks_by_camera, std::span<const Match> matches,
                                       const MergeConfig& cfg) {
  std::vector<const Track*> tracks;
  std::map<std::string, std::size_t> index_of;
  for (const auto& [camera, list] : tracks_by_camera) {
    for (const auto& t : list) {
      if (!index_of.emplace(t.track_id, tracks.size()).second) {
        throw InvalidInput("merge_tracks: duplicate track id '" + t.track_id + "'");
      }
      tracks.push_back(&t);
    }
  }
  auto lookup = [&](const std::string& id) {
    auto it = index_of.find(id);
    if (it == index_of.end()) throw InvalidInput("merge_tracks: unknown track id '" + id + "'");
    return it->second;
  };

  const std::size_t n = tracks.size();
  detail::DisjointSets track_sets(n);
  std::vector<std::set<std::string>> cameras(n);
  for (std::size_t i = 0; i < n; ++i) cameras[i] = tracks[i]->contributing_cameras;

  std::vector<std::size_t> offset(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offset[i + 1] = offset[i] + tracks[i]->samples.size();
  detail::DisjointSets sample_sets(offset[n]);

  for (const auto& m : matches) {
    const std::size_t a = lookup(m.track_a);
    const std::size_t b = lookup(m.track_b);
    const std::size_t ra = track_sets.find(a);
    const std::size_t rb = track_sets.find(b);
    if (ra == rb) continue;  // closes a cycle; the group is already joined
    for (const auto& cam : cameras[rb]) {
      if (cameras[ra].contains(cam)) {
        throw ConflictingMatch("merge_tracks: matching " + m.track_a + " with " + m.track_b +
                               " would fuse two tracks of camera '" + cam + "'");
      }
    }
    cameras[ra].insert(cameras[rb].begin(), cameras[rb].end());
    track_sets.unite(ra, rb);
    for (const auto& [ia, ib] : detail::pair_indices(*tracks[a], *tracks[b], cfg.max_pair_dt)) {
      sample_sets.unite(offset[a] + ia, offset[b] + ib);
    }
  }

  std::vector<std::size_t> group_order;
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = track_sets.find(i);
    if (!members.contains(root)) group_order.push_back(root);
    members[root].push_back(i);
  }

  std::vector<Track> fused;
  fused.reserve(group_order.size());
  for (std::size_t root : group_order) {
    const auto& group = members[root];
    if (group.size() == 1) {
      fused.push_back(*tracks[group.front()]);
      continue;
    }
    Track out;
    for (std::size_t k = 0; k < group.size(); ++k) {
      out.track_id += (k ? "+" : "") + tracks[group[k]]->track_id;
      out.contributing_cameras.insert(tracks[group[k]]->contributing_cameras.begin(),
                                      tracks[group[k]]->contributing_cameras.end());
    }

    std::map<std::size_t, std::vector<const Sample*>> by_sample_root;
    std::vector<std::size_t> sample_order;
    for (std::size_t ti : group) {
      for (std::size_t si = 0; si < tracks[ti]->samples.size(); ++si) {
        const std::size_t r = sample_sets.find(offset[ti] + si);
        if (!by_sample_root.contains(r)) sample_order.push_back(r);
        by_sample_root[r].push_back(&tracks[ti]->samples[si]);
      }
    }
    for (std::size_t r : sample_order) {
      const auto& grp = by_sample_root[r];
      const Sample* earliest = grp.front();
      double wsum = 0.0, wx = 0.0, wy = 0.0, sx = 0.0, sy = 0.0, best_q = 0.0;
      for (const Sample* s : grp) {
        if (s->t < earliest->t) earliest = s;
        wsum += s->quality;
        wx += s->quality * s->pos.x;
        wy += s->quality * s->pos.y;
        sx += s->pos.x;
        sy += s->pos.y;
        best_q = std::max(best_q, s->quality);
      }
      Sample merged = *earliest;
      if (wsum > 0.0) {
        merged.pos = {wx / wsum, wy / wsum};
      } else {
        const double k = static_cast<double>(grp.size());
        merged.pos = {sx / k, sy / k};
      }
      merged.quality = best_q;
      out.samples.push_back(std::move(merged));
    }
    std::stable_sort(out.samples.begin(), out.samples.end(), [](const Sample& a, const Sample& b) {
      return std::tie(a.t, a.source_camera) < std::tie(b.t, b.source_camera);
    });
    fused.push_back(std::move(out));
  }
  return fused;
}

}  // namespace trajfuse

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "bevtraj/assignment.hpp"
#include "bevtraj/detector.hpp"
#include "bevtraj/error.hpp"
#include "bevtraj/geometry.hpp"

namespace bevtraj {

struct TrackerConfig {
  double w_dist = 1.0;
  double w_color = 0.5;
  double w_aspect = 0.3;
  double gate_distance_px = 12.0;  // per elapsed frame
  int max_coast_frames = 2;
  int smoothing_window = 5;
  int ego_speed_window = 3;
  int landmark_max_gap = 1;

  void validate() const {
    if (w_dist < 0 || w_color < 0 || w_aspect < 0 || !(gate_distance_px > 0) || max_coast_frames < 0 ||
        smoothing_window < 1 || ego_speed_window < 1 || landmark_max_gap < 1)
      throw Error(ErrorCode::InvalidConfig, "tracker weights must be >= 0 and the gate > 0");
  }
};

/// Lights match only their own color; unknown matches any vehicle or unknown.
inline bool categories_compatible(Category a, Category b) {
  if (a == b) return true;
  const bool a_vehicular = is_vehicle(a) || a == Category::unknown;
  const bool b_vehicular = is_vehicle(b) || b == Category::unknown;
  return a_vehicular && b_vehicular && (a == Category::unknown || b == Category::unknown);
}

/// Cost of linking a to b, or nullopt when the pair is infeasible. The gate
/// scales with the number of frames between the two detections.
inline std::optional<double> pairwise_cost(const DetectedObject& a, const DetectedObject& b, const TrackerConfig& cfg,
                                           Category a_category) {
  if (!categories_compatible(a_category, b.category)) return std::nullopt;
  const int gap = std::max(1, b.frame_index - a.frame_index);
  const double gate = cfg.gate_distance_px * gap;
  const double dist = std::hypot(a.centroid.row - b.centroid.row, a.centroid.col - b.centroid.col);
  if (dist > gate) return std::nullopt;
  const double dr = double(a.mean_color.r) - b.mean_color.r;
  const double dg = double(a.mean_color.g) - b.mean_color.g;
  const double db = double(a.mean_color.b) - b.mean_color.b;
  const double color = std::sqrt(dr * dr + dg * dg + db * db) / (255.0 * std::sqrt(3.0));
  const double aspect = std::abs(std::log(a.aspect() / b.aspect()));
  return cfg.w_dist * (dist / gate) + cfg.w_color * color + cfg.w_aspect * aspect;
}

inline std::optional<double> pairwise_cost(const DetectedObject& a, const DetectedObject& b,
                                           const TrackerConfig& cfg) {
  return pairwise_cost(a, b, cfg, a.category);
}

/// Optimal one-to-one linking of prev to curr.
inline Assignment match_frames(const FrameDetections& prev, const FrameDetections& curr, const TrackerConfig& cfg) {
  CostMatrix cost(static_cast<int>(prev.size()), static_cast<int>(curr.size()));
  for (std::size_t i = 0; i < prev.size(); ++i)
    for (std::size_t j = 0; j < curr.size(); ++j)
      if (auto c = pairwise_cost(prev[i], curr[j], cfg)) cost(int(i), int(j)) = *c;
  return solve_assignment(cost);
}

struct Track {
  int track_id = 0;
  Category category = Category::unknown;
  bool is_ego = false;
  std::vector<DetectedObject> detections;
  // Per detection, relative to ego. Longitudinal is positive toward the image top.
  std::vector<double> speed_rel;
  std::vector<double> accel_rel;
  std::vector<double> speed_lat;

  int first_frame() const { return detections.front().frame_index; }
  int last_frame() const { return detections.back().frame_index; }
};

struct EgoSpeedSample {
  int frame = 0;
  double speed = 0.0;  // m/s
  std::vector<int> landmark_tracks;
};

struct EgoSpeedSeries {
  std::vector<EgoSpeedSample> samples;  // frame order; absent frames omitted

  const EgoSpeedSample* at(int frame) const {
    auto it = std::lower_bound(samples.begin(), samples.end(), frame,
                               [](const EgoSpeedSample& s, int f) { return s.frame < f; });
    return (it != samples.end() && it->frame == frame) ? &*it : nullptr;
  }
};

namespace detail {

/// Central differences (one-sided at the ends) of values over times.
inline std::vector<double> differentiate(const std::vector<double>& v, const std::vector<double>& t) {
  const std::size_t n = v.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    d[i] = (v[hi] - v[lo]) / (t[hi] - t[lo]);
  }
  return d;
}

/// Centered moving average, truncated at the ends.
inline std::vector<double> moving_average(const std::vector<double>& v, int window) {
  const int n = static_cast<int>(v.size());
  const int h = window / 2;
  std::vector<double> out(v.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - h), hi = std::min(n - 1, i + h);
    double s = 0;
    for (int k = lo; k <= hi; ++k) s += v[k];
    out[i] = s / (hi - lo + 1);
  }
  return out;
}

}  // namespace detail

struct Kinematics1D {
  std::vector<double> velocity;
  std::vector<double> acceleration;
};

/// Velocity and acceleration of a sampled coordinate: difference, then smooth.
inline Kinematics1D differentiate_smoothed(const std::vector<double>& pos, const std::vector<double>& times,
                                           int window) {
  Kinematics1D k;
  k.velocity = detail::moving_average(detail::differentiate(pos, times), window);
  k.acceleration = detail::moving_average(detail::differentiate(k.velocity, times), window);
  return k;
}

/// Fills speed_rel / accel_rel / speed_lat from the centroid series.
inline Track kinematics(Track track, double frame_rate, const Scales& scales, int window = 5) {
  if (track.detections.size() < 2)
    throw Error(ErrorCode::TrackTooShort, "track " + std::to_string(track.track_id) + " has < 2 detections");
  std::vector<double> lon, lat, times;
  for (const auto& d : track.detections) {
    lon.push_back(-d.centroid.row / scales.row);
    lat.push_back(-d.centroid.col / scales.col);
    times.push_back(d.frame_index / frame_rate);
  }
  const auto k_lon = differentiate_smoothed(lon, times, window);
  const auto k_lat = differentiate_smoothed(lat, times, window);
  track.speed_rel = k_lon.velocity;
  track.accel_rel = k_lon.acceleration;
  track.speed_lat = k_lat.velocity;
  return track;
}

/// Light detections whose centroid reflects the full landmark.
inline bool usable_landmark(const DetectedObject& d) { return is_light(d.category) && !d.touches_border; }

/// Ego speed from static landmarks: lights are fixed in the world, so their
/// image motion is the ego motion reversed.
inline EgoSpeedSeries estimate_ego_speed(const std::vector<Track>& light_tracks, double frame_rate,
                                         const Scales& scales, int max_gap_frames = 1, int window = 5) {
  struct Accum {
    double vr = 0, vc = 0;
    int n = 0;
    std::vector<int> ids;
  };
  std::map<int, Accum> per_frame;
  for (const auto& track : light_tracks) {
    if (!is_light(track.category)) continue;
    // Split into runs of usable detections without long gaps.
    std::vector<std::vector<const DetectedObject*>> runs;
    for (const auto& d : track.detections) {
      if (!usable_landmark(d)) {
        if (!runs.empty() && !runs.back().empty()) runs.emplace_back();
        continue;
      }
      if (runs.empty() || (!runs.back().empty() && d.frame_index - runs.back().back()->frame_index > max_gap_frames))
        runs.emplace_back();
      runs.back().push_back(&d);
    }
    for (const auto& run : runs) {
      if (run.size() < 2) continue;
      std::vector<double> rows, cols, times;
      for (const auto* d : run) {
        rows.push_back(d->centroid.row / scales.row);
        cols.push_back(d->centroid.col / scales.col);
        times.push_back(d->frame_index / frame_rate);
      }
      const auto kr = differentiate_smoothed(rows, times, window);
      const auto kc = differentiate_smoothed(cols, times, window);
      for (std::size_t i = 0; i < run.size(); ++i) {
        auto& acc = per_frame[run[i]->frame_index];
        acc.vr += kr.velocity[i];
        acc.vc += kc.velocity[i];
        acc.n += 1;
        acc.ids.push_back(track.track_id);
      }
    }
  }
  EgoSpeedSeries series;
  for (auto& [frame, acc] : per_frame)
    series.samples.push_back({frame, std::hypot(acc.vr / acc.n, acc.vc / acc.n), std::move(acc.ids)});
  return series;
}

struct TrackingResult {
  std::vector<Track> tracks;
  EgoSpeedSeries ego_speed;

  const Track* ego_track() const {
    for (const auto& t : tracks)
      if (t.is_ego) return &t;
    return nullptr;
  }
};

/// Links detections into persistent-ID tracks. frames[k] holds the detections
/// of frame k; `frame_rows`/`frame_cols` locate the image center for the ego seed.
inline TrackingResult track_video(const std::vector<FrameDetections>& frames, const TrackerConfig& cfg,
                                  double frame_rate, const Scales& scales, int frame_rows = 96, int frame_cols = 54) {
  cfg.validate();
  TrackingResult result;
  auto& tracks = result.tracks;
  std::vector<int> active;

  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& dets = frames[k];
    const int frame = static_cast<int>(k);
    CostMatrix cost(static_cast<int>(active.size()), static_cast<int>(dets.size()));
    for (std::size_t i = 0; i < active.size(); ++i) {
      const Track& tr = tracks[active[i]];
      for (std::size_t j = 0; j < dets.size(); ++j)
        if (auto c = pairwise_cost(tr.detections.back(), dets[j], cfg, tr.category)) cost(int(i), int(j)) = *c;
    }
    const Assignment asg = solve_assignment(cost);
    for (const auto& [i, j] : asg.pairs) {
      Track& tr = tracks[active[i]];
      if (tr.category == Category::unknown && is_vehicle(dets[j].category)) tr.category = dets[j].category;
      tr.detections.push_back(dets[j]);
    }
    for (int j : asg.unmatched_cols) {
      Track tr;
      tr.track_id = static_cast<int>(tracks.size());
      tr.category = dets[j].category;
      tr.detections.push_back(dets[j]);
      tracks.push_back(std::move(tr));
      active.push_back(tracks.back().track_id);
    }
    std::erase_if(active, [&](int id) { return frame - tracks[id].last_frame() > cfg.max_coast_frames; });
  }

  // Ego: the track holding, most often, the ego detection nearest the image center.
  std::map<int, int> votes;
  std::map<std::pair<int, int>, int> owner;  // (frame, index) -> track
  for (const auto& tr : tracks)
    for (const auto& d : tr.detections) owner[{d.frame_index, d.index}] = tr.track_id;
  for (const auto& dets : frames) {
    const DetectedObject* best = nullptr;
    double best_d = 1e300;
    for (const auto& d : dets) {
      if (d.category != Category::ego) continue;
      const double dist = std::hypot(d.centroid.row - 0.5 * frame_rows, d.centroid.col - 0.5 * frame_cols);
      if (dist < best_d) {
        best_d = dist;
        best = &d;
      }
    }
    if (best) ++votes[owner[{best->frame_index, best->index}]];
  }
  int ego_id = -1, ego_votes = 0;
  for (const auto& [id, n] : votes)
    if (n > ego_votes) {
      ego_votes = n;
      ego_id = id;
    }
  if (ego_id >= 0) tracks[ego_id].is_ego = true;

  std::vector<Track> lights;
  for (auto& tr : tracks) {
    if (tr.detections.size() >= 2) tr = kinematics(std::move(tr), frame_rate, scales, cfg.smoothing_window);
    if (is_light(tr.category)) lights.push_back(tr);
  }
  result.ego_speed = estimate_ego_speed(lights, frame_rate, scales, cfg.landmark_max_gap, cfg.ego_speed_window);
  return result;
}

}  // namespace bevtraj

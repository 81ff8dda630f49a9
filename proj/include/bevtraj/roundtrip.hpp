#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bevtraj/ground_truth.hpp"
#include "bevtraj/metrics.hpp"
#include "bevtraj/pipeline.hpp"
#include "bevtraj/rasterizer.hpp"
#include "bevtraj/synthetic_gen.hpp"

namespace bevtraj {

/// Sums that evaluate an extraction against ground truth. Merging is
/// associative, so scenes can be evaluated independently.
struct FidelityCounts {
  std::size_t scenes = 0;
  std::size_t frames = 0;
  std::size_t clean_objects = 0;  // fully visible, not under a light
  std::size_t clean_hits = 0;
  std::size_t lights_detected = 0;
  std::size_t lights_correct = 0;
  double centroid_error_sum = 0.0;
  std::size_t centroid_n = 0;
  std::size_t id_transitions = 0;
  std::size_t id_switches = 0;
  double speed_error_sum = 0.0;
  double accel_error_sum = 0.0;
  std::size_t kinematics_n = 0;
  double ego_speed_error_sum = 0.0;
  std::size_t ego_speed_n = 0;
  std::size_t occluded_frames = 0;
  std::size_t occluded_ok = 0;

  void merge(const FidelityCounts& o) {
    scenes += o.scenes;
    frames += o.frames;
    clean_objects += o.clean_objects;
    clean_hits += o.clean_hits;
    lights_detected += o.lights_detected;
    lights_correct += o.lights_correct;
    centroid_error_sum += o.centroid_error_sum;
    centroid_n += o.centroid_n;
    id_transitions += o.id_transitions;
    id_switches += o.id_switches;
    speed_error_sum += o.speed_error_sum;
    accel_error_sum += o.accel_error_sum;
    kinematics_n += o.kinematics_n;
    ego_speed_error_sum += o.ego_speed_error_sum;
    ego_speed_n += o.ego_speed_n;
    occluded_frames += o.occluded_frames;
    occluded_ok += o.occluded_ok;
  }

  static double ratio(double num, std::size_t den, double empty) { return den ? num / static_cast<double>(den) : empty; }
  double recall() const { return ratio(static_cast<double>(clean_hits), clean_objects, 1.0); }
  double light_accuracy() const { return ratio(static_cast<double>(lights_correct), lights_detected, 1.0); }
  double centroid_mae_m() const { return ratio(centroid_error_sum, centroid_n, 0.0); }
  double id_switch_rate() const { return ratio(static_cast<double>(id_switches), id_transitions, 0.0); }
  double speed_mae() const { return ratio(speed_error_sum, kinematics_n, 0.0); }
  double accel_mae() const { return ratio(accel_error_sum, kinematics_n, 0.0); }
  double ego_speed_mae() const { return ratio(ego_speed_error_sum, ego_speed_n, 0.0); }
  double occluded_detection_rate() const { return ratio(static_cast<double>(occluded_ok), occluded_frames, 1.0); }
};

struct MatchRadius {
  double meters = 1.0;
};

namespace detail {

/// Nearest detection (in meters) satisfying pred, within radius.
template <typename Pred>
const DetectedObject* nearest_detection(const FrameDetections& dets, PixelCoord at, const Scales& scales,
                                        double radius_m, Pred&& pred) {
  const DetectedObject* best = nullptr;
  double best_d = radius_m;
  for (const auto& d : dets) {
    if (!pred(d)) continue;
    const double dist = pixel_distance_m(d.centroid.row - at.row, d.centroid.col - at.col, scales);
    if (dist <= best_d) {
      best_d = dist;
      best = &d;
    }
  }
  return best;
}

}  // namespace detail

/// Scores one extracted video against its scene. Ground-truth object frames
/// count toward recall when the object is fully inside the frame and not
/// under a light; kinematics are scored away from track ends where the agent
/// stays fully visible for the whole smoothing neighbourhood.
inline FidelityCounts evaluate_extraction(const Scene& scene, const Extraction& ex, const GroundTruthExtraction& gt,
                                          const PipelineConfig& cfg, MatchRadius radius = {}) {
  FidelityCounts fc;
  fc.scenes = 1;
  fc.frames = ex.detections.size();
  const Scales scales = Scales::from(cfg.raster);
  const int n_frames = static_cast<int>(std::min(ex.detections.size(), gt.objects.size()));

  std::map<std::pair<int, int>, std::pair<int, int>> owner;  // (frame, det) -> (track, position)
  for (std::size_t k = 0; k < ex.tracking.tracks.size(); ++k) {
    const auto& tr = ex.tracking.tracks[k];
    for (std::size_t i = 0; i < tr.detections.size(); ++i)
      owner[{tr.detections[i].frame_index, tr.detections[i].index}] = {static_cast<int>(k), static_cast<int>(i)};
  }

  std::map<std::string, std::set<int>> visible;  // key -> frames fully inside
  for (int t = 0; t < n_frames; ++t)
    for (const auto& o : gt.objects[t])
      if (o.fully_inside) visible[o.key].insert(t);

  std::map<std::string, std::map<int, double>> rel_lon;
  for (const auto& a : scene.agents)
    if (!a.is_ego) rel_lon[a.agent_id] = relative_longitudinal(scene, a);
  const double fr = scene.frame_rate;
  auto gt_speed = [&](const std::map<int, double>& x, int t) -> std::optional<double> {
    auto lo = x.find(t - 1), hi = x.find(t + 1);
    if (lo == x.end() || hi == x.end()) return std::nullopt;
    return (hi->second - lo->second) * fr / 2.0;
  };

  std::map<std::string, std::vector<int>> track_sequence;  // key -> matched track per hit frame
  std::map<std::string, std::vector<int>> occluded_run;    // key -> consecutive occluded frames
  std::vector<std::pair<std::string, std::vector<int>>> occluded_runs;

  for (int t = 0; t < n_frames; ++t) {
    const auto& dets = ex.detections[t];
    std::set<int> used;
    for (const auto& o : gt.objects[t]) {
      const bool light = is_light(o.category);
      // Occlusion episodes: a vehicle fully inside the frame and under a light.
      if (!light) {
        auto& run = occluded_run[o.key];
        if (o.fully_inside && o.under_light) {
          run.push_back(t);
        } else if (!run.empty()) {
          occluded_runs.emplace_back(o.key, run);
          run.clear();
        }
      }
      if (!o.fully_inside || o.under_light) continue;
      ++fc.clean_objects;
      const auto* hit = detail::nearest_detection(dets, o.center, scales, radius.meters, [&](const DetectedObject& d) {
        return d.category == o.category && !used.contains(d.index);
      });
      if (light) {
        const auto* any = detail::nearest_detection(dets, o.center, scales, radius.meters,
                                                    [](const DetectedObject& d) { return is_light(d.source); });
        if (any) {
          ++fc.lights_detected;
          fc.lights_correct += any->category == o.category;
        }
      }
      if (!hit) continue;
      used.insert(hit->index);
      ++fc.clean_hits;
      fc.centroid_error_sum +=
          pixel_distance_m(hit->centroid.row - o.center.row, hit->centroid.col - o.center.col, scales);
      ++fc.centroid_n;
      auto own = owner.find({t, hit->index});
      if (own == owner.end()) continue;
      track_sequence[o.key].push_back(own->second.first);

      if (o.category != Category::agent) continue;
      const auto& tr = ex.tracking.tracks[own->second.first];
      const int i = own->second.second, n = static_cast<int>(tr.detections.size());
      if (tr.speed_rel.size() != tr.detections.size() || i < 2 || i + 2 >= n) continue;
      const auto& vis = visible[o.key];
      bool steady = true;
      for (int dt = -3; dt <= 3 && steady; ++dt) steady = vis.contains(t + dt);
      if (!steady) continue;
      const auto& x = rel_lon[o.source_id];
      const auto v0 = gt_speed(x, t), vm = gt_speed(x, t - 1), vp = gt_speed(x, t + 1);
      if (!v0 || !vm || !vp) continue;
      const double a0 = (*vp - *vm) * fr / 2.0;
      fc.speed_error_sum += std::abs(tr.speed_rel[i] - *v0);
      fc.accel_error_sum += std::abs(tr.accel_rel[i] - a0);
      ++fc.kinematics_n;
    }
  }
  for (auto& [key, run] : occluded_run)
    if (!run.empty()) occluded_runs.emplace_back(key, run);

  for (const auto& [key, seq] : track_sequence)
    for (std::size_t i = 1; i < seq.size(); ++i) {
      ++fc.id_transitions;
      fc.id_switches += seq[i] != seq[i - 1];
    }

  for (const auto& [key, run] : occluded_runs) {
    if (run.size() < 5) continue;
    for (int t : run) {
      const GroundTruthObject* o = nullptr;
      for (const auto& g : gt.objects[t])
        if (g.key == key) o = &g;
      if (!o) continue;
      ++fc.occluded_frames;
      const auto* hit = detail::nearest_detection(ex.detections[t], o->center, scales, radius.meters,
                                                  [&](const DetectedObject& d) { return d.category == o->category; });
      const double expected = static_cast<double>(o->pixels.size());
      if (hit && expected > 0 &&
          std::abs(static_cast<double>(hit->area_px) - expected) <= cfg.thresholds.occluded_area_tolerance * expected)
        ++fc.occluded_ok;
    }
  }

  const auto truth = true_ego_speed(scene);
  for (const auto& s : ex.tracking.ego_speed.samples) {
    if (s.frame < 0 || s.frame >= static_cast<int>(truth.size())) continue;
    fc.ego_speed_error_sum += std::abs(s.speed - truth[static_cast<std::size_t>(s.frame)]);
    ++fc.ego_speed_n;
  }
  return fc;
}

struct ThresholdCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool at_least = true;  // value must be >= threshold, else <=
  bool pass() const { return at_least ? value >= threshold : value <= threshold; }
};

inline std::vector<ThresholdCheck> check_thresholds(const FidelityCounts& c, const FidelityThresholds& t) {
  return {{"recall", c.recall(), t.recall_min, true},
          {"light_accuracy", c.light_accuracy(), t.light_accuracy_min, true},
          {"centroid_mae_m", c.centroid_mae_m(), t.centroid_mae_max_m, false},
          {"id_switch_rate", c.id_switch_rate(), t.id_switch_max, false},
          {"speed_mae_mps", c.speed_mae(), t.speed_mae_max, false},
          {"accel_mae_mps2", c.accel_mae(), t.accel_mae_max, false},
          {"ego_speed_mae_mps", c.ego_speed_mae(), t.ego_speed_mae_max, false},
          {"occluded_detection_rate", c.occluded_detection_rate(), t.occluded_detection_min, true}};
}

struct RoundTripResult {
  FidelityCounts counts;
  std::vector<ThresholdCheck> checks;
  CorpusSamples extracted;
  CorpusSamples truth;
  std::vector<std::string> scene_errors;

  bool pass() const {
    return scene_errors.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass(); });
  }
};

struct SceneRoundTrip {
  FidelityCounts counts;
  CorpusSamples extracted;
  CorpusSamples truth;
};

/// Rasterizes, extracts and scores one scene.
inline SceneRoundTrip roundtrip_scene(const Scene& scene, std::uint64_t color_seed, const PipelineConfig& cfg) {
  SceneRoundTrip out;
  RasterConfig raster = cfg.raster;
  raster.frame_rate = scene.frame_rate;
  const Video video = rasterize_scene(scene, raster, color_seed, cfg.colors);
  const Extraction ex = extract_video(video.frames, video.manifest, cfg.detector, cfg.tracker);
  const GroundTruthExtraction gt = ground_truth_extraction(scene, raster, cfg.detector, cfg.tracker);
  const Scales scales = Scales::from(raster);
  out.counts = evaluate_extraction(scene, ex, gt, cfg);
  out.extracted = collect_samples(ex.detections, ex.tracking, scales, raster.frame_rows);
  out.truth = collect_samples(gt.detections, gt.tracking, scales, raster.frame_rows);
  return out;
}

/// Runs n generated scenes (seeds params.seed + i) through the pipeline.
/// Results are merged in scene order regardless of `jobs`.
inline RoundTripResult run_roundtrip(const GenParams& params, int n_scenes, const PipelineConfig& cfg, int jobs = 1) {
  params.validate();
  cfg.validate();
  std::vector<SceneRoundTrip> per_scene(static_cast<std::size_t>(std::max(0, n_scenes)));
  std::vector<std::string> errors(per_scene.size());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n_scenes; i = next++) {
      try {
        GenParams p = params;
        p.seed = params.seed + static_cast<std::uint64_t>(i);
        p.frame_rate = cfg.raster.frame_rate;
        per_scene[i] = roundtrip_scene(generate_scene(p), p.seed, cfg);
      } catch (const std::exception& e) {
        errors[i] = "scene " + std::to_string(i) + ": " + e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min(jobs, n_scenes));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  RoundTripResult r;
  for (std::size_t i = 0; i < per_scene.size(); ++i) {
    if (!errors[i].empty()) {
      r.scene_errors.push_back(errors[i]);
      continue;
    }
    r.counts.merge(per_scene[i].counts);
    r.extracted.append(per_scene[i].extracted);
    r.truth.append(per_scene[i].truth);
  }
  r.checks = check_thresholds(r.counts, cfg.thresholds);
  return r;
}

inline nlohmann::json to_json(const RoundTripResult& r) {
  const auto& c = r.counts;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& k : r.checks)
    checks.push_back({{"name", k.name},
                      {"value", k.value},
                      {"threshold", k.threshold},
                      {"direction", k.at_least ? ">=" : "<="},
                      {"pass", k.pass()}});
  return {{"scenes", c.scenes},
          {"frames", c.frames},
          {"clean_object_frames", c.clean_objects},
          {"lights_detected", c.lights_detected},
          {"id_transitions", c.id_transitions},
          {"kinematics_samples", c.kinematics_n},
          {"ego_speed_samples", c.ego_speed_n},
          {"occluded_frames", c.occluded_frames},
          {"checks", checks},
          {"scene_errors", r.scene_errors},
          {"pass", r.pass()}};
}

}  // namespace bevtraj

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "bevtraj/detector.hpp"
#include "bevtraj/geometry.hpp"
#include "bevtraj/image.hpp"
#include "bevtraj/rasterizer.hpp"
#include "bevtraj/scene.hpp"
#include "bevtraj/tracker.hpp"

namespace bevtraj {

/// One scene object as it would appear in frame t, computed from geometry
/// alone with the rasterizer's coverage rule.
struct GroundTruthObject {
  std::string key;  // agent id, or light id plus the start of its current color run
  std::string source_id;
  Category category = Category::unknown;
  PixelCoord center;           // projected true center
  std::vector<Pixel> lattice;  // covered pixels, clipped to the frame
  std::vector<Pixel> pixels;   // lattice after the detector's opening
  bool fully_inside = false;
  bool under_light = false;  // lattice shares pixels with a lit light
};

inline Mask pixel_mask(const std::vector<Pixel>& pixels, int rows, int cols) {
  Mask m(rows, cols);
  for (const auto& p : pixels) m.set(p.row, p.col);
  return m;
}

inline std::vector<Pixel> mask_pixels(const Mask& m) {
  std::vector<Pixel> out;
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c)
      if (m.get(r, c)) out.push_back({r, c});
  return out;
}

/// Frame at which the light's current signal run began.
inline int color_run_start(const TrafficLightTrack& light, int t) {
  const auto s = light.at(t);
  int start = t;
  while (start > 0 && light.at(start - 1) == s) --start;
  return start;
}

inline std::vector<GroundTruthObject> ground_truth_frame(const Scene& scene, int t, const RasterConfig& cfg,
                                                         const DetectorConfig& dcfg) {
  std::vector<GroundTruthObject> out;
  const AgentTrack* ego_track = scene.ego();
  if (!ego_track || !ego_track->at(t)) return out;
  const Pose2D ego = ego_track->at(t)->center;
  const int rows = cfg.frame_rows, cols = cfg.frame_cols;
  auto inside = [&](PixelCoord p) { return p.row >= 0 && p.col >= 0 && p.row <= rows && p.col <= cols; };
  auto opened = [&](const std::vector<Pixel>& px) {
    return mask_pixels(morphological_open(pixel_mask(px, rows, cols), dcfg.opening_kernel, dcfg.opening_iterations));
  };

  Mask lit(rows, cols);
  for (const auto& light : scene.lights) {
    const auto s = light.at(t);
    if (!s || *s == Signal::unknown) continue;
    GroundTruthObject o;
    o.source_id = light.light_id;
    o.key = light.light_id + "@" + std::to_string(color_run_start(light, t));
    o.category = *s == Signal::red ? Category::light_red : *s == Signal::green ? Category::light_green
                                                                              : Category::light_yellow;
    o.center = world_to_image(ego, light.position, cfg);
    o.lattice = light_pixels(ego, light.position, cfg);
    o.pixels = opened(o.lattice);
    const double rr = 0.5 * cfg.light_diameter * cfg.scale_row(), rc = 0.5 * cfg.light_diameter * cfg.scale_col();
    o.fully_inside = inside({o.center.row - rr, o.center.col - rc}) && inside({o.center.row + rr, o.center.col + rc});
    for (const auto& p : o.lattice) lit.set(p.row, p.col);
    out.push_back(std::move(o));
  }
  for (const auto& agent : scene.agents) {
    const OrientedBox* box = agent.at(t);
    if (!box) continue;
    GroundTruthObject o;
    o.source_id = o.key = agent.agent_id;
    o.category = agent.is_ego ? Category::ego : Category::agent;
    o.center = world_to_image(ego, box->center.position(), cfg);
    o.lattice = box_pixels(ego, *box, cfg);
    o.pixels = opened(o.lattice);
    o.fully_inside = true;
    for (const auto& c : box->corners()) o.fully_inside = o.fully_inside && inside(world_to_image(ego, c, cfg));
    for (const auto& p : o.lattice) o.under_light = o.under_light || lit.get(p.row, p.col);
    out.push_back(std::move(o));
  }
  return out;
}

/// Detections an error-free detector would report for the given objects.
/// Returns, per object, the index of its largest component (or -1).
inline std::vector<int> ideal_detections(const std::vector<GroundTruthObject>& objects, int rows, int cols,
                                         const DetectorConfig& dcfg, const Scales& scales, int frame_index,
                                         FrameDetections& out) {
  std::vector<int> main_component(objects.size(), -1);
  for (std::size_t k = 0; k < objects.size(); ++k) {
    std::size_t best = 0;
    for (const auto& comp : extract_components(pixel_mask(objects[k].pixels, rows, cols), dcfg.min_component_px)) {
      auto obj = classify(shape_features(comp, rows, cols, scales), objects[k].category, dcfg);
      obj.frame_index = frame_index;
      obj.index = static_cast<int>(out.size());
      if (comp.size() > best) {
        best = comp.size();
        main_component[k] = obj.index;
      }
      out.push_back(std::move(obj));
    }
  }
  return main_component;
}

/// True ego speed per timestep from central differences of its positions.
inline std::vector<double> true_ego_speed(const Scene& scene) {
  std::vector<double> v(static_cast<std::size_t>(scene.num_timesteps), 0.0);
  const AgentTrack* ego = scene.ego();
  if (!ego || scene.num_timesteps < 2) return v;
  const int n = scene.num_timesteps;
  for (int t = 0; t < n; ++t) {
    const int lo = std::max(0, t - 1), hi = std::min(n - 1, t + 1);
    const auto a = ego->at(lo), b = ego->at(hi);
    if (!a || !b) continue;
    v[t] = norm(b->center.position() - a->center.position()) * scene.frame_rate / (hi - lo);
  }
  return v;
}

/// Relative longitudinal position of an agent in the ego frame, per timestep
/// where both exist.
inline std::map<int, double> relative_longitudinal(const Scene& scene, const AgentTrack& agent) {
  std::map<int, double> out;
  const AgentTrack* ego = scene.ego();
  if (!ego) return out;
  for (const auto& s : agent.states)
    if (const auto* e = ego->at(s.t)) out[s.t] = world_to_ego(e->center, s.box.center.position()).x;
  return out;
}

struct GroundTruthExtraction {
  std::vector<std::vector<GroundTruthObject>> objects;  // per frame
  std::vector<FrameDetections> detections;
  TrackingResult tracking;
};

/// Detections, identity-exact tracks and ego speed taken from the scene
/// itself. The ego speed is the true speed, reported on the frames where the
/// landmark estimator has usable lights.
inline GroundTruthExtraction ground_truth_extraction(const Scene& scene, const RasterConfig& cfg,
                                                     const DetectorConfig& dcfg, const TrackerConfig& tcfg) {
  GroundTruthExtraction gt;
  const Scales scales = Scales::from(cfg);
  std::map<std::string, Track> by_key;
  std::vector<std::string> key_order;
  for (int t = 0; t < scene.num_timesteps; ++t) {
    gt.objects.push_back(ground_truth_frame(scene, t, cfg, dcfg));
    FrameDetections dets;
    const auto main =
        ideal_detections(gt.objects.back(), cfg.frame_rows, cfg.frame_cols, dcfg, scales, t, dets);
    for (std::size_t k = 0; k < main.size(); ++k) {
      if (main[k] < 0) continue;
      const auto& o = gt.objects.back()[k];
      const auto& d = dets[static_cast<std::size_t>(main[k])];
      // A light track never changes category, so a clipped light that is
      // classified unknown starts a separate track, as it does in the tracker.
      const std::string key = is_light(o.category) ? o.key + "/" + std::string(to_string(d.category)) : o.key;
      auto [it, fresh] = by_key.try_emplace(key);
      Track& tr = it->second;
      if (fresh) {
        key_order.push_back(key);
        tr.category = d.category;
        tr.is_ego = o.category == Category::ego;
      } else if (tr.category == Category::unknown && is_vehicle(d.category)) {
        tr.category = d.category;
      }
      tr.detections.push_back(d);
    }
    gt.detections.push_back(std::move(dets));
  }
  std::vector<Track> lights;
  for (const auto& key : key_order) {
    Track tr = std::move(by_key[key]);
    tr.track_id = static_cast<int>(gt.tracking.tracks.size());
    if (tr.detections.size() >= 2) tr = kinematics(std::move(tr), scene.frame_rate, scales, tcfg.smoothing_window);
    if (is_light(tr.category)) lights.push_back(tr);
    gt.tracking.tracks.push_back(std::move(tr));
  }
  const auto presence = estimate_ego_speed(lights, scene.frame_rate, scales, tcfg.landmark_max_gap, tcfg.ego_speed_window);
  const auto truth = true_ego_speed(scene);
  for (auto s : presence.samples) {
    s.speed = truth[static_cast<std::size_t>(s.frame)];
    gt.tracking.ego_speed.samples.push_back(std::move(s));
  }
  return gt;
}

}  // namespace bevtraj

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevtraj/detector.hpp"
#include "bevtraj/error.hpp"
#include "bevtraj/metrics.hpp"
#include "bevtraj/rasterizer.hpp"
#include "bevtraj/tracker.hpp"
#include "bevtraj/video_io.hpp"

namespace bevtraj {

struct FidelityThresholds {
  double recall_min = 0.99;
  double light_accuracy_min = 1.0;
  double centroid_mae_max_m = 0.5;
  double id_switch_max = 0.01;
  double speed_mae_max = 0.5;
  double accel_mae_max = 1.0;
  double ego_speed_mae_max = 0.5;
  double occluded_detection_min = 0.95;
  double occluded_area_tolerance = 0.15;
};

/// Every tunable default, grouped per stage.
struct PipelineConfig {
  RasterConfig raster;
  ColorPolicy colors;
  DetectorConfig detector;
  TrackerConfig tracker;
  MetricBins bins = default_metric_bins();
  FidelityThresholds thresholds;

  void validate() const {
    try {
      raster.validate();
    } catch (const std::invalid_argument& e) {
      throw Error(ErrorCode::InvalidConfig, e.what());
    }
    tracker.validate();
    if (detector.opening_kernel < 1 || detector.opening_kernel % 2 == 0 || detector.opening_iterations < 0)
      throw Error(ErrorCode::InvalidConfig, "opening kernel must be a positive odd size");
    if (!(detector.light_area.max_m2 >= detector.light_area.min_m2) ||
        !(detector.vehicle_area.max_m2 >= detector.vehicle_area.min_m2))
      throw Error(ErrorCode::InvalidConfig, "area ranges must have max >= min");
    for (const auto& [name, spec] : bins) {
      try {
        (void)spec.edges();
      } catch (const Error& e) {
        throw Error(ErrorCode::InvalidConfig, "metric " + name + ": " + e.what());
      }
    }
    if (allowed_hues(colors).empty()) throw Error(ErrorCode::InvalidConfig, "color policy leaves no agent hues");
  }
};

namespace detail {

inline HsvBand band_from_json(const nlohmann::json& j, HsvBand b) {
  if (j.contains("hue")) b.hue = {j["hue"].at(0).get<double>(), j["hue"].at(1).get<double>()};
  if (j.contains("saturation")) {
    b.sat_min = j["saturation"].at(0).get<double>();
    b.sat_max = j["saturation"].at(1).get<double>();
  }
  if (j.contains("value")) {
    b.val_min = j["value"].at(0).get<double>();
    b.val_max = j["value"].at(1).get<double>();
  }
  return b;
}

inline AreaRange area_from_json(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

template <typename T>
void set_if(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j[key].get<T>();
}

}  // namespace detail

/// Overlays the sections present in j onto base. Unknown sections are errors.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig cfg = {}) {
  using detail::set_if;
  try {
    for (const auto& [key, _] : j.items())
      if (key != "raster" && key != "colors" && key != "detector" && key != "tracker" && key != "metrics" &&
          key != "thresholds" && key != "generator")
        throw Error(ErrorCode::InvalidConfig, "unknown config section '" + key + "'");
    if (j.contains("raster")) {
      const auto& r = j["raster"];
      set_if(r, "window_length_m", cfg.raster.window_length);
      set_if(r, "window_width_m", cfg.raster.window_width);
      set_if(r, "frame_rows", cfg.raster.frame_rows);
      set_if(r, "frame_cols", cfg.raster.frame_cols);
      set_if(r, "frame_rate_hz", cfg.raster.frame_rate);
      set_if(r, "lane_thickness_m", cfg.raster.lane_thickness);
      set_if(r, "light_diameter_m", cfg.raster.light_diameter);
    }
    if (j.contains("colors")) cfg.colors = color_policy_from_json(j["colors"], cfg.colors);
    if (j.contains("detector")) {
      const auto& d = j["detector"];
      auto& dc = cfg.detector;
      if (d.contains("red")) dc.red = detail::band_from_json(d["red"], dc.red);
      if (d.contains("yellow")) dc.yellow = detail::band_from_json(d["yellow"], dc.yellow);
      if (d.contains("green")) dc.green = detail::band_from_json(d["green"], dc.green);
      if (d.contains("ego")) dc.ego = detail::band_from_json(d["ego"], dc.ego);
      set_if(d, "agent_sat_min", dc.agent_sat_min);
      set_if(d, "agent_val_min", dc.agent_val_min);
      set_if(d, "opening_kernel", dc.opening_kernel);
      set_if(d, "opening_iterations", dc.opening_iterations);
      set_if(d, "min_component_px", dc.min_component_px);
      if (d.contains("light_area_m2")) dc.light_area = detail::area_from_json(d["light_area_m2"]);
      if (d.contains("vehicle_area_m2")) dc.vehicle_area = detail::area_from_json(d["vehicle_area_m2"]);
    }
    if (j.contains("tracker")) {
      const auto& t = j["tracker"];
      set_if(t, "w_dist", cfg.tracker.w_dist);
      set_if(t, "w_color", cfg.tracker.w_color);
      set_if(t, "w_aspect", cfg.tracker.w_aspect);
      set_if(t, "gate_distance_px", cfg.tracker.gate_distance_px);
      set_if(t, "max_coast_frames", cfg.tracker.max_coast_frames);
      set_if(t, "smoothing_window", cfg.tracker.smoothing_window);
      set_if(t, "ego_speed_window", cfg.tracker.ego_speed_window);
      set_if(t, "landmark_max_gap", cfg.tracker.landmark_max_gap);
    }
    if (j.contains("metrics")) {
      for (const auto& [name, spec] : j["metrics"].items()) {
        if (!cfg.bins.contains(name)) throw Error(ErrorCode::InvalidConfig, "unknown metric '" + name + "'");
        BinSpec& b = cfg.bins[name];
        set_if(spec, "lo", b.lo);
        set_if(spec, "hi", b.hi);
        set_if(spec, "width", b.width);
      }
    }
    if (j.contains("thresholds")) {
      const auto& t = j["thresholds"];
      auto& th = cfg.thresholds;
      set_if(t, "recall_min", th.recall_min);
      set_if(t, "light_accuracy_min", th.light_accuracy_min);
      set_if(t, "centroid_mae_max_m", th.centroid_mae_max_m);
      set_if(t, "id_switch_max", th.id_switch_max);
      set_if(t, "speed_mae_max", th.speed_mae_max);
      set_if(t, "accel_mae_max", th.accel_mae_max);
      set_if(t, "ego_speed_mae_max", th.ego_speed_mae_max);
      set_if(t, "occluded_detection_min", th.occluded_detection_min);
      set_if(t, "occluded_area_tolerance", th.occluded_area_tolerance);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
  }
}

struct Extraction {
  std::vector<FrameDetections> detections;
  TrackingResult tracking;
};

/// Per-video stage order: detect every frame, then track.
inline Extraction extract_video(const std::vector<Frame>& frames, const VideoManifest& manifest,
                                const DetectorConfig& dcfg, const TrackerConfig& tcfg) {
  Extraction ex;
  const Scales scales = manifest.scales;
  ex.detections.reserve(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k)
    ex.detections.push_back(detect_frame(frames[k], dcfg, scales, static_cast<int>(k)));
  ex.tracking = track_video(ex.detections, tcfg, manifest.frame_rate, scales, manifest.frame_rows,
                            manifest.frame_cols);
  return ex;
}

// ---- on-disk formats for extraction outputs ----

/// Row-run encoding: [[row, first_col, length], ...] over sorted pixels.
inline nlohmann::json encode_pixels(const std::vector<Pixel>& pixels) {
  nlohmann::json runs = nlohmann::json::array();
  std::size_t i = 0;
  while (i < pixels.size()) {
    std::size_t k = i + 1;
    while (k < pixels.size() && pixels[k].row == pixels[i].row && pixels[k].col == pixels[k - 1].col + 1) ++k;
    runs.push_back({pixels[i].row, pixels[i].col, k - i});
    i = k;
  }
  return runs;
}

inline std::vector<Pixel> decode_pixels(const nlohmann::json& runs) {
  std::vector<Pixel> out;
  for (const auto& r : runs) {
    const int row = r.at(0).get<int>(), col = r.at(1).get<int>(), len = r.at(2).get<int>();
    for (int k = 0; k < len; ++k) out.push_back({row, col + k});
  }
  return out;
}

inline nlohmann::json to_json(const DetectedObject& d) {
  return {{"frame_index", d.frame_index},
          {"index", d.index},
          {"category", to_string(d.category)},
          {"source", to_string(d.source)},
          {"centroid", {d.centroid.row, d.centroid.col}},
          {"area_px", d.area_px},
          {"area_m2", d.area_m2},
          {"mean_color", color_json(d.mean_color)},
          {"bbox", {d.bbox.row_min, d.bbox.col_min, d.bbox.row_max, d.bbox.col_max}},
          {"rectangularity", d.rectangularity},
          {"circularity", d.circularity},
          {"touches_border", d.touches_border},
          {"pixels", encode_pixels(d.pixels)}};
}

inline DetectedObject detection_from_json(const nlohmann::json& j) {
  DetectedObject d;
  d.frame_index = j.at("frame_index").get<int>();
  d.index = j.value("index", 0);
  d.category = category_from_string(j.at("category").get<std::string>());
  d.source = category_from_string(j.value("source", std::string("unknown")));
  d.centroid = {j.at("centroid").at(0).get<double>(), j.at("centroid").at(1).get<double>()};
  d.area_px = j.at("area_px").get<std::size_t>();
  d.area_m2 = j.at("area_m2").get<double>();
  d.mean_color = color_from_json(j.at("mean_color"));
  const auto& b = j.at("bbox");
  d.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
  d.rectangularity = j.value("rectangularity", 0.0);
  d.circularity = j.value("circularity", 0.0);
  d.touches_border = j.value("touches_border", false);
  d.pixels = decode_pixels(j.at("pixels"));
  return d;
}

/// One JSON object per line, frames in order.
inline std::string detections_jsonl(const std::vector<FrameDetections>& frames) {
  std::string out;
  for (const auto& f : frames)
    for (const auto& d : f) out += to_json(d).dump() + "\n";
  return out;
}

inline std::vector<FrameDetections> detections_from_jsonl(std::istream& in, int num_frames) {
  std::vector<FrameDetections> frames(static_cast<std::size_t>(std::max(0, num_frames)));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto d = detection_from_json(nlohmann::json::parse(line));
    if (d.frame_index < 0) throw Error(ErrorCode::Io, "negative frame index in detections");
    if (static_cast<std::size_t>(d.frame_index) >= frames.size()) frames.resize(d.frame_index + 1);
    frames[d.frame_index].push_back(std::move(d));
  }
  return frames;
}

/// Tracks reference detections by (frame_index, index).
inline nlohmann::json tracks_json(const TrackingResult& tr, const Scales& scales, int frame_rows, int frame_cols,
                                  int num_frames) {
  nlohmann::json tracks = nlohmann::json::array();
  for (const auto& t : tr.tracks) {
    nlohmann::json states = nlohmann::json::array();
    const bool kin = t.speed_rel.size() == t.detections.size();
    for (std::size_t i = 0; i < t.detections.size(); ++i) {
      const auto& d = t.detections[i];
      nlohmann::json s{{"frame", d.frame_index},
                       {"detection", d.index},
                       {"centroid_px", {d.centroid.row, d.centroid.col}},
                       {"centroid_m",
                        {(0.5 * frame_rows - d.centroid.row) / scales.row, (0.5 * frame_cols - d.centroid.col) / scales.col}},
                       {"area_m2", d.area_m2}};
      if (kin) {
        s["speed_rel_mps"] = t.speed_rel[i];
        s["accel_rel_mps2"] = t.accel_rel[i];
        s["speed_lat_mps"] = t.speed_lat[i];
      }
      states.push_back(std::move(s));
    }
    tracks.push_back({{"track_id", t.track_id},
                      {"category", to_string(t.category)},
                      {"is_ego", t.is_ego},
                      {"states", std::move(states)}});
  }
  nlohmann::json ego = nlohmann::json::array();
  for (const auto& s : tr.ego_speed.samples)
    ego.push_back({{"frame", s.frame}, {"speed_mps", s.speed}, {"landmark_tracks", s.landmark_tracks}});
  return {{"num_frames", num_frames},
          {"frame_px", {frame_rows, frame_cols}},
          {"scale_px_per_m", {scales.row, scales.col}},
          {"tracks", std::move(tracks)},
          {"ego_speed", std::move(ego)}};
}

/// Rebuilds a TrackingResult against already-loaded detections.
inline TrackingResult tracks_from_json(const nlohmann::json& j, const std::vector<FrameDetections>& frames) {
  TrackingResult tr;
  for (const auto& jt : j.at("tracks")) {
    Track t;
    t.track_id = jt.at("track_id").get<int>();
    t.category = category_from_string(jt.at("category").get<std::string>());
    t.is_ego = jt.value("is_ego", false);
    for (const auto& s : jt.at("states")) {
      const int f = s.at("frame").get<int>(), idx = s.at("detection").get<int>();
      if (f < 0 || static_cast<std::size_t>(f) >= frames.size() || idx < 0 ||
          static_cast<std::size_t>(idx) >= frames[f].size())
        throw Error(ErrorCode::Io, "track " + std::to_string(t.track_id) + " references a missing detection");
      t.detections.push_back(frames[f][idx]);
      if (s.contains("speed_rel_mps")) {
        t.speed_rel.push_back(s["speed_rel_mps"].get<double>());
        t.accel_rel.push_back(s.at("accel_rel_mps2").get<double>());
        t.speed_lat.push_back(s.at("speed_lat_mps").get<double>());
      }
    }
    tr.tracks.push_back(std::move(t));
  }
  for (const auto& s : j.at("ego_speed"))
    tr.ego_speed.samples.push_back(
        {s.at("frame").get<int>(), s.at("speed_mps").get<double>(), s.value("landmark_tracks", std::vector<int>{})});
  return tr;
}

}  // namespace bevtraj

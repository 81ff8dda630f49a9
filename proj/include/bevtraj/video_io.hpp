#pragma once

#include <png.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevtraj/error.hpp"
#include "bevtraj/image.hpp"
#include "bevtraj/rasterizer.hpp"

namespace bevtraj {

namespace fs = std::filesystem;

inline void write_png(const Frame& frame, const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.cols);
  image.height = static_cast<png_uint_32>(frame.rows);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, frame.pixels.data(), 0, nullptr))
    throw Error(ErrorCode::Io, "cannot write " + path.string() + ": " + image.message);
}

inline Frame read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw Error(ErrorCode::Io, "cannot read " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  Frame frame(static_cast<int>(image.height), static_cast<int>(image.width));
  if (!png_image_finish_read(&image, nullptr, frame.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::Io, "cannot decode " + path.string() + ": " + msg);
  }
  return frame;
}

inline nlohmann::json color_json(ColorRGB c) { return nlohmann::json::array({c.r, c.g, c.b}); }

inline ColorRGB color_from_json(const nlohmann::json& j) {
  return {j.at(0).get<std::uint8_t>(), j.at(1).get<std::uint8_t>(), j.at(2).get<std::uint8_t>()};
}

inline nlohmann::json to_json(const ColorPolicy& p) {
  return {{"background", color_json(p.background)},
          {"lane", color_json(p.lane)},
          {"ego", color_json(p.ego)},
          {"light_red", color_json(p.light_red)},
          {"light_green", color_json(p.light_green)},
          {"light_yellow", color_json(p.light_yellow)},
          {"sample_hue", {p.sample_hue.lo, p.sample_hue.hi}},
          {"saturation", {p.sat_min, p.sat_max}},
          {"value", {p.val_min, p.val_max}},
          {"light_hue_half_width", p.light_hue_half_width},
          {"hue_margin", p.hue_margin}};
}

/// Overlays the keys present in j onto p.
inline ColorPolicy color_policy_from_json(const nlohmann::json& j, ColorPolicy p = {}) {
  if (j.contains("background")) p.background = color_from_json(j["background"]);
  if (j.contains("lane")) p.lane = color_from_json(j["lane"]);
  if (j.contains("ego")) p.ego = color_from_json(j["ego"]);
  if (j.contains("light_red")) p.light_red = color_from_json(j["light_red"]);
  if (j.contains("light_green")) p.light_green = color_from_json(j["light_green"]);
  if (j.contains("light_yellow")) p.light_yellow = color_from_json(j["light_yellow"]);
  if (j.contains("sample_hue")) p.sample_hue = {j["sample_hue"].at(0).get<double>(), j["sample_hue"].at(1).get<double>()};
  if (j.contains("saturation")) {
    p.sat_min = j["saturation"].at(0).get<double>();
    p.sat_max = j["saturation"].at(1).get<double>();
  }
  if (j.contains("value")) {
    p.val_min = j["value"].at(0).get<double>();
    p.val_max = j["value"].at(1).get<double>();
  }
  if (j.contains("light_hue_half_width")) p.light_hue_half_width = j["light_hue_half_width"].get<double>();
  if (j.contains("hue_margin")) p.hue_margin = j["hue_margin"].get<double>();
  return p;
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json to_json(const VideoManifest& m) {
  return {{"frame_rate_hz", m.frame_rate},
          {"window_m", {m.window_length, m.window_width}},
          {"frame_px", {m.frame_rows, m.frame_cols}},
          {"scale_px_per_m", {m.scales.row, m.scales.col}},
          {"color_policy", to_json(m.color_policy)},
          {"source", m.source}};
}

inline VideoManifest manifest_from_json(const nlohmann::json& j) {
  try {
    VideoManifest m;
    m.frame_rate = j.value("frame_rate_hz", m.frame_rate);
    if (j.contains("window_m")) {
      m.window_length = j["window_m"].at(0).get<double>();
      m.window_width = j["window_m"].at(1).get<double>();
    }
    if (j.contains("frame_px")) {
      m.frame_rows = j["frame_px"].at(0).get<int>();
      m.frame_cols = j["frame_px"].at(1).get<int>();
    }
    m.scales = Scales::from(m.raster_config());
    if (j.contains("color_policy")) m.color_policy = color_policy_from_json(j["color_policy"]);
    m.source = j.value("source", m.source);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("malformed manifest: ") + e.what());
  }
}

inline std::string frame_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.png", index);
  return buf;
}

/// Writes manifest.json and one PNG per frame. The creation time is the only
/// field that varies between otherwise identical runs.
inline void save_video(const Video& video, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  auto j = to_json(video.manifest);
  j["num_frames"] = video.frames.size();
  j["created_utc"] = utc_now();
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error(ErrorCode::Io, "cannot write manifest in " + dir.string());
  out << j.dump(1) << "\n";
  for (std::size_t i = 0; i < video.frames.size(); ++i) write_png(video.frames[i], dir / frame_filename(i));
}

struct LoadedVideo {
  Video video;
  bool manifest_found = true;
};

/// Reads every frame_*.png in name order. Without a manifest the default
/// raster geometry is assumed and manifest_found is false.
inline LoadedVideo load_video(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
  LoadedVideo lv;
  const fs::path mpath = dir / "manifest.json";
  if (fs::exists(mpath)) {
    std::ifstream in(mpath);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Io, "malformed manifest " + mpath.string() + ": " + e.what());
    }
    lv.video.manifest = manifest_from_json(j);
  } else {
    lv.manifest_found = false;
    lv.video.manifest.source = dir.filename().string();
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.starts_with("frame_") && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    Frame frame = read_png(f);
    if (frame.rows != lv.video.manifest.frame_rows || frame.cols != lv.video.manifest.frame_cols)
      throw Error(ErrorCode::Io, f.string() + " does not match the manifest frame size");
    lv.video.frames.push_back(std::move(frame));
  }
  return lv;
}

}  // namespace bevtraj

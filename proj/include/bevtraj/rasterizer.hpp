#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bevtraj/color.hpp"
#include "bevtraj/error.hpp"
#include "bevtraj/geometry.hpp"
#include "bevtraj/image.hpp"
#include "bevtraj/scene.hpp"

namespace bevtraj {

// Pixel coverage predicates. A pixel is covered when its center lies inside
// the shape; there is no anti-aliasing.

template <typename Fn>
void for_each_pixel_in(int r0, int r1, int c0, int c1, int rows, int cols, Fn&& fn) {
  r0 = std::max(r0, 0);
  c0 = std::max(c0, 0);
  r1 = std::min(r1, rows - 1);
  c1 = std::min(c1, cols - 1);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) fn(r, c);
}

inline std::vector<Pixel> box_pixels(const Pose2D& ego, const OrientedBox& box, const RasterConfig& cfg) {
  double rmin = 1e300, rmax = -1e300, cmin = 1e300, cmax = -1e300;
  for (const auto& corner : box.corners()) {
    const auto px = world_to_image(ego, corner, cfg);
    rmin = std::min(rmin, px.row);
    rmax = std::max(rmax, px.row);
    cmin = std::min(cmin, px.col);
    cmax = std::max(cmax, px.col);
  }
  std::vector<Pixel> out;
  if (rmax < 0 || cmax < 0 || rmin > cfg.frame_rows || cmin > cfg.frame_cols) return out;
  for_each_pixel_in(static_cast<int>(std::floor(rmin)) - 1, static_cast<int>(std::ceil(rmax)),
                    static_cast<int>(std::floor(cmin)) - 1, static_cast<int>(std::ceil(cmax)), cfg.frame_rows,
                    cfg.frame_cols, [&](int r, int c) {
                      if (box.contains(image_to_world(ego, {r + 0.5, c + 0.5}, cfg))) out.push_back({r, c});
                    });
  return out;
}

/// A light is a circle in meters, i.e. an axis-aligned ellipse in pixels.
inline std::vector<Pixel> light_pixels(const Pose2D& ego, Vec2 position, const RasterConfig& cfg) {
  const auto center = world_to_image(ego, position, cfg);
  const double ry = 0.5 * cfg.light_diameter * cfg.scale_row();
  const double rx = 0.5 * cfg.light_diameter * cfg.scale_col();
  std::vector<Pixel> out;
  for_each_pixel_in(static_cast<int>(std::floor(center.row - ry)) - 1, static_cast<int>(std::ceil(center.row + ry)),
                    static_cast<int>(std::floor(center.col - rx)) - 1, static_cast<int>(std::ceil(center.col + rx)),
                    cfg.frame_rows, cfg.frame_cols, [&](int r, int c) {
                      const double dr = (r + 0.5 - center.row) / ry;
                      const double dc = (c + 0.5 - center.col) / rx;
                      if (dr * dr + dc * dc <= 1.0) out.push_back({r, c});
                    });
  return out;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

inline std::vector<Pixel> lane_pixels(const Pose2D& ego, const LanePolyline& lane, const RasterConfig& cfg) {
  Mask hit(cfg.frame_rows, cfg.frame_cols);
  const double half = 0.5 * cfg.lane_thickness;
  const double pad_r = half * cfg.scale_row() + 1, pad_c = half * cfg.scale_col() + 1;
  for (std::size_t i = 1; i < lane.points.size(); ++i) {
    const Vec2 a = lane.points[i - 1], b = lane.points[i];
    const auto pa = world_to_image(ego, a, cfg), pb = world_to_image(ego, b, cfg);
    const double rmin = std::min(pa.row, pb.row) - pad_r, rmax = std::max(pa.row, pb.row) + pad_r;
    const double cmin = std::min(pa.col, pb.col) - pad_c, cmax = std::max(pa.col, pb.col) + pad_c;
    if (rmax < 0 || cmax < 0 || rmin > cfg.frame_rows || cmin > cfg.frame_cols) continue;
    for_each_pixel_in(static_cast<int>(std::floor(rmin)), static_cast<int>(std::ceil(rmax)),
                      static_cast<int>(std::floor(cmin)), static_cast<int>(std::ceil(cmax)), cfg.frame_rows,
                      cfg.frame_cols, [&](int r, int c) {
                        if (hit.get(r, c)) return;
                        const Vec2 w = image_to_world(ego, {r + 0.5, c + 0.5}, cfg);
                        if (point_segment_distance(w, a, b) <= half) hit.set(r, c);
                      });
  }
  std::vector<Pixel> out;
  for (int r = 0; r < hit.rows; ++r)
    for (int c = 0; c < hit.cols; ++c)
      if (hit.get(r, c)) out.push_back({r, c});
  return out;
}

inline ColorRGB light_color(Signal s, const ColorPolicy& policy) {
  switch (s) {
    case Signal::red: return policy.light_red;
    case Signal::green: return policy.light_green;
    case Signal::yellow: return policy.light_yellow;
    case Signal::unknown: break;
  }
  return policy.background;
}

using ColorAssignment = std::map<std::string, ColorRGB>;

/// Draws one frame back to front: background, lanes, agents, ego, lights.
inline Frame render_frame(const Scene& scene, int t, const RasterConfig& cfg, const ColorPolicy& policy,
                          const ColorAssignment& colors) {
  if (t < 0 || t >= scene.num_timesteps) throw std::out_of_range("render_frame: timestep out of range");
  const AgentTrack* ego_track = scene.ego();
  if (!ego_track) throw Error(ErrorCode::InvalidScene, "scene has no ego track");
  const OrientedBox* ego_box = ego_track->at(t);
  if (!ego_box) throw Error(ErrorCode::InvalidScene, "ego missing at timestep " + std::to_string(t));
  const Pose2D ego = ego_box->center;

  Frame frame(cfg.frame_rows, cfg.frame_cols, policy.background);
  for (const auto& lane : scene.lanes)
    for (const auto& p : lane_pixels(ego, lane, cfg)) frame.set(p.row, p.col, policy.lane);

  for (const auto& agent : scene.agents) {
    if (agent.is_ego) continue;
    const OrientedBox* box = agent.at(t);
    if (!box) continue;
    auto it = colors.find(agent.agent_id);
    if (it == colors.end())
      throw Error(ErrorCode::MissingColorAssignment, "agent " + agent.agent_id + " has no color");
    for (const auto& p : box_pixels(ego, *box, cfg)) frame.set(p.row, p.col, it->second);
  }
  for (const auto& p : box_pixels(ego, *ego_box, cfg)) frame.set(p.row, p.col, policy.ego);

  for (const auto& light : scene.lights) {
    const auto signal = light.at(t);
    if (!signal || *signal == Signal::unknown) continue;
    const ColorRGB c = light_color(*signal, policy);
    for (const auto& p : light_pixels(ego, light.position, cfg)) frame.set(p.row, p.col, c);
  }
  return frame;
}

struct VideoManifest {
  double frame_rate = 10.0;
  double window_length = 20.0;
  double window_width = 10.0;
  int frame_rows = 96;
  int frame_cols = 54;
  Scales scales;
  ColorPolicy color_policy;
  std::string source = "generated";

  RasterConfig raster_config() const {
    RasterConfig cfg;
    cfg.window_length = window_length;
    cfg.window_width = window_width;
    cfg.frame_rows = frame_rows;
    cfg.frame_cols = frame_cols;
    cfg.frame_rate = frame_rate;
    return cfg;
  }
};

struct Video {
  std::vector<Frame> frames;
  VideoManifest manifest;
};

/// One color draw per non-ego agent, in scene order.
inline ColorAssignment assign_colors(const Scene& scene, std::uint64_t seed, const ColorPolicy& policy) {
  std::mt19937_64 rng(seed);
  ColorAssignment colors;
  for (const auto& a : scene.agents)
    if (!a.is_ego) colors[a.agent_id] = sample_agent_color(rng, policy);
  return colors;
}

inline Video rasterize_scene(const Scene& scene, const RasterConfig& cfg, std::uint64_t seed,
                             const ColorPolicy& policy = {}) {
  cfg.validate();
  if (auto issues = validate_scene(scene); !issues.empty())
    throw Error(ErrorCode::InvalidScene, scene.scene_id + ":\n" + describe(issues));
  const auto colors = assign_colors(scene, seed, policy);

  Video video;
  video.frames.reserve(static_cast<std::size_t>(scene.num_timesteps));
  for (int t = 0; t < scene.num_timesteps; ++t) video.frames.push_back(render_frame(scene, t, cfg, policy, colors));
  auto& m = video.manifest;
  m.frame_rate = scene.frame_rate;
  m.window_length = cfg.window_length;
  m.window_width = cfg.window_width;
  m.frame_rows = cfg.frame_rows;
  m.frame_cols = cfg.frame_cols;
  m.scales = Scales::from(cfg);
  m.color_policy = policy;
  m.source = scene.scene_id;
  return video;
}

}  // namespace bevtraj

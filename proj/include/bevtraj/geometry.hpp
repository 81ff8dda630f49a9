#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bevtraj {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

struct OrientedBox {
  Pose2D center;
  double length = 0.0;  // along heading
  double width = 0.0;

  std::array<Vec2, 4> corners() const {
    const double c = std::cos(center.heading), s = std::sin(center.heading);
    const double hl = 0.5 * length, hw = 0.5 * width;
    const Vec2 f{c * hl, s * hl};
    const Vec2 l{-s * hw, c * hw};
    const Vec2 p = center.position();
    return {p + f + l, p + f - l, p - f - l, p - f + l};
  }

  /// Point containment with closed boundary.
  bool contains(Vec2 p) const {
    const Vec2 d = p - center.position();
    const double c = std::cos(center.heading), s = std::sin(center.heading);
    const double u = d.x * c + d.y * s;
    const double v = -d.x * s + d.y * c;
    return std::abs(u) <= 0.5 * length && std::abs(v) <= 0.5 * width;
  }

  OrientedBox inflated(double margin) const {
    return {center, length + 2.0 * margin, width + 2.0 * margin};
  }

  friend bool operator==(const OrientedBox&, const OrientedBox&) = default;
};

/// Separating-axis test for two oriented rectangles. Touching counts as overlap.
inline bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<double, 4> headings{a.center.heading, a.center.heading + std::numbers::pi / 2,
                                       b.center.heading, b.center.heading + std::numbers::pi / 2};
  for (double h : headings) {
    const Vec2 axis{std::cos(h), std::sin(h)};
    double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
    for (const auto& p : ca) {
      const double d = dot(p, axis);
      amin = std::min(amin, d);
      amax = std::max(amax, d);
    }
    for (const auto& p : cb) {
      const double d = dot(p, axis);
      bmin = std::min(bmin, d);
      bmax = std::max(bmax, d);
    }
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

/// Continuous pixel coordinates. Pixel (r, c) covers [r, r+1) x [c, c+1).
struct PixelCoord {
  double row = 0.0;
  double col = 0.0;
};

struct RasterConfig {
  double window_length = 20.0;  // meters along ego heading (rows)
  double window_width = 10.0;   // meters lateral (cols)
  int frame_rows = 96;
  int frame_cols = 54;
  double frame_rate = 10.0;
  double lane_thickness = 1.5;
  double light_diameter = 2.0;

  double scale_row() const { return frame_rows / window_length; }
  double scale_col() const { return frame_cols / window_width; }

  void validate() const {
    if (!(window_length > 0) || !(window_width > 0) || frame_rows <= 0 || frame_cols <= 0 ||
        !(frame_rate > 0) || !(lane_thickness > 0) || !(light_diameter > 0)) {
      throw std::invalid_argument("RasterConfig: all lengths, counts and rates must be positive");
    }
  }
};

/// Pixel-space scales, px per meter. Recorded in every video manifest.
struct Scales {
  double row = 4.8;
  double col = 5.4;

  static Scales from(const RasterConfig& cfg) { return {cfg.scale_row(), cfg.scale_col()}; }
  double pixel_area_m2() const { return 1.0 / (row * col); }
};

/// Ego-frame coordinates in meters: forward along heading, left perpendicular.
inline Vec2 world_to_ego(const Pose2D& ego, Vec2 p) {
  const Vec2 d = p - ego.position();
  const double c = std::cos(ego.heading), s = std::sin(ego.heading);
  return {d.x * c + d.y * s, -d.x * s + d.y * c};
}

inline Vec2 ego_to_world(const Pose2D& ego, Vec2 fl) {
  const double c = std::cos(ego.heading), s = std::sin(ego.heading);
  return {ego.x + fl.x * c - fl.y * s, ego.y + fl.x * s + fl.y * c};
}

/// Forward maps to decreasing row, left maps to decreasing col; the ego center
/// lands on (frame_rows/2, frame_cols/2).
inline PixelCoord world_to_image(const Pose2D& ego, Vec2 p, const RasterConfig& cfg) {
  const Vec2 fl = world_to_ego(ego, p);
  return {0.5 * cfg.frame_rows - fl.x * cfg.scale_row(), 0.5 * cfg.frame_cols - fl.y * cfg.scale_col()};
}

inline Vec2 image_to_world(const Pose2D& ego, PixelCoord px, const RasterConfig& cfg) {
  const Vec2 fl{(0.5 * cfg.frame_rows - px.row) / cfg.scale_row(),
                (0.5 * cfg.frame_cols - px.col) / cfg.scale_col()};
  return ego_to_world(ego, fl);
}

/// Pixel displacement to meters with per-axis scales.
inline double pixel_distance_m(double drow, double dcol, const Scales& s) {
  return std::hypot(drow / s.row, dcol / s.col);
}

}  // namespace bevtraj

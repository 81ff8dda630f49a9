#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "bevtraj/color.hpp"
#include "bevtraj/error.hpp"
#include "bevtraj/geometry.hpp"
#include "bevtraj/image.hpp"

namespace bevtraj {

enum class Category { light_red, light_green, light_yellow, ego, agent, unknown };

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::light_red: return "light_red";
    case Category::light_green: return "light_green";
    case Category::light_yellow: return "light_yellow";
    case Category::ego: return "ego";
    case Category::agent: return "agent";
    case Category::unknown: return "unknown";
  }
  return "unknown";
}

inline Category category_from_string(std::string_view s) {
  if (s == "light_red") return Category::light_red;
  if (s == "light_green") return Category::light_green;
  if (s == "light_yellow") return Category::light_yellow;
  if (s == "ego") return Category::ego;
  if (s == "agent") return Category::agent;
  return Category::unknown;
}

inline bool is_light(Category c) {
  return c == Category::light_red || c == Category::light_green || c == Category::light_yellow;
}
inline bool is_vehicle(Category c) { return c == Category::ego || c == Category::agent; }

struct HsvBand {
  HueInterval hue{0.0, 360.0};
  double sat_min = 0.0, sat_max = 1.0;
  double val_min = 0.0, val_max = 1.0;

  bool contains(const HSVPixel& p) const {
    return p.saturation >= sat_min && p.saturation <= sat_max && p.value >= val_min && p.value <= val_max &&
           hue.contains(p.hue);
  }
};

struct AreaRange {
  double min_m2 = 0.0;
  double max_m2 = 0.0;
  bool contains(double a) const { return a >= min_m2 && a <= max_m2; }
};

struct DetectorConfig {
  HsvBand red{{350.0, 10.0}, 0.6, 1.0, 0.6, 1.0};
  HsvBand yellow{{38.0, 59.0}, 0.6, 1.0, 0.6, 1.0};
  HsvBand green{{120.0, 141.0}, 0.6, 1.0, 0.6, 1.0};
  HsvBand ego{{0.0, 360.0}, 0.0, 1.0, 0.0, 0.2};
  // Agents: chromatic pixels whose hue avoids every light band.
  double agent_sat_min = 0.3;
  double agent_val_min = 0.3;
  int opening_kernel = 3;
  int opening_iterations = 1;
  std::size_t min_component_px = 4;
  AreaRange light_area{1.5, 6.0};
  AreaRange vehicle_area{4.0, 30.0};

  bool in_agent_band(const HSVPixel& p) const {
    return p.saturation >= agent_sat_min && p.value >= agent_val_min && !red.hue.contains(p.hue) &&
           !yellow.hue.contains(p.hue) && !green.hue.contains(p.hue);
  }
};

struct BoundingBox {
  int row_min = 0, col_min = 0, row_max = -1, col_max = -1;  // inclusive
  int height() const { return row_max - row_min + 1; }
  int width() const { return col_max - col_min + 1; }
  int area() const { return height() * width(); }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct DetectedObject {
  int frame_index = 0;
  int index = 0;  // position within its frame's detection list
  Category category = Category::unknown;
  Category source = Category::unknown;  // mask the component came from
  PixelCoord centroid;
  std::size_t area_px = 0;
  double area_m2 = 0.0;
  ColorRGB mean_color;
  BoundingBox bbox;
  double rectangularity = 0.0;
  double circularity = 0.0;
  bool touches_border = false;
  std::vector<Pixel> pixels;

  double aspect() const { return static_cast<double>(bbox.width()) / bbox.height(); }
};

using FrameDetections = std::vector<DetectedObject>;

inline HsvImage to_hsv(const Frame& frame) {
  HsvImage out(static_cast<std::size_t>(frame.rows) * frame.cols);
  for (int r = 0; r < frame.rows; ++r)
    for (int c = 0; c < frame.cols; ++c) out[static_cast<std::size_t>(r) * frame.cols + c] = rgb_to_hsv(frame.at(r, c));
  return out;
}

struct LightMasks {
  Mask red, green, yellow;
  Mask combined() const { return red | green | yellow; }
};

inline LightMasks mask_lights(const HsvImage& hsv, int rows, int cols, const DetectorConfig& cfg) {
  LightMasks m{Mask(rows, cols), Mask(rows, cols), Mask(rows, cols)};
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const auto& p = hsv[static_cast<std::size_t>(r) * cols + c];
      if (cfg.red.contains(p))
        m.red.set(r, c);
      else if (cfg.green.contains(p))
        m.green.set(r, c);
      else if (cfg.yellow.contains(p))
        m.yellow.set(r, c);
    }
  return m;
}

/// Replaces every masked pixel by the nearest unmasked pixel (Euclidean; ties
/// go to the smaller row, then the smaller column).
inline Frame inpaint_lights(const Frame& frame, const Mask& light_mask) {
  if (light_mask.rows != frame.rows || light_mask.cols != frame.cols)
    throw std::invalid_argument("inpaint_lights: mask dimensions differ from frame");
  const std::size_t masked = light_mask.count();
  if (masked == 0) return frame;
  if (masked == light_mask.bits.size()) throw Error(ErrorCode::AllPixelsMasked, "every pixel is a light pixel");

  Frame out = frame;
  const int max_radius = std::max(frame.rows, frame.cols);
  for (int r = 0; r < frame.rows; ++r) {
    for (int c = 0; c < frame.cols; ++c) {
      if (!light_mask.get(r, c)) continue;
      long best_d2 = -1;
      Pixel best{};
      for (int k = 1; k <= max_radius; ++k) {
        for (int rr = r - k; rr <= r + k; ++rr) {
          const bool edge_row = (rr == r - k || rr == r + k);
          const int step = edge_row ? 1 : 2 * k;
          for (int cc = c - k; cc <= c + k; cc += step) {
            if (!light_mask.in_bounds(rr, cc) || light_mask.get(rr, cc)) continue;
            const long d2 = static_cast<long>(rr - r) * (rr - r) + static_cast<long>(cc - c) * (cc - c);
            const Pixel cand{rr, cc};
            if (best_d2 < 0 || d2 < best_d2 || (d2 == best_d2 && cand < best)) {
              best_d2 = d2;
              best = cand;
            }
          }
        }
        // Anything outside ring k is farther than k.
        if (best_d2 >= 0 && best_d2 <= static_cast<long>(k) * k) break;
      }
      out.set(r, c, frame.at(best.row, best.col));
    }
  }
  return out;
}

struct VehicleMasks {
  Mask ego, agents;
};

inline VehicleMasks mask_vehicles(const HsvImage& hsv, int rows, int cols, const DetectorConfig& cfg) {
  VehicleMasks m{Mask(rows, cols), Mask(rows, cols)};
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const auto& p = hsv[static_cast<std::size_t>(r) * cols + c];
      if (cfg.ego.contains(p))
        m.ego.set(r, c);
      else if (cfg.in_agent_band(p))
        m.agents.set(r, c);
    }
  return m;
}

/// Square-kernel erosion; pixels outside the image count as unset.
inline Mask erode(const Mask& m, int kernel) {
  const int h = kernel / 2;
  Mask out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) {
      bool keep = m.get(r, c);
      for (int dr = -h; keep && dr <= h; ++dr)
        for (int dc = -h; keep && dc <= h; ++dc) keep = m.in_bounds(r + dr, c + dc) && m.get(r + dr, c + dc);
      out.set(r, c, keep);
    }
  return out;
}

inline Mask dilate(const Mask& m, int kernel) {
  const int h = kernel / 2;
  Mask out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) {
      if (!m.get(r, c)) continue;
      for (int dr = -h; dr <= h; ++dr)
        for (int dc = -h; dc <= h; ++dc)
          if (out.in_bounds(r + dr, c + dc)) out.set(r + dr, c + dc);
    }
  return out;
}

inline Mask morphological_open(const Mask& m, int kernel = 3, int iterations = 1) {
  Mask out = m;
  for (int i = 0; i < iterations; ++i) out = erode(out, kernel);
  for (int i = 0; i < iterations; ++i) out = dilate(out, kernel);
  return out;
}

/// 8-connected components in raster order of their first pixel.
inline std::vector<std::vector<Pixel>> extract_components(const Mask& mask, std::size_t min_pixels = 4) {
  std::vector<std::vector<Pixel>> comps;
  std::vector<std::uint8_t> seen(mask.bits.size(), 0);
  std::vector<Pixel> stack;
  for (int r = 0; r < mask.rows; ++r)
    for (int c = 0; c < mask.cols; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * mask.cols + c;
      if (!mask.bits[idx] || seen[idx]) continue;
      std::vector<Pixel> comp;
      seen[idx] = 1;
      stack.push_back({r, c});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        comp.push_back(p);
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = p.row + dr, cc = p.col + dc;
            if (!mask.in_bounds(rr, cc)) continue;
            const std::size_t j = static_cast<std::size_t>(rr) * mask.cols + cc;
            if (mask.bits[j] && !seen[j]) {
              seen[j] = 1;
              stack.push_back({rr, cc});
            }
          }
      }
      if (comp.size() >= min_pixels) {
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
      }
    }
  return comps;
}

struct ContourMeasure {
  double perimeter = 0.0;
  double area = 0.0;
};

/// Perimeter and area of the polygon through the midpoints of the component's
/// boundary edges: straight runs add 1, each corner adds sqrt(2)/2 and trims
/// (convex) or adds (concave) an eighth of a pixel.
inline ContourMeasure contour_measure(const std::vector<Pixel>& pixels) {
  if (pixels.empty()) return {};
  int r0 = pixels.front().row, r1 = r0, c0 = pixels.front().col, c1 = c0;
  for (const auto& p : pixels) {
    r0 = std::min(r0, p.row);
    r1 = std::max(r1, p.row);
    c0 = std::min(c0, p.col);
    c1 = std::max(c1, p.col);
  }
  const int h = r1 - r0 + 3, w = c1 - c0 + 3;  // one pixel of padding
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(h) * w, 0);
  auto at = [&](int r, int c) { return grid[static_cast<std::size_t>(r) * w + c] != 0; };
  for (const auto& p : pixels) grid[static_cast<std::size_t>(p.row - r0 + 1) * w + (p.col - c0 + 1)] = 1;

  long edges = 0;
  for (int r = 1; r < h - 1; ++r)
    for (int c = 1; c < w - 1; ++c)
      if (at(r, c)) edges += !at(r - 1, c) + !at(r + 1, c) + !at(r, c - 1) + !at(r, c + 1);

  long convex = 0, concave = 0, pinch = 0;
  for (int r = 0; r + 1 < h; ++r)
    for (int c = 0; c + 1 < w; ++c) {
      const bool a = at(r, c), b = at(r, c + 1), d = at(r + 1, c), e = at(r + 1, c + 1);
      const int n = a + b + d + e;
      if (n == 1) ++convex;
      else if (n == 3) ++concave;
      else if (n == 2 && a == e) ++pinch;
    }
  const long turns = convex + concave + 2 * pinch;
  ContourMeasure m;
  m.perimeter = static_cast<double>(edges - turns) + turns * std::numbers::sqrt2 / 2.0;
  m.area = static_cast<double>(pixels.size()) - (convex + 2.0 * pinch) / 8.0 + concave / 8.0;
  return m;
}

/// Geometric features of a pixel set inside a rows x cols image.
inline DetectedObject shape_features(const std::vector<Pixel>& pixels, int rows, int cols, const Scales& scales) {
  DetectedObject o;
  o.pixels = pixels;
  o.area_px = pixels.size();
  if (pixels.empty()) return o;
  double sr = 0, sc = 0;
  BoundingBox bb{pixels.front().row, pixels.front().col, pixels.front().row, pixels.front().col};
  for (const auto& p : pixels) {
    sr += p.row + 0.5;
    sc += p.col + 0.5;
    bb.row_min = std::min(bb.row_min, p.row);
    bb.row_max = std::max(bb.row_max, p.row);
    bb.col_min = std::min(bb.col_min, p.col);
    bb.col_max = std::max(bb.col_max, p.col);
  }
  const double n = static_cast<double>(pixels.size());
  o.centroid = {sr / n, sc / n};
  o.area_m2 = n * scales.pixel_area_m2();
  o.bbox = bb;
  o.rectangularity = n / bb.area();
  const auto cm = contour_measure(pixels);
  o.circularity = cm.perimeter > 0 ? 4.0 * std::numbers::pi * cm.area / (cm.perimeter * cm.perimeter) : 0.0;
  o.touches_border = bb.row_min == 0 || bb.col_min == 0 || bb.row_max == rows - 1 || bb.col_max == cols - 1;
  return o;
}

/// Shape features plus the mean color of the component in `color_source`.
/// The category is left unset.
inline DetectedObject component_features(const std::vector<Pixel>& pixels, const Frame& color_source,
                                         const Scales& scales) {
  DetectedObject o = shape_features(pixels, color_source.rows, color_source.cols, scales);
  if (pixels.empty()) return o;
  double cr = 0, cg = 0, cb = 0;
  for (const auto& p : pixels) {
    const auto col = color_source.at(p.row, p.col);
    cr += col.r;
    cg += col.g;
    cb += col.b;
  }
  const double n = static_cast<double>(pixels.size());
  auto avg = [n](double v) { return static_cast<std::uint8_t>(std::lround(v / n)); };
  o.mean_color = {avg(cr), avg(cg), avg(cb)};
  return o;
}

/// Keeps the mask category when the area fits its expected range, else unknown.
inline DetectedObject classify(DetectedObject o, Category source, const DetectorConfig& cfg) {
  o.source = source;
  const AreaRange& range = is_light(source) ? cfg.light_area : cfg.vehicle_area;
  o.category = (source != Category::unknown && range.contains(o.area_m2)) ? source : Category::unknown;
  return o;
}

inline FrameDetections detect_frame(const Frame& frame, const DetectorConfig& cfg, const Scales& scales,
                                    int frame_index = 0) {
  const HsvImage hsv = to_hsv(frame);
  const LightMasks lights = mask_lights(hsv, frame.rows, frame.cols, cfg);
  const Frame inpainted = inpaint_lights(frame, lights.combined());
  const HsvImage hsv2 = to_hsv(inpainted);
  const VehicleMasks vehicles = mask_vehicles(hsv2, frame.rows, frame.cols, cfg);

  struct Source {
    const Mask* mask;
    Category category;
    const Frame* colors;
  };
  const std::array<Source, 5> sources{{{&lights.red, Category::light_red, &frame},
                                       {&lights.green, Category::light_green, &frame},
                                       {&lights.yellow, Category::light_yellow, &frame},
                                       {&vehicles.ego, Category::ego, &inpainted},
                                       {&vehicles.agents, Category::agent, &inpainted}}};
  FrameDetections out;
  for (const auto& src : sources) {
    const Mask opened = morphological_open(*src.mask, cfg.opening_kernel, cfg.opening_iterations);
    for (const auto& comp : extract_components(opened, cfg.min_component_px)) {
      auto obj = classify(component_features(comp, *src.colors, scales), src.category, cfg);
      obj.frame_index = frame_index;
      obj.index = static_cast<int>(out.size());
      out.push_back(std::move(obj));
    }
  }
  return out;
}

}  // namespace bevtraj

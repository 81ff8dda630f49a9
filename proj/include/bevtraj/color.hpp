#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "bevtraj/error.hpp"

namespace bevtraj {

struct ColorRGB {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend constexpr bool operator==(ColorRGB, ColorRGB) = default;
};

struct HSVPixel {
  double hue = 0.0;         // degrees [0, 360)
  double saturation = 0.0;  // [0, 1]
  double value = 0.0;       // [0, 1]
};

/// Hexcone RGB to HSV.
inline HSVPixel rgb_to_hsv(ColorRGB c) {
  const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  HSVPixel out;
  out.value = mx;
  out.saturation = mx > 0 ? delta / mx : 0.0;
  if (delta <= 0) return out;
  double h;
  if (mx == r)
    h = 60.0 * std::fmod((g - b) / delta, 6.0);
  else if (mx == g)
    h = 60.0 * ((b - r) / delta + 2.0);
  else
    h = 60.0 * ((r - g) / delta + 4.0);
  if (h < 0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.hue = h;
  return out;
}

inline ColorRGB hsv_to_rgb(HSVPixel p) {
  const double c = p.value * p.saturation;
  const double hp = std::fmod(p.hue, 360.0) / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  const double m = p.value - c;
  auto to8 = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L)); };
  return {to8(r + m), to8(g + m), to8(b + m)};
}

/// Closed hue interval in degrees; wraps through 0 when lo > hi.
struct HueInterval {
  double lo = 0.0;
  double hi = 360.0;

  bool contains(double h) const { return lo <= hi ? (h >= lo && h <= hi) : (h >= lo || h <= hi); }

  /// Non-wrapping pieces inside [0, 360].
  std::vector<std::pair<double, double>> pieces() const {
    if (lo <= hi) return {{lo, hi}};
    return {{lo, 360.0}, {0.0, hi}};
  }
};

inline double wrap_hue(double h) {
  h = std::fmod(h, 360.0);
  return h < 0 ? h + 360.0 : h;
}

inline HueInterval hue_band(double center, double half_width) {
  return {wrap_hue(center - half_width), wrap_hue(center + half_width)};
}

/// Uniform double in [0, 1) from raw engine bits; stable across standard libraries.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

struct ColorPolicy {
  ColorRGB background{255, 255, 255};
  ColorRGB lane{200, 200, 200};
  ColorRGB ego{0, 0, 0};
  ColorRGB light_red{230, 30, 30};
  ColorRGB light_green{30, 200, 60};
  ColorRGB light_yellow{240, 200, 30};

  // Agent sampling region before reserved regions are removed.
  HueInterval sample_hue{0.0, 360.0};
  double sat_min = 0.5, sat_max = 1.0;
  double val_min = 0.5, val_max = 1.0;

  // Reserved detection regions and the separation kept from them.
  double light_hue_half_width = 10.0;
  double hue_margin = 10.0;
  double ego_value_max = 0.2;
  double achromatic_sat_max = 0.0;
  double sv_margin = 0.2;

  std::vector<HueInterval> reserved_hues() const {
    const double w = light_hue_half_width + hue_margin;
    return {hue_band(rgb_to_hsv(light_red).hue, w), hue_band(rgb_to_hsv(light_yellow).hue, w),
            hue_band(rgb_to_hsv(light_green).hue, w)};
  }
};

/// Hue intervals of the sampling region with every reserved hue band removed.
inline std::vector<std::pair<double, double>> allowed_hues(const ColorPolicy& policy) {
  std::vector<std::pair<double, double>> allowed = policy.sample_hue.pieces();
  for (const auto& reserved : policy.reserved_hues()) {
    for (const auto& [rlo, rhi] : reserved.pieces()) {
      std::vector<std::pair<double, double>> next;
      for (const auto& [lo, hi] : allowed) {
        if (rhi <= lo || rlo >= hi) {
          next.emplace_back(lo, hi);
          continue;
        }
        if (rlo > lo) next.emplace_back(lo, rlo);
        if (rhi < hi) next.emplace_back(rhi, hi);
      }
      allowed = std::move(next);
    }
  }
  std::erase_if(allowed, [](const auto& p) { return p.second - p.first <= 1e-9; });
  return allowed;
}

/// Draws one agent color from the sampling region minus reserved regions.
/// Draws whose 8-bit rounding lands back inside a reserved region are redrawn.
inline ColorRGB sample_agent_color(std::mt19937_64& rng, const ColorPolicy& policy) {
  const auto hues = allowed_hues(policy);
  const double s_lo = std::max(policy.sat_min, policy.achromatic_sat_max + policy.sv_margin);
  const double v_lo = std::max(policy.val_min, policy.ego_value_max + policy.sv_margin);
  double total = 0;
  for (const auto& [lo, hi] : hues) total += hi - lo;
  if (total <= 0 || s_lo > policy.sat_max || v_lo > policy.val_max)
    throw Error(ErrorCode::EmptySamplingRegion, "agent color sampling region is empty after reserved regions");

  const auto reserved = policy.reserved_hues();
  auto admissible = [&](ColorRGB c) {
    const HSVPixel p = rgb_to_hsv(c);
    if (p.saturation < s_lo || p.value < v_lo) return false;
    return std::none_of(reserved.begin(), reserved.end(), [&](const HueInterval& r) { return r.contains(p.hue); });
  };
  ColorRGB out;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    double u = uniform01(rng) * total;
    double hue = hues.back().second;
    for (const auto& [lo, hi] : hues) {
      if (u < hi - lo) {
        hue = lo + u;
        break;
      }
      u -= hi - lo;
    }
    const double s = uniform(rng, s_lo, policy.sat_max);
    const double v = uniform(rng, v_lo, policy.val_max);
    out = hsv_to_rgb({wrap_hue(hue), s, v});
    if (admissible(out)) return out;
  }
  throw Error(ErrorCode::EmptySamplingRegion, "no 8-bit color found outside the reserved regions");
}

}  // namespace bevtraj

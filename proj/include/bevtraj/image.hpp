#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bevtraj/color.hpp"

namespace bevtraj {

/// Row-major RGB8 raster.
struct Frame {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;

  Frame() = default;
  Frame(int r, int c, ColorRGB fill = {255, 255, 255})
      : rows(r), cols(c), pixels(static_cast<std::size_t>(r) * c * 3) {
    for (std::size_t i = 0; i < pixels.size(); i += 3) {
      pixels[i] = fill.r;
      pixels[i + 1] = fill.g;
      pixels[i + 2] = fill.b;
    }
  }

  std::size_t offset(int r, int c) const { return (static_cast<std::size_t>(r) * cols + c) * 3; }

  ColorRGB at(int r, int c) const {
    const auto o = offset(r, c);
    return {pixels[o], pixels[o + 1], pixels[o + 2]};
  }

  void set(int r, int c, ColorRGB v) {
    const auto o = offset(r, c);
    pixels[o] = v.r;
    pixels[o + 1] = v.g;
    pixels[o + 2] = v.b;
  }

  bool in_bounds(int r, int c) const { return r >= 0 && c >= 0 && r < rows && c < cols; }
  friend bool operator==(const Frame&, const Frame&) = default;
};

struct Mask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int r, int c) : rows(r), cols(c), bits(static_cast<std::size_t>(r) * c, 0) {}

  bool get(int r, int c) const { return bits[static_cast<std::size_t>(r) * cols + c] != 0; }
  void set(int r, int c, bool v = true) { bits[static_cast<std::size_t>(r) * cols + c] = v ? 1 : 0; }
  bool in_bounds(int r, int c) const { return r >= 0 && c >= 0 && r < rows && c < cols; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }

  friend bool operator==(const Mask&, const Mask&) = default;
};

inline Mask operator|(const Mask& a, const Mask& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("mask dimensions differ");
  Mask out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] | b.bits[i];
  return out;
}

struct Pixel {
  int row = 0;
  int col = 0;
  friend constexpr bool operator==(Pixel, Pixel) = default;
  friend constexpr auto operator<=>(Pixel, Pixel) = default;
};

using HsvImage = std::vector<HSVPixel>;

}  // namespace bevtraj

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bevtraj/color.hpp"
#include "bevtraj/detector.hpp"
#include "bevtraj/rasterizer.hpp"

using namespace bevtraj;

namespace {

double hue_distance(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 360.0 - d);
}

}  // namespace

TEST(Color, HexconeExamples) {
  const auto red = rgb_to_hsv({255, 0, 0});
  EXPECT_DOUBLE_EQ(red.hue, 0.0);
  EXPECT_DOUBLE_EQ(red.saturation, 1.0);
  EXPECT_DOUBLE_EQ(red.value, 1.0);

  const auto white = rgb_to_hsv({255, 255, 255});
  EXPECT_DOUBLE_EQ(white.saturation, 0.0);
  EXPECT_DOUBLE_EQ(white.value, 1.0);

  // Hand evaluation: max 230, min 30, delta 200.
  const auto light_red = rgb_to_hsv({230, 30, 30});
  EXPECT_NEAR(light_red.hue, 0.0, 1e-12);
  EXPECT_NEAR(light_red.saturation, 200.0 / 230.0, 1e-12);
  EXPECT_NEAR(light_red.value, 230.0 / 255.0, 1e-12);
  EXPECT_NEAR(light_red.saturation, 0.87, 0.005);
  EXPECT_NEAR(light_red.value, 0.90, 0.005);

  EXPECT_NEAR(rgb_to_hsv({0, 255, 0}).hue, 120.0, 1e-12);
  EXPECT_NEAR(rgb_to_hsv({0, 0, 255}).hue, 240.0, 1e-12);
  EXPECT_NEAR(rgb_to_hsv({255, 0, 255}).hue, 300.0, 1e-12);
}

TEST(Color, HsvRoundTripOnByteGrid) {
  for (int r = 0; r < 256; r += 17)
    for (int g = 0; g < 256; g += 17)
      for (int b = 0; b < 256; b += 17) {
        const ColorRGB c{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
        EXPECT_EQ(hsv_to_rgb(rgb_to_hsv(c)), c);
      }
}

TEST(Color, HueIntervalWraps) {
  const HueInterval wrap{350, 10};
  EXPECT_TRUE(wrap.contains(355));
  EXPECT_TRUE(wrap.contains(5));
  EXPECT_FALSE(wrap.contains(180));
  EXPECT_EQ(wrap.pieces().size(), 2u);
  const HueInterval band = hue_band(0, 20);
  EXPECT_DOUBLE_EQ(band.lo, 340);
  EXPECT_DOUBLE_EQ(band.hi, 20);
}

TEST(Color, SampledHueAvoidsLightBands) {
  const ColorPolicy policy;
  std::mt19937_64 rng(42);
  const auto c = rgb_to_hsv(sample_agent_color(rng, policy));
  for (double center : {0.0, 60.0, 120.0}) EXPECT_GE(hue_distance(c.hue, center), 10.0);
}

TEST(Color, SamplingIsDeterministic) {
  const ColorPolicy policy;
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_agent_color(a, policy), sample_agent_color(b, policy));
}

TEST(Color, TenThousandDrawsNeverHitReservedMasks) {
  const ColorPolicy policy;
  const DetectorConfig det;
  std::mt19937_64 rng(2024);
  const auto reserved = policy.reserved_hues();
  const auto lane = rgb_to_hsv(policy.lane), bg = rgb_to_hsv(policy.background);
  for (int i = 0; i < 10000; ++i) {
    const ColorRGB c = sample_agent_color(rng, policy);
    // Solid tile through the detector masks.
    Frame tile(4, 4, c);
    const auto hsv = to_hsv(tile);
    const auto lights = mask_lights(hsv, 4, 4, det);
    ASSERT_EQ(lights.combined().count(), 0u) << int(c.r) << "," << int(c.g) << "," << int(c.b);
    const auto veh = mask_vehicles(hsv, 4, 4, det);
    ASSERT_EQ(veh.ego.count(), 0u);
    ASSERT_EQ(veh.agents.count(), 16u);

    // Margin from every reserved region, after 8-bit quantization.
    const auto p = rgb_to_hsv(c);
    for (const auto& band : reserved) ASSERT_FALSE(band.contains(p.hue));
    ASSERT_GE(p.value, policy.ego_value_max + policy.sv_margin);
    ASSERT_GE(p.saturation, lane.saturation + policy.sv_margin);
    ASSERT_GE(p.saturation, bg.saturation + policy.sv_margin);
  }
}

TEST(Color, EmptySamplingRegion) {
  ColorPolicy policy;
  policy.sample_hue = hue_band(0.0, 5.0);  // inside the red reservation
  std::mt19937_64 rng(1);
  try {
    sample_agent_color(rng, policy);
    FAIL() << "expected EmptySamplingRegion";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySamplingRegion);
  }
  ColorPolicy dark;
  dark.val_max = 0.3;
  EXPECT_THROW(sample_agent_color(rng, dark), Error);
}

TEST(Color, AllowedHuesExcludeReservations) {
  const ColorPolicy policy;
  double total = 0;
  for (const auto& [lo, hi] : allowed_hues(policy)) {
    total += hi - lo;
    for (const auto& band : policy.reserved_hues()) {
      EXPECT_FALSE(band.contains(0.5 * (lo + hi)));
    }
  }
  // Three reserved bands of 40 degrees each, two of which overlap around 60.
  EXPECT_GT(total, 200.0);
  EXPECT_LT(total, 260.0);
}

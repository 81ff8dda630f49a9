#include <functional>
#include <optional>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "bevtraj/pipeline.hpp"
#include "bevtraj/synthetic_gen.hpp"

using namespace bevtraj;

namespace {

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST(Pipeline, ConfigOverlayKeepsDefaults) {
  const auto cfg = pipeline_config_from_json(nlohmann::json::parse(
      R"({"tracker": {"gate_distance_px": 8}, "metrics": {"speed_rel": {"width": 2}}, "detector": {"light_area_m2": [1, 5]}})"));
  EXPECT_EQ(cfg.tracker.gate_distance_px, 8);
  EXPECT_EQ(cfg.tracker.max_coast_frames, TrackerConfig{}.max_coast_frames);
  EXPECT_EQ(cfg.bins.at("speed_rel").width, 2);
  EXPECT_EQ(cfg.bins.at("speed_rel").lo, default_metric_bins().at("speed_rel").lo);
  EXPECT_EQ(cfg.detector.light_area.min_m2, 1);
  EXPECT_EQ(cfg.detector.vehicle_area.min_m2, DetectorConfig{}.vehicle_area.min_m2);
  EXPECT_NO_THROW(pipeline_config_from_json(nlohmann::json::object()));
}

TEST(Pipeline, ConfigErrors) {
  auto parse = [](const char* s) { return [s] { pipeline_config_from_json(nlohmann::json::parse(s)); }; };
  EXPECT_EQ(code_of(parse(R"({"camera": {}})")), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of(parse(R"({"metrics": {"nope": {"width": 1}}})")), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of(parse(R"({"metrics": {"speed_rel": {"width": 0}}})")), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of(parse(R"({"detector": {"opening_kernel": 2}})")), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of(parse(R"({"detector": {"vehicle_area_m2": [30, 4]}})")), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of(parse(R"({"tracker": {"gate_distance_px": "far"}})")), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of(parse(R"({"raster": {"frame_rows": 0}})")), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { read_json_file("/nonexistent/cfg.json"); }), ErrorCode::Io);
}

TEST(Pipeline, PixelRunEncodingRoundTrip) {
  EXPECT_EQ(encode_pixels({{1, 2}, {1, 3}, {1, 4}, {2, 0}, {2, 2}}).dump(), "[[1,2,3],[2,0,1],[2,2,1]]");
  std::mt19937_64 rng(8);
  std::bernoulli_distribution on(0.4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Pixel> px;
    for (int r = 0; r < 12; ++r)
      for (int c = 0; c < 15; ++c)
        if (on(rng)) px.push_back({r, c});
    EXPECT_EQ(decode_pixels(encode_pixels(px)), px);
  }
}

TEST(Pipeline, DetectionsAndTracksRoundTrip) {
  GenParams p;
  p.seed = 77;
  p.duration_s = 6;
  const Scene s = generate_scene(p);
  const Video v = rasterize_scene(s, RasterConfig{}, 77);
  const auto ex = extract_video(v.frames, v.manifest, DetectorConfig{}, TrackerConfig{});
  const int n = static_cast<int>(v.frames.size());

  std::istringstream in(detections_jsonl(ex.detections));
  const auto dets = detections_from_jsonl(in, n);
  ASSERT_EQ(dets.size(), ex.detections.size());
  for (std::size_t f = 0; f < dets.size(); ++f) {
    ASSERT_EQ(dets[f].size(), ex.detections[f].size());
    for (std::size_t k = 0; k < dets[f].size(); ++k) {
      EXPECT_EQ(to_json(dets[f][k]), to_json(ex.detections[f][k]));
      EXPECT_EQ(dets[f][k].pixels, ex.detections[f][k].pixels);
    }
  }

  const auto tj = tracks_json(ex.tracking, v.manifest.scales, 96, 54, n);
  const auto back = tracks_from_json(nlohmann::json::parse(tj.dump()), dets);
  EXPECT_EQ(tracks_json(back, v.manifest.scales, 96, 54, n), tj);
  ASSERT_EQ(back.tracks.size(), ex.tracking.tracks.size());
  EXPECT_EQ(back.ego_speed.samples.size(), ex.tracking.ego_speed.samples.size());
}

TEST(Pipeline, TracksRejectDanglingReferences) {
  const nlohmann::json j = {{"tracks", {{{"track_id", 0}, {"category", "agent"}, {"states", {{{"frame", 3}, {"detection", 0}}}}}}},
                            {"ego_speed", nlohmann::json::array()}};
  EXPECT_THROW(tracks_from_json(j, std::vector<FrameDetections>(2)), Error);
}

TEST(Pipeline, ExtractionIsDeterministic) {
  GenParams p;
  p.seed = 12;
  p.duration_s = 4;
  const Video v = rasterize_scene(generate_scene(p), RasterConfig{}, 12);
  const auto a = extract_video(v.frames, v.manifest, DetectorConfig{}, TrackerConfig{});
  const auto b = extract_video(v.frames, v.manifest, DetectorConfig{}, TrackerConfig{});
  EXPECT_EQ(detections_jsonl(a.detections), detections_jsonl(b.detections));
  EXPECT_EQ(tracks_json(a.tracking, v.manifest.scales, 96, 54, 40), tracks_json(b.tracking, v.manifest.scales, 96, 54, 40));
}

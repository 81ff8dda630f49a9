#include <gtest/gtest.h>

#include "bevtraj/roundtrip.hpp"

using namespace bevtraj;

TEST(RoundTrip, SmallCorpusMeetsThresholds) {
  GenParams p;
  p.seed = 500;
  const auto r = run_roundtrip(p, 8, PipelineConfig{});
  EXPECT_TRUE(r.scene_errors.empty());
  for (const auto& c : r.checks) EXPECT_TRUE(c.pass()) << c.name << " = " << c.value;
  EXPECT_GT(r.counts.clean_objects, 1000u);
  EXPECT_GT(r.counts.kinematics_n, 100u);
  EXPECT_GT(r.counts.ego_speed_n, 100u);
}

TEST(RoundTrip, CountsMergeAcrossJobs) {
  GenParams p;
  p.seed = 600;
  p.duration_s = 5;
  const auto one = run_roundtrip(p, 4, PipelineConfig{}, 1);
  const auto two = run_roundtrip(p, 4, PipelineConfig{}, 2);
  EXPECT_EQ(to_json(one), to_json(two));
  EXPECT_EQ(one.extracted.values, two.extracted.values);
}

TEST(RoundTrip, GroundTruthMatchesItself) {
  GenParams p;
  p.seed = 700;
  p.duration_s = 6;
  const Scene s = generate_scene(p);
  PipelineConfig cfg;
  const auto gt = ground_truth_extraction(s, cfg.raster, cfg.detector, cfg.tracker);
  const auto fc = evaluate_extraction(s, Extraction{gt.detections, gt.tracking}, gt, cfg);
  EXPECT_EQ(fc.clean_hits, fc.clean_objects);
  EXPECT_EQ(fc.id_switches, 0u);
  EXPECT_EQ(fc.lights_correct, fc.lights_detected);
  EXPECT_NEAR(fc.ego_speed_mae(), 0.0, 1e-12);
}

TEST(RoundTrip, ThresholdDirections) {
  FidelityCounts c;
  c.clean_objects = 100;
  c.clean_hits = 98;
  c.centroid_error_sum = 10;
  c.centroid_n = 10;
  const auto checks = check_thresholds(c, FidelityThresholds{});
  EXPECT_FALSE(checks[0].pass());  // recall 0.98
  EXPECT_TRUE(checks[1].pass());
  EXPECT_FALSE(checks[2].pass());  // 1 m centroid error
  EXPECT_TRUE(checks[3].pass());
}

namespace {

// Ground-truth agent visibility episodes: runs of an agent's detections split
// wherever the gap exceeds the tracker's coasting limit, counting runs with at
// least one detection classified as an agent.
int visible_agent_episodes(const TrackingResult& gt, int max_coast) {
  int n = 0;
  for (const auto& tr : gt.tracks) {
    if (tr.category != Category::agent) continue;
    bool has_agent = false;
    for (std::size_t i = 0; i < tr.detections.size(); ++i) {
      if (i > 0 && tr.detections[i].frame_index - tr.detections[i - 1].frame_index > max_coast + 1) {
        n += has_agent;
        has_agent = false;
      }
      has_agent = has_agent || tr.detections[i].category == Category::agent;
    }
    n += has_agent;
  }
  return n;
}

}  // namespace

TEST(RoundTrip, TrackCountMatchesVisibleAgents) {
  PipelineConfig cfg;
  for (std::uint64_t seed = 800; seed < 820; ++seed) {
    GenParams p;
    p.seed = seed;
    const Scene s = generate_scene(p);
    const Video v = rasterize_scene(s, cfg.raster, seed);
    const auto ex = extract_video(v.frames, v.manifest, cfg.detector, cfg.tracker);
    const auto gt = ground_truth_extraction(s, cfg.raster, cfg.detector, cfg.tracker);
    int tracks = 0;
    for (const auto& tr : ex.tracking.tracks) tracks += tr.category == Category::agent;
    EXPECT_EQ(tracks, visible_agent_episodes(gt.tracking, cfg.tracker.max_coast_frames)) << "seed " << seed;
  }
}

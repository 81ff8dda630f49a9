#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "bevtraj/scene.hpp"
#include "test_support.hpp"

using namespace bevtraj;
using bevtraj::testing::has_issue;
using bevtraj::testing::simple_scene;

TEST(Scene, ValidSceneHasNoIssues) {
  const Scene s = simple_scene();
  EXPECT_TRUE(validate_scene(s).empty());
}

TEST(Scene, MissingEgo) {
  Scene s = simple_scene();
  s.agents.clear();
  const auto issues = validate_scene(s);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, SceneIssueKind::MissingEgo);
}

TEST(Scene, MultipleEgo) {
  Scene s = simple_scene();
  s.agents.push_back(s.agents[0]);
  s.agents.back().agent_id = "ego2";
  EXPECT_TRUE(has_issue(validate_scene(s), SceneIssueKind::MultipleEgo));
}

TEST(Scene, DanglingTimestepAtBoundary) {
  Scene s = simple_scene();
  AgentTrack other{"a1", false, {{s.num_timesteps, {{10, 0, 0}, 4, 2}}}};
  s.agents.push_back(other);
  const auto issues = validate_scene(s);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, SceneIssueKind::DanglingTimestep);
}

TEST(Scene, NonMonotonicAndDegenerate) {
  Scene s = simple_scene();
  AgentTrack other{"a1", false, {{3, {{10, 0, 0}, 4, 2}}, {3, {{11, 0, 0}, 4, 2}}, {5, {{12, 0, 0}, 0, 2}}}};
  s.agents.push_back(other);
  const auto issues = validate_scene(s);
  EXPECT_TRUE(has_issue(issues, SceneIssueKind::NonMonotonicTimesteps));
  EXPECT_TRUE(has_issue(issues, SceneIssueKind::DegenerateBox));
}

TEST(Scene, ReportsEveryViolationWithoutMutating) {
  Scene s = simple_scene();
  s.agents[0].is_ego = false;
  s.agents.push_back({"a1", false, {{99, {{0, 0, 0}, -1, 2}}}});
  s.lanes.push_back({"bad", {{1, 1}}});
  const Scene before = s;
  const auto issues = validate_scene(s);
  EXPECT_EQ(s, before);
  EXPECT_TRUE(has_issue(issues, SceneIssueKind::MissingEgo));
  EXPECT_TRUE(has_issue(issues, SceneIssueKind::DanglingTimestep));
  EXPECT_TRUE(has_issue(issues, SceneIssueKind::DegenerateBox));
  EXPECT_TRUE(has_issue(issues, SceneIssueKind::DegenerateLane));
  EXPECT_EQ(validate_scene(s).size(), issues.size());
}

TEST(Scene, EgoMustSpanEveryTimestep) {
  Scene s = simple_scene();
  s.agents[0].states.erase(s.agents[0].states.begin() + 3);
  EXPECT_TRUE(has_issue(validate_scene(s), SceneIssueKind::EgoGap));
}

TEST(Scene, LightStatesContiguous) {
  Scene s = simple_scene();
  s.lights[0].states.erase(s.lights[0].states.begin() + 2);
  EXPECT_TRUE(has_issue(validate_scene(s), SceneIssueKind::NonContiguousLight));
}

TEST(Scene, LookupByTimestep) {
  Scene s = simple_scene(10);
  s.agents.push_back({"a1", false, {{2, {{1, 0, 0}, 4, 2}}, {6, {{2, 0, 0}, 4, 2}}}});
  const auto& a = s.agents[1];
  EXPECT_EQ(a.at(4), nullptr);
  ASSERT_NE(a.at(6), nullptr);
  EXPECT_DOUBLE_EQ(a.at(6)->center.x, 2.0);
  EXPECT_EQ(s.lights[0].at(9), Signal::green);
  EXPECT_FALSE(s.lights[0].at(10).has_value());
  EXPECT_EQ(s.ego()->agent_id, "ego");
}

TEST(Scene, JsonRoundTrip) {
  Scene s = simple_scene(6);
  s.lights[0].states[3].signal = Signal::yellow;
  s.lights[0].states[4].signal = Signal::red;
  s.agents.push_back({"a1", false, {{1, {{5, 3.5, 3.0}, 4.2, 1.8}}}});
  const Scene back = scene_from_json(nlohmann::json::parse(scene_to_string(s)));
  EXPECT_EQ(back, s);

  const auto j = to_json(s);
  for (const char* key : {"scene_id", "frame_rate_hz", "num_timesteps", "lanes", "lights", "agents"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["agents"][1]["states"][0]["t"], 1);
  EXPECT_EQ(j["lights"][0]["states"][4]["signal"], "red");
}

TEST(Scene, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "bevtraj_scene_roundtrip.json";
  const Scene s = simple_scene(4);
  save_scene(s, path.string());
  EXPECT_EQ(load_scene(path.string()), s);
  std::filesystem::remove(path);
}

TEST(Scene, MalformedJsonIsInvalidScene) {
  try {
    scene_from_json(nlohmann::json{{"scene_id", "x"}});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidScene);
  }
  EXPECT_THROW(load_scene("/nonexistent/scene.json"), Error);
}

TEST(Scene, HeadingNormalizedOnLoad) {
  Scene s = simple_scene(2);
  auto j = to_json(s);
  j["agents"][0]["states"][0]["heading"] = 3 * std::numbers::pi;
  const Scene back = scene_from_json(j);
  EXPECT_NEAR(back.agents[0].states[0].box.center.heading, std::numbers::pi, 1e-12);
}

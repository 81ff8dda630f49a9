#pragma once

#include <string>

#include "bevtraj/scene.hpp"

namespace bevtraj::testing {

/// Ego driving along +x at constant speed, one light ahead, one lane.
inline Scene simple_scene(int steps = 10, double speed = 5.0) {
  Scene s;
  s.scene_id = "simple";
  s.frame_rate = 10.0;
  s.num_timesteps = steps;
  s.lanes.push_back({"lane0", {{-50, 0}, {150, 0}}});
  TrafficLightTrack light{"L0", {30, -0.9}, {}};
  for (int t = 0; t < steps; ++t) light.states.push_back({t, Signal::green});
  s.lights.push_back(light);
  AgentTrack ego{"ego", true, {}};
  for (int t = 0; t < steps; ++t) ego.states.push_back({t, {{speed * t / s.frame_rate, 0, 0}, 4.5, 1.9}});
  s.agents.push_back(ego);
  return s;
}

inline bool has_issue(const std::vector<SceneIssue>& issues, SceneIssueKind k) {
  for (const auto& i : issues)
    if (i.kind == k) return true;
  return false;
}

}  // namespace bevtraj::testing

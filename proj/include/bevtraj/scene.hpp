#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevtraj/error.hpp"
#include "bevtraj/geometry.hpp"

namespace bevtraj {

enum class Signal { red, green, yellow, unknown };

inline std::string_view to_string(Signal s) {
  switch (s) {
    case Signal::red: return "red";
    case Signal::green: return "green";
    case Signal::yellow: return "yellow";
    case Signal::unknown: return "unknown";
  }
  return "unknown";
}

inline Signal signal_from_string(std::string_view s) {
  if (s == "red") return Signal::red;
  if (s == "green") return Signal::green;
  if (s == "yellow") return Signal::yellow;
  return Signal::unknown;
}

struct AgentState {
  int t = 0;
  OrientedBox box;
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct AgentTrack {
  std::string agent_id;
  bool is_ego = false;
  std::vector<AgentState> states;

  const OrientedBox* at(int t) const {
    auto it = std::lower_bound(states.begin(), states.end(), t,
                               [](const AgentState& s, int v) { return s.t < v; });
    return (it != states.end() && it->t == t) ? &it->box : nullptr;
  }
  friend bool operator==(const AgentTrack&, const AgentTrack&) = default;
};

struct LightState {
  int t = 0;
  Signal signal = Signal::unknown;
  friend bool operator==(const LightState&, const LightState&) = default;
};

struct TrafficLightTrack {
  std::string light_id;
  Vec2 position;
  std::vector<LightState> states;

  std::optional<Signal> at(int t) const {
    if (states.empty()) return std::nullopt;
    const int first = states.front().t;
    if (t < first || t >= first + static_cast<int>(states.size())) return std::nullopt;
    return states[static_cast<std::size_t>(t - first)].signal;
  }
  friend bool operator==(const TrafficLightTrack&, const TrafficLightTrack&) = default;
};

struct LanePolyline {
  std::string lane_id;
  std::vector<Vec2> points;
  friend bool operator==(const LanePolyline&, const LanePolyline&) = default;
};

struct Scene {
  std::string scene_id;
  double frame_rate = 10.0;
  int num_timesteps = 1;
  std::vector<LanePolyline> lanes;
  std::vector<TrafficLightTrack> lights;
  std::vector<AgentTrack> agents;

  const AgentTrack* ego() const {
    for (const auto& a : agents)
      if (a.is_ego) return &a;
    return nullptr;
  }
  friend bool operator==(const Scene&, const Scene&) = default;
};

enum class SceneIssueKind {
  MissingEgo,
  MultipleEgo,
  NonMonotonicTimesteps,
  DanglingTimestep,
  DegenerateBox,
  EgoGap,
  DegenerateLane,
  NonContiguousLight,
  InvalidHeader,
};

inline std::string_view to_string(SceneIssueKind k) {
  switch (k) {
    case SceneIssueKind::MissingEgo: return "MissingEgo";
    case SceneIssueKind::MultipleEgo: return "MultipleEgo";
    case SceneIssueKind::NonMonotonicTimesteps: return "NonMonotonicTimesteps";
    case SceneIssueKind::DanglingTimestep: return "DanglingTimestep";
    case SceneIssueKind::DegenerateBox: return "DegenerateBox";
    case SceneIssueKind::EgoGap: return "EgoGap";
    case SceneIssueKind::DegenerateLane: return "DegenerateLane";
    case SceneIssueKind::NonContiguousLight: return "NonContiguousLight";
    case SceneIssueKind::InvalidHeader: return "InvalidHeader";
  }
  return "Unknown";
}

struct SceneIssue {
  SceneIssueKind kind;
  std::string detail;
};

/// Reports every violated invariant; an empty list means the scene is valid.
inline std::vector<SceneIssue> validate_scene(const Scene& scene) {
  std::vector<SceneIssue> issues;
  auto report = [&](SceneIssueKind k, std::string d) { issues.push_back({k, std::move(d)}); };

  if (!(scene.frame_rate > 0) || !std::isfinite(scene.frame_rate))
    report(SceneIssueKind::InvalidHeader, "frame_rate must be positive");
  if (scene.num_timesteps < 1) report(SceneIssueKind::InvalidHeader, "num_timesteps must be >= 1");

  int egos = 0;
  for (const auto& a : scene.agents) {
    if (a.is_ego) ++egos;
    for (std::size_t i = 0; i < a.states.size(); ++i) {
      const auto& s = a.states[i];
      if (i > 0 && s.t <= a.states[i - 1].t)
        report(SceneIssueKind::NonMonotonicTimesteps,
               "agent " + a.agent_id + " timestep " + std::to_string(s.t));
      if (s.t < 0 || s.t >= scene.num_timesteps)
        report(SceneIssueKind::DanglingTimestep, "agent " + a.agent_id + " timestep " + std::to_string(s.t));
      const auto& b = s.box;
      if (!(b.length > 0) || !(b.width > 0) || !std::isfinite(b.length) || !std::isfinite(b.width) ||
          !std::isfinite(b.center.x) || !std::isfinite(b.center.y) || !std::isfinite(b.center.heading))
        report(SceneIssueKind::DegenerateBox, "agent " + a.agent_id + " timestep " + std::to_string(s.t));
    }
    if (a.is_ego) {
      bool complete = static_cast<int>(a.states.size()) == scene.num_timesteps;
      for (std::size_t i = 0; complete && i < a.states.size(); ++i)
        complete = a.states[i].t == static_cast<int>(i);
      if (!complete) report(SceneIssueKind::EgoGap, "ego " + a.agent_id + " must span every timestep");
    }
  }
  if (egos == 0) report(SceneIssueKind::MissingEgo, "no agent has is_ego = true");
  if (egos > 1) report(SceneIssueKind::MultipleEgo, std::to_string(egos) + " ego tracks");

  for (const auto& l : scene.lights) {
    for (std::size_t i = 0; i < l.states.size(); ++i) {
      const int t = l.states[i].t;
      if (i > 0 && t != l.states[i - 1].t + 1)
        report(SceneIssueKind::NonContiguousLight, "light " + l.light_id + " timestep " + std::to_string(t));
      if (t < 0 || t >= scene.num_timesteps)
        report(SceneIssueKind::DanglingTimestep, "light " + l.light_id + " timestep " + std::to_string(t));
    }
  }

  for (const auto& lane : scene.lanes) {
    if (lane.points.size() < 2) report(SceneIssueKind::DegenerateLane, "lane " + lane.lane_id + " has < 2 points");
    for (std::size_t i = 1; i < lane.points.size(); ++i)
      if (lane.points[i] == lane.points[i - 1])
        report(SceneIssueKind::DegenerateLane, "lane " + lane.lane_id + " repeats point " + std::to_string(i));
  }
  return issues;
}

inline std::string describe(const std::vector<SceneIssue>& issues) {
  std::ostringstream os;
  for (const auto& i : issues) os << to_string(i.kind) << ": " << i.detail << '\n';
  return os.str();
}

// JSON schema: one scene per file.

inline nlohmann::json to_json(const Scene& s) {
  using nlohmann::json;
  json j;
  j["scene_id"] = s.scene_id;
  j["frame_rate_hz"] = s.frame_rate;
  j["num_timesteps"] = s.num_timesteps;
  j["lanes"] = json::array();
  for (const auto& lane : s.lanes) {
    json pts = json::array();
    for (const auto& p : lane.points) pts.push_back({p.x, p.y});
    j["lanes"].push_back({{"lane_id", lane.lane_id}, {"points", pts}});
  }
  j["lights"] = json::array();
  for (const auto& l : s.lights) {
    json states = json::array();
    for (const auto& st : l.states) states.push_back({{"t", st.t}, {"signal", to_string(st.signal)}});
    j["lights"].push_back(
        {{"light_id", l.light_id}, {"position", {l.position.x, l.position.y}}, {"states", states}});
  }
  j["agents"] = json::array();
  for (const auto& a : s.agents) {
    json states = json::array();
    for (const auto& st : a.states) {
      const auto& b = st.box;
      states.push_back({{"t", st.t},
                        {"x", b.center.x},
                        {"y", b.center.y},
                        {"heading", b.center.heading},
                        {"length", b.length},
                        {"width", b.width}});
    }
    j["agents"].push_back({{"agent_id", a.agent_id}, {"is_ego", a.is_ego}, {"states", states}});
  }
  return j;
}

namespace detail {
inline std::string id_string(const nlohmann::json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}
}  // namespace detail

/// Parses the scene schema. Structural problems throw InvalidScene; semantic
/// invariants are left to validate_scene.
inline Scene scene_from_json(const nlohmann::json& j) {
  try {
    Scene s;
    s.scene_id = detail::id_string(j.at("scene_id"));
    s.frame_rate = j.at("frame_rate_hz").get<double>();
    s.num_timesteps = j.at("num_timesteps").get<int>();
    for (const auto& lj : j.value("lanes", nlohmann::json::array())) {
      LanePolyline lane;
      lane.lane_id = detail::id_string(lj.at("lane_id"));
      for (const auto& p : lj.at("points")) lane.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      s.lanes.push_back(std::move(lane));
    }
    for (const auto& lj : j.value("lights", nlohmann::json::array())) {
      TrafficLightTrack l;
      l.light_id = detail::id_string(lj.at("light_id"));
      l.position = {lj.at("position").at(0).get<double>(), lj.at("position").at(1).get<double>()};
      for (const auto& st : lj.at("states"))
        l.states.push_back({st.at("t").get<int>(), signal_from_string(st.at("signal").get<std::string>())});
      s.lights.push_back(std::move(l));
    }
    for (const auto& aj : j.value("agents", nlohmann::json::array())) {
      AgentTrack a;
      a.agent_id = detail::id_string(aj.at("agent_id"));
      a.is_ego = aj.value("is_ego", false);
      for (const auto& st : aj.at("states")) {
        OrientedBox b{{st.at("x").get<double>(), st.at("y").get<double>(),
                       normalize_angle(st.at("heading").get<double>())},
                      st.at("length").get<double>(),
                      st.at("width").get<double>()};
        a.states.push_back({st.at("t").get<int>(), b});
      }
      s.agents.push_back(std::move(a));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidScene, e.what());
  }
}

inline std::string scene_to_string(const Scene& s) { return to_json(s).dump(1) + "\n"; }

inline void save_scene(const Scene& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << scene_to_string(s);
}

inline Scene load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidScene, path + ": " + e.what());
  }
  return scene_from_json(j);
}

}  // namespace bevtraj

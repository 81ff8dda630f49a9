#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevtraj/color.hpp"
#include "bevtraj/error.hpp"
#include "bevtraj/geometry.hpp"
#include "bevtraj/scene.hpp"

namespace bevtraj {

enum class LaneLayout { straight, crossing, mixed };

inline std::string_view to_string(LaneLayout l) {
  switch (l) {
    case LaneLayout::straight: return "straight";
    case LaneLayout::crossing: return "crossing";
    case LaneLayout::mixed: return "mixed";
  }
  return "straight";
}

inline LaneLayout layout_from_string(std::string_view s) {
  if (s == "straight") return LaneLayout::straight;
  if (s == "crossing") return LaneLayout::crossing;
  if (s == "mixed") return LaneLayout::mixed;
  throw Error(ErrorCode::InfeasibleParams, "unknown lane_layout '" + std::string(s) + "'");
}

struct LightCycle {
  double red_s = 10.0;
  double green_s = 8.0;
  double yellow_s = 3.0;
};

struct GenParams {
  std::uint64_t seed = 0;
  double duration_s = 15.0;
  double frame_rate = 10.0;
  int n_agents_min = 2;
  int n_agents_max = 6;
  LightCycle light_cycle;
  double speed_limit = 11.0;
  LaneLayout lane_layout = LaneLayout::mixed;
  double ego_turn_probability = 0.4;

  // Optional scenario pins; sampled when absent.
  std::optional<double> ego_light_distance;  // ego center to its light, meters
  std::optional<double> ego_initial_speed;
  std::optional<double> light_phase_s;  // time into the cycle at t = 0 (green starts the cycle)

  void validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::InfeasibleParams, m); };
    if (!(duration_s > 0) || !(frame_rate > 0)) bad("duration and frame rate must be positive");
    if (!(light_cycle.red_s > 0) || !(light_cycle.green_s > 0) || !(light_cycle.yellow_s > 0))
      bad("light cycle durations must be positive");
    if (ego_turn_probability < 0 || ego_turn_probability > 1) bad("ego_turn_probability must lie in [0, 1]");
    if (n_agents_min < 0 || n_agents_max < n_agents_min) bad("n_agents range must satisfy 0 <= min <= max");
    if (!(speed_limit > 0)) bad("speed_limit must be positive");
  }
};

inline nlohmann::json to_json(const GenParams& p) {
  nlohmann::json j{{"seed", p.seed},
                   {"duration_s", p.duration_s},
                   {"frame_rate", p.frame_rate},
                   {"n_agents", {p.n_agents_min, p.n_agents_max}},
                   {"light_cycle", {p.light_cycle.red_s, p.light_cycle.green_s, p.light_cycle.yellow_s}},
                   {"speed_limit", p.speed_limit},
                   {"lane_layout", to_string(p.lane_layout)},
                   {"ego_turn_probability", p.ego_turn_probability}};
  if (p.ego_light_distance) j["ego_light_distance"] = *p.ego_light_distance;
  if (p.ego_initial_speed) j["ego_initial_speed"] = *p.ego_initial_speed;
  if (p.light_phase_s) j["light_phase_s"] = *p.light_phase_s;
  return j;
}

/// Missing keys keep their defaults.
inline GenParams gen_params_from_json(const nlohmann::json& j, GenParams p = {}) {
  try {
    if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("duration_s")) p.duration_s = j["duration_s"].get<double>();
    if (j.contains("frame_rate")) p.frame_rate = j["frame_rate"].get<double>();
    if (j.contains("n_agents")) {
      p.n_agents_min = j["n_agents"].at(0).get<int>();
      p.n_agents_max = j["n_agents"].at(1).get<int>();
    }
    if (j.contains("light_cycle")) {
      const auto& c = j["light_cycle"];
      if (c.is_array()) {
        p.light_cycle = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
      } else {
        p.light_cycle = {c.at("red_s").get<double>(), c.at("green_s").get<double>(), c.at("yellow_s").get<double>()};
      }
    }
    if (j.contains("speed_limit")) p.speed_limit = j["speed_limit"].get<double>();
    if (j.contains("lane_layout")) p.lane_layout = layout_from_string(j["lane_layout"].get<std::string>());
    if (j.contains("ego_turn_probability")) p.ego_turn_probability = j["ego_turn_probability"].get<double>();
    if (j.contains("ego_light_distance")) p.ego_light_distance = j["ego_light_distance"].get<double>();
    if (j.contains("ego_initial_speed")) p.ego_initial_speed = j["ego_initial_speed"].get<double>();
    if (j.contains("light_phase_s")) p.light_phase_s = j["light_phase_s"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InfeasibleParams, std::string("bad generator params: ") + e.what());
  }
  p.validate();
  return p;
}

namespace gen {

/// Piecewise path of straight segments and circular arcs, parametrized by arc length.
class Route {
 public:
  struct Segment {
    bool arc = false;
    Vec2 a, b;                    // line endpoints
    Vec2 center;                  // arc
    double radius = 0, theta0 = 0, sweep = 0;
    double length = 0;
    double s0 = 0;
  };

  struct Projection {
    double s = 0;
    double lateral = 0;  // positive to the left of travel
    double heading = 0;
  };

  Route& line_to(Vec2 a, Vec2 b) {
    Segment seg;
    seg.a = a;
    seg.b = b;
    seg.length = norm(b - a);
    push(seg);
    return *this;
  }

  Route& arc(Vec2 center, double radius, double theta0, double sweep) {
    Segment seg;
    seg.arc = true;
    seg.center = center;
    seg.radius = radius;
    seg.theta0 = theta0;
    seg.sweep = sweep;
    seg.length = radius * std::abs(sweep);
    push(seg);
    return *this;
  }

  double length() const { return segments_.empty() ? 0.0 : segments_.back().s0 + segments_.back().length; }
  const std::vector<Segment>& segments() const { return segments_; }

  Pose2D pose_at(double s) const {
    const Segment& seg = segment_at(s);
    const double u = std::clamp(s - seg.s0, 0.0, seg.length);
    if (!seg.arc) {
      const Vec2 d = seg.b - seg.a;
      const double f = seg.length > 0 ? u / seg.length : 0.0;
      const Vec2 p = seg.a + f * d;
      return {p.x, p.y, std::atan2(d.y, d.x)};
    }
    const double dir = seg.sweep >= 0 ? 1.0 : -1.0;
    const double theta = seg.theta0 + dir * u / seg.radius;
    return {seg.center.x + seg.radius * std::cos(theta), seg.center.y + seg.radius * std::sin(theta),
            normalize_angle(theta + dir * std::numbers::pi / 2)};
  }

  Projection project(Vec2 p) const {
    Projection best;
    double best_d = 1e300;
    for (const auto& seg : segments_) {
      double u, d;
      if (!seg.arc) {
        const Vec2 ab = seg.b - seg.a;
        u = std::clamp(dot(p - seg.a, ab) / std::max(dot(ab, ab), 1e-12), 0.0, 1.0) * seg.length;
        d = norm(p - (seg.a + (u / std::max(seg.length, 1e-12)) * ab));
      } else {
        const Vec2 rel = p - seg.center;
        const double dir = seg.sweep >= 0 ? 1.0 : -1.0;
        double ang = normalize_angle(std::atan2(rel.y, rel.x) - seg.theta0) * dir;
        ang = std::clamp(ang, 0.0, std::abs(seg.sweep));
        u = ang * seg.radius;
        const double theta = seg.theta0 + dir * ang;
        d = norm(p - Vec2{seg.center.x + seg.radius * std::cos(theta), seg.center.y + seg.radius * std::sin(theta)});
      }
      if (d < best_d) {
        best_d = d;
        const Pose2D pose = pose_at(seg.s0 + u);
        const Vec2 off = p - pose.position();
        best.s = seg.s0 + u;
        best.heading = pose.heading;
        best.lateral = -off.x * std::sin(pose.heading) + off.y * std::cos(pose.heading);
      }
    }
    return best;
  }

 private:
  void push(Segment seg) {
    seg.s0 = length();
    segments_.push_back(seg);
  }

  const Segment& segment_at(double s) const {
    for (const auto& seg : segments_)
      if (s <= seg.s0 + seg.length) return seg;
    return segments_.back();
  }

  std::vector<Segment> segments_;
};

struct StopPoint {
  double s_front = 0;  // front bumper must halt at or before this arc length
  int light = 0;
};

struct SpeedZone {
  double s_begin = 0, s_end = 0;
  double v_max = 0;
};

struct RoutePlan {
  Route route;
  std::vector<StopPoint> stops;
  std::vector<SpeedZone> zones;
};

struct LightPlan {
  Vec2 position;
  bool cross_phase = false;
};

inline Signal signal_at(const LightCycle& cycle, double phase_s, double time_s, bool cross_phase) {
  const double period = cycle.green_s + cycle.yellow_s + cycle.red_s;
  double tau = std::fmod(time_s + phase_s, period);
  if (tau < 0) tau += period;
  if (!cross_phase) {
    if (tau < cycle.green_s) return Signal::green;
    if (tau < cycle.green_s + cycle.yellow_s) return Signal::yellow;
    return Signal::red;
  }
  // The crossing road gets its green inside the main road's red, with 1 s clearance on each side.
  const double clearance = 1.0;
  const double g0 = cycle.green_s + cycle.yellow_s + clearance;
  const double y0 = period - cycle.yellow_s - clearance;
  if (y0 <= g0) return Signal::red;
  if (tau >= g0 && tau < y0) return Signal::green;
  if (tau >= y0 && tau < y0 + cycle.yellow_s) return Signal::yellow;
  return Signal::red;
}

struct SimAgent {
  int route = 0;
  double s = 0;
  double v = 0;
  double v_des = 0;
  double length = 4.5;
  double width = 1.9;
  bool is_ego = false;
  bool alive = true;
  std::vector<AgentState> states;
};

struct World {
  std::vector<RoutePlan> routes;
  std::vector<LightPlan> lights;
  std::vector<LanePolyline> lanes;
};

constexpr double kMaxAccel = 3.0;       // m/s^2, both directions
constexpr double kStandstillGap = 2.0;  // m, edge to edge behind a leader
constexpr double kStopLineOffset = 1.5;  // stop line ahead of the light center
constexpr double kStopTolerance = 0.01;
constexpr double kLookahead = 60.0;
constexpr double kLaneSpacing = 3.5;
constexpr double kLightLateral = 0.9;
constexpr double kTurnRadius = 8.0;
constexpr double kTurnLightClearance = 14.0;
constexpr double kMinSeparation = 0.5;
constexpr double kEmitRadius = 40.0;

/// Largest next-step speed that still allows stopping within `room` meters at
/// kMaxAccel, given trapezoidal integration over dt.
inline double safe_speed(double v, double room, double dt) {
  const double a = 1.0 / (2.0 * kMaxAccel);
  const double b = 0.5 * dt;
  const double c = 0.5 * v * dt - room;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0) return -1.0;
  return (-b + std::sqrt(disc)) / (2.0 * a);
}

inline OrientedBox agent_box(const World& w, const SimAgent& a) {
  return {w.routes[a.route].route.pose_at(a.s), a.length, a.width};
}

/// Nearest agent ahead whose box sits in this agent's path; returns the gap
/// (edge to edge along the route) and its speed along the route.
inline std::optional<std::pair<double, double>> find_leader(const World& w, const std::vector<SimAgent>& agents,
                                                            std::size_t self) {
  const SimAgent& me = agents[self];
  const Route& route = w.routes[me.route].route;
  std::optional<std::pair<double, double>> best;
  for (std::size_t j = 0; j < agents.size(); ++j) {
    if (j == self || !agents[j].alive) continue;
    const SimAgent& other = agents[j];
    const Pose2D op = w.routes[other.route].route.pose_at(other.s);
    const auto proj = route.project(op.position());
    if (proj.s <= me.s || proj.s - me.s > kLookahead) continue;
    const double rel = op.heading - proj.heading;
    const double ext_lon = std::abs(0.5 * other.length * std::cos(rel)) + std::abs(0.5 * other.width * std::sin(rel));
    const double ext_lat = std::abs(0.5 * other.length * std::sin(rel)) + std::abs(0.5 * other.width * std::cos(rel));
    if (std::abs(proj.lateral) > 0.5 * me.width + ext_lat + 0.5) continue;
    const double gap = proj.s - me.s - 0.5 * me.length - ext_lon;
    const double v_along = std::max(0.0, other.v * std::cos(rel));
    if (!best || gap < best->first) best = std::make_pair(gap, v_along);
  }
  return best;
}

/// Speed cap from every constraint ahead of the agent; nullopt-free, returns
/// the largest admissible next speed (may be below v - a*dt when cornered).
inline double speed_cap(const World& w, const std::vector<SimAgent>& agents, std::size_t self, double time_s,
                        double dt, const LightCycle& cycle, double phase_s, double speed_limit) {
  const SimAgent& me = agents[self];
  double cap = std::min({me.v + kMaxAccel * dt, me.v_des, speed_limit});
  const RoutePlan& plan = w.routes[me.route];
  const double front = me.s + 0.5 * me.length;
  const double v_floor = std::max(0.0, me.v - kMaxAccel * dt);

  if (auto leader = find_leader(w, agents, self)) {
    const double room = leader->first - kStandstillGap + leader->second * leader->second / (2.0 * kMaxAccel);
    cap = std::min(cap, safe_speed(me.v, room, dt));
  }
  for (const auto& stop : plan.stops) {
    const double room = stop.s_front - front;
    // The last braking step may overshoot the line by up to a*dt^2/8.
    if (room < -kStopTolerance) continue;  // already past the stop line
    const Signal sig = signal_at(cycle, phase_s, time_s, w.lights[stop.light].cross_phase);
    if (sig != Signal::red && sig != Signal::yellow) continue;
    // Below a*dt the exact stop falls inside the step; halting there is still a stop.
    const double v_safe = std::max(0.0, safe_speed(me.v, std::max(0.0, room), dt));
    // Committed vehicles (cannot stop in time) proceed.
    if (v_safe >= v_floor - 1e-9) cap = std::min(cap, v_safe);
  }
  for (const auto& zone : plan.zones) {
    if (me.s >= zone.s_begin && me.s <= zone.s_end) {
      cap = std::min(cap, zone.v_max);
    } else if (me.s < zone.s_begin) {
      const double room = zone.s_begin - me.s + zone.v_max * zone.v_max / (2.0 * kMaxAccel);
      cap = std::min(cap, safe_speed(me.v, room, dt));
    }
  }
  return cap;
}

inline World build_world(bool crossing, bool ego_turns, double light_x, double speed_limit) {
  World w;
  const double x_min = -300, x_max = 500;
  const double xc = light_x + kTurnLightClearance + kTurnRadius;  // crossing road centerline
  const double west_light_x = crossing ? xc + kTurnLightClearance : light_x + 15.0;
  const double cross_light_y = kTurnLightClearance;

  w.lanes.push_back({"E0", {{x_min, 0.0}, {x_max, 0.0}}});
  w.lanes.push_back({"E1", {{x_min, -kLaneSpacing}, {x_max, -kLaneSpacing}}});
  w.lanes.push_back({"W0", {{x_max, kLaneSpacing}, {x_min, kLaneSpacing}}});

  w.lights.push_back({{light_x, -kLightLateral}, false});
  w.lights.push_back({{west_light_x, kLaneSpacing - kLightLateral}, false});

  auto plan_line = [&](Vec2 a, Vec2 b, std::vector<std::pair<int, double>> stops) {
    RoutePlan p;
    p.route.line_to(a, b);
    for (const auto& [light, along] : stops) p.stops.push_back({along - kStopLineOffset, light});
    return p;
  };
  // Route 0: E0, route 1: E1, route 2: W0 (distances along the route).
  w.routes.push_back(plan_line({x_min, 0}, {x_max, 0}, {{0, light_x - x_min}}));
  w.routes.push_back(plan_line({x_min, -kLaneSpacing}, {x_max, -kLaneSpacing}, {{0, light_x - x_min}}));
  w.routes.push_back(plan_line({x_max, kLaneSpacing}, {x_min, kLaneSpacing}, {{1, x_max - west_light_x}}));

  if (crossing) {
    const double y_max = 300, y_min = -300;
    w.lanes.push_back({"S0", {{xc, y_max}, {xc, y_min}}});
    w.lights.push_back({{xc - kLightLateral, cross_light_y}, true});
    // Route 3: southbound crossing road.
    w.routes.push_back(plan_line({xc, y_max}, {xc, y_min}, {{2, y_max - cross_light_y}}));

    LanePolyline connector{"T0", {}};
    const Vec2 center{xc - kTurnRadius, -kTurnRadius};
    for (int i = 0; i <= 16; ++i) {
      const double th = std::numbers::pi / 2 - (std::numbers::pi / 2) * i / 16.0;
      connector.points.push_back({center.x + kTurnRadius * std::cos(th), center.y + kTurnRadius * std::sin(th)});
    }
    w.lanes.push_back(connector);
  }

  // Route for the ego.
  if (crossing && ego_turns) {
    RoutePlan p;
    const Vec2 center{xc - kTurnRadius, -kTurnRadius};
    p.route.line_to({x_min, 0}, {xc - kTurnRadius, 0});
    p.route.arc(center, kTurnRadius, std::numbers::pi / 2, -std::numbers::pi / 2);
    p.route.line_to({xc, -kTurnRadius}, {xc, -300});
    p.stops.push_back({light_x - x_min - kStopLineOffset, 0});
    const double arc_begin = xc - kTurnRadius - x_min;
    const double v_turn = std::min(speed_limit, std::sqrt(2.0 * kTurnRadius));
    p.zones.push_back({arc_begin, arc_begin + kTurnRadius * std::numbers::pi / 2, v_turn});
    w.routes.push_back(std::move(p));
  } else {
    w.routes.push_back(w.routes[0]);
  }
  return w;
}

}  // namespace gen

/// Synthetic ground-truth scene with car following, stop-at-red and optional
/// ego right turn at a crossing.
inline Scene generate_scene(const GenParams& params) {
  using namespace gen;
  params.validate();
  std::mt19937_64 rng(params.seed);
  const double dt = 1.0 / params.frame_rate;
  const int steps = std::max(1, static_cast<int>(std::lround(params.duration_s * params.frame_rate)));
  const LightCycle& cycle = params.light_cycle;
  const double period = cycle.red_s + cycle.green_s + cycle.yellow_s;

  bool crossing = params.lane_layout == LaneLayout::crossing;
  if (params.lane_layout == LaneLayout::mixed) crossing = uniform01(rng) < 0.5;
  const bool ego_turns = crossing && uniform01(rng) < params.ego_turn_probability;
  const double light_x = params.ego_light_distance.value_or(ego_turns ? uniform(rng, 8.0, 22.0) : uniform(rng, 10.0, 60.0));
  const double phase = params.light_phase_s.value_or(uniform(rng, 0.0, period));
  const int n_agents = params.n_agents_min +
                       static_cast<int>(uniform01(rng) * (params.n_agents_max - params.n_agents_min + 1));

  World world = build_world(crossing, ego_turns, light_x, params.speed_limit);
  const int ego_route = static_cast<int>(world.routes.size()) - 1;
  const double x_min = -300;

  std::vector<SimAgent> agents;
  {
    SimAgent ego;
    ego.is_ego = true;
    ego.route = ego_route;
    ego.s = -x_min;
    ego.length = 4.6;
    ego.width = 2.0;
    ego.v_des = uniform(rng, 0.7, 1.0) * params.speed_limit;
    ego.v = params.ego_initial_speed.value_or(ego.v_des * uniform(rng, 0.6, 1.0));
    agents.push_back(ego);
  }

  const OrientedBox ego_box0 = agent_box(world, agents[0]);
  for (int i = 0; i < n_agents; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
      SimAgent a;
      const double pick = uniform01(rng);
      const int routes_available = crossing ? 4 : 3;
      a.route = std::min(routes_available - 1, static_cast<int>(pick * routes_available));
      const double len = world.routes[a.route].route.length();
      double s;
      switch (a.route) {
        case 0: s = -x_min + uniform(rng, -40.0, 80.0); break;
        case 1: s = -x_min + uniform(rng, -40.0, 80.0); break;
        case 2: s = len - (-x_min) - uniform(rng, 10.0, 150.0); break;  // westbound, ahead of the ego
        default: s = uniform(rng, 300.0 - 120.0, 300.0 - 20.0); break;  // southbound, north of the crossing
      }
      a.s = s;
      a.length = uniform(rng, 4.0, 5.0);
      a.width = uniform(rng, 1.8, 2.1);
      const double lo = a.route == 1 ? 0.85 : 0.6;
      a.v_des = uniform(rng, lo, 1.0) * params.speed_limit;
      a.v = a.v_des * uniform(rng, 0.5, 1.0);
      const OrientedBox box = agent_box(world, a);
      bool clear = !boxes_overlap(box.inflated(0.5 * kStandstillGap + 1.0), ego_box0);
      for (std::size_t k = 1; clear && k < agents.size(); ++k)
        clear = !boxes_overlap(box.inflated(0.5 * kStandstillGap + 1.0), agent_box(world, agents[k]));
      if (clear) {
        agents.push_back(a);
        placed = true;
      }
    }
    if (!placed)
      throw Error(ErrorCode::InfeasibleParams,
                  "cannot place agent " + std::to_string(i) + " of " + std::to_string(n_agents) + " without overlap");
  }

  // Initial speeds must let every agent stop behind its leader and at a red or yellow stop line.
  for (int pass = 0; pass < 50; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      auto& a = agents[i];
      double limit = a.v;
      if (auto leader = find_leader(world, agents, i)) {
        const double room = leader->first - kStandstillGap + leader->second * leader->second / (2 * kMaxAccel);
        limit = std::min(limit, std::sqrt(2 * kMaxAccel * std::max(0.0, room)));
      }
      const double front = a.s + 0.5 * a.length;
      for (const auto& stop : world.routes[a.route].stops) {
        const double room = stop.s_front - front;
        const Signal sig = signal_at(cycle, phase, 0.0, world.lights[stop.light].cross_phase);
        if (room >= 0 && sig != Signal::green) limit = std::min(limit, std::sqrt(2 * kMaxAccel * room));
      }
      for (const auto& zone : world.routes[a.route].zones)
        if (a.s < zone.s_begin)
          limit = std::min(limit, std::sqrt(zone.v_max * zone.v_max + 2 * kMaxAccel * (zone.s_begin - a.s)));
      if (limit < a.v - 1e-12) {
        a.v = limit;
        changed = true;
      }
    }
    if (!changed) break;
  }

  // Simulate. States are recorded before each update.
  for (int k = 0; k < steps; ++k) {
    const double time_s = k * dt;
    for (auto& a : agents) {
      if (!a.alive) continue;
      a.states.push_back({k, agent_box(world, a)});
    }
    std::vector<double> next(agents.size(), 0.0);
    for (std::size_t i = 0; i < agents.size(); ++i) {
      if (!agents[i].alive) continue;
      const double cap = speed_cap(world, agents, i, time_s, dt, cycle, phase, params.speed_limit);
      next[i] = std::max(cap, std::max(0.0, agents[i].v - kMaxAccel * dt));
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
      auto& a = agents[i];
      if (!a.alive) continue;
      a.s += 0.5 * (a.v + next[i]) * dt;
      a.v = next[i];
      if (a.s > world.routes[a.route].route.length() - 0.5 * a.length) {
        if (a.is_ego) throw Error(ErrorCode::InfeasibleParams, "ego ran off the end of its route");
        a.alive = false;
      }
    }
  }

  // Drop non-ego agents that come closer than the minimum separation to anyone.
  std::vector<char> removed(agents.size(), 0);
  for (bool again = true; again;) {
    again = false;
    for (std::size_t i = 0; i < agents.size() && !again; ++i) {
      if (removed[i]) continue;
      for (std::size_t j = i + 1; j < agents.size() && !again; ++j) {
        if (removed[j]) continue;
        for (const auto& si : agents[i].states) {
          const auto it = std::lower_bound(agents[j].states.begin(), agents[j].states.end(), si.t,
                                           [](const AgentState& s, int t) { return s.t < t; });
          if (it == agents[j].states.end() || it->t != si.t) continue;
          if (boxes_overlap(si.box.inflated(0.5 * kMinSeparation), it->box.inflated(0.5 * kMinSeparation))) {
            removed[agents[j].is_ego ? i : j] = 1;
            again = true;
            break;
          }
        }
      }
    }
  }

  Scene scene;
  scene.scene_id = "synth_" + std::to_string(params.seed);
  scene.frame_rate = params.frame_rate;
  scene.num_timesteps = steps;
  scene.lanes = world.lanes;
  for (std::size_t l = 0; l < world.lights.size(); ++l) {
    TrafficLightTrack track;
    track.light_id = "L" + std::to_string(l);
    track.position = world.lights[l].position;
    for (int k = 0; k < steps; ++k)
      track.states.push_back({k, signal_at(cycle, phase, k * dt, world.lights[l].cross_phase)});
    scene.lights.push_back(std::move(track));
  }
  const auto& ego_states = agents[0].states;
  int next_id = 0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (removed[i]) continue;
    AgentTrack track;
    track.is_ego = agents[i].is_ego;
    track.agent_id = track.is_ego ? "ego" : "a" + std::to_string(next_id++);
    for (const auto& st : agents[i].states) {
      if (!track.is_ego) {
        const Vec2 d = st.box.center.position() - ego_states[static_cast<std::size_t>(st.t)].box.center.position();
        if (norm(d) > kEmitRadius) continue;
      }
      track.states.push_back(st);
    }
    if (!track.states.empty()) scene.agents.push_back(std::move(track));
  }
  return scene;
}

/// Scenes for seeds seed, seed + 1, ...
inline std::vector<Scene> generate_corpus(const GenParams& params, int n_scenes) {
  if (n_scenes < 1) throw Error(ErrorCode::InfeasibleParams, "n_scenes must be >= 1");
  std::vector<Scene> out;
  out.reserve(static_cast<std::size_t>(n_scenes));
  for (int i = 0; i < n_scenes; ++i) {
    GenParams p = params;
    p.seed = params.seed + static_cast<std::uint64_t>(i);
    try {
      out.push_back(generate_scene(p));
    } catch (const Error& e) {
      throw Error(e.code(), "scene index " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace bevtraj

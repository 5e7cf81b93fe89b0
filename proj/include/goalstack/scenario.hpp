// Copyright 2026 The goalstack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// \file scenario.hpp
/// \brief Synthetic world model: scripted agents, map polylines, ego route and
/// navigation commands, plus the feature field and noisy detections that stand
/// in for the camera/BEV-encoder stack.

#ifndef GOALSTACK__SCENARIO_HPP_
#define GOALSTACK__SCENARIO_HPP_

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "goalstack/common.hpp"
#include "goalstack/geometry.hpp"
#include "goalstack/grid.hpp"
#include "goalstack/kernel.hpp"

namespace goalstack
{

enum class AgentClass { vehicle, pedestrian };
enum class Command { left, right, forward };

inline const char * to_string(AgentClass c) { return c == AgentClass::vehicle ? "vehicle" : "pedestrian"; }

inline const char * to_string(Command c)
{
  switch (c) {
    case Command::left:
      return "left";
    case Command::right:
      return "right";
    default:
      return "forward";
  }
}

inline Command command_from_string(const std::string & s)
{
  if (s == "left") return Command::left;
  if (s == "right") return Command::right;
  if (s == "forward") return Command::forward;
  throw ConfigError("unknown command '" + s + "'");
}

inline AgentClass agent_class_from_string(const std::string & s)
{
  if (s == "vehicle") return AgentClass::vehicle;
  if (s == "pedestrian") return AgentClass::pedestrian;
  throw ConfigError("unknown agent class '" + s + "'");
}

struct AgentFrame
{
  Box2d box;
  bool valid = false;

  bool operator==(const AgentFrame &) const = default;
};

struct ScenarioAgent
{
  std::int32_t id = 0;
  AgentClass cls = AgentClass::vehicle;
  std::vector<AgentFrame> frames;  // one per scenario frame

  bool operator==(const ScenarioAgent &) const = default;
};

/// Map polylines per class. `drivable` holds road centre lines; the drivable
/// area is everything within `road_half_width` of them.
struct MapLayers
{
  std::vector<Polyline> lanes;
  std::vector<Polyline> dividers;
  std::vector<Polyline> crossings;
  std::vector<Polyline> drivable;

  bool operator==(const MapLayers &) const = default;
};

struct Scenario
{
  double frame_rate = 2.0;
  int horizon = 0;
  std::vector<ScenarioAgent> agents;
  MapLayers map;
  std::vector<Box2d> ego;
  std::vector<Command> command;

  double dt() const { return 1.0 / frame_rate; }

  bool operator==(const Scenario &) const = default;
};

/// Rasterization widths for map classes (half-widths in metres).
struct MapRasterSpec
{
  double lane_half_width = 0.5;
  double divider_half_width = 0.3;
  double crossing_half_width = 1.5;
  double road_half_width = 5.25;
};

enum MapClass : int { kLane = 0, kDivider = 1, kCrossing = 2, kDrivable = 3, kNumMapClasses = 4 };

inline const char * map_class_name(int c)
{
  static const char * names[] = {"lane", "divider", "crossing", "drivable"};
  return names[c];
}

inline std::array<MaskGrid, kNumMapClasses> rasterize_map(
  const GridSpec & g, const MapLayers & map, const MapRasterSpec & r = {})
{
  std::array<MaskGrid, kNumMapClasses> out{MaskGrid(g), MaskGrid(g), MaskGrid(g), MaskGrid(g)};
  paint_polylines(out[kLane], map.lanes, r.lane_half_width);
  paint_polylines(out[kDivider], map.dividers, r.divider_half_width);
  paint_polylines(out[kCrossing], map.crossings, r.crossing_half_width);
  paint_polylines(out[kDrivable], map.drivable, r.road_half_width);
  return out;
}

/// Valid agents at frame t as parallel (ids, boxes, classes) lists.
struct FrameAgents
{
  std::vector<std::int32_t> ids;
  std::vector<Box2d> boxes;
  std::vector<AgentClass> classes;
};

inline FrameAgents agents_at(const Scenario & s, int t)
{
  FrameAgents fa;
  if (t < 0 || t >= s.horizon) {
    return fa;
  }
  for (const auto & a : s.agents) {
    if (a.frames[static_cast<std::size_t>(t)].valid) {
      fa.ids.push_back(a.id);
      fa.boxes.push_back(a.frames[static_cast<std::size_t>(t)].box);
      fa.classes.push_back(a.cls);
    }
  }
  return fa;
}

inline void validate_scenario(const Scenario & s)
{
  if (!(s.frame_rate > 0.0)) throw ConfigError("scenario: frame_rate must be positive");
  if (s.horizon <= 0) throw ConfigError("scenario: horizon must be positive");
  if (static_cast<int>(s.ego.size()) != s.horizon) throw ConfigError("scenario: ego frame count != horizon");
  if (static_cast<int>(s.command.size()) != s.horizon) {
    throw ConfigError("scenario: command count != horizon");
  }
  std::set<std::int32_t> ids;
  for (const auto & a : s.agents) {
    if (a.id <= 0) throw ConfigError("scenario: agent ids must be positive");
    if (!ids.insert(a.id).second) throw ConfigError("scenario: duplicate agent id " + std::to_string(a.id));
    if (static_cast<int>(a.frames.size()) != s.horizon) {
      throw ConfigError("scenario: agent " + std::to_string(a.id) + " frame count != horizon");
    }
    for (const auto & f : a.frames) {
      if (f.valid && !box_valid(f.box)) {
        throw ConfigError("scenario: agent " + std::to_string(a.id) + " has a degenerate box");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json frame_to_json(int t, const Box2d & b, bool valid)
{
  return {{"t", t}, {"x", b.x}, {"y", b.y}, {"w", b.w}, {"l", b.l}, {"yaw", b.yaw}, {"valid", valid}};
}

inline nlohmann::json polylines_to_json(const std::vector<Polyline> & lines)
{
  nlohmann::json arr = nlohmann::json::array();
  for (const auto & l : lines) {
    nlohmann::json pl = nlohmann::json::array();
    for (const auto & p : l) {
      pl.push_back({p.x(), p.y()});
    }
    arr.push_back(pl);
  }
  return arr;
}

inline std::vector<Polyline> polylines_from_json(const nlohmann::json & j)
{
  std::vector<Polyline> out;
  for (const auto & pl : j) {
    Polyline l;
    for (const auto & p : pl) {
      l.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    out.push_back(std::move(l));
  }
  return out;
}

inline nlohmann::json scenario_to_json(const Scenario & s)
{
  nlohmann::json j;
  j["schema"] = 1;
  j["frame_rate"] = s.frame_rate;
  j["horizon"] = s.horizon;
  j["agents"] = nlohmann::json::array();
  for (const auto & a : s.agents) {
    nlohmann::json frames = nlohmann::json::array();
    for (std::size_t t = 0; t < a.frames.size(); ++t) {
      frames.push_back(frame_to_json(static_cast<int>(t), a.frames[t].box, a.frames[t].valid));
    }
    j["agents"].push_back({{"id", a.id}, {"class", to_string(a.cls)}, {"frames", frames}});
  }
  j["map"] = {
    {"lanes", polylines_to_json(s.map.lanes)},
    {"dividers", polylines_to_json(s.map.dividers)},
    {"crossings", polylines_to_json(s.map.crossings)},
    {"drivable", polylines_to_json(s.map.drivable)}};
  j["ego"] = nlohmann::json::array();
  for (std::size_t t = 0; t < s.ego.size(); ++t) {
    j["ego"].push_back(frame_to_json(static_cast<int>(t), s.ego[t], true));
  }
  j["command"] = nlohmann::json::array();
  for (auto c : s.command) {
    j["command"].push_back(to_string(c));
  }
  return j;
}

inline Box2d box_from_json(const nlohmann::json & f)
{
  return {f.at("x").get<double>(), f.at("y").get<double>(), f.at("w").get<double>(),
          f.at("l").get<double>(), f.at("yaw").get<double>()};
}

inline Scenario scenario_from_json(const nlohmann::json & j)
{
  Scenario s;
  try {
    if (j.value("schema", 0) != 1) {
      throw ConfigError("scenario: unsupported or missing schema version");
    }
    s.frame_rate = j.at("frame_rate").get<double>();
    s.horizon = j.at("horizon").get<int>();
    for (const auto & ja : j.at("agents")) {
      ScenarioAgent a;
      a.id = ja.at("id").get<std::int32_t>();
      a.cls = agent_class_from_string(ja.at("class").get<std::string>());
      a.frames.resize(static_cast<std::size_t>(std::max(s.horizon, 0)));
      for (const auto & f : ja.at("frames")) {
        const int t = f.at("t").get<int>();
        if (t < 0 || t >= s.horizon) {
          throw ConfigError("scenario: agent frame t=" + std::to_string(t) + " outside horizon");
        }
        a.frames[static_cast<std::size_t>(t)] = {box_from_json(f), f.value("valid", true)};
      }
      s.agents.push_back(std::move(a));
    }
    const auto & jm = j.at("map");
    s.map.lanes = polylines_from_json(jm.value("lanes", nlohmann::json::array()));
    s.map.dividers = polylines_from_json(jm.value("dividers", nlohmann::json::array()));
    s.map.crossings = polylines_from_json(jm.value("crossings", nlohmann::json::array()));
    s.map.drivable = polylines_from_json(jm.value("drivable", nlohmann::json::array()));
    for (const auto & f : j.at("ego")) {
      s.ego.push_back(box_from_json(f));
    }
    for (const auto & c : j.at("command")) {
      s.command.push_back(command_from_string(c.get<std::string>()));
    }
  } catch (const nlohmann::json::exception & e) {
    throw ConfigError(std::string("scenario: malformed JSON: ") + e.what());
  }
  validate_scenario(s);
  return s;
}

// ---------------------------------------------------------------------------
// Generation

struct ScenarioConfig
{
  int horizon = 24;
  double frame_rate = 2.0;
  int num_vehicles = 6;
  int num_pedestrians = 2;
  double vehicle_speed_min = 0.0;
  double vehicle_speed_max = 6.0;
  double vehicle_yaw_rate_max = 0.15;
  double pedestrian_speed_max = 0.8;
  double pedestrian_yaw_rate_max = 0.3;
  double ego_speed = 5.0;
  double ego_yaw_rate = 0.12;  // magnitude used on turning segments
  double spawn_radius = 40.0;
  /// Agents are visible while inside this half-extent around the ego; once an
  /// agent leaves it stays invalid.
  double visible_half_extent = 51.2;
  double lane_width = 3.5;
};

inline void validate_scenario_config(const ScenarioConfig & c)
{
  if (c.horizon <= 0) throw ConfigError("generator: horizon must be positive");
  if (!(c.frame_rate > 0.0)) throw ConfigError("generator: frame_rate must be positive");
  if (c.num_vehicles < 0 || c.num_pedestrians < 0) throw ConfigError("generator: negative agent count");
  if (c.vehicle_speed_max < c.vehicle_speed_min || c.vehicle_speed_min < 0.0) {
    throw ConfigError("generator: bad vehicle speed range");
  }
  if (c.pedestrian_speed_max < 0.0) throw ConfigError("generator: bad pedestrian speed range");
  if (!(c.visible_half_extent > 0.0)) throw ConfigError("generator: visible extent must be positive");
}

/// Constant turn-rate and velocity motion, closed form over one step.
inline Box2d ctrv_step(const Box2d & b, double v, double omega, double dt)
{
  Box2d n = b;
  if (std::abs(omega) < 1e-9) {
    n.x = b.x + v * dt * std::cos(b.yaw);
    n.y = b.y + v * dt * std::sin(b.yaw);
  } else {
    n.x = b.x + v / omega * (std::sin(b.yaw + omega * dt) - std::sin(b.yaw));
    n.y = b.y - v / omega * (std::cos(b.yaw + omega * dt) - std::cos(b.yaw));
    n.yaw = wrap_angle(b.yaw + omega * dt);
  }
  return n;
}

/// Command at frame t from the heading change over the next 3 s of the route.
inline Command command_from_heading_change(double dpsi)
{
  constexpr double kTurn = 0.15;
  if (dpsi > kTurn) return Command::left;
  if (dpsi < -kTurn) return Command::right;
  return Command::forward;
}

inline Polyline offset_polyline(const Polyline & line, double offset)
{
  Polyline out;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const Vec2 a = line[i == 0 ? 0 : i - 1];
    const Vec2 b = line[i + 1 < line.size() ? i + 1 : i];
    Vec2 d = b - a;
    const double n = d.norm();
    d = n > 0.0 ? Vec2(d / n) : Vec2(1.0, 0.0);
    out.push_back(line[i] + offset * Vec2(-d.y(), d.x()));
  }
  return out;
}

inline Scenario generate_scenario(const ScenarioConfig & cfg, std::uint64_t seed)
{
  validate_scenario_config(cfg);
  Rng rng(derive_seed(seed, "scenario"));
  Scenario s;
  s.frame_rate = cfg.frame_rate;
  s.horizon = cfg.horizon;
  const double dt = 1.0 / cfg.frame_rate;
  const int H = cfg.horizon;

  // Ego route: piecewise constant yaw rate over 8-frame segments.
  std::vector<double> ego_omega(static_cast<std::size_t>(H), 0.0);
  for (int t = 0; t < H; t += 8) {
    const double u = rng.uniform();
    const double om = u < 0.6 ? 0.0 : (u < 0.8 ? cfg.ego_yaw_rate : -cfg.ego_yaw_rate);
    for (int k = t; k < std::min(H, t + 8); ++k) {
      ego_omega[static_cast<std::size_t>(k)] = om;
    }
  }
  Box2d ego{0.0, 0.0, 1.85, 4.08, 0.0};
  for (int t = 0; t < H; ++t) {
    s.ego.push_back(ego);
    ego = ctrv_step(ego, cfg.ego_speed, ego_omega[static_cast<std::size_t>(t)], dt);
  }
  const int look = static_cast<int>(std::lround(3.0 * cfg.frame_rate));
  for (int t = 0; t < H; ++t) {
    // Heading change over the look-ahead window, integrated from the yaw rates.
    double dpsi = 0.0;
    for (int k = t; k < std::min(H, t + look); ++k) {
      dpsi += ego_omega[static_cast<std::size_t>(k)] * dt;
    }
    s.command.push_back(command_from_heading_change(dpsi));
  }

  // Map: route centre line extended 30 m at both ends, neighbour lanes, dividers,
  // one crossing ahead of the ego.
  Polyline centre;
  {
    const Box2d & first = s.ego.front();
    const Box2d & last = s.ego.back();
    centre.emplace_back(first.x - 30.0 * std::cos(first.yaw), first.y - 30.0 * std::sin(first.yaw));
    for (const auto & b : s.ego) {
      centre.push_back(b.center());
    }
    centre.emplace_back(last.x + 30.0 * std::cos(last.yaw), last.y + 30.0 * std::sin(last.yaw));
  }
  s.map.lanes = {centre, offset_polyline(centre, cfg.lane_width), offset_polyline(centre, -cfg.lane_width)};
  s.map.dividers = {
    offset_polyline(centre, 0.5 * cfg.lane_width), offset_polyline(centre, -0.5 * cfg.lane_width)};
  s.map.drivable = {centre};
  {
    const std::size_t k = std::min<std::size_t>(s.ego.size() - 1, static_cast<std::size_t>(H / 2));
    const Box2d & b = s.ego[k];
    const Vec2 n(-std::sin(b.yaw), std::cos(b.yaw));
    const double half = 1.5 * cfg.lane_width;
    s.map.crossings = {{b.center() - half * n, b.center() + half * n}};
  }

  // Agents: rejection-sample CTRV scripts that never touch the ego (with a
  // 1 m margin) or each other.
  auto dilated = [](Box2d b, double m) {
    b.w += 2.0 * m;
    b.l += 2.0 * m;
    return b;
  };
  std::int32_t next_id = 1;
  const int total = cfg.num_vehicles + cfg.num_pedestrians;
  for (int n = 0; n < total; ++n) {
    const bool vehicle = n < cfg.num_vehicles;
    for (int attempt = 0; attempt < 50; ++attempt) {
      const double r = cfg.spawn_radius * std::sqrt(rng.uniform());
      const double ang = rng.uniform(-kPi, kPi);
      Box2d b;
      b.x = r * std::cos(ang);
      b.y = r * std::sin(ang);
      b.yaw = rng.uniform(-kPi, kPi);
      double v, om;
      if (vehicle) {
        b.w = rng.uniform(1.7, 2.1);
        b.l = rng.uniform(4.0, 5.0);
        v = rng.uniform(cfg.vehicle_speed_min, cfg.vehicle_speed_max);
        om = rng.uniform(-cfg.vehicle_yaw_rate_max, cfg.vehicle_yaw_rate_max);
      } else {
        b.w = rng.uniform(0.6, 0.8);
        b.l = rng.uniform(0.6, 0.8);
        v = rng.uniform(0.0, cfg.pedestrian_speed_max);
        om = rng.uniform(-cfg.pedestrian_yaw_rate_max, cfg.pedestrian_yaw_rate_max);
      }
      ScenarioAgent a;
      a.cls = vehicle ? AgentClass::vehicle : AgentClass::pedestrian;
      Box2d cur = b;
      bool ok = true;
      bool seen = false;
      bool left = false;
      for (int t = 0; t < H && ok; ++t) {
        const Box2d & e = s.ego[static_cast<std::size_t>(t)];
        if (rotated_iou(dilated(cur, 1.0), e) > 0.0) {
          ok = false;
          break;
        }
        for (const auto & other : s.agents) {
          if (rotated_iou(dilated(cur, 0.5), other.frames[static_cast<std::size_t>(t)].box) > 0.0) {
            ok = false;
            break;
          }
        }
        const bool inside = std::abs(cur.x - e.x) <= cfg.visible_half_extent &&
                            std::abs(cur.y - e.y) <= cfg.visible_half_extent;
        if (seen && !inside) {
          left = true;
        }
        const bool valid = inside && !left;
        seen = seen || valid;
        a.frames.push_back({cur, valid});
        cur = ctrv_step(cur, v, om, dt);
      }
      if (ok) {
        a.id = next_id++;
        s.agents.push_back(std::move(a));
        break;
      }
    }
  }
  validate_scenario(s);
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic BEV features

struct FeatureSynthConfig
{
  int channels = 256;
  double amplitude = 1.0;
  double noise_std = 0.1;
};

enum SignatureClass : int {
  kSigVehicle = 0,
  kSigPedestrian = 1,
  kSigLane = 2,
  kSigDivider = 3,
  kSigCrossing = 4,
  kSigDrivable = 5,
  kNumSignatures = 6
};

/// Orthonormal per-class feature signatures (rows), fixed by the seed only.
inline Eigen::MatrixXd class_signatures(int channels, std::uint64_t seed)
{
  require(channels >= kNumSignatures, "bev-scene", "class_signatures", "too few channels");
  Rng rng(derive_seed(seed, "signatures"));
  Eigen::MatrixXd s(kNumSignatures, channels);
  for (int i = 0; i < kNumSignatures; ++i) {
    for (int c = 0; c < channels; ++c) {
      s(i, c) = rng.normal();
    }
    for (int j = 0; j < i; ++j) {
      s.row(i) -= s.row(i).dot(s.row(j)) * s.row(j);
    }
    s.row(i).normalize();
  }
  return s;
}

/// Feature field: seeded Gaussian noise plus `amplitude` times the signature of
/// every class present at the cell (agents from rasterized boxes, map classes
/// from the map raster).
inline BevGrid synth_bev_features(
  const Scenario & s, int frame, const GridSpec & g, const FeatureSynthConfig & cfg,
  std::uint64_t seed, const MapRasterSpec & map_raster = {})
{
  require(frame >= 0 && frame < s.horizon, "bev-scene", "synth_bev_features", "frame outside horizon");
  const Eigen::MatrixXd sig = class_signatures(cfg.channels, seed);
  BevGrid out(g, cfg.channels);
  Rng rng(derive_seed(seed, "bev-noise", static_cast<std::uint64_t>(frame)));
  for (Eigen::Index i = 0; i < out.data.rows(); ++i) {
    for (Eigen::Index c = 0; c < out.data.cols(); ++c) {
      out.data(i, c) = cfg.noise_std * rng.normal();
    }
  }
  const FrameAgents fa = agents_at(s, frame);
  std::vector<std::int32_t> cls_ids;
  for (auto c : fa.classes) {
    cls_ids.push_back(c == AgentClass::vehicle ? 1 : 2);
  }
  const LabelGrid agents = rasterize_boxes(g, fa.boxes, cls_ids);
  const auto map = rasterize_map(g, s.map, map_raster);
  for (int iy = 0; iy < g.height; ++iy) {
    for (int ix = 0; ix < g.width; ++ix) {
      auto row = out.cell(ix, iy);
      const std::int32_t a = agents.at(ix, iy);
      if (a == 1) row += cfg.amplitude * sig.row(kSigVehicle);
      if (a == 2) row += cfg.amplitude * sig.row(kSigPedestrian);
      if (map[kLane].at(ix, iy)) row += cfg.amplitude * sig.row(kSigLane);
      if (map[kDivider].at(ix, iy)) row += cfg.amplitude * sig.row(kSigDivider);
      if (map[kCrossing].at(ix, iy)) row += cfg.amplitude * sig.row(kSigCrossing);
      if (map[kDrivable].at(ix, iy)) row += cfg.amplitude * sig.row(kSigDrivable);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detections

struct NoiseSpec
{
  double pos_std = 0.0;
  double yaw_std = 0.0;
  /// Scores are 1 - |N(0, score_std)|, clamped to [0, 1].
  double score_std = 0.0;
  double drop_prob = 0.0;
  /// Probability of one false positive per frame.
  double fp_prob = 0.0;
};

struct Detection
{
  Box2d box;
  double score = 1.0;
  AgentClass cls = AgentClass::vehicle;
  std::uint64_t feature_seed = 0;
  /// Ground-truth agent id, or -1 for a false positive. Not visible to the tracker.
  std::int32_t source_id = -1;
};

struct DetectionFrame
{
  int t = 0;
  /// Ego pose at this frame (the ego track follows it directly).
  Box2d ego;
  std::vector<Detection> detections;
};

inline DetectionFrame corrupt_detections(
  const Scenario & s, int frame, const NoiseSpec & noise, std::uint64_t seed)
{
  require(frame >= 0 && frame < s.horizon, "bev-scene", "corrupt_detections", "frame outside horizon");
  require(
    noise.pos_std >= 0.0 && noise.yaw_std >= 0.0 && noise.score_std >= 0.0, "bev-scene",
    "corrupt_detections", "noise stds must be non-negative");
  require(
    noise.drop_prob >= 0.0 && noise.drop_prob <= 1.0 && noise.fp_prob >= 0.0 && noise.fp_prob <= 1.0,
    "bev-scene", "corrupt_detections", "probabilities must lie in [0, 1]");
  Rng rng(derive_seed(seed, "detections", static_cast<std::uint64_t>(frame)));
  DetectionFrame df;
  df.t = frame;
  df.ego = s.ego[static_cast<std::size_t>(frame)];
  for (const auto & a : s.agents) {
    const AgentFrame & f = a.frames[static_cast<std::size_t>(frame)];
    if (!f.valid) {
      continue;
    }
    // Draw every variate regardless of the outcome so one agent's draws never
    // depend on another's.
    const bool drop = rng.uniform() < noise.drop_prob;
    const double nx = rng.normal();
    const double ny = rng.normal();
    const double nyaw = rng.normal();
    const double nscore = rng.normal();
    if (drop) {
      continue;
    }
    Detection d;
    d.box = f.box;
    d.box.x += noise.pos_std * nx;
    d.box.y += noise.pos_std * ny;
    d.box.yaw = wrap_angle(d.box.yaw + noise.yaw_std * nyaw);
    d.score = std::clamp(1.0 - std::abs(noise.score_std * nscore), 0.0, 1.0);
    d.cls = a.cls;
    d.feature_seed = derive_seed(seed, "agent-feature", static_cast<std::uint64_t>(a.id));
    d.source_id = a.id;
    df.detections.push_back(d);
  }
  const bool fp = rng.uniform() < noise.fp_prob;
  const double r = 40.0 * std::sqrt(rng.uniform());
  const double ang = rng.uniform(-kPi, kPi);
  const double yaw = rng.uniform(-kPi, kPi);
  const double score = rng.uniform();
  if (fp) {
    Detection d;
    d.box = {df.ego.x + r * std::cos(ang), df.ego.y + r * std::sin(ang), 1.9, 4.5, yaw};
    d.score = score;
    d.feature_seed = derive_seed(seed, "fp-feature", static_cast<std::uint64_t>(frame));
    df.detections.push_back(d);
  }
  return df;
}

}  // namespace goalstack

#endif  // GOALSTACK__SCENARIO_HPP_

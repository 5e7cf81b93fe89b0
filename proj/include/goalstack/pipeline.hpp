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

/// \file pipeline.hpp
/// \brief Configuration, the per-frame loop (track, map, motion, smoothed
/// targets, occupancy, plan, optimize, metrics), artifact persistence and
/// suite evaluation.

#ifndef GOALSTACK__PIPELINE_HPP_
#define GOALSTACK__PIPELINE_HPP_

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "goalstack/common.hpp"
#include "goalstack/grid.hpp"
#include "goalstack/io.hpp"
#include "goalstack/map_head.hpp"
#include "goalstack/metrics.hpp"
#include "goalstack/motion.hpp"
#include "goalstack/occupancy.hpp"
#include "goalstack/planner.hpp"
#include "goalstack/scenario.hpp"
#include "goalstack/smoother.hpp"
#include "goalstack/tracker.hpp"
#include "goalstack/weights.hpp"

namespace goalstack
{

// ---------------------------------------------------------------------------
// Configuration

enum class OccupancySource { predicted, oracle };

struct PipelineConfig
{
  std::uint64_t seed = 0;
  int dim = 256;
  int grid_size = 200;
  double grid_half_extent = 51.2;
  FeatureSynthConfig features;
  NoiseSpec noise;
  ScenarioConfig scenario;
  MapRasterSpec map_raster;
  TrackerConfig tracker;
  MapHeadConfig map;
  MotionConfig motion;
  int anchor_scenarios = 8;
  OccConfig occupancy;
  PlannerConfig planner;
  PlanOptimizerOptions optimizer;
  OccupancySource occupancy_source = OccupancySource::predicted;
  SmootherProblem smoother_problem;
  SmootherOptions smoother;
  double near_side = 30.0;
  double far_side = 100.0;
  bool write_probabilities = false;

  GridSpec grid() const
  {
    GridSpec g;
    g.height = g.width = grid_size;
    g.x_min = g.y_min = -grid_half_extent;
    g.x_max = g.y_max = grid_half_extent;
    return g;
  }
};

/// Reduced sizes for fast runs; everything else keeps its default.
inline PipelineConfig reduced_config()
{
  PipelineConfig c;
  c.dim = 32;
  c.grid_size = 64;
  c.features.channels = 32;
  c.tracker.dim = c.map.dim = c.motion.dim = c.occupancy.dim = c.planner.dim = 32;
  c.tracker.heads = c.map.heads = c.motion.heads = c.occupancy.heads = c.planner.heads = 4;
  c.tracker.ffn_dim = c.map.ffn_dim = c.motion.ffn_dim = c.planner.ffn_dim = 64;
  c.map.thing_queries = 20;
  c.scenario.horizon = 20;
  c.anchor_scenarios = 4;
  return c;
}

namespace detail
{

/// Reads known keys from one JSON object and rejects the rest.
class Section
{
public:
  Section(const nlohmann::json & j, std::string name) : j_(j), name_(std::move(name))
  {
    if (!j_.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
  }

  template <class T>
  void get(const char * key, T & v)
  {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      v = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception &) {
      throw ConfigError("config: '" + name_ + "." + key + "' has the wrong type");
    }
  }

  bool has(const char * key) const { return j_.contains(key); }
  const nlohmann::json & at(const char * key)
  {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const
  {
    for (const auto & [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("config: unknown key '" + name_ + "." + k + "'");
    }
  }

private:
  const nlohmann::json & j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline nlohmann::json config_to_json(const PipelineConfig & c)
{
  using nlohmann::json;
  json j;
  j["seed"] = c.seed;
  j["dim"] = c.dim;
  j["grid"] = {{"size", c.grid_size}, {"half_extent", c.grid_half_extent}};
  j["features"] = {{"amplitude", c.features.amplitude}, {"noise_std", c.features.noise_std}};
  j["noise"] = {{"pos_std", c.noise.pos_std}, {"yaw_std", c.noise.yaw_std}, {"score_std", c.noise.score_std},
                {"drop_prob", c.noise.drop_prob}, {"fp_prob", c.noise.fp_prob}};
  const auto & s = c.scenario;
  j["scenario"] = {{"horizon", s.horizon}, {"frame_rate", s.frame_rate}, {"num_vehicles", s.num_vehicles},
                   {"num_pedestrians", s.num_pedestrians}, {"vehicle_speed_min", s.vehicle_speed_min},
                   {"vehicle_speed_max", s.vehicle_speed_max}, {"vehicle_yaw_rate_max", s.vehicle_yaw_rate_max},
                   {"pedestrian_speed_max", s.pedestrian_speed_max},
                   {"pedestrian_yaw_rate_max", s.pedestrian_yaw_rate_max}, {"ego_speed", s.ego_speed},
                   {"ego_yaw_rate", s.ego_yaw_rate}, {"spawn_radius", s.spawn_radius},
                   {"visible_half_extent", s.visible_half_extent}, {"lane_width", s.lane_width}};
  j["map_raster"] = {{"lane_half_width", c.map_raster.lane_half_width},
                     {"divider_half_width", c.map_raster.divider_half_width},
                     {"crossing_half_width", c.map_raster.crossing_half_width},
                     {"road_half_width", c.map_raster.road_half_width}};
  const auto & t = c.tracker;
  j["tracker"] = {{"dim", t.dim}, {"heads", t.heads}, {"layers", t.layers}, {"ffn_dim", t.ffn_dim},
                  {"deform_points", t.deform_points}, {"spawn_threshold", t.spawn_threshold},
                  {"keep_threshold", t.keep_threshold}, {"lifecycle_seconds", t.lifecycle_seconds},
                  {"iou_gate", t.iou_gate}};
  j["map"] = {{"dim", c.map.dim}, {"heads", c.map.heads}, {"layers", c.map.layers}, {"ffn_dim", c.map.ffn_dim},
              {"thing_queries", c.map.thing_queries}, {"mask_threshold", c.map.mask_threshold}};
  const auto & m = c.motion;
  j["motion"] = {{"dim", m.dim}, {"heads", m.heads}, {"layers", m.layers}, {"ffn_dim", m.ffn_dim},
                 {"modes", m.modes}, {"steps", m.steps}, {"deform_points", m.deform_points},
                 {"anchor_scenarios", c.anchor_scenarios}};
  j["occupancy"] = {{"dim", c.occupancy.dim}, {"heads", c.occupancy.heads}, {"blocks", c.occupancy.blocks},
                    {"mask_threshold", c.occupancy.mask_threshold},
                    {"occupancy_threshold", c.occupancy.occupancy_threshold},
                    {"near_side", c.near_side}, {"far_side", c.far_side},
                    {"write_probabilities", c.write_probabilities}};
  const auto & p = c.planner;
  const auto & o = c.optimizer;
  j["planner"] = {{"dim", p.dim}, {"heads", p.heads}, {"layers", p.layers}, {"ffn_dim", p.ffn_dim},
                  {"steps", p.steps}, {"sigma", o.sigma}, {"gate", o.gate}, {"lambda_coord", o.lambda_coord},
                  {"lambda_obs", o.lambda_obs}, {"max_iterations", o.max_iterations},
                  {"grad_tolerance", o.grad_tolerance}, {"ego_width", p.ego_width}, {"ego_length", p.ego_length},
                  {"occupancy_source", c.occupancy_source == OccupancySource::oracle ? "oracle" : "predicted"}};
  const auto & w = c.smoother_problem.weights;
  j["smoother"] = {{"lambda_xy", c.smoother_problem.lambda_xy}, {"lambda_goal", c.smoother_problem.lambda_goal},
                   {"jerk", w.jerk}, {"curvature", w.curvature}, {"curvature_rate", w.curvature_rate},
                   {"acceleration", w.acceleration}, {"lateral_acceleration", w.lateral_acceleration},
                   {"segment_length", c.smoother.segment_length},
                   {"continuity_weight", c.smoother.continuity_weight},
                   {"max_iterations", c.smoother.max_iterations}, {"rel_tolerance", c.smoother.rel_tolerance}};
  return j;
}

inline void validate_config(const PipelineConfig & c)
{
  for (int d : {c.tracker.dim, c.map.dim, c.motion.dim, c.occupancy.dim, c.planner.dim}) {
    if (d != c.dim) throw ConfigError("config: every module dim must equal the top-level dim");
  }
  if (c.dim <= 0 || c.dim % 4 != 0) throw ConfigError("config: dim must be a positive multiple of 4");
  for (int h : {c.tracker.heads, c.map.heads, c.motion.heads, c.occupancy.heads, c.planner.heads}) {
    if (h <= 0 || c.dim % h != 0) throw ConfigError("config: heads must divide dim");
  }
  if (c.grid_size <= 0 || c.grid_size % 8 != 0) throw ConfigError("config: grid size must be a positive multiple of 8");
  if (!(c.grid_half_extent > 0.0)) throw ConfigError("config: grid half extent must be positive");
  if (c.features.channels != c.dim) throw ConfigError("config: BEV channels must equal dim");
  if (c.tracker.layers < 0 || c.map.layers < 0 || c.motion.layers < 1 || c.occupancy.blocks < 1 || c.planner.layers < 0) {
    throw ConfigError("config: layer counts out of range");
  }
  if (c.motion.modes < 1 || c.motion.steps < 1 || c.planner.steps < 1) throw ConfigError("config: modes and steps must be positive");
  if (c.map.thing_queries < 1) throw ConfigError("config: need at least one map query");
  if (c.tracker.spawn_threshold < c.tracker.keep_threshold) {
    throw ConfigError("config: spawn threshold must not be below the keep threshold");
  }
  if (c.anchor_scenarios < 1) throw ConfigError("config: anchor_scenarios must be positive");
  if (c.scenario.frame_rate != c.tracker.frame_rate) throw ConfigError("config: tracker frame rate must match scenarios");
  if (!(c.optimizer.sigma > 0.0) || !(c.optimizer.gate > 0.0)) throw ConfigError("config: sigma and gate must be positive");
  if (c.smoother.segment_length < 3) throw ConfigError("config: smoother segment length must be >= 3");
  validate_scenario_config(c.scenario);
}

inline PipelineConfig config_from_json(const nlohmann::json & j)
{
  PipelineConfig c;
  detail::Section top(j, "config");
  top.get("seed", c.seed);
  top.get("dim", c.dim);
  auto set_dim = [&](int & d) { d = c.dim; };
  for (int * d : {&c.tracker.dim, &c.map.dim, &c.motion.dim, &c.occupancy.dim, &c.planner.dim, &c.features.channels}) {
    set_dim(*d);
  }
  if (top.has("grid")) {
    detail::Section s(top.at("grid"), "grid");
    s.get("size", c.grid_size);
    s.get("half_extent", c.grid_half_extent);
    s.finish();
  }
  if (top.has("features")) {
    detail::Section s(top.at("features"), "features");
    s.get("amplitude", c.features.amplitude);
    s.get("noise_std", c.features.noise_std);
    s.finish();
  }
  if (top.has("noise")) {
    detail::Section s(top.at("noise"), "noise");
    s.get("pos_std", c.noise.pos_std);
    s.get("yaw_std", c.noise.yaw_std);
    s.get("score_std", c.noise.score_std);
    s.get("drop_prob", c.noise.drop_prob);
    s.get("fp_prob", c.noise.fp_prob);
    s.finish();
  }
  if (top.has("scenario")) {
    auto & sc = c.scenario;
    detail::Section s(top.at("scenario"), "scenario");
    s.get("horizon", sc.horizon);
    s.get("frame_rate", sc.frame_rate);
    s.get("num_vehicles", sc.num_vehicles);
    s.get("num_pedestrians", sc.num_pedestrians);
    s.get("vehicle_speed_min", sc.vehicle_speed_min);
    s.get("vehicle_speed_max", sc.vehicle_speed_max);
    s.get("vehicle_yaw_rate_max", sc.vehicle_yaw_rate_max);
    s.get("pedestrian_speed_max", sc.pedestrian_speed_max);
    s.get("pedestrian_yaw_rate_max", sc.pedestrian_yaw_rate_max);
    s.get("ego_speed", sc.ego_speed);
    s.get("ego_yaw_rate", sc.ego_yaw_rate);
    s.get("spawn_radius", sc.spawn_radius);
    s.get("visible_half_extent", sc.visible_half_extent);
    s.get("lane_width", sc.lane_width);
    s.finish();
  }
  c.tracker.frame_rate = c.scenario.frame_rate;
  if (top.has("map_raster")) {
    detail::Section s(top.at("map_raster"), "map_raster");
    s.get("lane_half_width", c.map_raster.lane_half_width);
    s.get("divider_half_width", c.map_raster.divider_half_width);
    s.get("crossing_half_width", c.map_raster.crossing_half_width);
    s.get("road_half_width", c.map_raster.road_half_width);
    s.finish();
  }
  if (top.has("tracker")) {
    auto & t = c.tracker;
    detail::Section s(top.at("tracker"), "tracker");
    s.get("dim", t.dim);
    s.get("heads", t.heads);
    s.get("layers", t.layers);
    s.get("ffn_dim", t.ffn_dim);
    s.get("deform_points", t.deform_points);
    s.get("spawn_threshold", t.spawn_threshold);
    s.get("keep_threshold", t.keep_threshold);
    s.get("lifecycle_seconds", t.lifecycle_seconds);
    s.get("iou_gate", t.iou_gate);
    s.finish();
  }
  if (top.has("map")) {
    auto & m = c.map;
    detail::Section s(top.at("map"), "map");
    s.get("dim", m.dim);
    s.get("heads", m.heads);
    s.get("layers", m.layers);
    s.get("ffn_dim", m.ffn_dim);
    s.get("thing_queries", m.thing_queries);
    s.get("mask_threshold", m.mask_threshold);
    s.finish();
  }
  if (top.has("motion")) {
    auto & m = c.motion;
    detail::Section s(top.at("motion"), "motion");
    s.get("dim", m.dim);
    s.get("heads", m.heads);
    s.get("layers", m.layers);
    s.get("ffn_dim", m.ffn_dim);
    s.get("modes", m.modes);
    s.get("steps", m.steps);
    s.get("deform_points", m.deform_points);
    s.get("anchor_scenarios", c.anchor_scenarios);
    s.finish();
  }
  if (top.has("occupancy")) {
    auto & o = c.occupancy;
    detail::Section s(top.at("occupancy"), "occupancy");
    s.get("dim", o.dim);
    s.get("heads", o.heads);
    s.get("blocks", o.blocks);
    s.get("mask_threshold", o.mask_threshold);
    s.get("occupancy_threshold", o.occupancy_threshold);
    s.get("near_side", c.near_side);
    s.get("far_side", c.far_side);
    s.get("write_probabilities", c.write_probabilities);
    s.finish();
  }
  if (top.has("planner")) {
    auto & p = c.planner;
    auto & o = c.optimizer;
    detail::Section s(top.at("planner"), "planner");
    s.get("dim", p.dim);
    s.get("heads", p.heads);
    s.get("layers", p.layers);
    s.get("ffn_dim", p.ffn_dim);
    s.get("steps", p.steps);
    s.get("sigma", o.sigma);
    s.get("gate", o.gate);
    s.get("lambda_coord", o.lambda_coord);
    s.get("lambda_obs", o.lambda_obs);
    s.get("max_iterations", o.max_iterations);
    s.get("grad_tolerance", o.grad_tolerance);
    s.get("ego_width", p.ego_width);
    s.get("ego_length", p.ego_length);
    std::string src = "predicted";
    s.get("occupancy_source", src);
    if (src == "predicted") {
      c.occupancy_source = OccupancySource::predicted;
    } else if (src == "oracle") {
      c.occupancy_source = OccupancySource::oracle;
    } else {
      throw ConfigError("config: planner.occupancy_source must be 'predicted' or 'oracle'");
    }
    s.finish();
    p.sigma = o.sigma;
    p.gate = o.gate;
    p.lambda_coord = o.lambda_coord;
    p.lambda_obs = o.lambda_obs;
  }
  if (top.has("smoother")) {
    auto & w = c.smoother_problem.weights;
    detail::Section s(top.at("smoother"), "smoother");
    s.get("lambda_xy", c.smoother_problem.lambda_xy);
    s.get("lambda_goal", c.smoother_problem.lambda_goal);
    s.get("jerk", w.jerk);
    s.get("curvature", w.curvature);
    s.get("curvature_rate", w.curvature_rate);
    s.get("acceleration", w.acceleration);
    s.get("lateral_acceleration", w.lateral_acceleration);
    s.get("segment_length", c.smoother.segment_length);
    s.get("continuity_weight", c.smoother.continuity_weight);
    s.get("max_iterations", c.smoother.max_iterations);
    s.get("rel_tolerance", c.smoother.rel_tolerance);
    s.finish();
  }
  top.finish();
  c.smoother_problem.dt = 1.0 / c.scenario.frame_rate;
  validate_config(c);
  return c;
}

/// FNV-1a of the canonical dump (keys sorted), so field order never matters.
inline std::uint64_t config_hash(const PipelineConfig & c) { return fnv1a64(config_to_json(c).dump()); }

inline PipelineConfig load_config(const fs::path & path) { return config_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Models

struct PipelineModels
{
  TrackerParams tracker;
  MapHeadParams map;
  MotionParams motion;
  OccParams occupancy;
  PlannerParams planner;
  Eigen::MatrixXd anchor_endpoints;  // K x 2, agent frame
  std::vector<PointMat> anchors;     // K of T x 2
};

/// Anchor endpoints from k-means over a generated corpus.
inline Eigen::MatrixXd corpus_anchor_endpoints(const PipelineConfig & c)
{
  std::vector<Scenario> corpus;
  ScenarioConfig sc = c.scenario;
  sc.horizon = std::max(sc.horizon, c.motion.steps + 1);
  for (int i = 0; i < c.anchor_scenarios; ++i) {
    corpus.push_back(generate_scenario(sc, derive_seed(c.seed, "anchor-corpus", static_cast<std::uint64_t>(i))));
  }
  const Eigen::MatrixXd pts = harvest_endpoints(corpus, c.motion.steps);
  if (pts.rows() < c.motion.modes) {
    throw ConfigError("config: anchor corpus yields too few endpoints for k-means");
  }
  return kmeans_anchors(pts, c.motion.modes, derive_seed(c.seed, "kmeans")).centroids;
}

inline PipelineModels build_models(const PipelineConfig & c)
{
  validate_config(c);
  PipelineModels m;
  m.tracker = make_tracker_params(c.tracker, c.dim, c.seed);
  m.map = make_map_head_params(c.map, c.dim, c.seed);
  m.motion = make_motion_params(c.motion, c.dim, c.seed);
  m.occupancy = make_occ_params(c.occupancy, c.dim, c.seed);
  m.planner = make_planner_params(c.planner, c.dim, c.seed);
  m.anchor_endpoints = corpus_anchor_endpoints(c);
  m.anchors = expand_anchors(m.anchor_endpoints, c.motion.steps);
  return m;
}

inline TensorMap model_tensors(const PipelineModels & m)
{
  TensorMap all = collect_tensors(m.tracker, "tracker");
  all.merge(collect_tensors(m.map, "map"));
  all.merge(collect_tensors(m.motion, "motion"));
  all.merge(collect_tensors(m.occupancy, "occupancy"));
  all.merge(collect_tensors(m.planner, "planner"));
  all["anchors.endpoints"] = m.anchor_endpoints;
  return all;
}

/// Replace seeded parameters with tensors from a weights file.
inline void load_model_tensors(PipelineModels & m, const TensorMap & t, int steps)
{
  assign_tensors(m.tracker, t, "tracker");
  assign_tensors(m.map, t, "map");
  assign_tensors(m.motion, t, "motion");
  assign_tensors(m.occupancy, t, "occupancy");
  assign_tensors(m.planner, t, "planner");
  const auto it = t.find("anchors.endpoints");
  if (it == t.end()) throw ConfigError("weights file lacks tensor 'anchors.endpoints'");
  if (it->second.rows() != m.anchor_endpoints.rows() || it->second.cols() != 2) {
    throw ConfigError("tensor 'anchors.endpoints' has the wrong shape");
  }
  m.anchor_endpoints = it->second;
  m.anchors = expand_anchors(m.anchor_endpoints, steps);
}

// ---------------------------------------------------------------------------
// Run

struct RunManifest
{
  std::string scenario;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  /// Relative path -> content hash of every artifact.
  std::map<std::string, std::uint64_t> artifacts;
  std::string report_path;
  std::map<std::string, double> wall_seconds;

  /// Config hash and artifact hashes only; wall-times are excluded.
  std::uint64_t hash() const
  {
    std::string s = hex64(config_hash) + ";" + std::to_string(seed);
    for (const auto & [k, v] : artifacts) s += ";" + k + "=" + hex64(v);
    return fnv1a64(s);
  }

  nlohmann::json to_json() const
  {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["config_hash"] = hex64(config_hash);
    j["seed"] = seed;
    j["artifacts"] = nlohmann::json::object();
    for (const auto & [k, v] : artifacts) j["artifacts"][k] = hex64(v);
    j["report"] = report_path;
    j["manifest_hash"] = hex64(hash());
    j["wall_seconds"] = wall_seconds;
    return j;
  }
};

struct RunResult
{
  RunManifest manifest;
  ScenarioRecord record;
};

namespace detail
{

inline nlohmann::json xy_json(const Trajectory & x)
{
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index t = 0; t < x.rows(); ++t) a.push_back({x(t, 0), x(t, 1)});
  return a;
}

/// Ground-truth world future of one agent over frames t+1 .. t+T, if all valid.
inline bool agent_future(const ScenarioAgent & a, int t, int T, Trajectory & out)
{
  if (t + T >= static_cast<int>(a.frames.size())) return false;
  out.resize(T, 2);
  for (int k = 0; k <= T; ++k) {
    const AgentFrame & f = a.frames[static_cast<std::size_t>(t + k)];
    if (!f.valid) return false;
    if (k > 0) out.row(k - 1) << f.box.x, f.box.y;
  }
  return true;
}

inline std::uint64_t scenario_seed(std::uint64_t master, const Scenario & s)
{
  return derive_seed(master, "scenario", fnv1a64(scenario_to_json(s).dump()));
}

class ArtifactWriter
{
public:
  ArtifactWriter(fs::path root, RunManifest & m) : root_(std::move(root)), m_(m) {}

  void put(const std::string & rel, const std::string & content)
  {
    m_.artifacts[rel] = fnv1a64(content);
    if (!root_.empty()) write_text_file(root_ / rel, content);
  }

private:
  fs::path root_;
  RunManifest & m_;
};

}  // namespace detail

/// Run every frame of one scenario. Artifacts go under `out_dir` unless it is
/// empty (hashes are still recorded).
inline RunResult run_pipeline(
  const PipelineConfig & cfg, const PipelineModels & models, const Scenario & s, const std::string & name,
  const fs::path & out_dir)
{
  using clock = std::chrono::steady_clock;
  validate_config(cfg);
  validate_scenario(s);
  if (s.frame_rate != cfg.tracker.frame_rate) throw ConfigError("scenario frame rate differs from the config");
  const auto t_start = clock::now();
  RunResult res;
  RunManifest & man = res.manifest;
  man.scenario = name;
  man.config_hash = config_hash(cfg);
  man.seed = cfg.seed;
  detail::ArtifactWriter out(out_dir, man);

  const std::uint64_t sseed = detail::scenario_seed(cfg.seed, s);
  const std::uint64_t feature_seed = derive_seed(sseed, "features");
  const std::uint64_t detection_seed = derive_seed(sseed, "detections");
  const std::uint64_t tracker_seed = derive_seed(sseed, "tracker");
  const GridSpec base = cfg.grid();
  const int H = s.horizon;
  const int K = cfg.motion.modes;
  const int Tm = cfg.motion.steps;
  const int Tp = cfg.planner.steps;
  const int n_occ = cfg.occupancy.blocks;

  JsonlWriter tracks_out, forecast_out, targets_out, plan_out;
  nlohmann::json map_index = nlohmann::json::array();
  nlohmann::json occ_index = nlohmann::json::array();
  ScenarioRecord & rec = res.record;
  std::map<std::string, double> module_time;
  auto timed = [&](const char * key, auto && fn) {
    const auto a = clock::now();
    fn();
    module_time[key] += std::chrono::duration<double>(clock::now() - a).count();
  };

  TrackState state;
  for (int t = 0; t < H; ++t) {
    const Box2d ego = s.ego[static_cast<std::size_t>(t)];
    const GridSpec g = base.centered_at(ego.x, ego.y);
    BevGrid bev;
    DetectionFrame dets;
    timed("bev", [&] {
      bev = synth_bev_features(s, t, g, cfg.features, feature_seed, cfg.map_raster);
      dets = corrupt_detections(s, t, cfg.noise, detection_seed);
    });

    // Tracking.
    std::vector<AgentTrack> tracks;
    timed("track", [&] {
      TrackStepResult step = step_tracker(std::move(state), dets, bev, models.tracker, cfg.tracker, tracker_seed);
      state = std::move(step.state);
      tracks = std::move(step.outputs);
    });
    const FrameAgents gt_now = agents_at(s, t);
    {
      TrackingFrame tf;
      for (std::size_t i = 0; i < gt_now.ids.size(); ++i) {
        tf.gt.push_back({gt_now.ids[i], gt_now.boxes[i].center(), 1.0});
      }
      nlohmann::json tj = nlohmann::json::array();
      for (const auto & tr : tracks) {
        tf.pred.push_back({tr.id, tr.box.center(), tr.score});
        tj.push_back({{"id", tr.id}, {"x", tr.box.x}, {"y", tr.box.y}, {"w", tr.box.w}, {"l", tr.box.l},
                      {"yaw", tr.box.yaw}, {"score", tr.score}, {"cls", to_string(tr.cls)}});
      }
      rec.tracking.push_back(std::move(tf));
      tracks_out.add({{"t", t}, {"tracks", tj}});
    }

    // Mapping.
    MapOutput map_out;
    timed("map", [&] { map_out = decode_map(bev, models.map, cfg.map); });
    {
      rec.map += map_counts(map_out.class_masks, rasterize_map(g, s.map, cfg.map_raster));
      char file[32];
      std::snprintf(file, sizeof(file), "map/t%03d.pgm", t);
      out.put(file, encode_pgm(map_out.panoptic, true));
      map_index.push_back({{"t", t}, {"file", file}, {"x_min", g.x_min}, {"y_min", g.y_min},
                           {"x_max", g.x_max}, {"y_max", g.y_max}, {"labels", "0 free, 1 drivable, 2+q thing query q"}});
    }

    // Motion forecasting: row 0 is the ego.
    const int na = static_cast<int>(tracks.size());
    FeatureMat q_agents(na + 1, cfg.dim);
    std::vector<Box2d> boxes{ego};
    q_agents.row(0) = state.ego.feature;
    for (int a = 0; a < na; ++a) {
      q_agents.row(a + 1) = tracks[static_cast<std::size_t>(a)].feature;
      boxes.push_back(tracks[static_cast<std::size_t>(a)].box);
    }
    MotionOutput mo;
    timed("motion", [&] {
      mo = forecast(q_agents, boxes, map_out.queries.thing_queries, bev, models.anchors, models.motion, cfg.motion);
    });
    {
      nlohmann::json aj = nlohmann::json::array();
      for (int a = 0; a <= na; ++a) {
        nlohmann::json modes = nlohmann::json::array();
        for (int k = 0; k < K; ++k) {
          Trajectory xy(Tm, 2);
          for (int st = 0; st < Tm; ++st) xy.row(st) = mo.trajectories.position(a, k, st).transpose();
          modes.push_back({{"score", mo.trajectories.scores(a, k)}, {"xy", detail::xy_json(xy)}});
        }
        aj.push_back({{"id", a == 0 ? 0 : tracks[static_cast<std::size_t>(a - 1)].id}, {"modes", modes}});
      }
      forecast_out.add({{"t", t}, {"agents", aj}});
      if (t + Tm < H) {
        MotionFrame mf;
        for (int a = 1; a <= na; ++a) {
          MotionPrediction mp;
          const auto & tr = tracks[static_cast<std::size_t>(a - 1)];
          mp.id = tr.id;
          mp.position = tr.box.center();
          mp.score = tr.score;
          for (int k = 0; k < K; ++k) {
            Trajectory xy(Tm, 2);
            for (int st = 0; st < Tm; ++st) xy.row(st) = mo.trajectories.position(a, k, st).transpose();
            mp.modes.push_back(std::move(xy));
          }
          mf.pred.push_back(std::move(mp));
        }
        for (const auto & ag : s.agents) {
          if (!ag.frames[static_cast<std::size_t>(t)].valid) continue;
          MotionGroundTruth gt;
          gt.id = ag.id;
          gt.position = ag.frames[static_cast<std::size_t>(t)].box.center();
          gt.full_future = detail::agent_future(ag, t, Tm, gt.future);
          mf.gt.push_back(std::move(gt));
        }
        rec.motion.push_back(std::move(mf));
      }
    }

    // Smoothed targets for every agent with a complete future.
    timed("smooth", [&] {
      nlohmann::json aj = nlohmann::json::array();
      for (const auto & ag : s.agents) {
        Trajectory fut;
        if (!ag.frames[static_cast<std::size_t>(t)].valid || !detail::agent_future(ag, t, Tm, fut)) continue;
        if (Tm < 4) continue;
        SmootherProblem sp = cfg.smoother_problem;
        sp.target = fut;
        const SmootherResult sr = smooth(sp, cfg.smoother);
        aj.push_back({{"id", ag.id}, {"target", detail::xy_json(fut)}, {"smoothed", detail::xy_json(sr.x)},
                      {"iterations", sr.iterations}});
      }
      targets_out.add({{"t", t}, {"agents", aj}});
    });

    // Occupancy.
    OccOutput occ;
    std::vector<std::int32_t> ids;
    timed("occupancy", [&] {
      FeatureMat q_a(na, cfg.dim), q_x(na, cfg.dim);
      PointMat pos(na, 2);
      for (int a = 0; a < na; ++a) {
        const auto & tr = tracks[static_cast<std::size_t>(a)];
        q_a.row(a) = tr.feature;
        q_x.row(a) = mo.q_x.row(a + 1);
        pos.row(a) << tr.box.x, tr.box.y;
        ids.push_back(tr.id);
      }
      occ = forecast_occupancy(bev, q_a, pos, q_x, ids, models.occupancy, cfg.occupancy);
    });
    std::vector<LabelGrid> gt_occ;
    for (int k = 0; k < n_occ; ++k) {
      const FrameAgents fa = agents_at(s, t + k);
      gt_occ.push_back(rasterize_boxes(g, fa.boxes, fa.ids));
    }
    {
      nlohmann::json files = nlohmann::json::array();
      for (int k = 0; k < n_occ; ++k) {
        char file[40];
        std::snprintf(file, sizeof(file), "occ/t%03d_k%d.pgm", t, k);
        out.put(file, encode_pgm(occ.merged[static_cast<std::size_t>(k)], true));
        files.push_back(file);
        if (cfg.write_probabilities) {
          std::snprintf(file, sizeof(file), "occ/t%03d_k%d.f32", t, k);
          out.put(file, encode_f32(occ.blocks[static_cast<std::size_t>(k)].instance));
        }
      }
      occ_index.push_back({{"t", t}, {"files", files}, {"ids", ids}, {"x_min", g.x_min}, {"y_min", g.y_min},
                           {"x_max", g.x_max}, {"y_max", g.y_max}});
      if (t + n_occ - 1 < H) {
        std::vector<LabelGrid> pn, gn, pf, gf;
        for (int k = 0; k < n_occ; ++k) {
          const auto & pk = occ.merged[static_cast<std::size_t>(k)];
          const auto & gk = gt_occ[static_cast<std::size_t>(k)];
          pn.push_back(crop_square(pk, ego.x, ego.y, cfg.near_side));
          gn.push_back(crop_square(gk, ego.x, ego.y, cfg.near_side));
          pf.push_back(crop_square(pk, ego.x, ego.y, cfg.far_side));
          gf.push_back(crop_square(gk, ego.x, ego.y, cfg.far_side));
        }
        rec.occ_near += occupancy_counts(pn, gn);
        rec.occ_far += occupancy_counts(pf, gf);
      }
    }

    // Planning.
    PlanResult plan;
    timed("plan", [&] {
      const FeatureMat ego_motion = mo.ctx.topRows(K);
      const Trajectory raw = plan_head(state.ego.feature.topRows(1), ego_motion, s.command[static_cast<std::size_t>(t)],
                                       bev, ego, models.planner);
      plan = optimize_plan(raw, cfg.occupancy_source == OccupancySource::oracle ? gt_occ : occ.merged, cfg.optimizer);
    });
    plan_out.add({{"t", t}, {"command", to_string(s.command[static_cast<std::size_t>(t)])},
                  {"raw", detail::xy_json(plan.raw)}, {"optimized", detail::xy_json(plan.optimized)},
                  {"objective_trace", plan.objective_trace}});
    if (t + Tp < H && Tp >= 6) {
      PlanningSample ps;
      ps.gt.resize(Tp, 2);
      for (int k = 0; k < Tp; ++k) {
        const Box2d & e = s.ego[static_cast<std::size_t>(t + k + 1)];
        ps.gt.row(k) << e.x, e.y;
        ps.agents.push_back(agents_at(s, t + k + 1).boxes);
      }
      ps.ego_now = ego;
      ps.plan = plan.raw;
      rec.plan_raw += planning_counts(ps, cfg.planner.ego_width, cfg.planner.ego_length);
      ps.plan = plan.optimized;
      rec.plan_opt += planning_counts(ps, cfg.planner.ego_width, cfg.planner.ego_length);
    }
  }

  out.put("tracks.jsonl", tracks_out.str());
  out.put("forecast.jsonl", forecast_out.str());
  out.put("targets.jsonl", targets_out.str());
  out.put("plan.jsonl", plan_out.str());
  out.put("map/index.json", map_index.dump(2) + "\n");
  out.put("occ/index.json", occ_index.dump(2) + "\n");

  MetricsAccumulator acc;
  acc.add(name, rec);
  out.put("metrics.json", acc.report().to_json().dump(2) + "\n");
  man.report_path = "metrics.json";
  man.wall_seconds = module_time;
  man.wall_seconds["total"] = std::chrono::duration<double>(clock::now() - t_start).count();
  if (!out_dir.empty()) {
    write_json_file(out_dir / "manifest.json", man.to_json());
  }
  return res;
}

// ---------------------------------------------------------------------------
// Suite

struct NamedScenario
{
  std::string name;
  Scenario scenario;
};

/// Worker count from GOALSTACK_THREADS (default 1, clamped to [1, jobs]).
inline int thread_count(std::size_t jobs)
{
  int n = 1;
  if (const char * env = std::getenv("GOALSTACK_THREADS")) {
    try {
      n = std::stoi(env);
    } catch (const std::exception &) {
      throw ConfigError(std::string("GOALSTACK_THREADS must be an integer, got '") + env + "'");
    }
  }
  n = std::max(1, n);
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(jobs, 1)));
}

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers. The first failure
/// by index is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, int threads, F && fn)
{
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(work);
    for (auto & th : pool) th.join();
  }
  for (auto & e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct SuiteResult
{
  MetricsAccumulator accumulator;
  MetricsReport report;
  std::vector<RunManifest> manifests;
};

inline std::string report_csv(const MetricsReport & r)
{
  std::string s = "metric,value\n";
  for (const auto & [k, v] : r.values) s += k + "," + (v ? format_double(*v) : std::string()) + "\n";
  return s;
}

/// Planner L2 and collision per horizon, raw vs optimized.
inline std::string planning_csv(const MetricsReport & r)
{
  std::string s = "horizon_s,l2_raw,l2_optimized,collision_raw,collision_optimized\n";
  auto val = [&](const std::string & k) {
    const auto it = r.values.find(k);
    return it != r.values.end() && it->second ? format_double(*it->second) : std::string();
  };
  for (int k = 1; k <= 3; ++k) {
    const std::string h = std::to_string(k) + "s";
    s += std::to_string(k) + "," + val("planning.raw.l2_" + h) + "," + val("planning.optimized.l2_" + h) + "," +
         val("planning.raw.collision_" + h) + "," + val("planning.optimized.collision_" + h) + "\n";
  }
  return s;
}

inline SuiteResult eval_suite(
  const PipelineConfig & cfg, const PipelineModels & models, const std::vector<NamedScenario> & scenarios,
  const fs::path & out_dir, int threads)
{
  if (scenarios.empty()) throw ConfigError("eval: no scenarios");
  std::set<std::string> names;
  for (const auto & s : scenarios) {
    if (!names.insert(s.name).second) throw ConfigError("eval: duplicate scenario name '" + s.name + "'");
  }
  std::vector<RunResult> results(scenarios.size());
  parallel_for(scenarios.size(), threads, [&](std::size_t i) {
    const fs::path dir = out_dir.empty() ? fs::path() : out_dir / scenarios[i].name;
    results[i] = run_pipeline(cfg, models, scenarios[i].scenario, scenarios[i].name, dir);
  });
  SuiteResult sr;
  for (std::size_t i = 0; i < results.size(); ++i) {
    sr.accumulator.add(scenarios[i].name, std::move(results[i].record));
    sr.manifests.push_back(std::move(results[i].manifest));
  }
  sr.report = sr.accumulator.report();
  if (!out_dir.empty()) {
    write_json_file(out_dir / "report.json", sr.report.to_json());
    write_text_file(out_dir / "report.csv", report_csv(sr.report));
    write_text_file(out_dir / "planning.csv", planning_csv(sr.report));
  }
  return sr;
}

/// Tracking AMOTA and recall against detection position noise.
inline std::string noise_sweep_csv(
  const PipelineConfig & cfg, const PipelineModels & models, const std::vector<NamedScenario> & scenarios,
  const std::vector<double> & pos_stds, int threads)
{
  std::string s = "pos_std,amota,amotp,recall,ids\n";
  for (double sd : pos_stds) {
    PipelineConfig c = cfg;
    c.noise.pos_std = sd;
    const MetricsReport r = eval_suite(c, models, scenarios, {}, threads).report;
    auto v = [&](const char * k) {
      const auto & x = r.values.at(k);
      return x ? format_double(*x) : std::string();
    };
    s += format_double(sd) + "," + v("tracking.amota") + "," + v("tracking.amotp") + "," + v("tracking.recall") + "," +
         v("tracking.ids") + "\n";
  }
  return s;
}

}  // namespace goalstack

#endif  // GOALSTACK__PIPELINE_HPP_

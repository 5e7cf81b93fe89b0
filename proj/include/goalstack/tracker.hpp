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

/// \file tracker.hpp
/// \brief Track-query lifecycle: IoU-gated Hungarian association, threshold
/// spawning, patience-based removal, the always-present ego query, and an
/// attention refinement of all query features each frame.

#ifndef GOALSTACK__TRACKER_HPP_
#define GOALSTACK__TRACKER_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "goalstack/common.hpp"
#include "goalstack/geometry.hpp"
#include "goalstack/grid.hpp"
#include "goalstack/hungarian.hpp"
#include "goalstack/kernel.hpp"
#include "goalstack/scenario.hpp"

namespace goalstack
{

struct TrackerConfig
{
  int dim = 256;
  int heads = 8;
  int layers = 6;
  int ffn_dim = 512;
  int deform_points = 4;
  double spawn_threshold = 0.4;
  double keep_threshold = 0.35;
  double lifecycle_seconds = 2.0;
  double frame_rate = 2.0;
  /// Pairs below this IoU are never associated.
  double iou_gate = 0.1;

  int patience_frames() const
  {
    return static_cast<int>(std::ceil(lifecycle_seconds * frame_rate - 1e-9));
  }
};

struct AgentTrack
{
  std::int32_t id = 0;
  Box2d box;
  double score = 1.0;
  AgentClass cls = AgentClass::vehicle;
  FeatureMat feature;  // 1 x D
  int age = 1;
  /// Consecutive frames without a confident (>= keep threshold) match; the
  /// track is dropped once this reaches the patience.
  int misses = 0;
  /// Frame of the last association and centre displacement per frame since the
  /// previous one; used to predict the box for gating.
  int last_seen = 0;
  Vec2 velocity = Vec2::Zero();
};

struct TrackState
{
  std::vector<AgentTrack> tracks;
  AgentTrack ego;
  std::int32_t next_id = 1;
  bool started = false;
};

struct TrackLayerParams
{
  AttentionParams self_attn;
  DeformParams deform;
  MlpParams ffn;
  LayerNormParams norm1, norm2, norm3;

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    s.self_attn.visit(prefix + ".self_attn", f);
    s.deform.visit(prefix + ".deform", f);
    s.ffn.visit(prefix + ".ffn", f);
    s.norm1.visit(prefix + ".norm1", f);
    s.norm2.visit(prefix + ".norm2", f);
    s.norm3.visit(prefix + ".norm3", f);
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

struct TrackerParams
{
  Linear bev_proj;  // C -> D, applied to the BEV sample at a newborn's centre
  std::vector<TrackLayerParams> layers;

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    s.bev_proj.visit(prefix + ".bev_proj", f);
    for (std::size_t i = 0; i < s.layers.size(); ++i) {
      s.layers[i].visit(prefix + ".layers." + std::to_string(i), f);
    }
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

inline TrackerParams make_tracker_params(const TrackerConfig & c, int bev_channels, std::uint64_t seed)
{
  Rng rng(derive_seed(seed, "tracker"));
  TrackerParams p;
  p.bev_proj = make_linear(bev_channels, c.dim, rng);
  for (int l = 0; l < c.layers; ++l) {
    TrackLayerParams lp;
    lp.self_attn = make_attention(c.dim, c.heads, rng);
    lp.deform = make_deform(c.dim, bev_channels, c.heads, c.deform_points, rng);
    lp.ffn = make_mlp({c.dim, c.ffn_dim, c.dim}, rng);
    lp.norm1 = make_layer_norm(c.dim);
    lp.norm2 = make_layer_norm(c.dim);
    lp.norm3 = make_layer_norm(c.dim);
    p.layers.push_back(std::move(lp));
  }
  return p;
}

/// Fresh query feature: a seeded embedding plus the projected BEV feature at
/// the box centre.
inline FeatureMat init_track_feature(
  std::uint64_t feature_seed, const Box2d & box, const BevGrid & bev, const TrackerParams & p)
{
  const int D = p.bev_proj.out_dim();
  Rng rng(feature_seed);
  FeatureMat f(1, D);
  for (int c = 0; c < D; ++c) {
    f(0, c) = 0.5 * rng.normal();
  }
  PointMat pt(1, 2);
  pt << box.x, box.y;
  return f + linear_forward(bilinear_sample(bev, pt), p.bev_proj);
}

/// Refine a set of query features: self-attention across all queries,
/// deformable attention to the BEV at each box centre, FFN; post-norm residuals.
inline FeatureMat refine_track_features(
  const FeatureMat & feats, const std::vector<Box2d> & boxes, const BevGrid & bev,
  const TrackerParams & p)
{
  require(
    feats.rows() == static_cast<Eigen::Index>(boxes.size()), "tracker", "refine_track_features",
    "one box per query");
  PointMat centres(feats.rows(), 2);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    centres(static_cast<Eigen::Index>(i), 0) = boxes[i].x;
    centres(static_cast<Eigen::Index>(i), 1) = boxes[i].y;
  }
  const FeatureMat pos = sinusoidal_pe(centres, static_cast<int>(feats.cols()));
  FeatureMat h = feats;
  for (const auto & lp : p.layers) {
    const FeatureMat qk = h + pos;
    h = layer_norm(h + mha(qk, qk, h, lp.self_attn), lp.norm1);
    h = layer_norm(h + deform_attn(h + pos, centres, bev, lp.deform), lp.norm2);
    h = layer_norm(h + mlp_forward(h, lp.ffn), lp.norm3);
  }
  return h;
}

inline Box2d predicted_box(const AgentTrack & tr, int t)
{
  Box2d b = tr.box;
  const double k = static_cast<double>(t - tr.last_seen);
  b.x += tr.velocity.x() * k;
  b.y += tr.velocity.y() * k;
  return b;
}

struct TrackStepResult
{
  TrackState state;
  /// Tracks associated or spawned this frame whose score clears the keep
  /// threshold. Never contains the ego.
  std::vector<AgentTrack> outputs;
};

inline TrackStepResult step_tracker(
  TrackState state, const DetectionFrame & dets, const BevGrid & bev, const TrackerParams & p,
  const TrackerConfig & c, std::uint64_t seed)
{
  for (const auto & d : dets.detections) {
    require(
      d.score >= 0.0 && d.score <= 1.0 && box_valid(d.box), "tracker", "step_tracker",
      "detections need scores in [0, 1] and valid boxes");
  }
  const int t = dets.t;
  if (!state.started) {
    state.ego.id = 0;
    state.ego.box = dets.ego;
    state.ego.feature = init_track_feature(derive_seed(seed, "ego-query"), dets.ego, bev, p);
    state.ego.last_seen = t;
    state.started = true;
  } else {
    state.ego.age += 1;
    state.ego.velocity = (dets.ego.center() - state.ego.box.center()) / static_cast<double>(std::max(1, t - state.ego.last_seen));
    state.ego.box = dets.ego;
    state.ego.last_seen = t;
  }
  state.ego.score = 1.0;

  // Association.
  const std::size_t nt = state.tracks.size();
  const std::size_t nd = dets.detections.size();
  constexpr double kForbidden = 1e6;
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nd));
  for (std::size_t i = 0; i < nt; ++i) {
    const Box2d pred = predicted_box(state.tracks[i], t);
    for (std::size_t j = 0; j < nd; ++j) {
      const double iou = rotated_iou(pred, dets.detections[j].box);
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        iou < c.iou_gate ? kForbidden : 1.0 - iou;
    }
  }
  std::vector<int> det_of_track(nt, -1);
  std::vector<char> det_used(nd, 0);
  for (const auto & [i, j] : hungarian(cost)) {
    if (cost(i, j) < kForbidden) {
      det_of_track[static_cast<std::size_t>(i)] = j;
      det_used[static_cast<std::size_t>(j)] = 1;
    }
  }

  std::vector<char> fresh;  // matched or spawned this frame
  for (std::size_t i = 0; i < nt; ++i) {
    AgentTrack & tr = state.tracks[i];
    tr.age += 1;
    const int j = det_of_track[i];
    if (j < 0) {
      tr.misses += 1;
      fresh.push_back(0);
      continue;
    }
    const Detection & d = dets.detections[static_cast<std::size_t>(j)];
    tr.velocity = (d.box.center() - tr.box.center()) / static_cast<double>(std::max(1, t - tr.last_seen));
    tr.box = d.box;
    tr.score = d.score;
    tr.cls = d.cls;
    tr.last_seen = t;
    tr.misses = d.score < c.keep_threshold ? tr.misses + 1 : 0;
    fresh.push_back(1);
  }

  // Removal.
  const int patience = c.patience_frames();
  {
    std::vector<AgentTrack> kept;
    std::vector<char> kept_fresh;
    for (std::size_t i = 0; i < state.tracks.size(); ++i) {
      if (state.tracks[i].misses < patience) {
        kept.push_back(std::move(state.tracks[i]));
        kept_fresh.push_back(fresh[i]);
      }
    }
    state.tracks = std::move(kept);
    fresh = std::move(kept_fresh);
  }

  // Spawning.
  for (std::size_t j = 0; j < nd; ++j) {
    const Detection & d = dets.detections[j];
    if (det_used[j] || d.score < c.spawn_threshold) {
      continue;
    }
    AgentTrack tr;
    tr.id = state.next_id++;
    tr.box = d.box;
    tr.score = d.score;
    tr.cls = d.cls;
    tr.last_seen = t;
    tr.feature = init_track_feature(d.feature_seed, d.box, bev, p);
    state.tracks.push_back(std::move(tr));
    fresh.push_back(1);
  }

  // Query refinement over ego + agents.
  {
    FeatureMat feats(static_cast<Eigen::Index>(state.tracks.size() + 1), p.bev_proj.out_dim());
    std::vector<Box2d> boxes{state.ego.box};
    feats.row(0) = state.ego.feature;
    for (std::size_t i = 0; i < state.tracks.size(); ++i) {
      feats.row(static_cast<Eigen::Index>(i + 1)) = state.tracks[i].feature;
      boxes.push_back(state.tracks[i].box);
    }
    const FeatureMat refined = refine_track_features(feats, boxes, bev, p);
    state.ego.feature = refined.row(0);
    for (std::size_t i = 0; i < state.tracks.size(); ++i) {
      state.tracks[i].feature = refined.row(static_cast<Eigen::Index>(i + 1));
    }
  }

  TrackStepResult res;
  for (std::size_t i = 0; i < state.tracks.size(); ++i) {
    if (fresh[i] && state.tracks[i].score >= c.keep_threshold) {
      res.outputs.push_back(state.tracks[i]);
    }
  }
  res.state = std::move(state);
  return res;
}

}  // namespace goalstack

#endif  // GOALSTACK__TRACKER_HPP_

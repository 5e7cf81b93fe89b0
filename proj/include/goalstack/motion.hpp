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

/// \file motion.hpp
/// \brief Scene-centric multimodal motion forecasting: k-means anchors, the
/// four-term query position, agent/map/goal interaction layers with
/// coarse-to-fine goal refinement, and a Gaussian-mixture trajectory head.

#ifndef GOALSTACK__MOTION_HPP_
#define GOALSTACK__MOTION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "goalstack/common.hpp"
#include "goalstack/grid.hpp"
#include "goalstack/kernel.hpp"
#include "goalstack/scenario.hpp"

namespace goalstack
{

// ---------------------------------------------------------------------------
// Anchors

struct KMeansResult
{
  Eigen::MatrixXd centroids;  // K x 2
  std::vector<int> labels;
  /// Within-cluster SSE after each assignment step of the winning restart.
  std::vector<double> sse_trace;
  double sse = 0.0;
};

inline double kmeans_sse(const Eigen::MatrixXd & pts, const Eigen::MatrixXd & centroids, std::vector<int> * labels)
{
  double sse = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
      const double d = (pts.row(i) - centroids.row(k)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(k);
      }
    }
    sse += best;
    if (labels != nullptr) {
      (*labels)[static_cast<std::size_t>(i)] = arg;
    }
  }
  return sse;
}

/// k-means++ seeding, Lloyd iterations (shift < 1e-6 or 100 iterations), then
/// Hartigan single-point transfers; best of `restarts` seeded runs.
inline KMeansResult kmeans_anchors(const Eigen::MatrixXd & pts, int K, std::uint64_t seed, int restarts = 50)
{
  if (K <= 0 || pts.rows() < K) {
    throw ConfigError(
      "kmeans: need at least K=" + std::to_string(K) + " endpoints, got " + std::to_string(pts.rows()));
  }
  require(pts.cols() == 2 && pts.allFinite(), "motion-former", "kmeans_anchors", "endpoints must be finite n x 2");
  const Eigen::Index n = pts.rows();
  KMeansResult best;
  best.sse = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Rng rng(derive_seed(seed, "kmeans", static_cast<std::uint64_t>(r)));
    Eigen::MatrixXd c(K, 2);
    c.row(0) = pts.row(static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n))));
    std::vector<double> d2(static_cast<std::size_t>(n));
    for (int k = 1; k < K; ++k) {
      double total = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
          m = std::min(m, (pts.row(i) - c.row(j)).squaredNorm());
        }
        d2[static_cast<std::size_t>(i)] = m;
        total += m;
      }
      Eigen::Index pick = 0;
      if (total > 0.0) {
        double u = rng.uniform() * total;
        for (pick = 0; pick < n - 1; ++pick) {
          u -= d2[static_cast<std::size_t>(pick)];
          if (u < 0.0) {
            break;
          }
        }
      } else {
        pick = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
      }
      c.row(k) = pts.row(pick);
    }
    KMeansResult run;
    run.labels.assign(static_cast<std::size_t>(n), 0);
    for (int it = 0; it < 100; ++it) {
      run.sse_trace.push_back(kmeans_sse(pts, c, &run.labels));
      Eigen::MatrixXd next = c;
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, 2);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int l = run.labels[static_cast<std::size_t>(i)];
        sums.row(l) += pts.row(i);
        counts(l) += 1.0;
      }
      for (int k = 0; k < K; ++k) {
        if (counts(k) > 0.0) {
          next.row(k) = sums.row(k) / counts(k);
        }
      }
      const double shift = (next - c).rowwise().norm().maxCoeff();
      c = next;
      if (shift < 1e-6) {
        break;
      }
    }
    // Hartigan transfers: move single points while that strictly lowers the SSE.
    {
      kmeans_sse(pts, c, &run.labels);
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, 2);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(run.labels[static_cast<std::size_t>(i)]) += pts.row(i);
        counts(run.labels[static_cast<std::size_t>(i)]) += 1.0;
      }
      for (int k = 0; k < K; ++k) {
        if (counts(k) > 0.0) {
          c.row(k) = sums.row(k) / counts(k);
        }
      }
      bool moved = true;
      for (int pass = 0; pass < 100 && moved; ++pass) {
        moved = false;
        for (Eigen::Index i = 0; i < n; ++i) {
          const int a = run.labels[static_cast<std::size_t>(i)];
          if (counts(a) <= 1.0) {
            continue;
          }
          const double leave = counts(a) / (counts(a) - 1.0) * (pts.row(i) - c.row(a)).squaredNorm();
          int to = a;
          double best_gain = 1e-12 * (1.0 + leave);
          for (int b = 0; b < K; ++b) {
            if (b == a) {
              continue;
            }
            const double join = counts(b) / (counts(b) + 1.0) * (pts.row(i) - c.row(b)).squaredNorm();
            if (leave - join > best_gain) {
              best_gain = leave - join;
              to = b;
            }
          }
          if (to != a) {
            sums.row(a) -= pts.row(i);
            counts(a) -= 1.0;
            c.row(a) = sums.row(a) / counts(a);
            sums.row(to) += pts.row(i);
            counts(to) += 1.0;
            c.row(to) = sums.row(to) / counts(to);
            run.labels[static_cast<std::size_t>(i)] = to;
            moved = true;
          }
        }
        if (moved) {
          run.sse_trace.push_back(kmeans_sse(pts, c, nullptr));
        }
      }
    }
    run.centroids = c;
    run.sse = kmeans_sse(pts, c, &run.labels);
    run.sse_trace.push_back(run.sse);
    if (run.sse < best.sse) {
      best = std::move(run);
    }
  }
  return best;
}

/// Straight-line T-step anchors from the origin to each centroid.
inline std::vector<PointMat> expand_anchors(const Eigen::MatrixXd & centroids, int T)
{
  std::vector<PointMat> out;
  for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
    PointMat a(T, 2);
    for (int t = 0; t < T; ++t) {
      a.row(t) = centroids.row(k) * (static_cast<double>(t + 1) / T);
    }
    out.push_back(a);
  }
  return out;
}

/// Agent-frame future displacements after T frames, over every agent and start
/// frame with a fully valid window.
inline Eigen::MatrixXd harvest_endpoints(const std::vector<Scenario> & scenarios, int T)
{
  std::vector<Vec2> pts;
  for (const auto & s : scenarios) {
    for (const auto & a : s.agents) {
      for (int t = 0; t + T < s.horizon; ++t) {
        bool ok = true;
        for (int k = t; k <= t + T && ok; ++k) {
          ok = a.frames[static_cast<std::size_t>(k)].valid;
        }
        if (!ok) {
          continue;
        }
        const Box2d & b0 = a.frames[static_cast<std::size_t>(t)].box;
        pts.push_back(to_box_frame(b0, a.frames[static_cast<std::size_t>(t + T)].box.center()));
      }
    }
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  }
  return m;
}

struct AnchorSet
{
  std::vector<PointMat> agent_level;               // K of T x 2
  std::vector<std::vector<PointMat>> scene_level;  // per agent, K of T x 2
};

/// Rotate agent-frame anchors by each agent's yaw and translate to its position.
inline AnchorSet scene_anchors(
  const std::vector<PointMat> & agent_level, const std::vector<Box2d> & agents)
{
  AnchorSet s;
  s.agent_level = agent_level;
  for (const auto & b : agents) {
    Eigen::Matrix2d R;
    R << std::cos(b.yaw), -std::sin(b.yaw), std::sin(b.yaw), std::cos(b.yaw);
    std::vector<PointMat> per;
    for (const auto & a : agent_level) {
      PointMat g = (a * R.transpose()).eval();
      g.col(0).array() += b.x;
      g.col(1).array() += b.y;
      per.push_back(g);
    }
    s.scene_level.push_back(std::move(per));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Network

struct MotionConfig
{
  int dim = 256;
  int heads = 8;
  int layers = 3;
  int ffn_dim = 512;
  int modes = 6;
  int steps = 12;
  int deform_points = 4;
};

struct MotionLayerParams
{
  DecoderLayerParams agent;  // self-attention over all modes, cross to Q_A
  DecoderLayerParams map;    // self-attention, cross to Q_M
  DeformParams goal;
  MlpParams fuse;            // 3D -> D
  MlpParams traj_head;       // D -> T*5
  MlpParams score_head;      // D -> 1

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    s.agent.visit(prefix + ".agent", f);
    s.map.visit(prefix + ".map", f);
    s.goal.visit(prefix + ".goal", f);
    s.fuse.visit(prefix + ".fuse", f);
    s.traj_head.visit(prefix + ".traj_head", f);
    s.score_head.visit(prefix + ".score_head", f);
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

struct QposMlps
{
  MlpParams scene_anchor, agent_anchor, current, goal;

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    s.scene_anchor.visit(prefix + ".scene_anchor", f);
    s.agent_anchor.visit(prefix + ".agent_anchor", f);
    s.current.visit(prefix + ".current", f);
    s.goal.visit(prefix + ".goal", f);
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

struct MotionParams
{
  QposMlps qpos;
  std::vector<MotionLayerParams> layers;

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    s.qpos.visit(prefix + ".qpos", f);
    for (std::size_t i = 0; i < s.layers.size(); ++i) {
      s.layers[i].visit(prefix + ".layers." + std::to_string(i), f);
    }
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

inline MotionParams make_motion_params(const MotionConfig & c, int bev_channels, std::uint64_t seed)
{
  Rng rng(derive_seed(seed, "motion"));
  MotionParams p;
  p.qpos.scene_anchor = make_mlp({c.dim, c.dim, c.dim}, rng);
  p.qpos.agent_anchor = make_mlp({c.dim, c.dim, c.dim}, rng);
  p.qpos.current = make_mlp({c.dim, c.dim, c.dim}, rng);
  p.qpos.goal = make_mlp({c.dim, c.dim, c.dim}, rng);
  for (int l = 0; l < c.layers; ++l) {
    MotionLayerParams lp;
    lp.agent = make_decoder_layer(c.dim, c.heads, c.ffn_dim, rng);
    lp.map = make_decoder_layer(c.dim, c.heads, c.ffn_dim, rng);
    lp.goal = make_deform(c.dim, bev_channels, c.heads, c.deform_points, rng);
    lp.fuse = make_mlp({3 * c.dim, c.dim, c.dim}, rng);
    lp.traj_head = make_mlp({c.dim, c.dim, c.steps * 5}, rng);
    lp.score_head = make_mlp({c.dim, c.dim, 1}, rng);
    p.layers.push_back(std::move(lp));
  }
  return p;
}

/// Per-agent, per-mode Gaussian-mixture trajectories in the world frame.
/// Row a*K + k of each matrix belongs to agent a, mode k.
struct TrajectorySet
{
  int agents = 0;
  int modes = 0;
  int steps = 0;
  /// T x 5 per (agent, mode): (x, y) offsets from the agent's current position,
  /// then three spread parameters.
  std::vector<Eigen::MatrixXd> params;
  /// T x 2 per (agent, mode): decoded per-step displacement.
  std::vector<Eigen::MatrixXd> velocities;
  Eigen::MatrixXd scores;  // agents x modes
  std::vector<Vec2> origin;

  Vec2 position(int a, int k, int t) const
  {
    const auto & m = params[static_cast<std::size_t>(a * modes + k)];
    return origin[static_cast<std::size_t>(a)] + Vec2(m(t, 0), m(t, 1));
  }
  Vec2 goal(int a, int k) const { return position(a, k, steps - 1); }
};

/// Q_pos: sum of MLP(PE(.)) over the scene anchor endpoint, agent anchor
/// endpoint, current position and previous goal, one row per (agent, mode).
inline FeatureMat build_qpos(
  const AnchorSet & anchors, const PointMat & current, const PointMat & prev_goal, const QposMlps & m)
{
  const int na = static_cast<int>(current.rows());
  const int K = static_cast<int>(anchors.agent_level.size());
  require(
    static_cast<int>(anchors.scene_level.size()) == na && prev_goal.rows() == na * K, "motion-former",
    "build_qpos", "anchors, positions and goals must agree on agents x modes");
  const int D = m.goal.in_dim();
  PointMat scene(na * K, 2), agent(na * K, 2), cur(na * K, 2);
  for (int a = 0; a < na; ++a) {
    for (int k = 0; k < K; ++k) {
      const auto & s = anchors.scene_level[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
      const auto & g = anchors.agent_level[static_cast<std::size_t>(k)];
      scene.row(a * K + k) = s.row(s.rows() - 1);
      agent.row(a * K + k) = g.row(g.rows() - 1);
      cur.row(a * K + k) = current.row(a);
    }
  }
  return mlp_forward(sinusoidal_pe(scene, D), m.scene_anchor) +
         mlp_forward(sinusoidal_pe(agent, D), m.agent_anchor) +
         mlp_forward(sinusoidal_pe(cur, D), m.current) +
         mlp_forward(sinusoidal_pe(prev_goal, D), m.goal);
}

struct MotionQuery
{
  FeatureMat ctx;
  FeatureMat pos;
};

/// Decode the trajectory head output (rows x T*5) into a TrajectorySet.
inline TrajectorySet decode_trajectories(
  const FeatureMat & head, const FeatureMat & logits, const PointMat & current, int K, int T)
{
  TrajectorySet ts;
  ts.agents = static_cast<int>(current.rows());
  ts.modes = K;
  ts.steps = T;
  ts.scores.resize(ts.agents, K);
  for (int a = 0; a < ts.agents; ++a) {
    ts.origin.emplace_back(current(a, 0), current(a, 1));
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      mx = std::max(mx, logits(a * K + k, 0));
    }
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      ts.scores(a, k) = std::exp(logits(a * K + k, 0) - mx);
      sum += ts.scores(a, k);
    }
    ts.scores.row(a) /= sum;
    for (int k = 0; k < K; ++k) {
      const Eigen::Index r = a * K + k;
      Eigen::MatrixXd p(T, 5), v(T, 2);
      double x = 0.0, y = 0.0;
      for (int t = 0; t < T; ++t) {
        v(t, 0) = head(r, t * 5);
        v(t, 1) = head(r, t * 5 + 1);
        x += v(t, 0);
        y += v(t, 1);
        p(t, 0) = x;
        p(t, 1) = y;
        p(t, 2) = head(r, t * 5 + 2);
        p(t, 3) = head(r, t * 5 + 3);
        p(t, 4) = head(r, t * 5 + 4);
      }
      ts.params.push_back(std::move(p));
      ts.velocities.push_back(std::move(v));
    }
  }
  return ts;
}

/// One interaction layer. `q_agents` holds one feature per agent (Q_A),
/// `q_map` the map queries (may be empty).
inline std::pair<MotionQuery, TrajectorySet> motion_layer(
  const MotionQuery & q, const FeatureMat & q_agents, const FeatureMat & q_map, const BevGrid & bev,
  const PointMat & current, const PointMat & prev_goal, const MotionLayerParams & p, int K, int T)
{
  require(q.ctx.rows() == q.pos.rows() && q.ctx.cols() == q.pos.cols(), "motion-former", "motion_layer", "ctx/pos shape mismatch");
  require(q.ctx.rows() == current.rows() * K, "motion-former", "motion_layer", "rows must be agents x modes");
  const FeatureMat Q = q.ctx + q.pos;
  const FeatureMat none;
  const FeatureMat qa = decoder_layer(Q, none, q_agents, q_agents, p.agent);
  const FeatureMat qm = decoder_layer(Q, none, q_map, q_map, p.map);
  const FeatureMat qg = deform_attn(Q, prev_goal, bev, p.goal);
  FeatureMat cat(Q.rows(), 3 * Q.cols());
  cat << qa, qm, qg;
  MotionQuery next{mlp_forward(cat, p.fuse), q.pos};
  const TrajectorySet ts =
    decode_trajectories(mlp_forward(next.ctx, p.traj_head), mlp_forward(next.ctx, p.score_head), current, K, T);
  return {std::move(next), ts};
}

struct MotionOutput
{
  TrajectorySet trajectories;  // final layer
  std::vector<TrajectorySet> per_layer;
  FeatureMat ctx;  // final Q_ctx, (agents*modes) x D
  FeatureMat q_x;  // agents x D, max over modes
  AnchorSet anchors;
};

/// Run the layer stack. Row 0 of `q_agents`/`boxes` is the ego.
inline MotionOutput forecast(
  const FeatureMat & q_agents, const std::vector<Box2d> & boxes, const FeatureMat & q_map,
  const BevGrid & bev, const std::vector<PointMat> & agent_anchors, const MotionParams & p,
  const MotionConfig & c)
{
  require(!boxes.empty(), "motion-former", "forecast", "at least the ego is required");
  require(
    q_agents.rows() == static_cast<Eigen::Index>(boxes.size()), "motion-former", "forecast",
    "one feature per agent");
  require(static_cast<int>(agent_anchors.size()) == c.modes, "motion-former", "forecast", "anchor count != modes");
  const int na = static_cast<int>(boxes.size());
  const int K = c.modes;
  MotionOutput out;
  out.anchors = scene_anchors(agent_anchors, boxes);
  PointMat current(na, 2);
  PointMat goal(na * K, 2);
  for (int a = 0; a < na; ++a) {
    current.row(a) << boxes[static_cast<std::size_t>(a)].x, boxes[static_cast<std::size_t>(a)].y;
    for (int k = 0; k < K; ++k) {
      const auto & s = out.anchors.scene_level[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
      goal.row(a * K + k) = s.row(s.rows() - 1);
    }
  }
  MotionQuery q;
  q.ctx.resize(na * K, q_agents.cols());
  for (int a = 0; a < na; ++a) {
    for (int k = 0; k < K; ++k) {
      q.ctx.row(a * K + k) = q_agents.row(a);
    }
  }
  for (const auto & lp : p.layers) {
    q.pos = build_qpos(out.anchors, current, goal, p.qpos);
    auto [next, ts] = motion_layer(q, q_agents, q_map, bev, current, goal, lp, K, c.steps);
    q = std::move(next);
    for (int a = 0; a < na; ++a) {
      for (int k = 0; k < K; ++k) {
        const Vec2 g = ts.goal(a, k);
        goal.row(a * K + k) << g.x(), g.y();
      }
    }
    out.per_layer.push_back(std::move(ts));
  }
  out.trajectories = out.per_layer.back();
  out.ctx = q.ctx;
  out.q_x.resize(na, q.ctx.cols());
  for (int a = 0; a < na; ++a) {
    out.q_x.row(a) = q.ctx.middleRows(a * K, K).colwise().maxCoeff();
  }
  return out;
}

}  // namespace goalstack

#endif  // GOALSTACK__MOTION_HPP_

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

/// \file planner.hpp
/// \brief Plan query and BEV-attending trajectory head, Gaussian collision
/// potential over predicted occupancy, per-waypoint damped Newton refinement,
/// and the dilated-box collision loss.

#ifndef GOALSTACK__PLANNER_HPP_
#define GOALSTACK__PLANNER_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "goalstack/common.hpp"
#include "goalstack/geometry.hpp"
#include "goalstack/grid.hpp"
#include "goalstack/kernel.hpp"
#include "goalstack/scenario.hpp"

namespace goalstack
{

struct PlannerConfig
{
  int dim = 256;
  int heads = 8;
  int layers = 3;
  int ffn_dim = 512;
  int steps = 6;
  double sigma = 1.0;
  double gate = 5.0;
  double lambda_coord = 1.0;
  double lambda_obs = 5.0;
  double ego_width = 1.85;
  double ego_length = 4.08;
  /// (omega, delta) pairs of the collision loss.
  std::vector<std::pair<double, double>> collision_pairs{{1.0, 0.0}, {0.4, 0.5}, {0.1, 1.0}};
};

struct PlannerParams
{
  Eigen::MatrixXd command_embed;  // 3 x D (left, right, forward)
  Eigen::MatrixXd query_pos;      // 1 x D
  MlpParams fuse;                 // 3D -> D
  std::vector<DecoderLayerParams> layers;
  MlpParams regressor;            // D -> steps*2

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    f(prefix + ".command_embed", s.command_embed);
    f(prefix + ".query_pos", s.query_pos);
    s.fuse.visit(prefix + ".fuse", f);
    for (std::size_t i = 0; i < s.layers.size(); ++i) {
      s.layers[i].visit(prefix + ".layers." + std::to_string(i), f);
    }
    s.regressor.visit(prefix + ".regressor", f);
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

inline PlannerParams make_planner_params(const PlannerConfig & c, int bev_channels, std::uint64_t seed)
{
  Rng rng(derive_seed(seed, "planner"));
  PlannerParams p;
  p.command_embed.resize(3, c.dim);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < c.dim; ++j) {
      p.command_embed(i, j) = round_to_f32(rng.normal());
    }
  }
  p.query_pos.resize(1, c.dim);
  for (int j = 0; j < c.dim; ++j) {
    p.query_pos(0, j) = round_to_f32(0.1 * rng.normal());
  }
  p.fuse = make_mlp({3 * c.dim, c.dim, c.dim}, rng);
  for (int l = 0; l < c.layers; ++l) {
    p.layers.push_back(make_decoder_layer(c.dim, c.heads, c.ffn_dim, rng, bev_channels, bev_channels));
  }
  p.regressor = make_mlp({c.dim, c.dim, 2 * c.steps}, rng);
  return p;
}

inline int command_index(Command c) { return static_cast<int>(c); }

/// Plan query: max over modes of MLP([ego track feature, ego motion feature
/// of that mode, command embedding]).
inline FeatureMat plan_query(
  const FeatureMat & ego_track, const FeatureMat & ego_motion, Command cmd, const PlannerParams & p)
{
  require(ego_track.rows() == 1 && ego_motion.rows() >= 1, "planner", "plan_query", "need one ego feature and >= 1 mode");
  const Eigen::Index K = ego_motion.rows();
  const Eigen::Index D = ego_track.cols();
  FeatureMat cat(K, 3 * D);
  for (Eigen::Index k = 0; k < K; ++k) {
    cat.block(k, 0, 1, D) = ego_track;
    cat.block(k, D, 1, D) = ego_motion.row(k);
    cat.block(k, 2 * D, 1, D) = p.command_embed.row(command_index(cmd));
  }
  return mlp_forward(cat, p.fuse).colwise().maxCoeff();
}


/// Raw plan: T_p world waypoints from ego-frame offsets regressed after
/// `layers` cross-attention rounds against the BEV (with sinusoidal PE).
inline Trajectory plan_head(
  const FeatureMat & ego_track, const FeatureMat & ego_motion, Command cmd, const BevGrid & bev,
  const Box2d & ego, const PlannerParams & p)
{
  const int D = static_cast<int>(p.query_pos.cols());
  require(ego_track.cols() == D && ego_motion.cols() == D, "planner", "plan_head", "features must be D wide");
  FeatureMat q = plan_query(ego_track, ego_motion, cmd, p);
  const FeatureMat key = bev.data + grid_position_encoding(bev.spec, bev.channels());
  for (const auto & layer : p.layers) {
    q = decoder_layer(q, p.query_pos, key, bev.data, layer);
  }
  const FeatureMat off = mlp_forward(q, p.regressor);
  const int T = static_cast<int>(off.cols() / 2);
  const double c = std::cos(ego.yaw);
  const double s = std::sin(ego.yaw);
  Trajectory tau(T, 2);
  for (int t = 0; t < T; ++t) {
    const double ox = off(0, 2 * t);
    const double oy = off(0, 2 * t + 1);
    tau(t, 0) = ego.x + c * ox - s * oy;
    tau(t, 1) = ego.y + s * ox + c * oy;
  }
  return tau;
}

// ---------------------------------------------------------------------------
// Collision potential

/// Occupied cell centres of a grid.
inline std::vector<Vec2> occupied_cells(const LabelGrid & g)
{
  std::vector<Vec2> out;
  for (int iy = 0; iy < g.spec.height; ++iy) {
    for (int ix = 0; ix < g.spec.width; ++ix) {
      if (g.at(ix, iy) != 0) {
        out.push_back(cell_center(g.spec, ix, iy));
      }
    }
  }
  return out;
}

/// Occupancy step used for waypoint t (0-based): min(t + 1, last available).
inline std::size_t occupancy_index(std::size_t t, std::size_t n_occ) { return std::min(t + 1, n_occ - 1); }

struct PointPotential
{
  double value = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

/// Sum of isotropic Gaussian densities N(p - c; 0, sigma^2 I) over cells c with
/// |p - c| < gate.
inline PointPotential point_potential(const Vec2 & p, const std::vector<Vec2> & cells, double sigma, double gate)
{
  PointPotential out;
  const double s2 = sigma * sigma;
  const double norm = 1.0 / (2.0 * kPi * s2);
  for (const auto & c : cells) {
    const Eigen::Vector2d r = p - c;
    const double d2 = r.squaredNorm();
    if (d2 >= gate * gate) {
      continue;
    }
    const double f = norm * std::exp(-0.5 * d2 / s2);
    out.value += f;
    out.grad -= f / s2 * r;
    out.hess += f * (r * r.transpose() / (s2 * s2) - Eigen::Matrix2d::Identity() / s2);
  }
  return out;
}

inline double collision_potential(
  const Trajectory & tau, const std::vector<LabelGrid> & occ, double sigma, double gate)
{
  require(sigma > 0.0 && gate > 0.0, "planner", "collision_potential", "sigma and gate must be positive");
  if (occ.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (Eigen::Index t = 0; t < tau.rows(); ++t) {
    const auto cells = occupied_cells(occ[occupancy_index(static_cast<std::size_t>(t), occ.size())]);
    total += point_potential(tau.row(t).transpose(), cells, sigma, gate).value;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Plan optimization

struct PlanOptimizerOptions
{
  double lambda_coord = 1.0;
  double lambda_obs = 5.0;
  double sigma = 1.0;
  double gate = 5.0;
  int max_iterations = 100;
  double grad_tolerance = 1e-6;
  double initial_damping = 1e-3;
};

struct PlanResult
{
  Trajectory raw;
  Trajectory optimized;
  /// Total objective at the start and after every iteration.
  std::vector<double> objective_trace;
  int iterations = 0;
  double final_grad_norm = 0.0;
};

namespace detail
{

struct WaypointObjective
{
  Vec2 anchor;
  std::vector<Vec2> cells;
  double lambda_coord, lambda_obs, sigma, gate;

  double value(const Vec2 & p) const
  {
    return lambda_coord * (p - anchor).norm() + lambda_obs * point_potential(p, cells, sigma, gate).value;
  }

  /// Gradient and Hessian; the distance term contributes nothing at the kink.
  void derivatives(const Vec2 & p, Eigen::Vector2d & g, Eigen::Matrix2d & H) const
  {
    const PointPotential pp = point_potential(p, cells, sigma, gate);
    g = lambda_obs * pp.grad;
    H = lambda_obs * pp.hess;
    const Eigen::Vector2d d = p - anchor;
    const double n = d.norm();
    if (n > 1e-12) {
      const Eigen::Vector2d u = d / n;
      g += lambda_coord * u;
      H += lambda_coord * (Eigen::Matrix2d::Identity() - u * u.transpose()) / n;
    }
  }
};

/// One damped-Newton step on a waypoint. Returns false when no decrease is
/// possible (converged or stalled).
inline bool waypoint_step(const WaypointObjective & obj, Vec2 & p, double & f, double mu0, double tol)
{
  Eigen::Vector2d g;
  Eigen::Matrix2d H;
  obj.derivatives(p, g, H);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(H);
  const double lmin = eig.eigenvalues()(0);
  auto try_dir = [&](const Eigen::Vector2d & dir, bool armijo) {
    const double slope = g.dot(dir);
    double step = 1.0;
    for (int k = 0; k < 50; ++k) {
      const Vec2 q = p + step * dir;
      const double fq = obj.value(q);
      const bool ok = armijo ? fq <= f + 1e-4 * step * slope && fq < f : fq < f;
      if (std::isfinite(fq) && ok) {
        p = q;
        f = fq;
        return true;
      }
      step *= 0.5;
    }
    return false;
  };
  if (g.norm() < tol) {
    if (lmin >= 0.0) {
      return false;
    }
    // Saddle or maximum: follow the most negative curvature direction.
    const Eigen::Vector2d v = eig.eigenvectors().col(0) * std::max(1.0, obj.sigma);
    const Vec2 p0 = p;
    const double f0 = f;
    Vec2 best_p = p0;
    double best_f = f0;
    for (double sgn : {1.0, -1.0}) {
      p = p0;
      f = f0;
      if (try_dir(sgn * v, false) && f < best_f) {
        best_f = f;
        best_p = p;
      }
    }
    p = best_p;
    f = best_f;
    return best_f < f0;
  }
  double mu = mu0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    const Eigen::Matrix2d Hd = H + mu * Eigen::Matrix2d::Identity();
    const Eigen::LLT<Eigen::Matrix2d> llt(Hd);
    if (llt.info() == Eigen::Success) {
      const Eigen::Vector2d dir = llt.solve(-g);
      if (dir.allFinite() && g.dot(dir) < 0.0 && try_dir(dir, true)) {
        return true;
      }
    }
    mu *= 10.0;
  }
  return try_dir(-g, true);
}

}  // namespace detail

/// Minimize lambda_coord * sum_t |tau_t - tau^_t| + lambda_obs * sum_t D(tau_t, O^t)
/// waypoint by waypoint (the objective separates over t).
inline PlanResult optimize_plan(
  const Trajectory & raw, const std::vector<LabelGrid> & occ, const PlanOptimizerOptions & o = {})
{
  require(raw.allFinite(), "planner", "optimize_plan", "raw plan must be finite");
  require(o.sigma > 0.0 && o.gate > 0.0, "planner", "optimize_plan", "sigma and gate must be positive");
  PlanResult res;
  res.raw = raw;
  res.optimized = raw;
  const Eigen::Index T = raw.rows();
  std::vector<detail::WaypointObjective> objs;
  std::vector<double> f(static_cast<std::size_t>(T));
  std::vector<char> active(static_cast<std::size_t>(T), 1);
  for (Eigen::Index t = 0; t < T; ++t) {
    detail::WaypointObjective w{raw.row(t).transpose(), {}, o.lambda_coord, o.lambda_obs, o.sigma, o.gate};
    if (!occ.empty() && o.lambda_obs != 0.0) {
      w.cells = occupied_cells(occ[occupancy_index(static_cast<std::size_t>(t), occ.size())]);
    }
    f[static_cast<std::size_t>(t)] = w.value(w.anchor);
    objs.push_back(std::move(w));
  }
  auto total = [&]() {
    double s = 0.0;
    for (double v : f) s += v;
    return s;
  };
  const double f0 = total();
  require(std::isfinite(f0), "planner", "optimize_plan", "objective is not finite");
  res.objective_trace.push_back(f0);
  for (int it = 0; it < o.max_iterations; ++it) {
    bool any = false;
    for (Eigen::Index t = 0; t < T; ++t) {
      if (!active[static_cast<std::size_t>(t)]) {
        continue;
      }
      Vec2 p = res.optimized.row(t).transpose();
      double ft = f[static_cast<std::size_t>(t)];
      if (detail::waypoint_step(objs[static_cast<std::size_t>(t)], p, ft, o.initial_damping, o.grad_tolerance)) {
        res.optimized.row(t) = p.transpose();
        f[static_cast<std::size_t>(t)] = ft;
        any = true;
      } else {
        active[static_cast<std::size_t>(t)] = 0;
      }
    }
    if (!any) {
      break;
    }
    const double ft = total();
    require(std::isfinite(ft), "planner", "optimize_plan", "objective is not finite");
    res.objective_trace.push_back(ft);
    res.iterations = it + 1;
  }
  double g2 = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::Vector2d g;
    Eigen::Matrix2d H;
    objs[static_cast<std::size_t>(t)].derivatives(res.optimized.row(t).transpose(), g, H);
    g2 += g.squaredNorm();
  }
  res.final_grad_norm = std::sqrt(g2);
  return res;
}

// ---------------------------------------------------------------------------
// Collision loss

/// Ego boxes along a plan with headings from finite differences.
inline std::vector<Box2d> ego_boxes_along(
  const Trajectory & tau, const Box2d & ego_now, double width, double length)
{
  std::vector<Vec2> pts;
  for (Eigen::Index t = 0; t < tau.rows(); ++t) {
    pts.emplace_back(tau(t, 0), tau(t, 1));
  }
  const auto yaw = waypoint_headings(pts, ego_now.center(), ego_now.yaw);
  std::vector<Box2d> out;
  for (std::size_t t = 0; t < pts.size(); ++t) {
    out.push_back({pts[t].x(), pts[t].y(), width, length, yaw[t]});
  }
  return out;
}

/// sum over (omega, delta) of omega * sum_{i,t} IoU(ego box dilated by delta
/// at tau_t, agent box b_{i,t}). `agents[t]` lists the boxes at waypoint t.
inline double collision_loss(
  const Trajectory & tau, const Box2d & ego_now, const std::vector<std::vector<Box2d>> & agents,
  const PlannerConfig & c)
{
  require(c.ego_width > 0.0 && c.ego_length > 0.0, "planner", "collision_loss", "ego box must be positive");
  require(
    agents.size() == static_cast<std::size_t>(tau.rows()), "planner", "collision_loss", "one agent list per waypoint");
  const auto boxes = ego_boxes_along(tau, ego_now, c.ego_width, c.ego_length);
  double loss = 0.0;
  for (const auto & [omega, delta] : c.collision_pairs) {
    for (std::size_t t = 0; t < boxes.size(); ++t) {
      Box2d e = boxes[t];
      e.w += delta;
      e.l += delta;
      for (const auto & b : agents[t]) {
        loss += omega * rotated_iou(e, b);
      }
    }
  }
  return loss;
}

}  // namespace goalstack

#endif  // GOALSTACK__PLANNER_HPP_

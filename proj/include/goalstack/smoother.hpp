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

/// \file smoother.hpp
/// \brief Non-linear trajectory smoother. Minimizes
///
///     c(x) = lambda_xy * sum_t |x_t - x~_t|^2 + lambda_goal * |x_T - x~_T|^2
///            + sum_i w_i * phi_i(x)
///
/// over a multiple-shooting parameterization (double-integrator segments of
/// four steps joined by penalized continuity defects) with damped Gauss-Newton
/// and Armijo backtracking.
///
/// Discretization, for x in R^{T x 2} and step dt:
///   v_t = (x_{t+1} - x_t) / dt
///   a_t = (x_{t+1} - 2 x_t + x_{t-1}) / dt^2                t = 1 .. T-2
///   acceleration    = sum |a_t|^2
///   jerk            = sum |x_{t+3} - 3 x_{t+2} + 3 x_{t+1} - x_t|^2 / dt^6
///   kappa_t         = (v_t x a_t) / max(|v_t|, 1e-3)^3         t = 1 .. T-2
///   curvature       = sum kappa_t^2
///   curvature rate  = sum (kappa_{t+1} - kappa_t)^2
///   lateral accel.  = sum (kappa_t |v_t|^2)^2

#ifndef GOALSTACK__SMOOTHER_HPP_
#define GOALSTACK__SMOOTHER_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "goalstack/common.hpp"
#include "goalstack/geometry.hpp"

namespace goalstack
{

struct KinematicCosts
{
  double jerk = 0.0;
  double curvature = 0.0;
  double curvature_rate = 0.0;
  double acceleration = 0.0;
  double lateral_acceleration = 0.0;
};

struct KinematicWeights
{
  double jerk = 0.1;
  double curvature = 0.1;
  double curvature_rate = 0.1;
  double acceleration = 0.1;
  double lateral_acceleration = 0.1;
};

struct SmootherProblem
{
  Trajectory target;
  double dt = 0.5;
  double lambda_xy = 1.0;
  double lambda_goal = 1.0;
  KinematicWeights weights;
};

struct SmootherOptions
{
  int segment_length = 4;
  double continuity_weight = 1e3;
  int max_iterations = 200;
  double rel_tolerance = 1e-8;
};

struct SmootherResult
{
  Trajectory x;
  /// Objective (including continuity penalties) at the start and after each
  /// accepted iteration.
  std::vector<double> cost_trace;
  int iterations = 0;
};

namespace detail
{

constexpr double kMinSpeed = 1e-3;

/// Stacked residual vector r(x) with cost = |r|^2, and its Jacobian w.r.t. the
/// flattened trajectory [x0x, x0y, x1x, x1y, ...].
struct Residuals
{
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
};

inline Residuals smoother_residuals(const Trajectory & x, const SmootherProblem & p, bool jacobian)
{
  const int T = static_cast<int>(x.rows());
  const double dt = p.dt;
  const auto & w = p.weights;
  const int nk = std::max(0, T - 2);
  const int n = 2 * T + 2 + 2 * nk + 2 * std::max(0, T - 3) + nk + std::max(0, nk - 1) + nk;
  Residuals R;
  R.r = Eigen::VectorXd::Zero(n);
  if (jacobian) {
    R.J = Eigen::MatrixXd::Zero(n, 2 * T);
  }
  int row = 0;
  const double sxy = std::sqrt(p.lambda_xy);
  for (int t = 0; t < T; ++t) {
    for (int d = 0; d < 2; ++d) {
      R.r(row) = sxy * (x(t, d) - p.target(t, d));
      if (jacobian) R.J(row, 2 * t + d) = sxy;
      ++row;
    }
  }
  const double sg = std::sqrt(p.lambda_goal);
  for (int d = 0; d < 2; ++d) {
    R.r(row) = sg * (x(T - 1, d) - p.target(T - 1, d));
    if (jacobian) R.J(row, 2 * (T - 1) + d) = sg;
    ++row;
  }
  const double sa = std::sqrt(w.acceleration) / (dt * dt);
  for (int t = 1; t + 1 < T; ++t) {
    for (int d = 0; d < 2; ++d) {
      R.r(row) = sa * (x(t + 1, d) - 2.0 * x(t, d) + x(t - 1, d));
      if (jacobian) {
        R.J(row, 2 * (t + 1) + d) = sa;
        R.J(row, 2 * t + d) = -2.0 * sa;
        R.J(row, 2 * (t - 1) + d) = sa;
      }
      ++row;
    }
  }
  const double sj = std::sqrt(w.jerk) / (dt * dt * dt);
  for (int t = 0; t + 3 < T; ++t) {
    for (int d = 0; d < 2; ++d) {
      R.r(row) = sj * (x(t + 3, d) - 3.0 * x(t + 2, d) + 3.0 * x(t + 1, d) - x(t, d));
      if (jacobian) {
        R.J(row, 2 * (t + 3) + d) = sj;
        R.J(row, 2 * (t + 2) + d) = -3.0 * sj;
        R.J(row, 2 * (t + 1) + d) = 3.0 * sj;
        R.J(row, 2 * t + d) = -sj;
      }
      ++row;
    }
  }

  // Curvature and its derivatives w.r.t. x_{t-1}, x_t, x_{t+1}.
  std::vector<double> kappa(static_cast<std::size_t>(nk)), speed2(static_cast<std::size_t>(nk));
  std::vector<Eigen::Matrix<double, 1, 6>> dkappa(static_cast<std::size_t>(nk));
  std::vector<Eigen::Matrix<double, 1, 6>> dspeed2(static_cast<std::size_t>(nk));
  for (int i = 0; i < nk; ++i) {
    const int t = i + 1;
    const Eigen::Vector2d v = (x.row(t + 1) - x.row(t)).transpose() / dt;
    const Eigen::Vector2d a = (x.row(t + 1) - 2.0 * x.row(t) + x.row(t - 1)).transpose() / (dt * dt);
    const double cr = v.x() * a.y() - v.y() * a.x();
    const double vn = v.norm();
    const bool floored = vn < kMinSpeed;
    const double nrm = floored ? kMinSpeed : vn;
    const double n3 = nrm * nrm * nrm;
    kappa[static_cast<std::size_t>(i)] = cr / n3;
    speed2[static_cast<std::size_t>(i)] = v.squaredNorm();
    Eigen::Vector2d dk_dv(a.y() / n3, -a.x() / n3);
    if (!floored) {
      dk_dv -= 3.0 * cr / (n3 * nrm * nrm) * v;
    }
    const Eigen::Vector2d dk_da(-v.y() / n3, v.x() / n3);
    // Columns: x_{t-1}(x,y), x_t(x,y), x_{t+1}(x,y).
    Eigen::Matrix<double, 1, 6> g;
    const double idt = 1.0 / dt;
    const double idt2 = 1.0 / (dt * dt);
    for (int d = 0; d < 2; ++d) {
      g(0, d) = dk_da(d) * idt2;
      g(0, 2 + d) = -dk_dv(d) * idt - 2.0 * dk_da(d) * idt2;
      g(0, 4 + d) = dk_dv(d) * idt + dk_da(d) * idt2;
    }
    dkappa[static_cast<std::size_t>(i)] = g;
    Eigen::Matrix<double, 1, 6> gs = Eigen::Matrix<double, 1, 6>::Zero();
    for (int d = 0; d < 2; ++d) {
      gs(0, 2 + d) = -2.0 * v(d) * idt;
      gs(0, 4 + d) = 2.0 * v(d) * idt;
    }
    dspeed2[static_cast<std::size_t>(i)] = gs;
  }
  auto put = [&](int r, int t, const Eigen::Matrix<double, 1, 6> & g, double s) {
    for (int c = 0; c < 6; ++c) {
      R.J(r, 2 * (t - 1) + c) += s * g(0, c);
    }
  };
  const double sk = std::sqrt(w.curvature);
  for (int i = 0; i < nk; ++i) {
    R.r(row) = sk * kappa[static_cast<std::size_t>(i)];
    if (jacobian) put(row, i + 1, dkappa[static_cast<std::size_t>(i)], sk);
    ++row;
  }
  const double sr = std::sqrt(w.curvature_rate);
  for (int i = 0; i + 1 < nk; ++i) {
    R.r(row) = sr * (kappa[static_cast<std::size_t>(i + 1)] - kappa[static_cast<std::size_t>(i)]);
    if (jacobian) {
      put(row, i + 2, dkappa[static_cast<std::size_t>(i + 1)], sr);
      put(row, i + 1, dkappa[static_cast<std::size_t>(i)], -sr);
    }
    ++row;
  }
  const double sl = std::sqrt(w.lateral_acceleration);
  for (int i = 0; i < nk; ++i) {
    const double k = kappa[static_cast<std::size_t>(i)];
    const double s2 = speed2[static_cast<std::size_t>(i)];
    R.r(row) = sl * k * s2;
    if (jacobian) {
      put(row, i + 1, dkappa[static_cast<std::size_t>(i)], sl * s2);
      put(row, i + 1, dspeed2[static_cast<std::size_t>(i)], sl * k);
    }
    ++row;
  }
  return R;
}

}  // namespace detail

inline KinematicCosts kinematic_costs(const Trajectory & x, double dt)
{
  require(x.rows() >= 4, "target-smoother", "kinematic_costs", "need at least 4 points");
  require(dt > 0.0, "target-smoother", "kinematic_costs", "dt must be positive");
  SmootherProblem p;
  p.target = x;
  p.dt = dt;
  p.lambda_xy = 0.0;
  p.lambda_goal = 0.0;
  p.weights = {1.0, 1.0, 1.0, 1.0, 1.0};
  const auto R = detail::smoother_residuals(x, p, false);
  const int T = static_cast<int>(x.rows());
  const int nk = T - 2;
  int row = 2 * T + 2;
  KinematicCosts k;
  k.acceleration = R.r.segment(row, 2 * nk).squaredNorm();
  row += 2 * nk;
  k.jerk = R.r.segment(row, 2 * (T - 3)).squaredNorm();
  row += 2 * (T - 3);
  k.curvature = R.r.segment(row, nk).squaredNorm();
  row += nk;
  k.curvature_rate = R.r.segment(row, nk - 1).squaredNorm();
  row += nk - 1;
  k.lateral_acceleration = R.r.segment(row, nk).squaredNorm();
  return k;
}

inline void validate_smoother_problem(const SmootherProblem & p)
{
  require(p.target.rows() >= 4, "target-smoother", "smooth", "need at least 4 points");
  require(p.target.allFinite(), "target-smoother", "smooth", "target must be finite");
  require(p.dt > 0.0, "target-smoother", "smooth", "dt must be positive");
  const auto & w = p.weights;
  require(
    p.lambda_xy >= 0.0 && p.lambda_goal >= 0.0 && w.jerk >= 0.0 && w.curvature >= 0.0 &&
      w.curvature_rate >= 0.0 && w.acceleration >= 0.0 && w.lateral_acceleration >= 0.0,
    "target-smoother", "smooth", "weights must be non-negative");
}

/// c(x) for a candidate trajectory.
inline double smoother_cost(const Trajectory & x, const SmootherProblem & p)
{
  return detail::smoother_residuals(x, p, false).r.squaredNorm();
}

/// Gradient of c w.r.t. x, as a T x 2 matrix.
inline Trajectory smoother_gradient(const Trajectory & x, const SmootherProblem & p)
{
  const auto R = detail::smoother_residuals(x, p, true);
  const Eigen::VectorXd g = 2.0 * R.J.transpose() * R.r;
  Trajectory out(x.rows(), 2);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    out(t, 0) = g(2 * t);
    out(t, 1) = g(2 * t + 1);
  }
  return out;
}

/// Multiple-shooting layout. Segment s starts at index s*L and owns a start
/// position, a start velocity and per-step accelerations. Positions inside the
/// segment follow p_{j+1} = p_j + dt v_j, v_{j+1} = v_j + dt a_j. Non-final
/// segments carry L controls so their rolled-out end state can be compared
/// with the next segment's start; the final segment needs only L - 2.
class MultipleShooting
{
public:
  MultipleShooting(int T, int L, double dt) : T_(T), L_(L), dt_(dt)
  {
    for (int s0 = 0; s0 < T; s0 += L) {
      Segment seg;
      seg.start = s0;
      seg.length = std::min(L, T - s0);
      seg.last = s0 + L >= T;
      seg.controls = seg.last ? std::max(0, seg.length - 2) : seg.length;
      seg.offset = n_per_axis_;
      n_per_axis_ += 2 + seg.controls;
      segments_.push_back(seg);
    }
    build();
  }

  int variables() const { return 2 * n_per_axis_; }

  /// x = A z, flattened as [x0x, x0y, ...]; z = [z_x ; z_y].
  const Eigen::MatrixXd & A() const { return A_; }
  /// Continuity defects d = D z (position and velocity, both axes).
  const Eigen::MatrixXd & D() const { return D_; }

  /// Variables that reproduce `x` exactly with zero defects.
  Eigen::VectorXd from_trajectory(const Trajectory & x) const
  {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(variables());
    auto vel = [&](int i, int d) { return (x(i + 1, d) - x(i, d)) / dt_; };
    for (int d = 0; d < 2; ++d) {
      const int base = d * n_per_axis_;
      for (const auto & seg : segments_) {
        z(base + seg.offset) = x(seg.start, d);
        // A one-point final segment inherits the incoming velocity.
        const bool has_v = seg.start + 1 < T_;
        z(base + seg.offset + 1) = has_v ? vel(seg.start, d) : (seg.start > 0 ? vel(seg.start - 1, d) : 0.0);
        double v = z(base + seg.offset + 1);
        for (int j = 0; j < seg.controls; ++j) {
          const int i = seg.start + j + 1;
          const double vn = i + 1 < T_ ? vel(i, d) : v;
          z(base + seg.offset + 2 + j) = (vn - v) / dt_;
          v += dt_ * z(base + seg.offset + 2 + j);
        }
      }
    }
    return z;
  }

  Trajectory to_trajectory(const Eigen::VectorXd & z) const
  {
    const Eigen::VectorXd flat = A_ * z;
    Trajectory x(T_, 2);
    for (int t = 0; t < T_; ++t) {
      x(t, 0) = flat(2 * t);
      x(t, 1) = flat(2 * t + 1);
    }
    return x;
  }

private:
  struct Segment
  {
    int start = 0;
    int length = 0;
    int controls = 0;
    int offset = 0;
    bool last = false;
  };

  void build()
  {
    int defects = 0;
    for (const auto & seg : segments_) {
      defects += seg.last ? 0 : 2;
    }
    A_ = Eigen::MatrixXd::Zero(2 * T_, variables());
    D_ = Eigen::MatrixXd::Zero(2 * defects, variables());
    int drow = 0;
    for (std::size_t si = 0; si < segments_.size(); ++si) {
      const auto & seg = segments_[si];
      // Coefficients of (p, v, a_0..) for position and velocity along the rollout.
      const int nv = 2 + seg.controls;
      Eigen::RowVectorXd P = Eigen::RowVectorXd::Zero(nv);
      Eigen::RowVectorXd V = Eigen::RowVectorXd::Zero(nv);
      P(0) = 1.0;
      V(1) = 1.0;
      for (int j = 0; j <= seg.length; ++j) {
        if (j < seg.length) {
          for (int d = 0; d < 2; ++d) {
            A_.block(2 * (seg.start + j) + d, d * n_per_axis_ + seg.offset, 1, nv) = P;
          }
        }
        if (j == seg.length) {
          break;
        }
        P += dt_ * V;
        if (j < seg.controls) {
          V(2 + j) += dt_;
        }
      }
      if (!seg.last) {
        const auto & nxt = segments_[si + 1];
        for (int d = 0; d < 2; ++d) {
          const int base = d * n_per_axis_;
          D_.block(drow, base + seg.offset, 1, nv) = P;
          D_(drow, base + nxt.offset) -= 1.0;
          ++drow;
          D_.block(drow, base + seg.offset, 1, nv) = V;
          D_(drow, base + nxt.offset + 1) -= 1.0;
          ++drow;
        }
      }
    }
  }

  int T_;
  int L_;
  double dt_;
  int n_per_axis_ = 0;
  std::vector<Segment> segments_;
  Eigen::MatrixXd A_;
  Eigen::MatrixXd D_;
};

inline SmootherResult smooth(const SmootherProblem & p, const SmootherOptions & opt = {})
{
  validate_smoother_problem(p);
  const int T = static_cast<int>(p.target.rows());
  const MultipleShooting ms(T, opt.segment_length, p.dt);
  const Eigen::MatrixXd & A = ms.A();
  const Eigen::MatrixXd & D = ms.D();
  const double sc = std::sqrt(opt.continuity_weight);

  auto objective = [&](const Eigen::VectorXd & z) {
    return smoother_cost(ms.to_trajectory(z), p) + opt.continuity_weight * (D * z).squaredNorm();
  };

  Eigen::VectorXd z = ms.from_trajectory(p.target);
  double f = objective(z);
  SmootherResult res;
  res.cost_trace.push_back(f);
  bool moved = false;
  double mu = 1e-9;
  const Eigen::Index nz = z.size();
  for (int it = 0; it < opt.max_iterations; ++it) {
    const auto R = detail::smoother_residuals(ms.to_trajectory(z), p, true);
    Eigen::MatrixXd J(R.J.rows() + D.rows(), nz);
    J << R.J * A, sc * D;
    Eigen::VectorXd r(R.r.size() + D.rows());
    r << R.r, sc * (D * z);
    const Eigen::VectorXd g = 2.0 * J.transpose() * r;
    if (g.norm() <= 1e-12 * std::max(1.0, f)) {
      break;
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    auto line_search = [&](const Eigen::VectorXd & dir, Eigen::VectorXd & z_new, double & f_new) {
      const double slope = g.dot(dir);
      if (!(slope < 0.0)) {
        return false;
      }
      double step = 1.0;
      for (int k = 0; k < 40; ++k) {
        z_new = z + step * dir;
        f_new = objective(z_new);
        if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
          return true;
        }
        step *= 0.5;
      }
      return false;
    };
    Eigen::VectorXd z_new;
    double f_new = f;
    bool ok = false;
    for (int attempt = 0; attempt < 6 && !ok; ++attempt) {
      Eigen::MatrixXd H = JtJ;
      H.diagonal().array() += mu * std::max(1.0, JtJ.diagonal().maxCoeff());
      const Eigen::VectorXd dir = H.ldlt().solve(-0.5 * g);
      ok = dir.allFinite() && line_search(dir, z_new, f_new);
      if (ok) {
        mu = std::max(1e-12, mu * 0.1);
      } else {
        mu *= 10.0;
      }
    }
    if (!ok) {
      ok = line_search(-g / std::max(1.0, g.norm()), z_new, f_new);
    }
    if (!ok || f_new > f) {
      break;
    }
    const double rel = (f - f_new) / std::max(f, 1e-300);
    z = z_new;
    f = f_new;
    moved = true;
    res.cost_trace.push_back(f);
    res.iterations = it + 1;
    if (rel < opt.rel_tolerance) {
      break;
    }
  }
  res.x = moved ? ms.to_trajectory(z) : p.target;
  return res;
}

}  // namespace goalstack

#endif  // GOALSTACK__SMOOTHER_HPP_

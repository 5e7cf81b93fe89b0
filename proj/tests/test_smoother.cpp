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

#include <gtest/gtest.h>

#include "goalstack/smoother.hpp"
#include "oracles.hpp"
#include "smoother_oracle.hpp"

namespace gs = goalstack;

TEST(Smoother, CostMatchesTermByTermOracle)
{
  gs::Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto p = oracle::random_smoother_problem(rng, 5 + i % 10);
    gs::Trajectory x = p.target + oracle::random_matrix(static_cast<int>(p.target.rows()), 2, rng, 0.5);
    const double a = gs::smoother_cost(x, p), b = oracle::smoother_cost(x, p);
    EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, b));
  }
}

TEST(Smoother, CostNeverIncreases)
{
  gs::Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto p = oracle::random_smoother_problem(rng);
    const auto r = gs::smooth(p);
    for (std::size_t k = 1; k < r.cost_trace.size(); ++k) EXPECT_LE(r.cost_trace[k], r.cost_trace[k - 1]);
    EXPECT_LE(gs::smoother_cost(r.x, p), gs::smoother_cost(p.target, p) + 1e-9);
  }
}

TEST(Smoother, GradientMatchesFiniteDifferences)
{
  gs::Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto p = oracle::random_smoother_problem(rng);
    const gs::Trajectory x = p.target + oracle::random_matrix(12, 2, rng, 0.2);
    const auto g = oracle::flatten(gs::smoother_gradient(x, p));
    auto f = [&](const Eigen::VectorXd & v) { return oracle::smoother_cost(oracle::unflatten(v), p); };
    const auto fd = oracle::fd_gradient(f, oracle::flatten(x), 1e-6);
    EXPECT_LT((g - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()), 1e-4);
  }
}

TEST(Smoother, StraightLineIsAFixedPoint)
{
  gs::SmootherProblem p;
  p.target.resize(12, 2);
  for (int t = 0; t < 12; ++t) p.target.row(t) << 3.0 + 2.5 * t, -1.0 + 1.25 * t;
  const auto r = gs::smooth(p);
  EXPECT_LT((r.x - p.target).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Smoother, ArcTermsMatchClosedForms)
{
  const double R = 20.0, v = 5.0, dt = 0.5;
  const int T = 16;
  gs::Trajectory x(T, 2);
  for (int t = 0; t < T; ++t) {
    const double th = v * dt * t / R;
    x.row(t) << R * std::sin(th), R * (1.0 - std::cos(th));
  }
  const auto k = gs::kinematic_costs(x, dt);
  const double n = T - 2;
  EXPECT_NEAR(k.curvature / n, 1.0 / (R * R), 0.05 / (R * R));
  EXPECT_NEAR(k.lateral_acceleration / n, std::pow(v * v / R, 2), 0.05 * std::pow(v * v / R, 2));
  EXPECT_NEAR(k.acceleration / n, std::pow(v * v / R, 2), 0.05 * std::pow(v * v / R, 2));
  EXPECT_NEAR(k.jerk / (T - 3), std::pow(v * v * v / (R * R), 2), 0.05 * std::pow(v * v * v / (R * R), 2));
  EXPECT_LT(k.curvature_rate, 1e-12);
}

TEST(Smoother, ReachesCoordinateDescentOptimum)
{
  gs::Rng rng(4);
  for (int i = 0; i < 5; ++i) {
    const auto p = oracle::random_smoother_problem(rng, 6);
    // Cyclic coordinate descent with shrinking steps on the oracle cost.
    Eigen::VectorXd f = oracle::flatten(p.target);
    double best = oracle::smoother_cost(p.target, p);
    for (double h = 0.5; h > 1e-7; h *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (Eigen::Index j = 0; j < f.size(); ++j) {
          for (double s : {h, -h}) {
            f(j) += s;
            const double c = oracle::smoother_cost(oracle::unflatten(f), p);
            if (c < best) {
              best = c;
              improved = true;
            } else {
              f(j) -= s;
            }
          }
        }
      }
    }
    const double got = gs::smoother_cost(gs::smooth(p).x, p);
    EXPECT_LE(got, best + 1e-6 * std::max(1.0, best));
  }
}

TEST(Smoother, GoalWeightPullsTheEndpoint)
{
  gs::Rng rng(5);
  auto p = oracle::random_smoother_problem(rng);
  p.weights = {1.0, 1.0, 1.0, 1.0, 1.0};
  double prev = std::numeric_limits<double>::infinity();
  for (double lg : {1.0, 100.0, 10000.0}) {
    p.lambda_goal = lg;
    const auto r = gs::smooth(p);
    const double d = (r.x.row(11) - p.target.row(11)).norm();
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 1e-2);
}

TEST(Smoother, TranslationEquivariant)
{
  gs::Rng rng(6);
  const auto p = oracle::random_smoother_problem(rng);
  auto q = p;
  q.target.col(0).array() += 7.0;
  q.target.col(1).array() -= 3.0;
  gs::Trajectory a = gs::smooth(p).x, b = gs::smooth(q).x;
  b.col(0).array() -= 7.0;
  b.col(1).array() += 3.0;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(MultipleShooting, RoundTripHasNoDefects)
{
  gs::Rng rng(7);
  for (int T : {4, 5, 8, 9, 12, 13}) {
    const gs::MultipleShooting ms(T, 4, 0.5);
    const gs::Trajectory x = oracle::random_matrix(T, 2, rng, 5.0);
    const auto z = ms.from_trajectory(x);
    EXPECT_LT((ms.to_trajectory(z) - x).cwiseAbs().maxCoeff(), 1e-9) << "T=" << T;
    if (ms.D().rows() > 0) {
      EXPECT_LT((ms.D() * z).cwiseAbs().maxCoeff(), 1e-9) << "T=" << T;
    }
  }
}

TEST(Smoother, RejectsBadProblems)
{
  gs::SmootherProblem p;
  p.target = gs::Trajectory::Zero(3, 2);
  EXPECT_THROW(gs::smooth(p), gs::ContractViolation);
  p.target = gs::Trajectory::Zero(6, 2);
  p.dt = 0.0;
  EXPECT_THROW(gs::smooth(p), gs::ContractViolation);
}

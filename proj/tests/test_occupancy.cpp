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

#include <set>

#include "goalstack/occupancy.hpp"
#include "oracles.hpp"

namespace gs = goalstack;

namespace
{

struct OccScene
{
  gs::OccConfig cfg;
  gs::BevGrid bev;
  gs::OccParams params;
  gs::FeatureMat q_a, q_x;
  gs::PointMat pos;
  std::vector<std::int32_t> ids{4, 9, 2};

  OccScene() : bev(grid(), 16)
  {
    cfg.dim = 16;
    cfg.heads = 2;
    cfg.blocks = 3;
    gs::Rng rng(1);
    bev.data = oracle::random_matrix(bev.spec.cells(), 16, rng);
    params = gs::make_occ_params(cfg, 16, 2);
    q_a = oracle::random_matrix(3, 16, rng);
    q_x = oracle::random_matrix(3, 16, rng);
    pos.resize(3, 2);
    pos << 3.0, 2.0, -10.0, 4.0, 20.0, -15.0;
  }

  static gs::GridSpec grid()
  {
    gs::GridSpec g;
    g.height = g.width = 32;
    return g;
  }

  gs::OccOutput run() const { return gs::forecast_occupancy(bev, q_a, pos, q_x, ids, params, cfg); }
};

}  // namespace

TEST(Occupancy, MergedGridsArePartitions)
{
  const OccScene s;
  const auto out = s.run();
  ASSERT_EQ(out.merged.size(), 3u);
  const std::set<std::int32_t> allowed{0, 4, 9, 2};
  for (const auto & m : out.merged) {
    ASSERT_EQ(m.labels.size(), 32u * 32u);
    for (auto v : m.labels) EXPECT_TRUE(allowed.count(v)) << v;
  }
  for (const auto & b : out.blocks) {
    EXPECT_EQ(b.instance.rows(), 3);
    EXPECT_GT(b.instance.minCoeff(), 0.0);
    EXPECT_LT(b.instance.maxCoeff(), 1.0);
  }
}

TEST(Occupancy, MaskedAgentsGetZeroCrossWeight)
{
  const OccScene s;
  const auto out = s.run();
  int masked = 0;
  for (const auto & b : out.blocks) {
    ASSERT_EQ(b.cross_weights.size(), 2u);
    for (const auto & w : b.cross_weights) {
      for (Eigen::Index px = 0; px < w.rows(); ++px) {
        const bool any = b.mask.col(px).any();
        for (Eigen::Index a = 0; a < w.cols(); ++a) {
          if (!b.mask(a, px)) {
            ++masked;
            EXPECT_EQ(w(px, a), any ? 0.0 : 1.0 / static_cast<double>(w.cols()));
          }
        }
      }
    }
  }
  EXPECT_GT(masked, 0);
}

TEST(Occupancy, MaskFollowsAffinitySign)
{
  const OccScene s;
  const auto p_a = gs::sinusoidal_pe(s.pos, 16);
  gs::FeatureMat f = gs::linear_forward(s.bev.data, s.params.bev_proj);
  f = gs::avg_pool2(gs::avg_pool2(f, 32, 32), 16, 16);
  const auto g = gs::fuse_agent_features(s.q_a, p_a, s.q_x, 1, s.params);
  const auto blk = gs::occ_block(f, 8, 8, g, 1, s.params);
  const Eigen::MatrixXd aff = gs::mlp_forward(g, s.params.mask_mlp) * gs::avg_pool2(f, 8, 8).transpose();
  for (Eigen::Index a = 0; a < aff.rows(); ++a)
    for (Eigen::Index px = 0; px < aff.cols(); ++px) EXPECT_EQ(blk.mask(a, px), aff(a, px) > 0.0);
}

TEST(Occupancy, ZeroBranchKeepsFeature)
{
  OccScene s;
  for (auto & b : s.params.blocks) b.up_conv.conv = gs::zero_linear(9 * 16, 16);
  gs::Rng rng(3);
  const auto f = oracle::random_matrix(64, 16, rng);
  const auto g = gs::fuse_agent_features(s.q_a, gs::sinusoidal_pe(s.pos, 16), s.q_x, 2, s.params);
  EXPECT_EQ(gs::occ_block(f, 8, 8, g, 2, s.params).feature, f);
  EXPECT_EQ(gs::occ_block(f, 8, 8, gs::FeatureMat(0, 16), 2, s.params).feature, f);
}

TEST(Occupancy, DeterministicAndAgentFree)
{
  const OccScene s;
  EXPECT_EQ(s.run().merged[2].labels, s.run().merged[2].labels);
  const auto empty = gs::forecast_occupancy(s.bev, gs::FeatureMat(0, 16), gs::PointMat(0, 2), gs::FeatureMat(0, 16), {}, s.params, s.cfg);
  for (const auto & m : empty.merged)
    for (auto v : m.labels) EXPECT_EQ(v, 0);
}

TEST(MergeOccupancy, TiesGoToLowerIdAndThresholdFrees)
{
  gs::GridSpec g;
  g.height = 1;
  g.width = 3;
  Eigen::MatrixXd inst(2, 3);
  inst << 0.7, 0.4, 0.5,  //
          0.7, 0.3, 0.2;
  const auto m = gs::merge_occupancy(g, inst, {8, 3}, 0.5);
  EXPECT_EQ(m.labels, (std::vector<std::int32_t>{3, 0, 8}));
}

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

#include "goalstack/map_head.hpp"
#include "oracles.hpp"

namespace gs = goalstack;

namespace
{

gs::GridSpec tiny()
{
  gs::GridSpec g;
  g.height = 2;
  g.width = 3;
  g.x_min = g.y_min = 0.0;
  g.x_max = 3.0;
  g.y_max = 2.0;
  return g;
}

}  // namespace

TEST(PanopticMerge, MostConfidentThingWins)
{
  Eigen::MatrixXd things(2, 6), stuff(1, 6), logits(2, 4);
  things << 0.9, 0.6, 0.2, 0.7, 0.1, 0.3,  //
            0.8, 0.7, 0.4, 0.7, 0.2, 0.3;
  stuff << 0.1, 0.9, 0.9, 0.2, 0.6, 0.4;
  logits << 1, 0, 0, 0,  //
            0, 1, 0, 0;
  const auto p = gs::panoptic_merge(tiny(), things, stuff, logits, 0.5);
  const std::vector<std::int32_t> want{2, 3, 1, 2, 1, 0};
  EXPECT_EQ(p.labels, want);
}

TEST(PanopticMerge, NoObjectQueriesNeverLabel)
{
  Eigen::MatrixXd things = Eigen::MatrixXd::Constant(1, 6, 0.99), stuff = Eigen::MatrixXd::Zero(1, 6);
  Eigen::MatrixXd logits(1, 4);
  logits << 0, 0, 0, 5;
  const auto p = gs::panoptic_merge(tiny(), things, stuff, logits, 0.5);
  for (auto v : p.labels) EXPECT_EQ(v, 0);
}

TEST(MapHead, DecodeIsAPartitionAndDeterministic)
{
  gs::MapHeadConfig c;
  c.dim = 16;
  c.heads = 2;
  c.layers = 2;
  c.ffn_dim = 32;
  c.thing_queries = 10;
  gs::GridSpec g;
  g.height = g.width = 16;
  gs::BevGrid bev(g, 16);
  gs::Rng rng(4);
  bev.data = oracle::random_matrix(g.cells(), 16, rng);
  const auto p = gs::make_map_head_params(c, 16, 5);
  const auto a = gs::decode_map(bev, p, c);
  const auto b = gs::decode_map(bev, p, c);
  EXPECT_EQ(a.panoptic.labels, b.panoptic.labels);
  ASSERT_EQ(a.panoptic.labels.size(), static_cast<std::size_t>(g.cells()));
  for (auto v : a.panoptic.labels) {
    EXPECT_GE(v, 0);
    EXPECT_LE(v, 1 + c.thing_queries);
  }
  EXPECT_EQ(a.queries.thing_queries.rows(), 10);
  EXPECT_EQ(a.thing_masks.cols(), g.cells());
  EXPECT_TRUE(a.thing_masks.allFinite());
}

TEST(MaskIou, SymmetricAndMonotone)
{
  gs::GridSpec g;
  g.height = g.width = 8;
  gs::Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    gs::MaskGrid a(g), b(g);
    for (auto & v : a.labels) v = rng.bernoulli(0.4);
    for (auto & v : b.labels) v = rng.bernoulli(0.4);
    const double ab = gs::mask_iou(a, b);
    EXPECT_DOUBLE_EQ(ab, gs::mask_iou(b, a));
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
      if (!a.labels[i] || !b.labels[i]) {
        a.labels[i] = b.labels[i] = 1;
        break;
      }
    }
    EXPECT_GE(gs::mask_iou(a, b), ab);
  }
  EXPECT_EQ(gs::mask_iou(gs::MaskGrid(g), gs::MaskGrid(g)), 1.0);
}

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

#include "goalstack/kernel.hpp"
#include "oracles.hpp"

namespace gs = goalstack;

namespace
{

gs::BevGrid random_grid(int h, int w, int c, gs::Rng & rng)
{
  gs::GridSpec g;
  g.height = h;
  g.width = w;
  g.x_min = -0.5 * w;
  g.x_max = 0.5 * w;
  g.y_min = -0.4 * h;
  g.y_max = 0.4 * h;
  gs::BevGrid b(g, c);
  b.data = oracle::random_matrix(h * w, c, rng);
  return b;
}

}  // namespace

TEST(Kernel, MlpMatchesLoops)
{
  for (int seed = 0; seed < 50; ++seed) {
    gs::Rng rng(static_cast<std::uint64_t>(seed));
    const int in = 3 + seed % 7, hid = 5 + seed % 4, out = 2 + seed % 3;
    auto p = gs::make_mlp({in, hid, out}, rng);
    p.layers[0].bias = oracle::random_matrix(1, hid, rng);
    const auto x = oracle::random_matrix(4 + seed % 5, in, rng);
    EXPECT_LT(oracle::rel_err(gs::mlp_forward(x, p), oracle::mlp(x, p)), 1e-12);
  }
}

TEST(Kernel, AttentionMatchesLoops)
{
  for (int seed = 0; seed < 50; ++seed) {
    gs::Rng rng(1000 + static_cast<std::uint64_t>(seed));
    const int heads = 1 + seed % 4, D = 4 * heads;
    const auto p = gs::make_attention(D, heads, rng, 6, 5);
    const auto q = oracle::random_matrix(3 + seed % 4, D, rng);
    const auto k = oracle::random_matrix(2 + seed % 6, 6, rng);
    const auto v = oracle::random_matrix(k.rows(), 5, rng);
    EXPECT_LT(oracle::rel_err(gs::mha(q, k, v, p), oracle::mha(q, k, v, p)), 1e-10);
    gs::BoolMask m(q.rows(), k.rows());
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.bernoulli(0.5);
    m.row(0).setConstant(false);
    EXPECT_LT(oracle::rel_err(gs::mha(q, k, v, p, m), oracle::mha(q, k, v, p, &m)), 1e-10);
  }
}

TEST(Kernel, MaskedEntriesGetZeroWeight)
{
  gs::Rng rng(3);
  const auto p = gs::make_attention(8, 2, rng);
  const auto q = oracle::random_matrix(4, 8, rng), k = oracle::random_matrix(5, 8, rng);
  gs::BoolMask m = gs::BoolMask::Constant(4, 5, true);
  m(0, 1) = m(2, 3) = m(2, 4) = false;
  m.row(3).setConstant(false);
  const auto res = gs::mha_detailed(q, k, k, p, &m, true);
  ASSERT_EQ(res.weights.size(), 2u);
  for (const auto & w : res.weights) {
    EXPECT_EQ(w(0, 1), 0.0);
    EXPECT_EQ(w(2, 3), 0.0);
    EXPECT_EQ(w(2, 4), 0.0);
    for (int j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(w(3, j), 0.2);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(w.row(i).sum(), 1.0, 1e-12);
  }
}

TEST(Kernel, BilinearMatchesTentKernel)
{
  for (int seed = 0; seed < 50; ++seed) {
    gs::Rng rng(2000 + static_cast<std::uint64_t>(seed));
    const auto g = random_grid(5 + seed % 4, 6 + seed % 3, 3, rng);
    gs::PointMat pts(7, 2);
    for (int i = 0; i < 7; ++i) {
      pts(i, 0) = rng.uniform(g.spec.x_min - 2.0, g.spec.x_max + 2.0);
      pts(i, 1) = rng.uniform(g.spec.y_min - 2.0, g.spec.y_max + 2.0);
    }
    EXPECT_LT(oracle::rel_err(gs::bilinear_sample(g, pts), oracle::bilinear(g, pts)), 1e-12);
  }
}

TEST(Kernel, BilinearIsExactAtCellCenters)
{
  gs::Rng rng(5);
  const auto g = random_grid(4, 5, 2, rng);
  gs::PointMat pts(1, 2);
  const gs::Vec2 c = gs::cell_center(g.spec, 3, 2);
  pts << c.x(), c.y();
  EXPECT_LT((gs::bilinear_sample(g, pts) - g.cell(3, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kernel, DeformableAttentionMatchesLoops)
{
  for (int seed = 0; seed < 50; ++seed) {
    gs::Rng rng(3000 + static_cast<std::uint64_t>(seed));
    const int heads = 1 + seed % 3, D = 4 * heads, C = 3 + seed % 3;
    const auto g = random_grid(6, 7, C, rng);
    const auto p = gs::make_deform(D, C, heads, 1 + seed % 4, rng);
    const auto q = oracle::random_matrix(3, D, rng);
    gs::PointMat ref(3, 2);
    for (int i = 0; i < 3; ++i) ref.row(i) << rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0);
    EXPECT_LT(oracle::rel_err(gs::deform_attn(q, ref, g, p), oracle::deform(q, ref, g, p)), 1e-10);
  }
}

TEST(Kernel, ConvMatchesLoops)
{
  gs::Rng rng(11);
  const int h = 4, w = 5, cin = 3, cout = 2;
  auto p = gs::make_conv3x3(cin, cout, rng);
  p.conv.bias = oracle::random_matrix(1, cout, rng);
  const auto x = oracle::random_matrix(h * w, cin, rng);
  const auto y = gs::conv3x3(x, h, w, p);
  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < w; ++ix) {
      for (int o = 0; o < cout; ++o) {
        double s = p.conv.bias(0, o);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int sy = iy + dy, sx = ix + dx;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
            for (int c = 0; c < cin; ++c) {
              s += x(sy * w + sx, c) * p.conv.weight(((dy + 1) * 3 + dx + 1) * cin + c, o);
            }
          }
        }
        EXPECT_NEAR(y(iy * w + ix, o), s, 1e-12);
      }
    }
  }
}

TEST(Kernel, PoolUndoesUpsample)
{
  gs::Rng rng(12);
  const auto x = oracle::random_matrix(3 * 4, 2, rng);
  EXPECT_EQ(gs::avg_pool2(gs::upsample_nearest2(x, 3, 4), 6, 8), x);
}

TEST(Kernel, LayerNormStandardizes)
{
  gs::Rng rng(13);
  const auto x = oracle::random_matrix(5, 16, rng, 3.0);
  const auto y = gs::layer_norm(x, gs::make_layer_norm(16));
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(y.row(i).mean(), 0.0, 1e-12);
    EXPECT_NEAR((y.row(i).array() - y.row(i).mean()).square().mean(), 1.0, 1e-4);
  }
}

TEST(Kernel, SinusoidalEncoding)
{
  gs::PointMat p(1, 2);
  p << 0.0, 0.0;
  const auto pe = gs::sinusoidal_pe(p, 8);
  for (int c = 0; c < 8; ++c) EXPECT_DOUBLE_EQ(pe(0, c), c % 2 == 0 ? 0.0 : 1.0);
  EXPECT_THROW(gs::sinusoidal_pe(p, 6), gs::ContractViolation);
}

TEST(Kernel, DecoderLayerWithoutKeysSkipsCrossAttention)
{
  gs::Rng rng(14);
  const auto p = gs::make_decoder_layer(8, 2, 16, rng);
  const auto x = oracle::random_matrix(3, 8, rng);
  const gs::FeatureMat none(0, 8);
  gs::FeatureMat h = gs::layer_norm(x + gs::mha(x, x, x, p.self_attn), p.norm1);
  h = gs::layer_norm(h + gs::mlp_forward(h, p.ffn), p.norm3);
  EXPECT_LT(oracle::rel_err(gs::decoder_layer(x, gs::FeatureMat(), none, none, p), h), 1e-12);
}

TEST(Kernel, ShapeErrorsNameTheModule)
{
  gs::Rng rng(15);
  const auto l = gs::make_linear(3, 2, rng);
  try {
    gs::linear_forward(Eigen::MatrixXd::Zero(1, 4), l);
    FAIL();
  } catch (const gs::ContractViolation & e) {
    EXPECT_EQ(e.module(), "tensor-kernel");
  }
}

TEST(Kernel, SingleHeadClosedForm)
{
  gs::Rng rng(16);
  const auto p = gs::make_attention(6, 1, rng);
  const auto q = oracle::random_matrix(3, 6, rng), k = oracle::random_matrix(4, 6, rng);
  const Eigen::MatrixXd Q = oracle::linear(q, p.q), K = oracle::linear(k, p.k), V = oracle::linear(k, p.v);
  Eigen::MatrixXd s = Q * K.transpose() / std::sqrt(6.0);
  for (int i = 0; i < 3; ++i) {
    s.row(i) = (s.row(i).array() - s.row(i).maxCoeff()).exp();
    s.row(i) /= s.row(i).sum();
  }
  EXPECT_LT(oracle::rel_err(gs::mha(q, k, k, p), oracle::linear(s * V, p.o)), 1e-12);
}

TEST(Kernel, BilinearIsLipschitz)
{
  gs::Rng rng(17);
  const auto g = random_grid(6, 6, 2, rng);
  double lip = 0.0;  // largest neighbour difference per metre
  for (int iy = 0; iy < 6; ++iy) {
    for (int ix = 0; ix < 6; ++ix) {
      if (ix + 1 < 6) lip = std::max(lip, (g.cell(ix + 1, iy) - g.cell(ix, iy)).cwiseAbs().maxCoeff() / g.spec.cell_dx());
      if (iy + 1 < 6) lip = std::max(lip, (g.cell(ix, iy + 1) - g.cell(ix, iy)).cwiseAbs().maxCoeff() / g.spec.cell_dy());
    }
  }
  for (int i = 0; i < 200; ++i) {
    gs::PointMat a(1, 2), b(1, 2);
    a << rng.uniform(-4, 4), rng.uniform(-3, 3);
    const double eps = 1e-6;
    b << a(0, 0) + eps * rng.normal(), a(0, 1) + eps * rng.normal();
    const double d = (gs::bilinear_sample(g, a) - gs::bilinear_sample(g, b)).cwiseAbs().maxCoeff();
    EXPECT_LE(d, 2.0 * lip * (a - b).cwiseAbs().sum() + 1e-12);
  }
}

TEST(Kernel, OperationsArePure)
{
  gs::Rng rng(18);
  const auto p = gs::make_attention(8, 2, rng);
  const auto q = oracle::random_matrix(3, 8, rng);
  EXPECT_EQ(gs::mha(q, q, q, p), gs::mha(q, q, q, p));
}

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

/// \file occupancy.hpp
/// \brief Sequential occupancy forecasting. Each block fuses agent features
/// into the 1/4-scale scene feature through pixel self-attention and
/// agent-masked pixel-agent cross-attention at 1/8 scale, then decodes
/// per-agent occupancy at full resolution by feature dot products.

#ifndef GOALSTACK__OCCUPANCY_HPP_
#define GOALSTACK__OCCUPANCY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "goalstack/common.hpp"
#include "goalstack/grid.hpp"
#include "goalstack/kernel.hpp"

namespace goalstack
{

struct OccConfig
{
  int dim = 256;
  int heads = 8;
  int blocks = 5;
  double mask_threshold = 0.5;
  double occupancy_threshold = 0.5;
};

struct OccBlockParams
{
  MlpParams fuse;  // [Q_A, P_A, Q_X] (3D) -> D, one per block
  AttentionParams self_attn;
  AttentionParams cross_attn;
  Conv3x3Params up_conv;

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    s.fuse.visit(prefix + ".fuse", f);
    s.self_attn.visit(prefix + ".self_attn", f);
    s.cross_attn.visit(prefix + ".cross_attn", f);
    s.up_conv.visit(prefix + ".up_conv", f);
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

struct OccParams
{
  std::vector<OccBlockParams> blocks;
  MlpParams mask_mlp;  // G -> M
  MlpParams occ_mlp;   // M -> U
  Conv3x3Params dec1, dec2;
  Linear bev_proj;  // C -> D at the input

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
      s.blocks[i].visit(prefix + ".blocks." + std::to_string(i), f);
    }
    s.mask_mlp.visit(prefix + ".mask_mlp", f);
    s.occ_mlp.visit(prefix + ".occ_mlp", f);
    s.dec1.visit(prefix + ".dec1", f);
    s.dec2.visit(prefix + ".dec2", f);
    s.bev_proj.visit(prefix + ".bev_proj", f);
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

inline OccParams make_occ_params(const OccConfig & c, int bev_channels, std::uint64_t seed)
{
  Rng rng(derive_seed(seed, "occ"));
  OccParams p;
  for (int b = 0; b < c.blocks; ++b) {
    OccBlockParams bp;
    bp.fuse = make_mlp({3 * c.dim, c.dim, c.dim}, rng);
    bp.self_attn = make_attention(c.dim, c.heads, rng);
    bp.cross_attn = make_attention(c.dim, c.heads, rng);
    bp.up_conv = make_conv3x3(c.dim, c.dim, rng);
    p.blocks.push_back(std::move(bp));
  }
  p.mask_mlp = make_mlp({c.dim, c.dim, c.dim}, rng);
  p.occ_mlp = make_mlp({c.dim, c.dim, c.dim}, rng);
  p.dec1 = make_conv3x3(c.dim, c.dim, rng);
  p.dec2 = make_conv3x3(c.dim, c.dim, rng);
  p.bev_proj = make_linear(bev_channels, c.dim, rng);
  return p;
}

/// G^t = MLP_t([Q_A, P_A, Q_X]).
inline FeatureMat fuse_agent_features(
  const FeatureMat & q_a, const FeatureMat & p_a, const FeatureMat & q_x, int t, const OccParams & p)
{
  require(t >= 1 && t <= static_cast<int>(p.blocks.size()), "occ-former", "fuse_agent_features", "block index out of range");
  require(
    q_a.rows() == p_a.rows() && q_a.rows() == q_x.rows(), "occ-former", "fuse_agent_features",
    "row counts must match");
  FeatureMat cat(q_a.rows(), q_a.cols() + p_a.cols() + q_x.cols());
  cat << q_a, p_a, q_x;
  return mlp_forward(cat, p.blocks[static_cast<std::size_t>(t - 1)].fuse);
}

/// Dense feature sizes: `h`, `w` are the 1/4-scale height and width.
struct OccBlockOutput
{
  FeatureMat feature;  // F^t at 1/4 scale
  /// Agent-pixel attention mask at 1/8 scale, agents x pixels.
  BoolMask mask;
  /// Cross-attention weights per head, pixels x agents (empty with no agents).
  std::vector<Eigen::MatrixXd> cross_weights;
  /// Instance occupancy probabilities, agents x full-resolution cells.
  Eigen::MatrixXd instance;
};

/// Full-resolution decode F_dec from a 1/4-scale feature.
inline FeatureMat decode_dense(const FeatureMat & f, int h, int w, const OccParams & p)
{
  const FeatureMat up1 = conv3x3(upsample_nearest2(f, h, w), 2 * h, 2 * w, p.dec1);
  return conv3x3(upsample_nearest2(up1, 2 * h, 2 * w), 4 * h, 4 * w, p.dec2);
}

inline OccBlockOutput occ_block(
  const FeatureMat & f_prev, int h, int w, const FeatureMat & g, int t, const OccParams & p)
{
  require(t >= 1 && t <= static_cast<int>(p.blocks.size()), "occ-former", "occ_block", "block index out of range");
  require(h % 2 == 0 && w % 2 == 0, "occ-former", "occ_block", "1/4-scale size must be even");
  require(f_prev.rows() == static_cast<Eigen::Index>(h) * w, "occ-former", "occ_block", "feature shape mismatch");
  const OccBlockParams & bp = p.blocks[static_cast<std::size_t>(t - 1)];
  OccBlockOutput out;
  const FeatureMat f_ds = avg_pool2(f_prev, h, w);
  FeatureMat d = mha(f_ds, f_ds, f_ds, bp.self_attn);
  const FeatureMat m = g.rows() > 0 ? mlp_forward(g, p.mask_mlp) : FeatureMat(0, f_prev.cols());
  if (g.rows() > 0) {
    const Eigen::MatrixXd affinity = m * f_ds.transpose();  // agents x pixels
    out.mask = (affinity.array() > 0.0).eval();             // sigmoid(a) > 0.5
    const BoolMask pixel_mask = out.mask.transpose();
    auto ca = mha_detailed(d, g, g, bp.cross_attn, &pixel_mask, true);
    d = std::move(ca.out);
    out.cross_weights = std::move(ca.weights);
  } else {
    out.mask.resize(0, f_ds.rows());
  }
  out.feature = conv3x3(upsample_nearest2(d, h / 2, w / 2), h, w, bp.up_conv) + f_prev;
  if (g.rows() > 0) {
    const FeatureMat u = mlp_forward(m, p.occ_mlp);
    const FeatureMat dec = decode_dense(out.feature, h, w, p);
    out.instance = sigmoid(Eigen::MatrixXd(u * dec.transpose()));
  } else {
    out.instance.resize(0, static_cast<Eigen::Index>(16) * h * w);
  }
  return out;
}

/// Pixel-wise argmax over agents; cells whose best probability is below the
/// threshold stay free. Equal probabilities go to the lower id.
inline LabelGrid merge_occupancy(
  const GridSpec & g, const Eigen::MatrixXd & instance, const std::vector<std::int32_t> & ids, double threshold)
{
  require(
    instance.rows() == static_cast<Eigen::Index>(ids.size()) &&
      (instance.rows() == 0 || instance.cols() == g.cells()),
    "occ-former", "merge_occupancy", "one probability row per id over all cells");
  LabelGrid out(g);
  for (int c = 0; c < g.cells(); ++c) {
    std::int32_t best_id = 0;
    double best = -1.0;
    for (Eigen::Index a = 0; a < instance.rows(); ++a) {
      const double pr = instance(a, c);
      const std::int32_t id = ids[static_cast<std::size_t>(a)];
      if (pr > best || (pr == best && id < best_id)) {
        best = pr;
        best_id = id;
      }
    }
    if (best >= threshold) {
      out.labels[static_cast<std::size_t>(c)] = best_id;
    }
  }
  return out;
}

struct OccOutput
{
  std::vector<OccBlockOutput> blocks;
  /// Merged instance-id grid per future step 0 .. blocks-1.
  std::vector<LabelGrid> merged;
};

/// Run all blocks. Agents exclude the ego; `positions` are world (x, y).
inline OccOutput forecast_occupancy(
  const BevGrid & bev, const FeatureMat & q_a, const PointMat & positions, const FeatureMat & q_x,
  const std::vector<std::int32_t> & ids, const OccParams & p, const OccConfig & c)
{
  const GridSpec & g = bev.spec;
  require(g.height % 8 == 0 && g.width % 8 == 0, "occ-former", "forecast_occupancy", "grid size must be divisible by 8");
  require(
    q_a.rows() == positions.rows() && q_a.rows() == static_cast<Eigen::Index>(ids.size()),
    "occ-former", "forecast_occupancy", "one position and id per agent");
  const int h = g.height / 4;
  const int w = g.width / 4;
  FeatureMat f = linear_forward(bev.data, p.bev_proj);
  f = avg_pool2(avg_pool2(f, g.height, g.width), g.height / 2, g.width / 2);
  const FeatureMat p_a = sinusoidal_pe(positions, c.dim);
  OccOutput out;
  for (int t = 1; t <= c.blocks; ++t) {
    const FeatureMat gt =
      q_a.rows() > 0 ? fuse_agent_features(q_a, p_a, q_x, t, p) : FeatureMat(0, c.dim);
    OccBlockOutput blk = occ_block(f, h, w, gt, t, p);
    f = blk.feature;
    out.merged.push_back(merge_occupancy(g, blk.instance, ids, c.occupancy_threshold));
    out.blocks.push_back(std::move(blk));
  }
  return out;
}

}  // namespace goalstack

#endif  // GOALSTACK__OCCUPANCY_HPP_

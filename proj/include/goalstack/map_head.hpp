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

/// \file map_head.hpp
/// \brief Query-based map segmentation: thing queries (lane, divider,
/// crossing) and one stuff query (drivable) refined against the BEV, masks by
/// query-feature dot products, and a panoptic merge.

#ifndef GOALSTACK__MAP_HEAD_HPP_
#define GOALSTACK__MAP_HEAD_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "goalstack/common.hpp"
#include "goalstack/grid.hpp"
#include "goalstack/kernel.hpp"
#include "goalstack/scenario.hpp"

namespace goalstack
{

struct MapHeadConfig
{
  int dim = 256;
  int heads = 8;
  int layers = 6;
  int ffn_dim = 512;
  int thing_queries = 300;
  double mask_threshold = 0.5;
};

/// Thing classes; index 3 is the "no object" class.
inline constexpr int kNumThingClasses = 3;

struct MapHeadParams
{
  Eigen::MatrixXd thing_embed;  // N x D
  Eigen::MatrixXd stuff_embed;  // 1 x D
  Eigen::MatrixXd query_pos;    // (N + 1) x D, learned
  std::vector<DecoderLayerParams> layers;
  Linear class_head;  // D -> kNumThingClasses + 1

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    f(prefix + ".thing_embed", s.thing_embed);
    f(prefix + ".stuff_embed", s.stuff_embed);
    f(prefix + ".query_pos", s.query_pos);
    for (std::size_t i = 0; i < s.layers.size(); ++i) {
      s.layers[i].visit(prefix + ".layers." + std::to_string(i), f);
    }
    s.class_head.visit(prefix + ".class_head", f);
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

inline Eigen::MatrixXd seeded_embedding(int rows, int cols, Rng & rng, double scale = 1.0)
{
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      m(i, j) = round_to_f32(scale * rng.normal());
    }
  }
  return m;
}

inline MapHeadParams make_map_head_params(const MapHeadConfig & c, int bev_channels, std::uint64_t seed)
{
  Rng rng(derive_seed(seed, "map-head"));
  MapHeadParams p;
  p.thing_embed = seeded_embedding(c.thing_queries, c.dim, rng);
  p.stuff_embed = seeded_embedding(1, c.dim, rng);
  p.query_pos = seeded_embedding(c.thing_queries + 1, c.dim, rng, 0.1);
  for (int l = 0; l < c.layers; ++l) {
    p.layers.push_back(make_decoder_layer(c.dim, c.heads, c.ffn_dim, rng, bev_channels, bev_channels));
  }
  p.class_head = make_linear(c.dim, kNumThingClasses + 1, rng);
  return p;
}

struct MapQuerySet
{
  FeatureMat thing_queries;  // N x D
  FeatureMat stuff_query;    // 1 x D
  Eigen::MatrixXd class_logits;  // N x 4
};

struct MapOutput
{
  MapQuerySet queries;
  /// Mask probabilities, one row per thing query over flattened cells.
  Eigen::MatrixXd thing_masks;
  Eigen::MatrixXd stuff_mask;  // 1 x cells
  /// 0 free, 1 drivable, 2 + q thing query q.
  LabelGrid panoptic;
  /// Binary grids in MapClass order (lane, divider, crossing, drivable).
  std::array<MaskGrid, kNumMapClasses> class_masks;
};

/// Mask probabilities sigmoid(Q . B^T) for each query row.
inline Eigen::MatrixXd query_masks(const FeatureMat & queries, const BevGrid & bev)
{
  require(
    queries.cols() == bev.channels(), "map-head", "query_masks", "query width must equal BEV channels");
  return sigmoid(Eigen::MatrixXd(queries * bev.data.transpose()));
}

inline int thing_class(const Eigen::MatrixXd & logits, Eigen::Index q)
{
  Eigen::Index best = 0;
  logits.row(q).maxCoeff(&best);
  return static_cast<int>(best);
}

/// Panoptic partition: the most confident thing mask above threshold (lower
/// index on ties), else drivable if the stuff mask clears it, else free.
/// Things classified as "no object" never label a cell.
inline LabelGrid panoptic_merge(
  const GridSpec & g, const Eigen::MatrixXd & thing_masks, const Eigen::MatrixXd & stuff_mask,
  const Eigen::MatrixXd & class_logits, double threshold)
{
  LabelGrid out(g);
  std::vector<char> active(static_cast<std::size_t>(thing_masks.rows()), 0);
  for (Eigen::Index q = 0; q < thing_masks.rows(); ++q) {
    active[static_cast<std::size_t>(q)] = thing_class(class_logits, q) < kNumThingClasses;
  }
  for (int c = 0; c < g.cells(); ++c) {
    int best = -1;
    double best_p = threshold;
    for (Eigen::Index q = 0; q < thing_masks.rows(); ++q) {
      const double pq = thing_masks(q, c);
      if (active[static_cast<std::size_t>(q)] && pq > best_p) {
        best_p = pq;
        best = static_cast<int>(q);
      }
    }
    if (best >= 0) {
      out.labels[static_cast<std::size_t>(c)] = 2 + best;
    } else if (stuff_mask(0, c) > threshold) {
      out.labels[static_cast<std::size_t>(c)] = 1;
    }
  }
  return out;
}

inline MapOutput decode_map(const BevGrid & bev, const MapHeadParams & p, const MapHeadConfig & c)
{
  const int D = static_cast<int>(p.thing_embed.cols());
  require(bev.channels() == D, "map-head", "decode_map", "BEV channels must equal the query width");
  require(
    p.query_pos.rows() == p.thing_embed.rows() + 1, "map-head", "decode_map",
    "query_pos must have one row per query");
  const Eigen::Index n = p.thing_embed.rows();
  FeatureMat q(n + 1, D);
  q.topRows(n) = p.thing_embed;
  q.row(n) = p.stuff_embed.row(0);
  const FeatureMat key = bev.data + grid_position_encoding(bev.spec, D);
  for (const auto & layer : p.layers) {
    q = decoder_layer(q, p.query_pos, key, bev.data, layer);
  }
  MapOutput out;
  out.queries.thing_queries = q.topRows(n);
  out.queries.stuff_query = q.bottomRows(1);
  out.queries.class_logits = linear_forward(out.queries.thing_queries, p.class_head);
  const Eigen::MatrixXd masks = query_masks(q, bev);
  out.thing_masks = masks.topRows(n);
  out.stuff_mask = masks.bottomRows(1);
  out.panoptic = panoptic_merge(
    bev.spec, out.thing_masks, out.stuff_mask, out.queries.class_logits, c.mask_threshold);
  for (int k = 0; k < kNumMapClasses; ++k) {
    out.class_masks[static_cast<std::size_t>(k)] = MaskGrid(bev.spec);
  }
  for (Eigen::Index qi = 0; qi < n; ++qi) {
    const int cls = thing_class(out.queries.class_logits, qi);
    if (cls >= kNumThingClasses) {
      continue;
    }
    auto & m = out.class_masks[static_cast<std::size_t>(cls)].labels;
    for (int cell = 0; cell < bev.spec.cells(); ++cell) {
      if (out.thing_masks(qi, cell) > c.mask_threshold) {
        m[static_cast<std::size_t>(cell)] = 1;
      }
    }
  }
  for (int cell = 0; cell < bev.spec.cells(); ++cell) {
    out.class_masks[kDrivable].labels[static_cast<std::size_t>(cell)] =
      out.stuff_mask(0, cell) > c.mask_threshold ? 1 : 0;
  }
  return out;
}

/// |A and B| / |A or B| over nonzero cells; two empty masks agree fully.
inline double mask_iou(const MaskGrid & pred, const MaskGrid & gt)
{
  require(pred.spec == gt.spec && pred.labels.size() == gt.labels.size(), "map-head", "mask_iou", "shape mismatch");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    const bool a = pred.labels[i] != 0;
    const bool b = gt.labels[i] != 0;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace goalstack

#endif  // GOALSTACK__MAP_HEAD_HPP_

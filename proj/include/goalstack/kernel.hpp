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

/// \file kernel.hpp
/// \brief Deterministic dense primitives shared by every decoder in the stack:
/// linear layers, MLPs, layer norm, multi-head attention with boolean masks,
/// sinusoidal position encoding, bilinear BEV sampling, deformable attention
/// and the small convolution/pooling helpers the occupancy decoder needs.
///
/// Conventions: features are row-major in meaning (one token per row) and a
/// linear layer computes `y = x * W + b` with W stored as (in x out).

#ifndef GOALSTACK__KERNEL_HPP_
#define GOALSTACK__KERNEL_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "goalstack/common.hpp"
#include "goalstack/grid.hpp"

namespace goalstack
{

using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using PointMat = Eigen::Matrix<double, Eigen::Dynamic, 2>;

inline double round_to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

inline bool all_finite(const Eigen::MatrixXd & m) { return m.allFinite(); }

// ---------------------------------------------------------------------------
// Parameter blocks

struct Linear
{
  Eigen::MatrixXd weight;  // in x out
  Eigen::MatrixXd bias;    // 1 x out

  int in_dim() const { return static_cast<int>(weight.rows()); }
  int out_dim() const { return static_cast<int>(weight.cols()); }

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    f(prefix + ".weight", s.weight);
    f(prefix + ".bias", s.bias);
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

/// Seeded Xavier-uniform weights (rounded to f32 so weight files round-trip
/// exactly), zero bias.
inline Linear make_linear(int in, int out, Rng & rng, double gain = 1.0)
{
  Linear l;
  l.weight.resize(in, out);
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(in + out));
  for (int i = 0; i < in; ++i) {
    for (int j = 0; j < out; ++j) {
      l.weight(i, j) = round_to_f32(rng.uniform(-limit, limit));
    }
  }
  l.bias = Eigen::MatrixXd::Zero(1, out);
  return l;
}

inline Linear zero_linear(int in, int out)
{
  return {Eigen::MatrixXd::Zero(in, out), Eigen::MatrixXd::Zero(1, out)};
}

inline FeatureMat linear_forward(const FeatureMat & x, const Linear & l)
{
  require(x.cols() == l.weight.rows(), "tensor-kernel", "linear", "input width mismatch");
  FeatureMat y = x * l.weight;
  y.rowwise() += l.bias.row(0);
  return y;
}

/// ReLU between layers, identity after the last.
struct MlpParams
{
  std::vector<Linear> layers;

  int in_dim() const { return layers.front().in_dim(); }
  int out_dim() const { return layers.back().out_dim(); }

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    for (std::size_t i = 0; i < s.layers.size(); ++i) {
      s.layers[i].visit(prefix + "." + std::to_string(i), f);
    }
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

inline MlpParams make_mlp(const std::vector<int> & dims, Rng & rng)
{
  require(dims.size() >= 2, "tensor-kernel", "make_mlp", "need at least in/out dims");
  MlpParams p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    p.layers.push_back(make_linear(dims[i], dims[i + 1], rng));
  }
  return p;
}

inline FeatureMat mlp_forward(const FeatureMat & x, const MlpParams & p)
{
  require(!p.layers.empty(), "tensor-kernel", "mlp_forward", "empty MLP");
  require(
    x.cols() == p.layers.front().weight.rows(), "tensor-kernel", "mlp_forward",
    "input width " + std::to_string(x.cols()) + " != layer input " +
      std::to_string(p.layers.front().weight.rows()));
  FeatureMat h = x;
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    require(
      h.cols() == p.layers[i].weight.rows(), "tensor-kernel", "mlp_forward",
      "layer dims do not chain");
    h = linear_forward(h, p.layers[i]);
    if (i + 1 < p.layers.size()) {
      h = h.cwiseMax(0.0);
    }
  }
  return h;
}

struct LayerNormParams
{
  Eigen::MatrixXd gamma;  // 1 x D
  Eigen::MatrixXd beta;   // 1 x D

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    f(prefix + ".gamma", s.gamma);
    f(prefix + ".beta", s.beta);
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

inline LayerNormParams make_layer_norm(int dim)
{
  return {Eigen::MatrixXd::Ones(1, dim), Eigen::MatrixXd::Zero(1, dim)};
}

inline FeatureMat layer_norm(const FeatureMat & x, const LayerNormParams & p, double eps = 1e-5)
{
  FeatureMat y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + eps);
    y.row(i) = ((x.row(i).array() - mean) * inv).matrix();
  }
  y = (y.array().rowwise() * p.gamma.row(0).array()).matrix();
  y.rowwise() += p.beta.row(0);
  return y;
}

// ---------------------------------------------------------------------------
// Multi-head attention

struct AttentionParams
{
  int heads = 8;
  Linear q, k, v, o;

  int model_dim() const { return q.out_dim(); }
  int head_dim() const { return model_dim() / heads; }

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    s.q.visit(prefix + ".q", f);
    s.k.visit(prefix + ".k", f);
    s.v.visit(prefix + ".v", f);
    s.o.visit(prefix + ".o", f);
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

/// `key_dim`/`value_dim` are the widths of the raw key/value inputs (default: dim).
inline AttentionParams make_attention(int dim, int heads, Rng & rng, int key_dim = -1, int value_dim = -1)
{
  require(heads > 0 && dim % heads == 0, "tensor-kernel", "make_attention", "dim must be divisible by heads");
  AttentionParams p;
  p.heads = heads;
  p.q = make_linear(dim, dim, rng);
  p.k = make_linear(key_dim < 0 ? dim : key_dim, dim, rng);
  p.v = make_linear(value_dim < 0 ? dim : value_dim, dim, rng);
  p.o = make_linear(dim, dim, rng);
  return p;
}

struct AttentionOutput
{
  FeatureMat out;
  /// Per-head attention weights, each (query rows x key rows).
  std::vector<Eigen::MatrixXd> weights;
};

/// Softmax over the permitted entries of each row. Rows with no permitted entry
/// attend uniformly to every key; masked entries get exactly zero weight.
inline void masked_softmax_rows(Eigen::MatrixXd & logits, const BoolMask * mask)
{
  const Eigen::Index m = logits.cols();
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    bool any = true;
    if (mask != nullptr) {
      any = mask->row(i).any();
    }
    if (!any) {
      logits.row(i).setConstant(1.0 / static_cast<double>(m));
      continue;
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (mask == nullptr || (*mask)(i, j)) {
        mx = std::max(mx, logits(i, j));
      }
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (mask == nullptr || (*mask)(i, j)) {
        const double e = std::exp(logits(i, j) - mx);
        logits(i, j) = e;
        sum += e;
      } else {
        logits(i, j) = 0.0;
      }
    }
    logits.row(i) /= sum;
  }
}

/// Multi-head scaled dot-product attention. `mask(i, j) == true` means query i
/// may attend to key j. Pass `keep_weights` to retain per-head weight matrices.
inline AttentionOutput mha_detailed(
  const FeatureMat & query, const FeatureMat & key, const FeatureMat & value,
  const AttentionParams & p, const BoolMask * mask, bool keep_weights)
{
  require(key.rows() == value.rows(), "tensor-kernel", "mha", "key rows != value rows");
  require(key.rows() > 0, "tensor-kernel", "mha", "no keys");
  if (mask != nullptr) {
    require(
      mask->rows() == query.rows() && mask->cols() == key.rows(), "tensor-kernel", "mha",
      "mask shape must be (query rows x key rows)");
  }
  const int dh = p.head_dim();
  const FeatureMat qp = linear_forward(query, p.q);
  const FeatureMat kp = linear_forward(key, p.k);
  const FeatureMat vp = linear_forward(value, p.v);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  AttentionOutput res;
  FeatureMat concat(query.rows(), p.model_dim());
  for (int h = 0; h < p.heads; ++h) {
    Eigen::MatrixXd logits =
      (qp.middleCols(h * dh, dh) * kp.middleCols(h * dh, dh).transpose()) * scale;
    masked_softmax_rows(logits, mask);
    concat.middleCols(h * dh, dh) = logits * vp.middleCols(h * dh, dh);
    if (keep_weights) {
      res.weights.push_back(std::move(logits));
    }
  }
  res.out = linear_forward(concat, p.o);
  return res;
}

inline FeatureMat mha(
  const FeatureMat & query, const FeatureMat & key, const FeatureMat & value,
  const AttentionParams & p)
{
  return mha_detailed(query, key, value, p, nullptr, false).out;
}

inline FeatureMat mha(
  const FeatureMat & query, const FeatureMat & key, const FeatureMat & value,
  const AttentionParams & p, const BoolMask & mask)
{
  return mha_detailed(query, key, value, p, &mask, false).out;
}

// ---------------------------------------------------------------------------
// Position encoding

/// Sinusoidal encoding of 2-D points. The first half of the channels encodes x,
/// the second half y; within a half, channel 2k is sin(c * w_k) and 2k+1 is
/// cos(c * w_k) with w_k = 10000^(-2k / half).
inline FeatureMat sinusoidal_pe(const PointMat & points, int out_dim)
{
  require(
    out_dim > 0 && out_dim % 4 == 0, "tensor-kernel", "sinusoidal_pe",
    "out_dim must be a positive multiple of 4");
  const int half = out_dim / 2;
  FeatureMat pe(points.rows(), out_dim);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (int c = 0; c < 2; ++c) {
      const double v = points(i, c);
      for (int k = 0; k < half / 2; ++k) {
        const double w = std::pow(10000.0, -2.0 * k / static_cast<double>(half));
        pe(i, c * half + 2 * k) = std::sin(v * w);
        pe(i, c * half + 2 * k + 1) = std::cos(v * w);
      }
    }
  }
  return pe;
}

/// PE of every cell center of a grid, (H*W) x out_dim.
inline FeatureMat grid_position_encoding(const GridSpec & g, int out_dim)
{
  PointMat pts(g.cells(), 2);
  for (int iy = 0; iy < g.height; ++iy) {
    for (int ix = 0; ix < g.width; ++ix) {
      const Vec2 c = cell_center(g, ix, iy);
      pts.row(static_cast<Eigen::Index>(iy) * g.width + ix) << c.x(), c.y();
    }
  }
  return sinusoidal_pe(pts, out_dim);
}

// ---------------------------------------------------------------------------
// Sampling

/// Bilinear interpolation of grid features at world points. Points outside the
/// grid are clamped to the border cells.
inline FeatureMat bilinear_sample(const BevGrid & grid, const PointMat & points)
{
  require(grid.spec.cells() > 0 && grid.channels() > 0, "tensor-kernel", "bilinear_sample", "empty grid");
  const GridSpec & g = grid.spec;
  FeatureMat out(points.rows(), grid.channels());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const CellCoord c = world_to_cell(g, Vec2(points(i, 0), points(i, 1)));
    const double u = std::clamp(c.ix, 0.0, static_cast<double>(g.width - 1));
    const double v = std::clamp(c.iy, 0.0, static_cast<double>(g.height - 1));
    const int x0 = static_cast<int>(std::floor(u));
    const int y0 = static_cast<int>(std::floor(v));
    const int x1 = std::min(x0 + 1, g.width - 1);
    const int y1 = std::min(y0 + 1, g.height - 1);
    const double fx = u - x0;
    const double fy = v - y0;
    out.row(i) = (1.0 - fx) * (1.0 - fy) * grid.cell(x0, y0) + fx * (1.0 - fy) * grid.cell(x1, y0) +
                 (1.0 - fx) * fy * grid.cell(x0, y1) + fx * fy * grid.cell(x1, y1);
  }
  return out;
}

/// Deformable attention over a BEV grid: each query samples `points` locations
/// per head at learned metric offsets from its reference point and mixes them
/// with softmax weights.
struct DeformParams
{
  int heads = 8;
  int points = 4;
  Linear offsets;  // D -> heads*points*2 (metres)
  Linear attn;     // D -> heads*points
  Linear value;    // C -> D
  Linear output;   // D -> D

  int model_dim() const { return output.out_dim(); }

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    s.offsets.visit(prefix + ".offsets", f);
    s.attn.visit(prefix + ".attn", f);
    s.value.visit(prefix + ".value", f);
    s.output.visit(prefix + ".output", f);
  }
  template <class F>
  void visit(const std::string & p, F && f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { visit_impl(*this, p, f); }
};

/// Offsets start on rings of radius 1..points metres, one direction per head.
inline DeformParams make_deform(int dim, int channels, int heads, int points, Rng & rng)
{
  require(heads > 0 && dim % heads == 0, "tensor-kernel", "make_deform", "dim must be divisible by heads");
  DeformParams p;
  p.heads = heads;
  p.points = points;
  p.offsets = make_linear(dim, heads * points * 2, rng, 0.05);
  for (int h = 0; h < heads; ++h) {
    const double ang = 2.0 * kPi * h / heads;
    for (int k = 0; k < points; ++k) {
      p.offsets.bias(0, (h * points + k) * 2) = round_to_f32((k + 1) * std::cos(ang));
      p.offsets.bias(0, (h * points + k) * 2 + 1) = round_to_f32((k + 1) * std::sin(ang));
    }
  }
  p.attn = make_linear(dim, heads * points, rng);
  p.value = make_linear(channels, dim, rng);
  p.output = make_linear(dim, dim, rng);
  return p;
}

inline FeatureMat deform_attn(
  const FeatureMat & q, const PointMat & ref_points, const BevGrid & grid, const DeformParams & p)
{
  require(q.rows() == ref_points.rows(), "tensor-kernel", "deform_attn", "one reference point per query");
  require(grid.channels() == p.value.in_dim(), "tensor-kernel", "deform_attn", "grid channels mismatch");
  const int D = p.model_dim();
  const int dh = D / p.heads;
  const int HP = p.heads * p.points;
  const FeatureMat off = linear_forward(q, p.offsets);
  FeatureMat aw = linear_forward(q, p.attn);

  // Sample all locations first; sampling is linear so projecting afterwards is
  // equivalent to projecting the whole grid.
  PointMat locs(q.rows() * HP, 2);
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (int s = 0; s < HP; ++s) {
      locs(i * HP + s, 0) = ref_points(i, 0) + off(i, 2 * s);
      locs(i * HP + s, 1) = ref_points(i, 1) + off(i, 2 * s + 1);
    }
  }
  const FeatureMat samples = bilinear_sample(grid, locs);

  FeatureMat concat = FeatureMat::Zero(q.rows(), D);
  for (int h = 0; h < p.heads; ++h) {
    const Eigen::MatrixXd wv = p.value.weight.middleCols(h * dh, dh);
    const Eigen::RowVectorXd bv = p.value.bias.block(0, h * dh, 1, dh);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      // Softmax over this head's sample points.
      double mx = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < p.points; ++k) {
        mx = std::max(mx, aw(i, h * p.points + k));
      }
      double sum = 0.0;
      for (int k = 0; k < p.points; ++k) {
        const double e = std::exp(aw(i, h * p.points + k) - mx);
        aw(i, h * p.points + k) = e;
        sum += e;
      }
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(dh);
      for (int k = 0; k < p.points; ++k) {
        const double w = aw(i, h * p.points + k) / sum;
        acc += w * (samples.row(i * HP + h * p.points + k) * wv + bv);
      }
      concat.block(i, h * dh, 1, dh) = acc;
    }
  }
  return linear_forward(concat, p.output);
}

// ---------------------------------------------------------------------------
// Transformer decoder layer (post-norm): self-attention, cross-attention, FFN.

struct DecoderLayerParams
{
  AttentionParams self_attn;
  AttentionParams cross_attn;
  MlpParams ffn;
  LayerNormParams norm1, norm2, norm3;

  template <class Self, class F>
  static void visit_impl(Self & s, const std::string & prefix, F && f)
  {
    s.self_attn.visit(prefix + ".self_attn", f);
    s.cross_attn.visit(prefix + ".cross_attn", f);
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

inline DecoderLayerParams make_decoder_layer(
  int dim, int heads, int ffn_dim, Rng & rng, int key_dim = -1, int value_dim = -1)
{
  DecoderLayerParams p;
  p.self_attn = make_attention(dim, heads, rng);
  p.cross_attn = make_attention(dim, heads, rng, key_dim, value_dim);
  p.ffn = make_mlp({dim, ffn_dim, dim}, rng);
  p.norm1 = make_layer_norm(dim);
  p.norm2 = make_layer_norm(dim);
  p.norm3 = make_layer_norm(dim);
  return p;
}

/// One decoder layer. `key`/`value` with zero rows skip the cross-attention
/// sub-block. `query_pos` (same shape as x, or empty) is added to the
/// attention queries but not to the residual stream.
inline FeatureMat decoder_layer(
  const FeatureMat & x, const FeatureMat & query_pos, const FeatureMat & key,
  const FeatureMat & value, const DecoderLayerParams & p, const BoolMask * mask = nullptr)
{
  const bool has_pos = query_pos.size() > 0;
  FeatureMat h = x;
  {
    const FeatureMat qk = has_pos ? FeatureMat(h + query_pos) : h;
    h = layer_norm(h + mha(qk, qk, h, p.self_attn), p.norm1);
  }
  if (key.rows() > 0) {
    const FeatureMat q = has_pos ? FeatureMat(h + query_pos) : h;
    h = layer_norm(h + mha_detailed(q, key, value, p.cross_attn, mask, false).out, p.norm2);
  }
  h = layer_norm(h + mlp_forward(h, p.ffn), p.norm3);
  return h;
}

// ---------------------------------------------------------------------------
// Raster helpers for (H*W) x C feature maps.

inline FeatureMat avg_pool2(const FeatureMat & x, int h, int w)
{
  require(x.rows() == static_cast<Eigen::Index>(h) * w, "tensor-kernel", "avg_pool2", "shape mismatch");
  const int ho = h / 2;
  const int wo = w / 2;
  FeatureMat y(static_cast<Eigen::Index>(ho) * wo, x.cols());
  for (int iy = 0; iy < ho; ++iy) {
    for (int ix = 0; ix < wo; ++ix) {
      y.row(iy * wo + ix) =
        0.25 * (x.row((2 * iy) * w + 2 * ix) + x.row((2 * iy) * w + 2 * ix + 1) +
                x.row((2 * iy + 1) * w + 2 * ix) + x.row((2 * iy + 1) * w + 2 * ix + 1));
    }
  }
  return y;
}

inline FeatureMat upsample_nearest2(const FeatureMat & x, int h, int w)
{
  require(x.rows() == static_cast<Eigen::Index>(h) * w, "tensor-kernel", "upsample_nearest2", "shape mismatch");
  const int wo = 2 * w;
  FeatureMat y(static_cast<Eigen::Index>(4) * h * w, x.cols());
  for (int iy = 0; iy < 2 * h; ++iy) {
    for (int ix = 0; ix < wo; ++ix) {
      y.row(iy * wo + ix) = x.row((iy / 2) * w + ix / 2);
    }
  }
  return y;
}

/// 3x3 convolution, zero padding, stride 1. Weight is (9*Cin) x Cout with tap
/// (dy, dx) occupying rows [((dy+1)*3 + (dx+1)) * Cin, +Cin).
struct Conv3x3Params
{
  Linear conv;

  int in_dim() const { return conv.in_dim() / 9; }
  int out_dim() const { return conv.out_dim(); }

  template <class F>
  void visit(const std::string & p, F && f) { conv.visit(p, f); }
  template <class F>
  void visit(const std::string & p, F && f) const { conv.visit(p, f); }
};

inline Conv3x3Params make_conv3x3(int in, int out, Rng & rng)
{
  Conv3x3Params p;
  p.conv = make_linear(9 * in, out, rng);
  return p;
}

inline FeatureMat conv3x3(const FeatureMat & x, int h, int w, const Conv3x3Params & p)
{
  const int cin = p.in_dim();
  require(x.rows() == static_cast<Eigen::Index>(h) * w, "tensor-kernel", "conv3x3", "shape mismatch");
  require(x.cols() == cin, "tensor-kernel", "conv3x3", "channel mismatch");
  FeatureMat y = FeatureMat::Zero(x.rows(), p.out_dim());
  y.rowwise() += p.conv.bias.row(0);
  FeatureMat shifted(x.rows(), cin);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      shifted.setZero();
      for (int iy = 0; iy < h; ++iy) {
        const int sy = iy + dy;
        if (sy < 0 || sy >= h) {
          continue;
        }
        for (int ix = 0; ix < w; ++ix) {
          const int sx = ix + dx;
          if (sx >= 0 && sx < w) {
            shifted.row(iy * w + ix) = x.row(sy * w + sx);
          }
        }
      }
      const int tap = (dy + 1) * 3 + (dx + 1);
      y.noalias() += shifted * p.conv.weight.middleRows(tap * cin, cin);
    }
  }
  return y;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd & z)
{
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace goalstack

#endif  // GOALSTACK__KERNEL_HPP_

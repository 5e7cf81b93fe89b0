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

/// \file metrics.hpp
/// \brief Evaluation suite: tracking (AMOTA, AMOTP, recall, IDS), map IoU,
/// motion (minADE, minFDE, MR, EPA, minFDE-AP), occupancy (IoU and VPQ,
/// near and far) and planning (L2, collision rate), plus a mergeable
/// per-scenario accumulator.

#ifndef GOALSTACK__METRICS_HPP_
#define GOALSTACK__METRICS_HPP_

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "goalstack/common.hpp"
#include "goalstack/geometry.hpp"
#include "goalstack/grid.hpp"
#include "goalstack/scenario.hpp"

namespace goalstack
{

// ---------------------------------------------------------------------------
// Tracking

struct TrackPoint
{
  std::int32_t id = 0;
  Vec2 center = Vec2::Zero();
  double score = 1.0;
};

struct TrackingFrame
{
  std::vector<TrackPoint> gt;
  std::vector<TrackPoint> pred;
};

/// Independent sequences (ids are only compared within a sequence).
using TrackingData = std::vector<std::vector<TrackingFrame>>;

struct TrackingConfig
{
  double match_distance = 2.0;
  /// AMOTA averages MOTA_r over r in {1/(n-1), ..., 1}.
  int recall_points = 40;
};

struct ClearCounts
{
  long gt = 0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long ids = 0;
  double distance = 0.0;  // sum over TPs
};

/// Per-frame association: keep last frame's pairing while the pair stays within
/// the match distance, then greedily pair the remaining closest centres.
inline ClearCounts clear_counts(const TrackingData & data, double min_score, double match_distance)
{
  ClearCounts c;
  for (const auto & seq : data) {
    std::map<std::int32_t, std::int32_t> last_match;  // gt id -> pred id, latest
    std::map<std::int32_t, std::int32_t> prev_frame;  // pairs of the previous frame
    for (const auto & f : seq) {
      std::vector<const TrackPoint *> preds;
      for (const auto & p : f.pred) {
        if (p.score >= min_score) {
          preds.push_back(&p);
        }
      }
      c.gt += static_cast<long>(f.gt.size());
      std::vector<char> gt_used(f.gt.size(), 0), pr_used(preds.size(), 0);
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (std::size_t g = 0; g < f.gt.size(); ++g) {
        const auto it = prev_frame.find(f.gt[g].id);
        if (it == prev_frame.end()) {
          continue;
        }
        for (std::size_t k = 0; k < preds.size(); ++k) {
          if (!pr_used[k] && preds[k]->id == it->second &&
              (preds[k]->center - f.gt[g].center).norm() <= match_distance) {
            gt_used[g] = pr_used[k] = 1;
            pairs.emplace_back(g, k);
            break;
          }
        }
      }
      struct Cand
      {
        double d;
        std::size_t g, k;
      };
      std::vector<Cand> cands;
      for (std::size_t g = 0; g < f.gt.size(); ++g) {
        if (gt_used[g]) continue;
        for (std::size_t k = 0; k < preds.size(); ++k) {
          if (pr_used[k]) continue;
          const double d = (preds[k]->center - f.gt[g].center).norm();
          if (d <= match_distance) {
            cands.push_back({d, g, k});
          }
        }
      }
      std::stable_sort(cands.begin(), cands.end(), [](const Cand & a, const Cand & b) { return a.d < b.d; });
      for (const auto & cd : cands) {
        if (!gt_used[cd.g] && !pr_used[cd.k]) {
          gt_used[cd.g] = pr_used[cd.k] = 1;
          pairs.emplace_back(cd.g, cd.k);
        }
      }
      prev_frame.clear();
      for (const auto & [g, k] : pairs) {
        const std::int32_t gid = f.gt[g].id;
        const std::int32_t pid = preds[k]->id;
        const auto it = last_match.find(gid);
        if (it != last_match.end() && it->second != pid) {
          ++c.ids;
        }
        last_match[gid] = pid;
        prev_frame[gid] = pid;
        ++c.tp;
        c.distance += (preds[k]->center - f.gt[g].center).norm();
      }
      c.fp += static_cast<long>(preds.size() - pairs.size());
      c.fn += static_cast<long>(f.gt.size() - pairs.size());
    }
  }
  return c;
}

struct TrackingMetrics
{
  std::optional<double> amota, amotp, recall;
  long ids = 0;
  long gt = 0;
  /// MOTA_r and MOTP_r per recall target (r ascending).
  std::vector<double> recall_targets, mota, motp;
};

/// MOTA at an operating point, using the recall actually achieved there.
inline double mota_at(const ClearCounts & c)
{
  if (c.gt == 0 || c.tp == 0) {
    return 0.0;
  }
  const double r = static_cast<double>(c.tp) / static_cast<double>(c.gt);
  const double gt = static_cast<double>(c.gt);
  return std::max(0.0, 1.0 - (static_cast<double>(c.fp + c.fn + c.ids) - (1.0 - r) * gt) / (r * gt));
}

inline TrackingMetrics tracking_metrics(const TrackingData & data, const TrackingConfig & cfg = {})
{
  TrackingMetrics m;
  std::vector<double> scores;
  for (const auto & seq : data) {
    for (const auto & f : seq) {
      m.gt += static_cast<long>(f.gt.size());
      for (const auto & p : f.pred) scores.push_back(p.score);
    }
  }
  if (m.gt == 0) {
    return m;
  }
  std::sort(scores.begin(), scores.end(), std::greater<>());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  const double lowest = scores.empty() ? 0.0 : scores.back();
  const ClearCounts all = clear_counts(data, lowest, cfg.match_distance);
  m.recall = static_cast<double>(all.tp) / static_cast<double>(m.gt);
  m.ids = all.ids;

  // Recall at each candidate threshold (descending scores), memoized.
  std::map<std::size_t, ClearCounts> memo;
  auto counts_at = [&](std::size_t i) -> const ClearCounts & {
    auto it = memo.find(i);
    if (it == memo.end()) {
      it = memo.emplace(i, clear_counts(data, scores[i], cfg.match_distance)).first;
    }
    return it->second;
  };
  auto recall_of = [&](const ClearCounts & c) { return static_cast<double>(c.tp) / static_cast<double>(c.gt); };

  const int n = cfg.recall_points;
  double sum_mota = 0.0, sum_motp = 0.0;
  for (int k = 1; k <= n - 1; ++k) {
    const double r = static_cast<double>(k) / (n - 1);
    m.recall_targets.push_back(r);
    double mota = 0.0, motp = cfg.match_distance;
    if (!scores.empty() && recall_of(all) + 1e-12 >= r) {
      // Highest threshold reaching r: smallest index i with recall(i) >= r,
      // recall being non-decreasing as the threshold drops.
      std::size_t lo = 0, hi = scores.size() - 1;
      while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (recall_of(counts_at(mid)) + 1e-12 >= r) {
          hi = mid;
        } else {
          lo = mid + 1;
        }
      }
      const ClearCounts & c = counts_at(lo);
      mota = mota_at(c);
      motp = c.tp > 0 ? c.distance / static_cast<double>(c.tp) : cfg.match_distance;
    }
    m.mota.push_back(mota);
    m.motp.push_back(motp);
    sum_mota += mota;
    sum_motp += motp;
  }
  m.amota = sum_mota / (n - 1);
  m.amotp = sum_motp / (n - 1);
  return m;
}

// ---------------------------------------------------------------------------
// Motion

struct MotionPrediction
{
  std::int32_t id = 0;
  Vec2 position = Vec2::Zero();
  double score = 1.0;
  /// One T x 2 world trajectory per mode.
  std::vector<Trajectory> modes;
};

struct MotionGroundTruth
{
  std::int32_t id = 0;
  Vec2 position = Vec2::Zero();
  /// T x 2 world future; meaningful only when `full_future`.
  Trajectory future;
  bool full_future = false;
};

struct MotionFrame
{
  std::vector<MotionPrediction> pred;
  std::vector<MotionGroundTruth> gt;
};

struct MotionConfigEval
{
  double match_distance = 1.0;
  double miss_distance = 2.0;
  double epa_fp_penalty = 0.5;
};

inline void min_errors(const MotionPrediction & p, const Trajectory & gt, double & ade, double & fde)
{
  ade = std::numeric_limits<double>::infinity();
  fde = std::numeric_limits<double>::infinity();
  for (const auto & m : p.modes) {
    require(m.rows() == gt.rows(), "metrics", "motion_metrics", "mode length must match the future");
    double s = 0.0;
    for (Eigen::Index t = 0; t < gt.rows(); ++t) {
      s += (m.row(t) - gt.row(t)).norm();
    }
    ade = std::min(ade, s / static_cast<double>(gt.rows()));
    fde = std::min(fde, (m.row(gt.rows() - 1) - gt.row(gt.rows() - 1)).norm());
  }
}

struct MotionMetrics
{
  std::optional<double> min_ade, min_fde, miss_rate, epa, min_fde_ap;
  long tp = 0, fp = 0, gt = 0, hits = 0;
};

inline MotionMetrics motion_metrics(const std::vector<MotionFrame> & frames, const MotionConfigEval & cfg = {})
{
  MotionMetrics m;
  double sum_ade = 0.0, sum_fde = 0.0;
  long misses = 0;
  struct ApEntry
  {
    double score;
    std::size_t frame, pred;
  };
  std::vector<ApEntry> ap_entries;
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const auto & f = frames[fi];
    for (const auto & g : f.gt) m.gt += g.full_future ? 1 : 0;
    struct Cand
    {
      double d;
      std::size_t k, g;
    };
    std::vector<Cand> cands;
    for (std::size_t k = 0; k < f.pred.size(); ++k) {
      ap_entries.push_back({f.pred[k].score, fi, k});
      for (std::size_t g = 0; g < f.gt.size(); ++g) {
        const double d = (f.pred[k].position - f.gt[g].position).norm();
        if (d <= cfg.match_distance) cands.push_back({d, k, g});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand & a, const Cand & b) { return a.d < b.d; });
    std::vector<char> pu(f.pred.size(), 0), gu(f.gt.size(), 0);
    for (const auto & c : cands) {
      if (pu[c.k] || gu[c.g]) continue;
      pu[c.k] = gu[c.g] = 1;
      const auto & g = f.gt[c.g];
      if (!g.full_future) continue;  // ignored pairing
      double ade, fde;
      min_errors(f.pred[c.k], g.future, ade, fde);
      ++m.tp;
      sum_ade += ade;
      sum_fde += fde;
      misses += fde > cfg.miss_distance ? 1 : 0;
      m.hits += fde < cfg.miss_distance ? 1 : 0;
    }
    for (std::size_t k = 0; k < f.pred.size(); ++k) m.fp += pu[k] ? 0 : 1;
  }
  if (m.tp > 0) {
    m.min_ade = sum_ade / static_cast<double>(m.tp);
    m.min_fde = sum_fde / static_cast<double>(m.tp);
    m.miss_rate = static_cast<double>(misses) / static_cast<double>(m.tp);
  }
  if (m.gt > 0) {
    m.epa = std::max(0.0, static_cast<double>(m.hits) - cfg.epa_fp_penalty * static_cast<double>(m.fp)) /
            static_cast<double>(m.gt);
    // minFDE-AP: score-ordered greedy matching requiring both thresholds.
    std::stable_sort(ap_entries.begin(), ap_entries.end(), [](const ApEntry & a, const ApEntry & b) {
      return a.score > b.score;
    });
    std::vector<std::vector<char>> taken(frames.size());
    for (std::size_t fi = 0; fi < frames.size(); ++fi) taken[fi].assign(frames[fi].gt.size(), 0);
    std::vector<double> precision, recall;
    long tp = 0, fp = 0;
    for (const auto & e : ap_entries) {
      const auto & f = frames[e.frame];
      const auto & p = f.pred[e.pred];
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = f.gt.size();
      bool near_partial = false;
      for (std::size_t g = 0; g < f.gt.size(); ++g) {
        const double d = (p.position - f.gt[g].position).norm();
        if (d > cfg.match_distance) continue;
        if (!f.gt[g].full_future) {
          near_partial = true;
          continue;
        }
        if (taken[e.frame][g]) continue;
        double ade, fde;
        min_errors(p, f.gt[g].future, ade, fde);
        if (fde <= cfg.miss_distance && d < best) {
          best = d;
          arg = g;
        }
      }
      if (arg < f.gt.size()) {
        taken[e.frame][arg] = 1;
        ++tp;
      } else if (near_partial) {
        continue;
      } else {
        ++fp;
      }
      precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
      recall.push_back(static_cast<double>(tp) / static_cast<double>(m.gt));
    }
    double ap = 0.0;
    for (int i = 0; i <= 10; ++i) {
      const double r = i / 10.0;
      double best = 0.0;
      for (std::size_t j = 0; j < precision.size(); ++j) {
        if (recall[j] + 1e-12 >= r) best = std::max(best, precision[j]);
      }
      ap += best;
    }
    m.min_fde_ap = ap / 11.0;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Occupancy

struct OccupancyCounts
{
  long intersection = 0;
  long union_ = 0;
  double iou_tp = 0.0;
  long tp = 0, fp = 0, fn = 0;

  OccupancyCounts & operator+=(const OccupancyCounts & o)
  {
    intersection += o.intersection;
    union_ += o.union_;
    iou_tp += o.iou_tp;
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

inline std::optional<double> occupancy_iou(const OccupancyCounts & c)
{
  return c.union_ == 0 ? 1.0 : static_cast<double>(c.intersection) / static_cast<double>(c.union_);
}

inline std::optional<double> occupancy_vpq(const OccupancyCounts & c)
{
  const double den = static_cast<double>(c.tp) + 0.5 * static_cast<double>(c.fp + c.fn);
  if (den <= 0.0) {
    return std::nullopt;
  }
  return c.iou_tp / den;
}

/// Counts over a sequence of instance-id grids (same extents). A pred/gt
/// instance pair with IoU > 0.5 is a TP unless the gt instance was earlier
/// matched to a different pred id, in which case it counts as FP + FN.
inline OccupancyCounts occupancy_counts(const std::vector<LabelGrid> & pred, const std::vector<LabelGrid> & gt)
{
  require(pred.size() == gt.size(), "metrics", "occupancy_metrics", "pred and gt need the same steps");
  OccupancyCounts c;
  std::map<std::int32_t, std::int32_t> matched;  // gt id -> pred id
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const auto & P = pred[t].labels;
    const auto & G = gt[t].labels;
    require(P.size() == G.size() && pred[t].spec == gt[t].spec, "metrics", "occupancy_metrics", "grid mismatch");
    std::map<std::int32_t, long> pa, ga;
    std::map<std::pair<std::int32_t, std::int32_t>, long> inter;
    for (std::size_t i = 0; i < P.size(); ++i) {
      const bool a = P[i] != 0, b = G[i] != 0;
      c.intersection += (a && b) ? 1 : 0;
      c.union_ += (a || b) ? 1 : 0;
      if (a) ++pa[P[i]];
      if (b) ++ga[G[i]];
      if (a && b) ++inter[{P[i], G[i]}];
    }
    std::set<std::int32_t> pred_tp, gt_tp;
    for (const auto & [key, n] : inter) {
      const auto [p, g] = key;
      const double iou = static_cast<double>(n) / static_cast<double>(pa[p] + ga[g] - n);
      if (iou <= 0.5) continue;
      const auto it = matched.find(g);
      if (it != matched.end() && it->second != p) {
        continue;  // id switch: left unmatched, counted below as FP + FN
      }
      matched[g] = p;
      c.iou_tp += iou;
      ++c.tp;
      pred_tp.insert(p);
      gt_tp.insert(g);
    }
    c.fp += static_cast<long>(pa.size() - pred_tp.size());
    c.fn += static_cast<long>(ga.size() - gt_tp.size());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Planning

struct PlanningSample
{
  Trajectory plan;       // T_p x 2 world
  Trajectory gt;         // T_p x 2 world ego future
  std::vector<std::vector<Box2d>> agents;  // per step
  Box2d ego_now;
};

struct PlanningCounts
{
  std::array<double, 3> l2_sum{0.0, 0.0, 0.0};
  std::array<long, 3> l2_n{0, 0, 0};
  std::array<long, 3> collide{0, 0, 0};
  std::array<long, 3> steps{0, 0, 0};

  PlanningCounts & operator+=(const PlanningCounts & o)
  {
    for (int k = 0; k < 3; ++k) {
      l2_sum[k] += o.l2_sum[k];
      l2_n[k] += o.l2_n[k];
      collide[k] += o.collide[k];
      steps[k] += o.steps[k];
    }
    return *this;
  }
};

/// Horizons 1 s / 2 s / 3 s at 2 Hz are waypoints 2, 4, 6.
inline PlanningCounts planning_counts(const PlanningSample & s, double ego_w, double ego_l)
{
  require(s.plan.rows() == s.gt.rows() && s.plan.rows() >= 6, "metrics", "planning_metrics", "need 6 aligned waypoints");
  require(s.agents.size() == static_cast<std::size_t>(s.plan.rows()), "metrics", "planning_metrics", "agents per step");
  PlanningCounts c;
  std::vector<Vec2> pts;
  for (Eigen::Index t = 0; t < s.plan.rows(); ++t) pts.emplace_back(s.plan(t, 0), s.plan(t, 1));
  const auto yaw = waypoint_headings(pts, s.ego_now.center(), s.ego_now.yaw);
  std::vector<char> hit(pts.size(), 0);
  for (std::size_t t = 0; t < pts.size(); ++t) {
    const Box2d e{pts[t].x(), pts[t].y(), ego_w, ego_l, yaw[t]};
    for (const auto & b : s.agents[t]) {
      if (rotated_iou(e, b) > 0.0) {
        hit[t] = 1;
        break;
      }
    }
  }
  for (int k = 0; k < 3; ++k) {
    const int idx = 2 * (k + 1) - 1;
    c.l2_sum[static_cast<std::size_t>(k)] += (s.plan.row(idx) - s.gt.row(idx)).norm();
    c.l2_n[static_cast<std::size_t>(k)] += 1;
    for (int t = 0; t <= idx; ++t) {
      c.collide[static_cast<std::size_t>(k)] += hit[static_cast<std::size_t>(t)];
      c.steps[static_cast<std::size_t>(k)] += 1;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Accumulation and report

struct MapCounts
{
  std::array<long, kNumMapClasses> intersection{0, 0, 0, 0};
  std::array<long, kNumMapClasses> union_{0, 0, 0, 0};

  MapCounts & operator+=(const MapCounts & o)
  {
    for (int k = 0; k < kNumMapClasses; ++k) {
      intersection[static_cast<std::size_t>(k)] += o.intersection[static_cast<std::size_t>(k)];
      union_[static_cast<std::size_t>(k)] += o.union_[static_cast<std::size_t>(k)];
    }
    return *this;
  }
};

inline MapCounts map_counts(const std::array<MaskGrid, kNumMapClasses> & pred, const std::array<MaskGrid, kNumMapClasses> & gt)
{
  MapCounts c;
  for (int k = 0; k < kNumMapClasses; ++k) {
    const auto & P = pred[static_cast<std::size_t>(k)].labels;
    const auto & G = gt[static_cast<std::size_t>(k)].labels;
    require(P.size() == G.size(), "metrics", "map_iou", "grid mismatch");
    for (std::size_t i = 0; i < P.size(); ++i) {
      const bool a = P[i] != 0, b = G[i] != 0;
      c.intersection[static_cast<std::size_t>(k)] += (a && b) ? 1 : 0;
      c.union_[static_cast<std::size_t>(k)] += (a || b) ? 1 : 0;
    }
  }
  return c;
}

/// Everything one scenario contributes.
struct ScenarioRecord
{
  std::vector<TrackingFrame> tracking;
  std::vector<MotionFrame> motion;
  OccupancyCounts occ_near, occ_far;
  MapCounts map;
  PlanningCounts plan_raw, plan_opt;
};

struct MetricsReport
{
  std::map<std::string, std::optional<double>> values;
  std::map<std::string, nlohmann::json> provenance;

  nlohmann::json to_json() const
  {
    nlohmann::json j;
    j["metrics"] = nlohmann::json::object();
    for (const auto & [k, v] : values) {
      j["metrics"][k] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    }
    j["provenance"] = provenance;
    return j;
  }

  bool operator==(const MetricsReport & o) const { return to_json() == o.to_json(); }
};

/// Per-scenario records keyed by scenario name; merging is a map union and the
/// report is computed over records in key order, so merge order never matters.
class MetricsAccumulator
{
public:
  void add(const std::string & key, ScenarioRecord rec)
  {
    if (!records_.emplace(key, std::move(rec)).second) {
      throw ConfigError("duplicate scenario key '" + key + "' in metrics accumulator");
    }
  }

  void merge(const MetricsAccumulator & other)
  {
    for (const auto & [k, r] : other.records_) {
      add(k, r);
    }
  }

  std::size_t size() const { return records_.size(); }

  MetricsReport report() const
  {
    MetricsReport rep;
    TrackingData tracking;
    std::vector<MotionFrame> motion;
    OccupancyCounts near, far;
    MapCounts map;
    PlanningCounts raw, opt;
    for (const auto & [k, r] : records_) {
      tracking.push_back(r.tracking);
      motion.insert(motion.end(), r.motion.begin(), r.motion.end());
      near += r.occ_near;
      far += r.occ_far;
      map += r.map;
      raw += r.plan_raw;
      opt += r.plan_opt;
    }
    auto & v = rep.values;
    auto & p = rep.provenance;
    p["scenarios"] = records_.size();

    const TrackingMetrics tm = tracking_metrics(tracking);
    v["tracking.amota"] = tm.amota;
    v["tracking.amotp"] = tm.amotp;
    v["tracking.recall"] = tm.recall;
    v["tracking.ids"] = static_cast<double>(tm.ids);
    p["tracking"] = {{"gt", tm.gt}, {"recall_points", tm.recall_targets.size()}};

    const MotionMetrics mm = motion_metrics(motion);
    v["motion.min_ade"] = mm.min_ade;
    v["motion.min_fde"] = mm.min_fde;
    v["motion.miss_rate"] = mm.miss_rate;
    v["motion.epa"] = mm.epa;
    v["motion.min_fde_ap"] = mm.min_fde_ap;
    p["motion"] = {{"tp", mm.tp}, {"fp", mm.fp}, {"gt", mm.gt}, {"hits", mm.hits}};

    v["occupancy.iou_near"] = occupancy_iou(near);
    v["occupancy.iou_far"] = occupancy_iou(far);
    v["occupancy.vpq_near"] = occupancy_vpq(near);
    v["occupancy.vpq_far"] = occupancy_vpq(far);
    auto occ_json = [](const OccupancyCounts & c) {
      return nlohmann::json{{"intersection", c.intersection}, {"union", c.union_}, {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
    };
    p["occupancy"] = {{"near", occ_json(near)}, {"far", occ_json(far)}};

    for (int k = 0; k < kNumMapClasses; ++k) {
      const auto u = map.union_[static_cast<std::size_t>(k)];
      v[std::string("map.iou_") + map_class_name(k)] =
        u == 0 ? 1.0 : static_cast<double>(map.intersection[static_cast<std::size_t>(k)]) / static_cast<double>(u);
    }
    p["map"] = {{"intersection", map.intersection}, {"union", map.union_}};

    auto planning = [&](const std::string & tag, const PlanningCounts & c) {
      double l2_avg = 0.0, col_avg = 0.0;
      bool any = c.l2_n[0] > 0;
      for (int k = 0; k < 3; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const std::string h = std::to_string(k + 1) + "s";
        if (!any) {
          v["planning." + tag + ".l2_" + h] = std::nullopt;
          v["planning." + tag + ".collision_" + h] = std::nullopt;
          continue;
        }
        const double l2 = c.l2_sum[kk] / static_cast<double>(c.l2_n[kk]);
        const double col = static_cast<double>(c.collide[kk]) / static_cast<double>(c.steps[kk]);
        v["planning." + tag + ".l2_" + h] = l2;
        v["planning." + tag + ".collision_" + h] = col;
        l2_avg += l2 / 3.0;
        col_avg += col / 3.0;
      }
      v["planning." + tag + ".l2_avg"] = any ? std::optional<double>(l2_avg) : std::nullopt;
      v["planning." + tag + ".collision_avg"] = any ? std::optional<double>(col_avg) : std::nullopt;
      p["planning." + tag] = {{"samples", c.l2_n[0]}, {"colliding_steps", c.collide}, {"steps", c.steps}};
    };
    planning("raw", raw);
    planning("optimized", opt);
    return rep;
  }

private:
  std::map<std::string, ScenarioRecord> records_;
};

}  // namespace goalstack

#endif  // GOALSTACK__METRICS_HPP_

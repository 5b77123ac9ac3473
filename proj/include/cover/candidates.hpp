// Copyright 2026 The COVER Authors.
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

#pragma once

// Candidate proposal on a grid of height layers, and the 7-layer geometric
// sanity filter evaluated from 28 cached ray distances.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cover/error.hpp"
#include "cover/geom.hpp"
#include "cover/parallel.hpp"
#include "cover/scene.hpp"

namespace cover {

struct GridConfig {
  double spacing_m = 0.5;
  double margin_m = 0.2;
  std::size_t cap = 10000;
  std::vector<double> height_layers_m{0.5, 0.8, 1.2, 1.7, 2.1};
  // Offsets above the highest base layer, used only when the ceiling allows.
  std::vector<double> extra_high_layers_m{1.0, 1.5, 2.0, 2.5, 3.0};
  double top_clip_m = 0.3;

  void validate() const {
    if (!(spacing_m > 0)) throw ConfigError("`spacing_m` must be positive");
    if (margin_m < 0) throw ConfigError("`margin_m` must be non-negative");
    if (cap < 1) throw ConfigError("`cap` must be >= 1");
    if (height_layers_m.empty()) throw ConfigError("`height_layers_m` must not be empty");
    if (!std::is_sorted(height_layers_m.begin(), height_layers_m.end()))
      throw ConfigError("`height_layers_m` must be sorted ascending");
    if (!std::is_sorted(extra_high_layers_m.begin(), extra_high_layers_m.end()))
      throw ConfigError("`extra_high_layers_m` must be sorted ascending");
  }
};

/// Result of candidate generation: positions plus the spacing actually used
/// after cap-driven enlargement.
struct CandidateGrid {
  std::vector<Vec3> positions;
  double spacing_m = 0;
  std::vector<double> layers_m;  // heights above floor that survived clipping
};

/// Heights above the floor that survive top clipping at `ceiling - top_clip`.
inline std::vector<double> candidate_layers(const GridConfig& cfg, double effective_ceiling_m) {
  const double limit = effective_ceiling_m - cfg.top_clip_m;
  std::vector<double> layers;
  for (double h : cfg.height_layers_m)
    if (h <= limit) layers.push_back(h);
  const double top = cfg.height_layers_m.back();
  for (double extra : cfg.extra_high_layers_m)
    if (top + extra <= limit) layers.push_back(top + extra);
  return layers;
}

namespace detail {

// Points per axis: floor(extent / spacing) + 1, centred in the inset span.
inline std::vector<double> grid_axis(double lo, double hi, double spacing) {
  std::vector<double> out;
  const double extent = hi - lo;
  if (extent < 0) return out;
  const auto n = static_cast<std::size_t>(std::floor(extent / spacing + 1e-9)) + 1;
  const double start = lo + 0.5 * (extent - static_cast<double>(n - 1) * spacing);
  for (std::size_t i = 0; i < n; ++i) out.push_back(start + static_cast<double>(i) * spacing);
  return out;
}

}  // namespace detail

/// Horizontal grid (inset by the margin) times height layers. Ids follow the
/// order layer, z, x. Spacing doubles until the count fits under the cap.
inline CandidateGrid gen_candidates(const Aabb& mesh_aabb, const GridConfig& cfg,
                                    double effective_ceiling_m) {
  cfg.validate();
  if (mesh_aabb.empty()) throw SceneError("cannot propose candidates for an empty scene");
  CandidateGrid grid;
  grid.layers_m = candidate_layers(cfg, effective_ceiling_m);
  double spacing = cfg.spacing_m;
  for (;;) {
    const auto xs = detail::grid_axis(mesh_aabb.min.x + cfg.margin_m, mesh_aabb.max.x - cfg.margin_m, spacing);
    const auto zs = detail::grid_axis(mesh_aabb.min.z + cfg.margin_m, mesh_aabb.max.z - cfg.margin_m, spacing);
    const std::size_t count = xs.size() * zs.size() * grid.layers_m.size();
    if (count > cfg.cap) {
      spacing *= 2;
      continue;
    }
    grid.spacing_m = spacing;
    for (double h : grid.layers_m)
      for (double z : zs)
        for (double x : xs) grid.positions.push_back({x, mesh_aabb.min.y + h, z});
    return grid;
  }
}

// Sanity filter -----------------------------------------------------------------

inline constexpr int kHorizontalRays = 16;
inline constexpr int kAngledRays = 10;
inline constexpr int kSphericalRays = kHorizontalRays + kAngledRays;
inline constexpr int kFanRays = kSphericalRays + 2;
inline constexpr int kUpRay = kSphericalRays;
inline constexpr int kDownRay = kSphericalRays + 1;
inline constexpr int kFilterLayers = 7;

/// 16 horizontal rays at 22.5 degree steps from +Z, 10 angled rays (5
/// azimuths at 72 degrees times elevations +45 and -45), then up and down.
struct RayFan {
  std::array<Vec3, kFanRays> dirs;

  static RayFan standard(double angled_elevation_deg = 45.0) {
    RayFan fan;
    for (int i = 0; i < kHorizontalRays; ++i) {
      const double a = kTwoPi * i / kHorizontalRays;
      fan.dirs[i] = {std::sin(a), 0.0, std::cos(a)};
    }
    const double e = angled_elevation_deg * kPi / 180.0;
    for (int s = 0; s < 2; ++s)
      for (int i = 0; i < 5; ++i) {
        const double a = kTwoPi * i / 5;
        const double el = s == 0 ? e : -e;
        fan.dirs[kHorizontalRays + 5 * s + i] = {std::cos(el) * std::sin(a), std::sin(el),
                                                 std::cos(el) * std::cos(a)};
      }
    fan.dirs[kUpRay] = {0, 1, 0};
    fan.dirs[kDownRay] = {0, -1, 0};
    return fan;
  }
};

struct FilterConfig {
  double up_floor_m = 5.0;         // L1: up <= max(up_floor, ceiling)
  double down_floor_m = 3.0;       // L1: down <= max(down_floor, ceiling)
  double inside_dist_m = 0.2;      // L2
  int inside_count = 2;            // L2
  double corner_dist_m = 1.0;      // L3
  double corner_fraction = 0.5;    // L3
  double enclosure_hit_rate = 0.9; // L4
  double enclosure_cv = 0.3;       // L4
  double enclosure_max_m = 8.0;    // L4
  double wall_min_m = 0.3;         // L5
  double range_lo_m = 0.5;         // L6
  double range_hi_m = 20.0;        // L6
  double range_fraction = 0.35;    // L6
  double gap_sum_m = 1.5;          // L7

  /// L4's range bound is capped at half the smaller horizontal scene extent,
  /// so that a small scene is not itself classed as an enclosure.
  static FilterConfig for_scene(const Aabb& bounds) {
    FilterConfig cfg;
    const Vec3 e = bounds.extent();
    cfg.enclosure_max_m = std::min(cfg.enclosure_max_m, 0.5 * std::min(e.x, e.z));
    return cfg;
  }
};

inline constexpr std::array<const char*, kFilterLayers> kLayerNames{
    "L1_up_down", "L2_inside", "L3_corner", "L4_enclosure", "L5_wall", "L6_range", "L7_gap"};

struct FilterDiagnostics {
  double up_m = 0, down_m = 0;        // L1 (inf = miss)
  int vertical_near = 0;              // L2
  double horizontal_near_fraction = 0;// L3
  double hit_rate = 0, cv = 0, max_m = 0;  // L4
  double horizontal_min_m = 0;        // L5
  double range_fraction = 0;          // L6
  double min_pair_sum_m = 0;          // L7
};

struct Candidate {
  int id = 0;
  Vec3 position;
  std::array<bool, kFilterLayers> layer_pass{};
  FilterDiagnostics diag;
  bool feasible = false;
};

/// Casts the 28 fan rays once (miss = +inf) and evaluates every layer from
/// the cached distances; a layer is reported even when an earlier one failed.
inline Candidate sanity_filter(const Bvh& bvh, const Vec3& v, const RayFan& fan, double ceiling_m,
                               const FilterConfig& cfg = {}) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::array<double, kFanRays> dist{};
  for (int i = 0; i < kFanRays; ++i) {
    auto hit = bvh.raycast(v, fan.dirs[i]);
    dist[i] = hit ? hit->t : inf;
  }
  Candidate c;
  c.position = v;
  FilterDiagnostics& d = c.diag;

  d.up_m = dist[kUpRay];
  d.down_m = dist[kDownRay];
  c.layer_pass[0] = d.up_m <= std::max(cfg.up_floor_m, ceiling_m) &&
                    d.down_m <= std::max(cfg.down_floor_m, ceiling_m);

  d.vertical_near = (d.up_m < cfg.inside_dist_m) + (d.down_m < cfg.inside_dist_m);
  c.layer_pass[1] = d.vertical_near < cfg.inside_count;

  int near = 0;
  d.horizontal_min_m = inf;
  for (int i = 0; i < kHorizontalRays; ++i) {
    near += dist[i] < cfg.corner_dist_m;
    d.horizontal_min_m = std::min(d.horizontal_min_m, dist[i]);
  }
  d.horizontal_near_fraction = static_cast<double>(near) / kHorizontalRays;
  c.layer_pass[2] = !(d.horizontal_near_fraction > cfg.corner_fraction);

  int hits = 0, in_range = 0;
  double sum = 0, sum_sq = 0;
  d.max_m = 0;
  for (int i = 0; i < kSphericalRays; ++i) {
    if (std::isfinite(dist[i])) {
      ++hits;
      sum += dist[i];
      sum_sq += dist[i] * dist[i];
      d.max_m = std::max(d.max_m, dist[i]);
    }
    in_range += dist[i] >= cfg.range_lo_m && dist[i] <= cfg.range_hi_m;
  }
  d.hit_rate = static_cast<double>(hits) / kSphericalRays;
  if (hits > 0) {
    const double mean = sum / hits;
    const double var = std::max(0.0, sum_sq / hits - mean * mean);
    d.cv = mean > 0 ? std::sqrt(var) / mean : 0;
  }
  c.layer_pass[3] = !(d.hit_rate >= cfg.enclosure_hit_rate && d.cv < cfg.enclosure_cv &&
                      d.max_m < cfg.enclosure_max_m);

  c.layer_pass[4] = !(d.horizontal_min_m < cfg.wall_min_m);

  d.range_fraction = static_cast<double>(in_range) / kSphericalRays;
  c.layer_pass[5] = d.range_fraction >= cfg.range_fraction;

  d.min_pair_sum_m = inf;
  for (int i = 0; i < kHorizontalRays / 2; ++i)
    d.min_pair_sum_m = std::min(d.min_pair_sum_m, dist[i] + dist[i + kHorizontalRays / 2]);
  c.layer_pass[6] = !(d.min_pair_sum_m < cfg.gap_sum_m);

  c.feasible = std::all_of(c.layer_pass.begin(), c.layer_pass.end(), [](bool b) { return b; });
  return c;
}

struct CandidateSet {
  std::vector<Candidate> candidates;  // index == id

  std::size_t feasible_count() const {
    return static_cast<std::size_t>(
        std::count_if(candidates.begin(), candidates.end(), [](const Candidate& c) { return c.feasible; }));
  }
  std::vector<int> feasible_ids() const {
    std::vector<int> ids;
    for (const auto& c : candidates)
      if (c.feasible) ids.push_back(c.id);
    return ids;
  }
  /// Candidates failing each layer (a candidate may count under several).
  std::array<std::size_t, kFilterLayers> layer_rejections() const {
    std::array<std::size_t, kFilterLayers> out{};
    for (const auto& c : candidates)
      for (int l = 0; l < kFilterLayers; ++l) out[l] += !c.layer_pass[l];
    return out;
  }
};

/// Thrown by filter_all when no candidate survives; carries the full set so
/// callers can still emit diagnostics.
class NoFeasibleCandidates : public SceneError {
 public:
  explicit NoFeasibleCandidates(CandidateSet set)
      : SceneError("no feasible candidates: all " + std::to_string(set.candidates.size()) +
                   " proposals rejected by the sanity filter"),
        set_(std::move(set)) {}
  const CandidateSet& candidates() const { return set_; }

 private:
  CandidateSet set_;
};

/// Filters every position (ids follow input order). Effective ceiling is the
/// scene AABB height.
inline CandidateSet filter_all(const Bvh& bvh, const std::vector<Vec3>& positions,
                               const FilterConfig& cfg, const RayFan& fan = RayFan::standard()) {
  const Aabb bounds = bvh.bounds();
  const double ceiling = bounds.max.y - bounds.min.y;
  CandidateSet set;
  set.candidates.resize(positions.size());
  parallel_for(positions.size(), [&](std::size_t i) {
    set.candidates[i] = sanity_filter(bvh, positions[i], fan, ceiling, cfg);
    set.candidates[i].id = static_cast<int>(i);
  });
  if (set.feasible_count() == 0) throw NoFeasibleCandidates(std::move(set));
  return set;
}

inline CandidateSet filter_all(const Bvh& bvh, const std::vector<Vec3>& positions) {
  return filter_all(bvh, positions, FilterConfig::for_scene(bvh.bounds()));
}

}  // namespace cover

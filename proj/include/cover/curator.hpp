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

// Conflict-aware budgeted greedy ERP view selection.
//
// A candidate v is scored against the accumulated cloud C of the views chosen
// so far. Warping C into v's frame gives the history mask H and depth D_hist;
// a low-resolution probe render of v gives Q (pixels with a hit) and D_probe.
// With tolerance delta the probe pixels split into
//
//   E = Q & H & |D_probe - D_hist| <= delta     explained
//   N = Q \ H                                   new
//   C = Q & H & |D_probe - D_hist| >  delta     conflicted
//
// and with Omega = probe_w * probe_h the statistics are
//
//   G = |N| / Omega,  L = |C| / Omega,  s = G - lambda * L.
//
// The probe of v does not depend on the selection state, so each probe is
// rendered once per candidate and reused at every step.

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cover/candidates.hpp"
#include "cover/error.hpp"
#include "cover/geom.hpp"
#include "cover/parallel.hpp"
#include "cover/render.hpp"
#include "cover/scene.hpp"

namespace cover {

struct EarlyStop {
  bool enabled = true;
  double tau = 0.01;
  int m = 2;
};

struct CuratorConfig {
  double lambda = 0.35;
  double delta_fraction = 0.005;  // of the AABB diagonal
  double delta_min_m = 0.01;
  double delta_max_m = 0.2;
  int probe_w = 256;
  int probe_h = 128;
  int m0 = 32;
  int k = 30;
  EarlyStop early_stop;
  int frame_w = 2048;  // resolution at which selected views are rendered
  int frame_h = 1024;
  int stride = 4;      // unprojection subsampling of selected frames
  int splat_radius = 1;
  // Memory allowed for per-candidate history buffers; above it every step
  // re-warps the whole cloud (same result, slower).
  int warp_cache_mb = 1024;

  void validate() const {
    if (!(lambda >= 0)) throw ConfigError("`lambda` must be >= 0");
    if (!(delta_fraction > 0)) throw ConfigError("`delta_fraction` must be > 0");
    if (!(delta_min_m >= 0) || !(delta_max_m >= delta_min_m))
      throw ConfigError("`delta_min_m`/`delta_max_m` must satisfy 0 <= min <= max");
    if (probe_w < 2 || probe_h < 1) throw ConfigError("`probe_w`/`probe_h` must be at least 2x1");
    if (frame_w < 2 || frame_h < 1) throw ConfigError("`frame_w`/`frame_h` must be at least 2x1");
    if (m0 < 1) throw ConfigError("`m0` must be >= 1");
    if (k < 1) throw ConfigError("`k` must be >= 1");
    if (stride < 1) throw ConfigError("`stride` must be >= 1");
    if (splat_radius < 0) throw ConfigError("`splat_radius` must be >= 0");
    if (warp_cache_mb < 0) throw ConfigError("`warp_cache_mb` must be >= 0");
    if (!(early_stop.tau > 0 && early_stop.tau < 1)) throw ConfigError("`tau` must lie in (0, 1)");
    if (early_stop.m < 1) throw ConfigError("`m` must be >= 1");
  }

  double delta_for(const Aabb& bounds) const {
    return std::clamp(delta_fraction * aabb_diagonal(bounds), delta_min_m, delta_max_m);
  }
};

struct OracleScore {
  int candidate_id = 0;
  long explained = 0;
  long fresh = 0;  // |N_v|
  long conflicted = 0;
  long probe_hits = 0;   // |Q_v|
  long probe_total = 0;  // |Omega_v|
  double G = 0;
  double L = 0;
  double s = 0;
};

enum class PixelClass : std::uint8_t { kNoHit = 0, kExplained, kNew, kConflicted };

/// Per-pixel E/N/C labels of a probe against a warped history.
inline std::vector<PixelClass> classify_pixels(const DepthImage& probe, const WarpResult& hist,
                                               double delta) {
  std::vector<PixelClass> out(probe.size(), PixelClass::kNoHit);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const float d = probe.pixels[i];
    if (!(d > 0)) continue;
    if (!hist.mask[i])
      out[i] = PixelClass::kNew;
    else if (std::abs(static_cast<double>(d) - static_cast<double>(hist.depth.pixels[i])) <= delta)
      out[i] = PixelClass::kExplained;
    else
      out[i] = PixelClass::kConflicted;
  }
  return out;
}

namespace detail {

// `history(i)` returns the warped range at pixel i or a negative value when
// the pixel is not in H.
template <typename History>
OracleScore score_pixels(int id, const DepthImage& probe, History&& history, double delta, double lambda) {
  OracleScore sc;
  sc.candidate_id = id;
  sc.probe_total = static_cast<long>(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const float d = probe.pixels[i];
    if (!(d > 0)) continue;
    ++sc.probe_hits;
    const float h = history(i);
    if (h < 0)
      ++sc.fresh;
    else if (std::abs(static_cast<double>(d) - static_cast<double>(h)) <= delta)
      ++sc.explained;
    else
      ++sc.conflicted;
  }
  const double omega = static_cast<double>(sc.probe_total);
  sc.G = static_cast<double>(sc.fresh) / omega;
  sc.L = static_cast<double>(sc.conflicted) / omega;
  sc.s = sc.G - lambda * sc.L;
  return sc;
}

}  // namespace detail

inline OracleScore score_from_pixels(int id, const DepthImage& probe, const WarpResult& hist,
                                     double delta, double lambda) {
  return detail::score_pixels(
      id, probe, [&](std::size_t i) { return hist.mask[i] ? hist.depth.pixels[i] : -1.0f; }, delta, lambda);
}

inline OracleScore score_from_buffers(int id, const DepthImage& probe, const WarpBuffers& hist,
                                      double delta, double lambda) {
  return detail::score_pixels(
      id, probe,
      [&](std::size_t i) {
        const float h = warp_depth_at(hist, i);
        return h == WarpBuffers::kEmpty ? -1.0f : h;
      },
      delta, lambda);
}

struct SelectionState {
  std::vector<int> selected;  // in selection order
  PointCloud cloud;
  std::vector<std::size_t> frame_ends;  // cloud size after each selected frame
  int step = 0;

  bool contains(int id) const { return std::find(selected.begin(), selected.end(), id) != selected.end(); }
};

struct StepLog {
  int step = 0;
  int selected_id = 0;
  double G = 0, L = 0, s = 0;
  double runtime_s = 0;
  bool tie_break = false;  // several candidates shared the winning key
  std::vector<OracleScore> candidates;  // in candidate-id order
};

struct SelectionResult {
  SelectionState state;
  std::vector<StepLog> logs;
};

enum class SelectorKind { kCover, kRandom, kSingleProbe, kCoverageOnly, kLowConflict };

inline const char* selector_name(SelectorKind k) {
  switch (k) {
    case SelectorKind::kCover: return "cover";
    case SelectorKind::kRandom: return "random";
    case SelectorKind::kSingleProbe: return "single_probe";
    case SelectorKind::kCoverageOnly: return "coverage_only";
    case SelectorKind::kLowConflict: return "low_conflict";
  }
  return "?";
}

inline SelectorKind selector_from_name(const std::string& name) {
  for (auto k : {SelectorKind::kCover, SelectorKind::kRandom, SelectorKind::kSingleProbe,
                 SelectorKind::kCoverageOnly, SelectorKind::kLowConflict})
    if (name == selector_name(k)) return k;
  throw ConfigError("unknown selector `" + name +
                    "` (expected cover|random|single_probe|coverage_only|low_conflict)");
}

/// Callback invoked for every scored candidate with its probe and warped
/// history; used by audits of the pixel partition.
using ScoreObserver =
    std::function<void(const OracleScore&, const DepthImage& probe, const WarpResult& hist)>;

// Exact visibility oracle ---------------------------------------------------------

/// Element e is observed from v when it faces v (n . (v - e) > 0) and nothing
/// blocks the segment: the first hit toward e is no nearer than |e - v| - 1e-4.
class ExactOracle {
 public:
  static constexpr double kSegmentSlack = 1e-4;

  ExactOracle(const Bvh& bvh, const SurfaceElements& elements)
      : bvh_(bvh), elements_(elements), total_(elements.total_weight()) {}

  const SurfaceElements& elements() const { return elements_; }
  double total_weight() const { return total_; }

  bool observes(const Vec3& v, std::size_t e) const {
    const Vec3 to_view = v - elements_.points[e];
    if (!(dot(elements_.normals[e], to_view) > 0)) return false;
    const double dist = length(to_view);
    if (dist <= kSegmentSlack) return true;
    const Vec3 dir = (elements_.points[e] - v) / dist;
    return !bvh_.occluded(v, dir, dist - kSegmentSlack);
  }

  /// Every element visible from v (a full "render" of v over the elements).
  std::vector<std::uint8_t> visible(const Vec3& v) const {
    std::vector<std::uint8_t> vis(elements_.size(), 0);
    for (std::size_t e = 0; e < elements_.size(); ++e) vis[e] = observes(v, e);
    return vis;
  }

  /// Weighted fraction of elements newly observed from v given `covered`.
  double marginal(const std::vector<std::uint8_t>& covered, const Vec3& v) const {
    const auto vis = visible(v);
    double gain = 0;
    for (std::size_t e = 0; e < vis.size(); ++e)
      if (vis[e] && !covered[e]) gain += elements_.weights[e];
    return gain / total_;
  }

  void cover(std::vector<std::uint8_t>& covered, const Vec3& v) const {
    const auto vis = visible(v);
    for (std::size_t e = 0; e < vis.size(); ++e) covered[e] |= vis[e];
  }

  double fraction(const std::vector<std::uint8_t>& covered) const {
    double w = 0;
    for (std::size_t e = 0; e < covered.size(); ++e)
      if (covered[e]) w += elements_.weights[e];
    return w / total_;
  }

 private:
  const Bvh& bvh_;
  const SurfaceElements& elements_;
  double total_;
};

struct OracleGapRecord {
  int step = 0;
  std::vector<int> ids;
  std::vector<double> proxy_gain;  // G_t(v)
  std::vector<double> exact_gain;  // Delta_t(v)
  std::vector<double> conflict;    // L_t(v)
  double epsilon = 0;              // max |G_t - Delta_t|
  bool top1_agree = false;         // proxy winner is among the exact maximisers
  double gamma = 0;                // L_t at the exact-best candidate
  int proxy_winner = 0;
  int exact_best = 0;
  double proxy_time_s = 0;
  double exact_time_s = 0;
};

struct OracleGapReport {
  std::vector<OracleGapRecord> records;
  std::vector<int> proxy_selection;
  std::vector<int> exact_selection;
  double proxy_coverage = 0;
  double exact_coverage = 0;
  double coverage_gap = 0;        // exact - proxy
  double probe_render_s = 0;      // one-off probe cache fill
  double proxy_time_s = 0;        // warp + classify, summed over steps
  double exact_time_s = 0;        // element visibility, summed over steps
  double eta_fit = 0;             // least-squares slope of |G - Delta| against L
  double lambda = 0;

  /// Sum over steps of 2 eps_t + 2 lambda gamma_t.
  double noise_budget() const {
    double s = 0;
    for (const auto& r : records) s += 2 * r.epsilon + 2 * lambda * r.gamma;
    return s;
  }
};

// Curator ----------------------------------------------------------------------

class Curator {
 public:
  Curator(const Bvh& bvh, const CandidateSet& candidates, CuratorConfig cfg)
      : bvh_(bvh), candidates_(candidates), cfg_(std::move(cfg)) {
    cfg_.validate();
    bounds_ = bvh_.bounds();
    delta_ = cfg_.delta_for(bounds_);
    feasible_ = candidates_.feasible_ids();
    if (feasible_.empty()) throw SceneError("no feasible candidates to select from");
    probes_.resize(candidates_.candidates.size());
    centre_dist_.resize(candidates_.candidates.size());
    for (const auto& c : candidates_.candidates)
      centre_dist_[c.id] = distance(c.position, bounds_.centre());
    const double per_candidate_mb =
        4.0 * cfg_.probe_w * cfg_.probe_h / (1024.0 * 1024.0);
    if (per_candidate_mb * static_cast<double>(feasible_.size()) <= cfg_.warp_cache_mb)
      history_.resize(candidates_.candidates.size());
  }

  const CuratorConfig& config() const { return cfg_; }
  double delta() const { return delta_; }
  const Aabb& bounds() const { return bounds_; }
  const std::vector<int>& feasible() const { return feasible_; }
  const CandidateSet& candidates() const { return candidates_; }
  const Bvh& bvh() const { return bvh_; }
  double centre_distance(int id) const { return centre_dist_[id]; }

  PoseWC pose(int id) const { return PoseWC{kUprightRotation, candidates_.candidates.at(id).position}; }

  /// Renders (once) the low-resolution probes of the given candidates.
  void ensure_probes(const std::vector<int>& ids) {
    std::vector<int> missing;
    for (int id : ids)
      if (!probes_[id]) missing.push_back(id);
    std::vector<DepthImage> rendered(missing.size());
    parallel_for(missing.size(), [&](std::size_t i) {
      rendered[i] = render_depth_serial(pose(missing[i]), cfg_.probe_w, cfg_.probe_h);
    });
    for (std::size_t i = 0; i < missing.size(); ++i) probes_[missing[i]] = std::move(rendered[i]);
  }

  const DepthImage& probe(int id) {
    ensure_probes({id});
    return *probes_[id];
  }

  /// Fraction of probe pixels with a hit, |Q_v| / |Omega_v|.
  double probe_coverage(int id) {
    const DepthImage& p = probe(id);
    long hits = 0;
    for (float d : p.pixels) hits += d > 0;
    return static_cast<double>(hits) / static_cast<double>(p.size());
  }

  OracleScore score_candidate(const SelectionState& state, int id, const ScoreObserver& observer = {}) {
    const DepthImage& pr = probe(id);
    WarpResult hist;
    warp_resolve(history_buffers(state, id), hist);
    OracleScore sc = score_from_pixels(id, pr, hist, delta_, cfg_.lambda);
    if (observer) observer(sc, pr, hist);
    return sc;
  }

  /// Scores every id against a read-only state; output follows `ids`.
  std::vector<OracleScore> score_all(const SelectionState& state, const std::vector<int>& ids,
                                     const ScoreObserver& observer = {}) {
    ensure_probes(ids);
    std::vector<OracleScore> out(ids.size());
    std::mutex observer_mutex;
    parallel_for(ids.size(), [&](std::size_t i) {
      const int id = ids[i];
      if (!observer) {
        out[i] = score_from_buffers(id, *probes_[id], history_buffers(state, id), delta_, cfg_.lambda);
        return;
      }
      WarpResult hist;
      warp_resolve(history_buffers(state, id), hist);
      out[i] = score_from_pixels(id, *probes_[id], hist, delta_, cfg_.lambda);
      std::lock_guard lock(observer_mutex);
      observer(out[i], *probes_[id], hist);
    });
    return out;
  }

  /// Pool of the min(M0, |feasible|) feasible candidates nearest the AABB
  /// centre (ties by id).
  std::vector<int> seed_pool() const {
    std::vector<int> pool = feasible_;
    std::sort(pool.begin(), pool.end(), [&](int a, int b) {
      return centre_dist_[a] < centre_dist_[b] || (centre_dist_[a] == centre_dist_[b] && a < b);
    });
    pool.resize(std::min<std::size_t>(pool.size(), static_cast<std::size_t>(cfg_.m0)));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  /// Seed: argmax single-view probe coverage over the seed pool. Ties go to
  /// the candidate nearest the AABB centre, then the lowest id.
  int pick_seed() {
    const auto pool = seed_pool();
    ensure_probes(pool);
    std::vector<double> cov(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) cov[i] = probe_coverage(pool[i]);
    return pool[argmax_with_ties(cov, pool).first];
  }

  /// Adds a selected view to the state: full-resolution depth render,
  /// unprojected with the configured stride.
  void accept(SelectionState& state, int id) const {
    const DepthImage depth = render_depth(bvh_, pose(id), cfg_.frame_w, cfg_.frame_h);
    state.cloud.append(unproject(depth, pose(id), cfg_.stride));
    state.selected.push_back(id);
    state.frame_ends.push_back(state.cloud.size());
    state.step = static_cast<int>(state.selected.size());
  }

  /// Conflict-aware budgeted greedy. With early stop enabled, selection ends
  /// after m consecutive winners with G < tau (never below two frames).
  SelectionResult select_greedy(const ScoreObserver& observer = {}) {
    return greedy_loop(SelectorKind::kCover, observer);
  }

  SelectionResult baseline_select(SelectorKind kind, std::uint64_t rng_seed = 0) {
    switch (kind) {
      case SelectorKind::kCover:
      case SelectorKind::kCoverageOnly:
      case SelectorKind::kLowConflict:
        return greedy_loop(kind, {});
      case SelectorKind::kRandom:
        return random_select(rng_seed);
      case SelectorKind::kSingleProbe:
        return single_probe_select();
    }
    throw std::logic_error("unhandled selector");
  }

  /// Greedy on exact marginal coverage, from the same seed as select_greedy.
  SelectionState select_exact_greedy(const ExactOracle& exact) {
    SelectionState state;
    const int seed = pick_seed();
    state.selected.push_back(seed);
    std::vector<std::uint8_t> covered(exact.elements().size(), 0);
    exact.cover(covered, candidates_.candidates[seed].position);
    while (static_cast<int>(state.selected.size()) < cfg_.k) {
      const auto remaining = remaining_ids(state);
      if (remaining.empty()) break;
      std::vector<double> gains(remaining.size());
      parallel_for(remaining.size(), [&](std::size_t i) {
        gains[i] = exact.marginal(covered, candidates_.candidates[remaining[i]].position);
      });
      const int winner = remaining[argmax_with_ties(gains, remaining).first];
      exact.cover(covered, candidates_.candidates[winner].position);
      state.selected.push_back(winner);
    }
    state.step = static_cast<int>(state.selected.size());
    return state;
  }

  /// Runs the proxy greedy while also scoring every candidate with the exact
  /// oracle at each step (step 1 covers the whole feasible set against an
  /// empty history), then runs exact greedy from the same seed.
  OracleGapReport oracle_gap_run(const ExactOracle& exact) {
    using clock = std::chrono::steady_clock;
    OracleGapReport report;
    report.lambda = cfg_.lambda;
    const auto t_probe = clock::now();
    ensure_probes(feasible_);
    report.probe_render_s = seconds_since(t_probe);

    std::vector<std::uint8_t> covered(exact.elements().size(), 0);
    SelectionState state;
    int step = 1;
    for (;;) {
      const auto remaining = remaining_ids(state);
      if (remaining.empty() || static_cast<int>(state.selected.size()) >= cfg_.k) break;
      OracleGapRecord rec;
      rec.step = step;
      rec.ids = remaining;

      const auto t0 = clock::now();
      std::vector<OracleScore> scores;
      if (state.selected.empty()) {
        scores.resize(remaining.size());
        for (std::size_t i = 0; i < remaining.size(); ++i) {
          scores[i].candidate_id = remaining[i];
          scores[i].G = probe_coverage(remaining[i]);
          scores[i].s = scores[i].G;
        }
      } else {
        scores = score_all(state, remaining);
      }
      rec.proxy_time_s = seconds_since(t0);

      const auto t1 = clock::now();
      rec.exact_gain.resize(remaining.size());
      parallel_for(remaining.size(), [&](std::size_t i) {
        rec.exact_gain[i] = exact.marginal(covered, candidates_.candidates[remaining[i]].position);
      });
      rec.exact_time_s = seconds_since(t1);

      for (std::size_t i = 0; i < remaining.size(); ++i) {
        rec.proxy_gain.push_back(scores[i].G);
        rec.conflict.push_back(scores[i].L);
        rec.epsilon = std::max(rec.epsilon, std::abs(scores[i].G - rec.exact_gain[i]));
      }
      const int winner = state.selected.empty() ? pick_seed() : pick_winner(SelectorKind::kCover, scores).id;
      const auto [best_idx, ties] = argmax_with_ties(rec.exact_gain, remaining);
      (void)ties;
      rec.exact_best = remaining[best_idx];
      rec.proxy_winner = winner;
      const double best_gain = rec.exact_gain[best_idx];
      for (std::size_t i = 0; i < remaining.size(); ++i)
        if (remaining[i] == winner) rec.top1_agree = rec.exact_gain[i] == best_gain;
      rec.gamma = rec.conflict[best_idx];
      report.proxy_time_s += rec.proxy_time_s;
      report.exact_time_s += rec.exact_time_s;
      report.records.push_back(std::move(rec));

      accept(state, winner);
      exact.cover(covered, candidates_.candidates[winner].position);
      ++step;
    }
    report.proxy_selection = state.selected;
    report.proxy_coverage = exact.fraction(covered);
    const SelectionState ex = select_exact_greedy(exact);
    report.exact_selection = ex.selected;
    std::vector<std::uint8_t> ex_cov(exact.elements().size(), 0);
    for (int id : ex.selected) exact.cover(ex_cov, candidates_.candidates[id].position);
    report.exact_coverage = exact.fraction(ex_cov);
    report.coverage_gap = report.exact_coverage - report.proxy_coverage;

    double sxx = 0, sxy = 0, sx = 0, sy = 0, n = 0;
    for (const auto& r : report.records)
      for (std::size_t i = 0; i < r.ids.size(); ++i) {
        const double x = r.conflict[i], y = std::abs(r.proxy_gain[i] - r.exact_gain[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y, n += 1;
      }
    const double denom = n * sxx - sx * sx;
    report.eta_fit = denom > 0 ? (n * sxy - sx * sy) / denom : 0;
    return report;
  }

  /// Conflict of each view of `selected` against the views chosen before it
  /// (0 for the first). Used to compare selectors whose logs were scored
  /// against a different history.
  std::vector<double> realized_conflicts(const std::vector<int>& selected) {
    std::vector<double> out;
    SelectionState state;
    for (int id : selected) {
      out.push_back(state.selected.empty() ? 0.0 : score_candidate(state, id).L);
      accept(state, id);
    }
    return out;
  }

  std::vector<int> remaining_ids(const SelectionState& state) const {
    std::vector<int> out;
    for (int id : feasible_)
      if (!state.contains(id)) out.push_back(id);
    return out;
  }

 private:
  struct Winner {
    int id = 0;
    std::size_t index = 0;
    bool tie = false;
  };

  // Cached history of one candidate: the warp buffers with the frames of
  // `folded` (a prefix of some selection) already accumulated.
  struct History {
    WarpBuffers buffers;
    std::vector<int> folded;
  };

  // Warp buffers of state.cloud in the probe frame of `id`. With the cache
  // on, only frames added since the candidate was last scored are folded in;
  // since the buffers are min-reductions the result equals a full warp. The
  // reference stays valid until the next call for the same id.
  const WarpBuffers& history_buffers(const SelectionState& state, int id) {
    const bool tracked = state.frame_ends.size() == state.selected.size() &&
                         (state.frame_ends.empty() ? state.cloud.size() == 0
                                                   : state.frame_ends.back() == state.cloud.size());
    if (history_.empty() || !tracked) {
      thread_local WarpBuffers scratch;
      scratch.reset(cfg_.probe_w, cfg_.probe_h, cfg_.splat_radius);
      warp_accumulate(state.cloud, 0, state.cloud.size(), pose(id), scratch);
      return scratch;
    }
    History& h = history_[id];
    const bool prefix = h.folded.size() <= state.selected.size() &&
                        std::equal(h.folded.begin(), h.folded.end(), state.selected.begin());
    if (!prefix || h.buffers.direct.empty()) {
      h.buffers.reset(cfg_.probe_w, cfg_.probe_h, cfg_.splat_radius);
      h.folded.clear();
    }
    const std::size_t begin = h.folded.empty() ? 0 : state.frame_ends[h.folded.size() - 1];
    warp_accumulate(state.cloud, begin, state.cloud.size(), pose(id), h.buffers);
    h.folded = state.selected;
    return h.buffers;
  }

  static double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
  }

  // Each render of a probe runs inside an outer parallel_for over candidates.
  DepthImage render_depth_serial(const PoseWC& p, int w, int h) const {
    DepthImage depth(w, h, 0.0f);
    const CameraTransform cam(p);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        const Vec3 d = cam.dir_to_world(pixel_to_dir(u + 0.5, v + 0.5, w, h));
        if (auto hit = bvh_.raycast(cam.centre, d)) depth.at(u, v) = static_cast<float>(hit->t);
      }
    return depth;
  }

  static std::pair<double, double> objective(SelectorKind kind, const OracleScore& sc) {
    switch (kind) {
      case SelectorKind::kCoverageOnly: return {sc.G, 0.0};
      case SelectorKind::kLowConflict: return {-sc.L, sc.G};
      default: return {sc.s, 0.0};
    }
  }

  // Highest objective; ties go to the candidate nearer the AABB centre, then
  // to the lower id.
  Winner pick_winner(SelectorKind kind, const std::vector<OracleScore>& scores) const {
    Winner w;
    std::pair<double, double> best{-std::numeric_limits<double>::infinity(), 0};
    int best_count = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const auto key = objective(kind, scores[i]);
      const int id = scores[i].candidate_id;
      if (i == 0 || key > best) {
        best = key;
        best_count = 1;
        w = {id, i, false};
        continue;
      }
      if (key == best) {
        ++best_count;
        if (centre_dist_[id] < centre_dist_[w.id] ||
            (centre_dist_[id] == centre_dist_[w.id] && id < w.id))
          w = {id, i, false};
      }
    }
    w.tie = best_count > 1;
    return w;
  }

  std::pair<std::size_t, bool> argmax_with_ties(const std::vector<double>& values,
                                                const std::vector<int>& ids) const {
    std::size_t best = 0;
    int count = 1;
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i] > values[best]) {
        best = i;
        count = 1;
      } else if (values[i] == values[best]) {
        ++count;
        const int a = ids[i], b = ids[best];
        if (centre_dist_[a] < centre_dist_[b] || (centre_dist_[a] == centre_dist_[b] && a < b)) best = i;
      }
    }
    return {best, count > 1};
  }

  StepLog seed_log(int seed, double runtime) {
    StepLog log;
    log.step = 1;
    log.selected_id = seed;
    for (int id : seed_pool()) {
      OracleScore sc;
      sc.candidate_id = id;
      sc.probe_total = static_cast<long>(cfg_.probe_w) * cfg_.probe_h;
      sc.G = probe_coverage(id);
      sc.probe_hits = std::lround(sc.G * static_cast<double>(sc.probe_total));
      sc.fresh = sc.probe_hits;
      sc.s = sc.G;
      if (id == seed) {
        log.G = sc.G;
        log.s = sc.s;
      }
      log.candidates.push_back(sc);
    }
    int at_max = 0;
    for (const auto& sc : log.candidates) at_max += sc.s == log.s;
    log.tie_break = at_max > 1;
    log.runtime_s = runtime;
    return log;
  }

  SelectionResult start(std::chrono::steady_clock::time_point t0) {
    SelectionResult res;
    const int seed = pick_seed();
    accept(res.state, seed);
    res.logs.push_back(seed_log(seed, seconds_since(t0)));
    return res;
  }

  SelectionResult greedy_loop(SelectorKind kind, const ScoreObserver& observer) {
    const auto t_start = std::chrono::steady_clock::now();
    SelectionResult res = start(t_start);
    int streak = 0;
    while (static_cast<int>(res.state.selected.size()) < cfg_.k) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto remaining = remaining_ids(res.state);
      if (remaining.empty()) break;
      auto scores = score_all(res.state, remaining, observer);
      const Winner w = pick_winner(kind, scores);
      StepLog log;
      log.step = static_cast<int>(res.state.selected.size()) + 1;
      log.selected_id = w.id;
      log.G = scores[w.index].G;
      log.L = scores[w.index].L;
      log.s = scores[w.index].s;
      log.tie_break = w.tie;
      log.candidates = std::move(scores);
      accept(res.state, w.id);
      log.runtime_s = seconds_since(t0);
      res.logs.push_back(std::move(log));
      if (cfg_.early_stop.enabled) {
        streak = res.logs.back().G < cfg_.early_stop.tau ? streak + 1 : 0;
        if (streak >= cfg_.early_stop.m && res.state.selected.size() >= 2) break;
      }
    }
    return res;
  }

  // Uniform order after the shared seed; each winner is still scored against
  // the accumulated state so its conflict is accounted like the others.
  SelectionResult random_select(std::uint64_t rng_seed) {
    const auto t_start = std::chrono::steady_clock::now();
    SelectionResult res = start(t_start);
    auto pool = remaining_ids(res.state);
    Rng rng(rng_seed);
    for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
    for (int id : pool) {
      if (static_cast<int>(res.state.selected.size()) >= cfg_.k) break;
      const auto t0 = std::chrono::steady_clock::now();
      const OracleScore sc = score_candidate(res.state, id);
      StepLog log;
      log.step = static_cast<int>(res.state.selected.size()) + 1;
      log.selected_id = id;
      log.G = sc.G;
      log.L = sc.L;
      log.s = sc.s;
      log.candidates = {sc};
      accept(res.state, id);
      log.runtime_s = seconds_since(t0);
      res.logs.push_back(std::move(log));
    }
    return res;
  }

  // One scoring pass from the seed's state; the top K-1 by s are taken in
  // rank order and every log reuses the step-2 scores.
  SelectionResult single_probe_select() {
    const auto t_start = std::chrono::steady_clock::now();
    SelectionResult res = start(t_start);
    const auto remaining = remaining_ids(res.state);
    if (remaining.empty() || cfg_.k < 2) return res;
    const auto t0 = std::chrono::steady_clock::now();
    const auto scores = score_all(res.state, remaining);
    const double scoring_s = seconds_since(t0);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double sa = scores[a].s, sb = scores[b].s;
      if (sa != sb) return sa > sb;
      const int ia = scores[a].candidate_id, ib = scores[b].candidate_id;
      if (centre_dist_[ia] != centre_dist_[ib]) return centre_dist_[ia] < centre_dist_[ib];
      return ia < ib;
    });
    const std::size_t take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(cfg_.k - 1));
    for (std::size_t r = 0; r < take; ++r) {
      const auto t1 = std::chrono::steady_clock::now();
      const OracleScore& sc = scores[order[r]];
      StepLog log;
      log.step = static_cast<int>(res.state.selected.size()) + 1;
      log.selected_id = sc.candidate_id;
      log.G = sc.G;
      log.L = sc.L;
      log.s = sc.s;
      log.candidates = scores;
      accept(res.state, sc.candidate_id);
      log.runtime_s = seconds_since(t1) + (r == 0 ? scoring_s : 0.0);
      res.logs.push_back(std::move(log));
    }
    return res;
  }

  const Bvh& bvh_;
  const CandidateSet& candidates_;
  CuratorConfig cfg_;
  Aabb bounds_;
  double delta_ = 0;
  std::vector<int> feasible_;
  std::vector<std::optional<DepthImage>> probes_;
  std::vector<History> history_;  // empty when the cache does not fit
  std::vector<double> centre_dist_;
};

/// Exact weighted coverage |U_v O(v)| / |Omega| of a selection.
inline double exact_coverage(const ExactOracle& exact, const CandidateSet& candidates,
                             const std::vector<int>& ids) {
  std::vector<std::uint8_t> covered(exact.elements().size(), 0);
  for (int id : ids) exact.cover(covered, candidates.candidates.at(id).position);
  return exact.fraction(covered);
}

/// Plain greedy on exact marginal gains over an arbitrary view list, starting
/// from an empty selection. Ties go to the lower index. Returns view indices.
inline std::vector<std::size_t> exact_greedy(const ExactOracle& exact, const std::vector<Vec3>& views, int k) {
  std::vector<std::size_t> chosen;
  std::vector<std::uint8_t> covered(exact.elements().size(), 0);
  std::vector<std::uint8_t> used(views.size(), 0);
  while (static_cast<int>(chosen.size()) < k && chosen.size() < views.size()) {
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < views.size(); ++i) {
      if (used[i]) continue;
      const double g = exact.marginal(covered, views[i]);
      if (g > best) best = g, arg = i;
    }
    used[arg] = 1;
    exact.cover(covered, views[arg]);
    chosen.push_back(arg);
  }
  return chosen;
}

}  // namespace cover

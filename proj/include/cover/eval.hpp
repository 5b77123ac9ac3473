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

// Evaluation harness: exact coverage / conflict metrics, selector comparison,
// lambda sweeps and cross-family runs over procedural scenes.

#include <chrono>
#include <cstdio>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cover/candidates.hpp"
#include "cover/curator.hpp"
#include "cover/io.hpp"
#include "cover/scene.hpp"

namespace cover {

struct EvalRow {
  std::string scene;
  std::string selector;
  double lambda = 0;
  int k = 0;
  double coverage = 0;
  double coverage_per_view = 0;
  double conflict = 0;
  int frames = 0;
  double runtime_s = 0;
  std::string config_hash;
  std::vector<int> selected;
};

/// Mean winner conflict over steps >= 2; 0 when only the seed was chosen.
inline double selection_conflict(const std::vector<StepLog>& logs) {
  double sum = 0;
  int n = 0;
  for (const auto& log : logs) {
    if (log.step < 2) continue;
    sum += log.L;
    ++n;
  }
  return n > 0 ? sum / n : 0.0;
}

inline EvalRow evaluate_selection(const SelectionResult& result, const ExactOracle& exact,
                                  const CandidateSet& candidates) {
  if (result.state.selected.empty()) throw ConfigError("cannot evaluate an empty selection");
  EvalRow row;
  row.selected = result.state.selected;
  row.frames = static_cast<int>(row.selected.size());
  row.coverage = exact_coverage(exact, candidates, row.selected);
  row.coverage_per_view = row.coverage / row.frames;
  row.conflict = selection_conflict(result.logs);
  return row;
}

// Scenes -----------------------------------------------------------------------

enum class SceneFamily { kSmallBox, kCluttered, kOpenPlan, kNoisy };

inline const char* family_name(SceneFamily f) {
  switch (f) {
    case SceneFamily::kSmallBox: return "small_box";
    case SceneFamily::kCluttered: return "cluttered";
    case SceneFamily::kOpenPlan: return "open_plan";
    case SceneFamily::kNoisy: return "noisy";
  }
  return "?";
}

inline SceneFamily family_from_name(const std::string& name) {
  for (auto f : {SceneFamily::kSmallBox, SceneFamily::kCluttered, SceneFamily::kOpenPlan, SceneFamily::kNoisy})
    if (name == family_name(f)) return f;
  throw ConfigError("unknown scene family `" + name + "` (expected small_box|cluttered|open_plan|noisy)");
}

/// Room spec for the index-th member of a family. Dimensions vary with the
/// index; furniture placement comes from the scene seed.
inline RoomSpec family_spec(SceneFamily family, int index) {
  Rng rng(0x5eed0000ULL + static_cast<std::uint64_t>(family) * 1000 + static_cast<std::uint64_t>(index));
  RoomSpec spec;
  switch (family) {
    case SceneFamily::kSmallBox:
      spec.width_m = rng.uniform(3.0, 4.0);
      spec.depth_m = rng.uniform(3.0, 4.0);
      spec.height_m = 2.5;
      spec.random_furniture = 1;
      break;
    case SceneFamily::kCluttered:
    case SceneFamily::kNoisy:
      spec.width_m = rng.uniform(5.0, 6.5);
      spec.depth_m = rng.uniform(4.0, 5.5);
      spec.height_m = 2.7;
      spec.random_furniture = 5 + static_cast<int>(rng.below(3));
      if (family == SceneFamily::kNoisy) spec.jitter_m = 0.04;
      break;
    case SceneFamily::kOpenPlan: {
      spec.width_m = rng.uniform(11.0, 13.0);
      spec.depth_m = rng.uniform(8.0, 10.0);
      spec.height_m = 3.0;
      spec.random_furniture = 6;
      Partition a;
      a.axis = 'x';
      a.offset_m = spec.width_m * 0.4;
      a.doorway = Doorway{spec.depth_m * 0.3, 1.2, 2.1};
      Partition b;
      b.axis = 'z';
      b.offset_m = spec.depth_m * 0.55;
      b.doorway = Doorway{spec.width_m * 0.6, 1.2, 2.1};
      spec.partitions = {a, b};
      break;
    }
  }
  return spec;
}

/// A scene ready for selection: BVH, filtered candidates and coverage
/// elements. Held by pointer so the curator's references stay valid.
struct PreparedScene {
  std::string id;
  std::unique_ptr<Bvh> bvh;
  CandidateSet candidates;
  CandidateGrid grid;
  SurfaceElements elements;

  ExactOracle oracle() const { return ExactOracle(*bvh, elements); }
};

inline std::unique_ptr<PreparedScene> prepare_scene(std::string id, TriMesh mesh, const GridConfig& grid_cfg,
                                                    double element_spacing = 0, std::uint64_t element_seed = 0) {
  auto scene = std::make_unique<PreparedScene>();
  scene->id = std::move(id);
  scene->bvh = std::make_unique<Bvh>(std::move(mesh));
  const Aabb bounds = scene->bvh->bounds();
  scene->grid = gen_candidates(bounds, grid_cfg, bounds.max.y - bounds.min.y);
  scene->candidates = filter_all(*scene->bvh, scene->grid.positions);
  const double spacing = element_spacing > 0 ? element_spacing : default_surface_spacing(aabb_diagonal(bounds));
  scene->elements = discretize_surface(scene->bvh->mesh(), spacing, element_seed);
  return scene;
}

inline std::unique_ptr<PreparedScene> prepare_family_scene(SceneFamily family, int index, const GridConfig& grid_cfg,
                                                           double element_spacing = 0) {
  const std::string id = std::string(family_name(family)) + "_" + std::to_string(index);
  TriMesh mesh = gen_room_scene(family_spec(family, index), static_cast<std::uint64_t>(index));
  return prepare_scene(id, std::move(mesh), grid_cfg, element_spacing);
}

// Harness ------------------------------------------------------------------------

struct EvalConfig {
  GridConfig grid;
  CuratorConfig curator;
  double element_spacing = 0;  // 0 = default_surface_spacing of the scene
  int random_seeds = 10;

  /// Settings used by the bundled harnesses: a coarser grid and smaller
  /// frames than the production defaults, so a full sweep fits on one core.
  static EvalConfig harness() {
    EvalConfig cfg;
    cfg.grid.spacing_m = 0.7;
    cfg.grid.margin_m = 0.4;
    cfg.grid.height_layers_m = {0.8, 1.7};
    cfg.grid.extra_high_layers_m = {};
    cfg.curator.probe_w = 128;
    cfg.curator.probe_h = 64;
    cfg.curator.frame_w = 128;
    cfg.curator.frame_h = 64;
    cfg.curator.stride = 1;
    return cfg;
  }
};

/// Hash of the scene-independent configuration; every eval row carries it.
inline ojson eval_config_json(const EvalConfig& cfg) {
  return ojson{{"grid", to_json(cfg.grid)},
               {"curator", to_json(cfg.curator)},
               {"element_spacing", cfg.element_spacing},
               {"random_seeds", cfg.random_seeds}};
}

namespace detail {

inline double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline EvalRow run_selector(const PreparedScene& scene, Curator& curator, SelectorKind kind,
                            std::uint64_t rng_seed, const std::string& hash) {
  const auto t0 = std::chrono::steady_clock::now();
  const SelectionResult res = curator.baseline_select(kind, rng_seed);
  const double runtime = elapsed_s(t0);
  EvalRow row = evaluate_selection(res, scene.oracle(), scene.candidates);
  // single_probe logs hold its one-pass scores; rescore so every selector's
  // conflict is measured against its own accumulated history
  if (kind == SelectorKind::kSingleProbe) {
    const auto realized = curator.realized_conflicts(res.state.selected);
    double sum = 0;
    for (std::size_t t = 1; t < realized.size(); ++t) sum += realized[t];
    row.conflict = realized.size() > 1 ? sum / static_cast<double>(realized.size() - 1) : 0.0;
  }
  row.scene = scene.id;
  row.selector = selector_name(kind);
  row.lambda = curator.config().lambda;
  row.k = curator.config().k;
  row.runtime_s = runtime;
  row.config_hash = hash;
  return row;
}

}  // namespace detail

/// Evaluation never uses early stop.
inline EvalConfig eval_ready(EvalConfig cfg) {
  cfg.curator.early_stop.enabled = false;
  cfg.curator.validate();
  return cfg;
}

/// Random-baseline spread over its rng seeds.
struct RandomSpread {
  std::string scene;
  double coverage_min = 0, coverage_max = 0;
  double conflict_min = 0, conflict_max = 0;
};

/// The five selectors on one scene. The random baseline is averaged over
/// cfg.random_seeds seeds; its spread goes to `spread` when given.
inline std::vector<EvalRow> compare_selectors(const PreparedScene& scene, EvalConfig cfg,
                                              RandomSpread* spread = nullptr) {
  cfg = eval_ready(std::move(cfg));
  const std::string hash = config_hash(eval_config_json(cfg));
  Curator curator(*scene.bvh, scene.candidates, cfg.curator);
  std::vector<EvalRow> rows;
  for (auto kind : {SelectorKind::kCover, SelectorKind::kSingleProbe, SelectorKind::kCoverageOnly,
                    SelectorKind::kLowConflict})
    rows.push_back(detail::run_selector(scene, curator, kind, 0, hash));

  EvalRow mean;
  RandomSpread rs;
  rs.scene = scene.id;
  const int seeds = std::max(1, cfg.random_seeds);
  for (int s = 0; s < seeds; ++s) {
    const EvalRow r = detail::run_selector(scene, curator, SelectorKind::kRandom, static_cast<std::uint64_t>(s), hash);
    if (s == 0) {
      mean = r;
      rs.coverage_min = rs.coverage_max = r.coverage;
      rs.conflict_min = rs.conflict_max = r.conflict;
      mean.coverage = mean.coverage_per_view = mean.conflict = mean.runtime_s = 0;
      mean.frames = 0;
    }
    mean.coverage += r.coverage / seeds;
    mean.coverage_per_view += r.coverage_per_view / seeds;
    mean.conflict += r.conflict / seeds;
    mean.runtime_s += r.runtime_s / seeds;
    mean.frames = std::max(mean.frames, r.frames);
    rs.coverage_min = std::min(rs.coverage_min, r.coverage);
    rs.coverage_max = std::max(rs.coverage_max, r.coverage);
    rs.conflict_min = std::min(rs.conflict_min, r.conflict);
    rs.conflict_max = std::max(rs.conflict_max, r.conflict);
  }
  mean.selected.clear();
  rows.push_back(mean);
  if (spread) *spread = rs;
  return rows;
}

struct SweepResult {
  std::vector<EvalRow> rows;       // one per scene and lambda
  std::vector<EvalRow> aggregate;  // mean over scenes, one per lambda
};

/// Conflict-aware greedy on each scene at each lambda, early stop off.
inline SweepResult lambda_sweep(const std::vector<const PreparedScene*>& scenes, const std::vector<double>& lambdas,
                                EvalConfig cfg) {
  cfg = eval_ready(std::move(cfg));
  SweepResult out;
  for (double lambda : lambdas) {
    EvalConfig c = cfg;
    c.curator.lambda = lambda;
    c.curator.validate();
    const std::string hash = config_hash(eval_config_json(c));
    EvalRow agg;
    agg.scene = "mean";
    agg.selector = selector_name(SelectorKind::kCover);
    agg.lambda = lambda;
    agg.k = c.curator.k;
    agg.config_hash = hash;
    for (const PreparedScene* scene : scenes) {
      Curator curator(*scene->bvh, scene->candidates, c.curator);
      EvalRow row = detail::run_selector(*scene, curator, SelectorKind::kCover, 0, hash);
      const double n = static_cast<double>(scenes.size());
      agg.coverage += row.coverage / n;
      agg.coverage_per_view += row.coverage_per_view / n;
      agg.conflict += row.conflict / n;
      agg.runtime_s += row.runtime_s;
      agg.frames += row.frames;
      out.rows.push_back(std::move(row));
    }
    agg.frames = scenes.empty() ? 0 : agg.frames / static_cast<int>(scenes.size());
    out.aggregate.push_back(agg);
  }
  return out;
}

/// One conflict-aware greedy row per scene under a single fixed config.
inline std::vector<EvalRow> cross_scene_run(const std::vector<const PreparedScene*>& scenes, EvalConfig cfg) {
  cfg = eval_ready(std::move(cfg));
  const std::string hash = config_hash(eval_config_json(cfg));
  std::vector<EvalRow> rows;
  for (const PreparedScene* scene : scenes) {
    Curator curator(*scene->bvh, scene->candidates, cfg.curator);
    rows.push_back(detail::run_selector(*scene, curator, SelectorKind::kCover, 0, hash));
  }
  return rows;
}

// Reports ----------------------------------------------------------------------------

inline constexpr const char* kCoverageCsvHeader =
    "scene,selector,lambda,K,coverage,cov_per_view,conflict,frames,runtime_s";

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string coverage_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << "# conflict = mean winner L_t over steps >= 2; early stop disabled; procedural scenes\n";
  out << kCoverageCsvHeader << "\n";
  for (const auto& r : rows)
    out << r.scene << ',' << r.selector << ',' << format_number(r.lambda) << ',' << r.k << ','
        << format_number(r.coverage) << ',' << format_number(r.coverage_per_view) << ','
        << format_number(r.conflict) << ',' << r.frames << ',' << format_number(r.runtime_s) << "\n";
  return out.str();
}

/// Writes results/coverage.csv and results/wallclock.json under `dir`.
inline void write_results(const fs::path& dir, const std::vector<EvalRow>& rows) {
  write_text(dir / "results" / "coverage.csv", coverage_csv(rows));
  ojson runs = ojson::array();
  double total = 0;
  for (const auto& r : rows) {
    runs.push_back(ojson{{"scene", r.scene}, {"selector", r.selector}, {"lambda", r.lambda},
                         {"runtime_s", r.runtime_s}, {"config_hash", r.config_hash}});
    total += r.runtime_s;
  }
  write_text(dir / "results" / "wallclock.json", ojson{{"total_s", total}, {"runs", runs}}.dump(2) + "\n");
}

}  // namespace cover

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

// Whole-scene export (selection + frames + metadata) and the release auditor
// that re-checks an exported directory.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cover/candidates.hpp"
#include "cover/curator.hpp"
#include "cover/eval.hpp"
#include "cover/io.hpp"
#include "cover/render.hpp"
#include "cover/scene.hpp"

namespace cover {

/// Everything a `select` run depends on besides the scene mesh.
struct RunConfig {
  GridConfig grid;
  CuratorConfig curator;
  std::string selector = "cover";
  std::uint64_t seed = 0;  // random-baseline order
};

inline ojson to_json(const RunConfig& r) {
  return ojson{{"selector", r.selector}, {"seed", r.seed}, {"grid", to_json(r.grid)}, {"curator", to_json(r.curator)}};
}

/// Reads `selector`, `seed`, `grid` and `curator` over `base`; other
/// top-level keys are left to the caller.
inline RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {}) {
  if (!j.is_object()) throw ConfigError("config key `config` must be an object");
  detail::read_key(j, "", "selector", base.selector);
  detail::read_key(j, "", "seed", base.seed);
  if (j.contains("grid")) base.grid = grid_config_from_json(j["grid"], base.grid);
  if (j.contains("curator")) base.curator = curator_config_from_json(j["curator"], base.curator);
  selector_from_name(base.selector);
  return base;
}

// Scenes -----------------------------------------------------------------------------

struct LoadedScene {
  std::string id;
  TriMesh mesh;
};

/// A `.json` path is a room spec generated with `seed`; anything else is read
/// as an ASCII mesh.
inline LoadedScene load_scene(const fs::path& path, std::uint64_t seed = 0) {
  LoadedScene s;
  s.id = path.stem().string();
  if (path.extension() == ".json") {
    try {
      s.mesh = gen_room_scene(room_spec_from_json(read_json(path)), seed);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  } else {
    s.mesh = load_mesh(path.string());
  }
  return s;
}

inline std::string mesh_text(const TriMesh& mesh) {
  std::ostringstream out;
  write_mesh(out, mesh);
  return out.str();
}

// Export -------------------------------------------------------------------------------

struct ExportSummary {
  fs::path dir;
  std::string config_hash;
  std::size_t proposals = 0;
  std::size_t feasible = 0;
  std::vector<int> selected;
  double total_s = 0;
};

/// Canonical run description hashed into config.sha256.
inline ojson export_config_json(const std::string& scene_id, const std::string& mesh_sha256, const RunConfig& cfg) {
  ojson j = to_json(cfg);
  j["scene"] = ojson{{"id", scene_id}, {"mesh_file", "scene.mesh"}, {"mesh_sha256", mesh_sha256}};
  return j;
}

/// Selects viewpoints on `mesh` and writes a full release directory:
/// config.json, config.sha256, scene.mesh, meta.json, frames/, metadata/ and
/// wallclock.json. When no candidate survives the filter, candidates.jsonl is
/// still written before the error propagates.
inline ExportSummary export_scene(const fs::path& dir, const std::string& scene_id, TriMesh mesh,
                                  const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.grid.validate();
  cfg.curator.validate();
  const SelectorKind kind = selector_from_name(cfg.selector);
  const std::string text = mesh_text(mesh);
  const ojson config = export_config_json(scene_id, sha256_hex(text), cfg);
  ExportSummary out;
  out.dir = dir;
  out.config_hash = config_hash(config);
  write_text(dir / "scene.mesh", text);
  write_text(dir / "config.json", config.dump(2) + "\n");
  write_config_hash(dir, out.config_hash);

  const Bvh bvh(std::move(mesh));
  const Aabb bounds = bvh.bounds();
  const CandidateGrid grid = gen_candidates(bounds, cfg.grid, bounds.max.y - bounds.min.y);
  CandidateSet candidates;
  try {
    candidates = filter_all(bvh, grid.positions);
  } catch (const NoFeasibleCandidates& e) {
    write_candidates(dir, e.candidates());
    throw;
  }
  write_candidates(dir, candidates);
  out.proposals = candidates.candidates.size();
  out.feasible = candidates.feasible_count();

  Curator curator(bvh, candidates, cfg.curator);
  const SelectionResult res = curator.baseline_select(kind, cfg.seed);
  out.selected = res.state.selected;

  const PoseWC first = curator.pose(res.state.selected.front());
  for (std::size_t i = 0; i < res.state.selected.size(); ++i) {
    const int id = res.state.selected[i];
    const RenderResult r = render_erp(bvh, curator.pose(id), cfg.curator.frame_w, cfg.curator.frame_h);
    write_frame(dir, static_cast<int>(i), r.rgb, r.depth, curator.pose(id), first, id);
  }
  write_step_logs(dir, res.logs);
  write_selected(dir, cfg.selector, res.logs, candidates);
  SceneMeta meta;
  meta.scene_id = scene_id;
  meta.selector = cfg.selector;
  meta.config_hash = out.config_hash;
  meta.frame_count = static_cast<int>(res.state.selected.size());
  meta.width = cfg.curator.frame_w;
  meta.height = cfg.curator.frame_h;
  write_meta(dir, meta);
  out.total_s = detail::elapsed_s(t0);
  write_wallclock(dir, res.logs, out.total_s);
  return out;
}

// Audit ----------------------------------------------------------------------------------

struct AuditCheck {
  std::string name;
  int passed = 0;
  int total = 0;
  std::vector<std::string> failures;  // first few messages

  void record(bool ok, const std::string& what) {
    ++total;
    if (ok) {
      ++passed;
    } else if (failures.size() < 5) {
      failures.push_back(what);
    }
  }
  bool ok() const { return passed == total; }
};

struct AuditOptions {
  bool replay = true;     // re-run the selector for the prefix check
  int replay_k = 12;      // prefix length, capped below the exported count
  int pixel_samples = 256;
};

struct AuditReport {
  std::vector<AuditCheck> checks;

  AuditCheck& check(const std::string& name) {
    for (auto& c : checks)
      if (c.name == name) return c;
    checks.push_back(AuditCheck{name, 0, 0, {}});
    return checks.back();
  }
  bool ok() const {
    for (const auto& c : checks)
      if (!c.ok()) return false;
    return true;
  }
  int passed() const {
    int n = 0;
    for (const auto& c : checks) n += c.passed;
    return n;
  }
  int total() const {
    int n = 0;
    for (const auto& c : checks) n += c.total;
    return n;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

// Key the selector maximised at a step, for the winner-consistency check.
inline double audit_key(SelectorKind kind, const OracleScore& sc) {
  switch (kind) {
    case SelectorKind::kCoverageOnly: return sc.G;
    case SelectorKind::kLowConflict: return -sc.L;
    default: return sc.s;
  }
}

inline void audit_winners(AuditCheck& check, SelectorKind kind, const std::vector<StepLog>& logs) {
  std::vector<int> earlier;
  for (const auto& log : logs) {
    const std::string where = "step " + std::to_string(log.step);
    const OracleScore* mine = nullptr;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : log.candidates) {
      if (std::find(earlier.begin(), earlier.end(), c.candidate_id) != earlier.end()) continue;
      if (c.candidate_id == log.selected_id) mine = &c;
      best = std::max(best, audit_key(kind, c));
    }
    if (!mine) {
      check.record(false, where + ": winner " + std::to_string(log.selected_id) + " missing from candidates");
    } else {
      const bool logged = mine->G == log.G && mine->L == log.L && mine->s == log.s;
      // random order makes no claim beyond the winner being scored
      const bool top = kind == SelectorKind::kRandom || log.step == 1 || audit_key(kind, *mine) == best;
      check.record(logged && top, where + ": winner " + std::to_string(log.selected_id) +
                                      (logged ? " is not the maximiser" : " disagrees with its candidate row"));
    }
    earlier.push_back(log.selected_id);
  }
}

}  // namespace detail

/// Re-parses every file of an exported directory and re-checks its
/// invariants. Never throws for content problems; they become failed checks.
inline AuditReport audit_release(const fs::path& dir, const AuditOptions& opt = {}) {
  AuditReport rep;
  auto attempt = [&](const std::string& check, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      rep.check(check).record(false, e.what());
    }
  };

  ojson config, meta;
  RunConfig run;
  attempt("config parses", [&] {
    config = read_json(dir / "config.json");
    run = run_config_from_json(config);
    rep.check("config parses").record(true, "");
  });
  attempt("single config hash", [&] {
    auto& c = rep.check("single config hash");
    meta = read_json(dir / "meta.json");
    const std::string file_hash = detail::trim(read_file(dir / "config.sha256"));
    const std::string recomputed = config_hash(config);
    c.record(file_hash == recomputed, "config.sha256 does not match config.json");
    c.record(meta.at("config_hash").get<std::string>() == file_hash, "meta.json carries a different config hash");
  });
  attempt("meta conventions", [&] {
    auto& c = rep.check("meta conventions");
    const auto& conv = meta.at("conventions");
    c.record(conv.at("world") == kWorldConvention && conv.at("camera") == kCameraConvention &&
                 conv.at("pose") == kPoseConvention && conv.at("erp") == kErpConvention,
             "convention strings differ from the library constants");
    c.record(meta.at("invalid_depth") == kInvalidDepth && meta.at("camera_type") == kCameraType,
             "camera type or invalid-depth encoding differs");
  });

  CandidateSet candidates;
  std::vector<StepLog> logs;
  ojson selected;
  attempt("metadata parses", [&] {
    auto& c = rep.check("metadata parses");
    candidates = read_candidates(dir);
    c.record(true, "");
    logs = read_step_logs(dir);
    c.record(!logs.empty(), "per_step_log.jsonl is empty");
    selected = read_json(dir / "metadata" / "selected_viewpoints.json");
    c.record(true, "");
  });
  attempt("candidate ids", [&] {
    auto& c = rep.check("candidate ids");
    for (std::size_t i = 0; i < candidates.candidates.size(); ++i)
      c.record(candidates.candidates[i].id == static_cast<int>(i), "candidates.jsonl out of id order");
    for (const auto& v : selected.at("ids")) {
      const int id = v.get<int>();
      c.record(id >= 0 && id < static_cast<int>(candidates.candidates.size()) && candidates.candidates[id].feasible,
               "selected id " + std::to_string(id) + " is not a feasible candidate");
    }
  });
  attempt("winner consistency", [&] {
    auto& c = rep.check("winner consistency");
    detail::audit_winners(c, selector_from_name(run.selector), logs);
    std::vector<int> ids = selected.at("ids").get<std::vector<int>>();
    std::vector<int> winners;
    for (const auto& l : logs) winners.push_back(l.selected_id);
    c.record(ids == winners, "selected_viewpoints.json order differs from the log winners");
  });

  const int frame_count = meta.is_object() && meta.contains("frame_count") ? meta["frame_count"].get<int>() : -1;
  attempt("frame count", [&] {
    rep.check("frame count").record(frame_count == static_cast<int>(logs.size()),
                                    "meta.json frame_count differs from the log length");
  });

  // Frames: schema, unit quaternion, frame-0 origin, depth length, RGB size,
  // pixel-level round trip and depth re-render on a sample.
  std::unique_ptr<Bvh> bvh;
  attempt("scene mesh", [&] {
    auto& c = rep.check("scene mesh");
    const std::string text = read_file(dir / "scene.mesh");
    c.record(sha256_hex(text) == config.at("scene").at("mesh_sha256").get<std::string>(),
             "scene.mesh hash differs from config.json");
    std::istringstream in(text);
    bvh = std::make_unique<Bvh>(parse_mesh(in, (dir / "scene.mesh").string()));
  });
  Vec3 origin;
  bool have_origin = false;
  if (!logs.empty() && logs.front().selected_id >= 0 &&
      logs.front().selected_id < static_cast<int>(candidates.candidates.size())) {
    origin = candidates.candidates[logs.front().selected_id].position;
    have_origin = true;
  }
  for (int i = 0; i < std::max(frame_count, 0); ++i) {
    const std::string tag = "frame " + std::to_string(i);
    FrameRecord rec;
    bool parsed = false;
    attempt("pose schema", [&] {
      rec = read_frame_record(dir, i);
      parsed = true;
      rep.check("pose schema").record(rec.index == i && rec.width >= 2 && rec.height >= 1,
                                      tag + ": frame index or dimensions invalid");
    });
    if (!parsed) continue;
    const QuatWC& q = rec.rotation;
    rep.check("unit quaternion")
        .record(std::abs(std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z) - 1.0) <= 1e-6,
                tag + ": quaternion is not unit norm");
    if (i == 0)
      rep.check("frame-0 origin")
          .record(rec.position.x == 0 && rec.position.y == 0 && rec.position.z == 0, tag + ": position is not zero");
    if (i < static_cast<int>(logs.size()))
      rep.check("frame candidate").record(rec.candidate_id == logs[i].selected_id,
                                          tag + ": candidate id differs from the log winner");
    DepthImage depth;
    bool have_depth = false;
    attempt("depth byte length", [&] {
      const auto bytes = fs::file_size(dir / rec.depth_file);
      const bool ok = bytes == 4ull * rec.width * rec.height;
      rep.check("depth byte length").record(ok, tag + ": depth file has " + std::to_string(bytes) + " bytes");
      if (ok) {
        depth = read_depth_raw(dir / rec.depth_file, rec.width, rec.height);
        have_depth = true;
      }
    });
    attempt("rgb dimensions", [&] {
      const RgbImage rgb = read_ppm(dir / rec.rgb_file);
      rep.check("rgb dimensions").record(rgb.width == rec.width && rgb.height == rec.height,
                                         tag + ": RGB size differs from the pose record");
    });
    if (!have_depth || !have_origin) continue;
    const PoseWC pose{rec.rotation, rec.position + origin};
    const CameraTransform cam(pose);
    Rng rng(static_cast<std::uint64_t>(i) + 1);
    auto& rt = rep.check("ERP round trip");
    auto& rr = rep.check("depth re-render");
    for (int s = 0; s < opt.pixel_samples; ++s) {
      const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(rec.width)));
      const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(rec.height)));
      const double cu = u + 0.5, cv = v + 0.5;
      const Vec3 d = cam.dir_to_world(pixel_to_dir(cu, cv, rec.width, rec.height));
      const float r = depth.at(u, v);
      if (r > 0) {
        const PixelCoord px = dir_to_pixel(cam.to_camera(cam.centre + d * static_cast<double>(r)), rec.width, rec.height);
        double du = std::abs(px.u - cu);
        du = std::min(du, rec.width - du);
        rt.record(du <= 0.5 && std::abs(px.v - cv) <= 0.5, tag + ": pixel round trip off by more than 0.5 px");
      }
      if (bvh) {
        const auto hit = bvh->raycast(cam.centre, d);
        const float expect = hit ? static_cast<float>(hit->t) : 0.0f;
        rr.record(std::abs(expect - r) <= 1e-5f * std::max(1.0f, expect),
                  tag + ": stored depth differs from a re-cast ray");
      }
    }
  }

  if (opt.replay && bvh && !logs.empty()) {
    attempt("K-prefix replay", [&] {
      const int k = std::max(1, std::min(opt.replay_k, static_cast<int>(logs.size()) - 1));
      RunConfig r = run;
      r.curator.k = k;
      const Aabb bounds = bvh->bounds();
      const CandidateGrid grid = gen_candidates(bounds, r.grid, bounds.max.y - bounds.min.y);
      const CandidateSet fresh = filter_all(*bvh, grid.positions);
      auto& c = rep.check("K-prefix replay");
      c.record(fresh.candidates.size() == candidates.candidates.size() &&
                   fresh.feasible_ids() == candidates.feasible_ids(),
               "re-filtered candidates differ from candidates.jsonl");
      Curator curator(*bvh, fresh, r.curator);
      const SelectionResult res = curator.baseline_select(selector_from_name(r.selector), r.seed);
      std::vector<int> prefix;
      for (int s = 0; s < k && s < static_cast<int>(logs.size()); ++s) prefix.push_back(logs[s].selected_id);
      c.record(res.state.selected == prefix,
               "K=" + std::to_string(k) + " rerun differs from the logged prefix");
    });
  }
  return rep;
}

}  // namespace cover

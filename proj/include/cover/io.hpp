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

// Release schema: frames (PPM RGB, raw float32 depth, pose JSON), meta.json,
// metadata/candidates.jsonl, metadata/selected_viewpoints.json,
// metadata/per_step_log.jsonl and config.sha256. Formats are documented in
// docs/formats.md.

#include <openssl/evp.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "cover/candidates.hpp"
#include "cover/curator.hpp"
#include "cover/error.hpp"
#include "cover/geom.hpp"
#include "cover/render.hpp"
#include "json.hpp"

namespace cover {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

inline constexpr const char* kCameraType = "erp";
inline constexpr const char* kDepthEncoding = "float32 little-endian, row-major, metres of range";
inline constexpr const char* kInvalidDepth = "0";

// Hashing ---------------------------------------------------------------------------

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA256 computation failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline ojson read_json(const fs::path& path) {
  try {
    return ojson::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// Config serialisation ------------------------------------------------------------

inline ojson to_json(const GridConfig& g) {
  return ojson{{"spacing_m", g.spacing_m},
               {"margin_m", g.margin_m},
               {"cap", g.cap},
               {"height_layers_m", g.height_layers_m},
               {"extra_high_layers_m", g.extra_high_layers_m},
               {"top_clip_m", g.top_clip_m}};
}

inline ojson to_json(const CuratorConfig& c) {
  return ojson{{"lambda", c.lambda},
               {"delta_fraction", c.delta_fraction},
               {"delta_min_m", c.delta_min_m},
               {"delta_max_m", c.delta_max_m},
               {"probe_w", c.probe_w},
               {"probe_h", c.probe_h},
               {"m0", c.m0},
               {"k", c.k},
               {"early_stop", {{"enabled", c.early_stop.enabled}, {"tau", c.early_stop.tau}, {"m", c.early_stop.m}}},
               {"frame_w", c.frame_w},
               {"frame_h", c.frame_h},
               {"stride", c.stride},
               {"splat_radius", c.splat_radius}};
}

namespace detail {

template <typename T>
void read_key(const nlohmann::json& j, const std::string& prefix, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key `" + prefix + key + "` has the wrong type");
  }
}

inline void reject_unknown(const nlohmann::json& j, const std::string& prefix,
                           std::initializer_list<const char*> known) {
  if (!j.is_object()) {
    const std::string section = prefix.empty() ? "config" : prefix.substr(0, prefix.size() - 1);
    throw ConfigError("config key `" + section + "` must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown config key `" + prefix + key + "`");
  }
}

}  // namespace detail

/// Overrides the keys present in `j` on top of `g`.
inline GridConfig grid_config_from_json(const nlohmann::json& j, GridConfig g = {}) {
  detail::reject_unknown(j, "grid.", {"spacing_m", "margin_m", "cap", "height_layers_m",
                                      "extra_high_layers_m", "top_clip_m"});
  detail::read_key(j, "grid.", "spacing_m", g.spacing_m);
  detail::read_key(j, "grid.", "margin_m", g.margin_m);
  detail::read_key(j, "grid.", "cap", g.cap);
  detail::read_key(j, "grid.", "height_layers_m", g.height_layers_m);
  detail::read_key(j, "grid.", "extra_high_layers_m", g.extra_high_layers_m);
  detail::read_key(j, "grid.", "top_clip_m", g.top_clip_m);
  g.validate();
  return g;
}

inline CuratorConfig curator_config_from_json(const nlohmann::json& j, CuratorConfig c = {}) {
  detail::reject_unknown(j, "curator.", {"lambda", "delta_fraction", "delta_min_m", "delta_max_m",
                                         "probe_w", "probe_h", "m0", "k", "early_stop", "frame_w",
                                         "frame_h", "stride", "splat_radius", "warp_cache_mb"});
  detail::read_key(j, "curator.", "lambda", c.lambda);
  detail::read_key(j, "curator.", "delta_fraction", c.delta_fraction);
  detail::read_key(j, "curator.", "delta_min_m", c.delta_min_m);
  detail::read_key(j, "curator.", "delta_max_m", c.delta_max_m);
  detail::read_key(j, "curator.", "probe_w", c.probe_w);
  detail::read_key(j, "curator.", "probe_h", c.probe_h);
  detail::read_key(j, "curator.", "m0", c.m0);
  detail::read_key(j, "curator.", "k", c.k);
  detail::read_key(j, "curator.", "frame_w", c.frame_w);
  detail::read_key(j, "curator.", "frame_h", c.frame_h);
  detail::read_key(j, "curator.", "stride", c.stride);
  detail::read_key(j, "curator.", "splat_radius", c.splat_radius);
  detail::read_key(j, "curator.", "warp_cache_mb", c.warp_cache_mb);  // performance only, not hashed
  if (j.contains("early_stop")) {
    const auto& e = j["early_stop"];
    detail::reject_unknown(e, "curator.early_stop.", {"enabled", "tau", "m"});
    detail::read_key(e, "curator.early_stop.", "enabled", c.early_stop.enabled);
    detail::read_key(e, "curator.early_stop.", "tau", c.early_stop.tau);
    detail::read_key(e, "curator.early_stop.", "m", c.early_stop.m);
  }
  c.validate();
  return c;
}

/// Canonical hash of everything that determines a run's output.
inline std::string config_hash(const ojson& canonical_config) { return sha256_hex(canonical_config.dump()); }

// Frames ---------------------------------------------------------------------------

struct FrameRecord {
  int index = 0;
  int candidate_id = -1;
  std::string rgb_file;
  std::string depth_file;
  std::string pose_file;
  QuatWC rotation;
  Vec3 position;  // relative to the first selected frame
  int width = 0;
  int height = 0;
};

inline std::string frame_stem(int idx) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", idx);
  return buf;
}

inline void write_ppm(const fs::path& path, const RgbImage& rgb) {
  std::string data = "P6\n" + std::to_string(rgb.width) + " " + std::to_string(rgb.height) + "\n255\n";
  const std::size_t header = data.size();
  data.resize(header + rgb.size() * 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    data[header + 3 * i] = static_cast<char>(rgb.pixels[i].r);
    data[header + 3 * i + 1] = static_cast<char>(rgb.pixels[i].g);
    data[header + 3 * i + 2] = static_cast<char>(rgb.pixels[i].b);
  }
  write_text(path, data);
}

inline RgbImage read_ppm(const fs::path& path) {
  const std::string data = read_file(path);
  std::istringstream in(data);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255)
    throw ConfigError(path.string() + ": not an 8-bit binary PPM");
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  RgbImage img(w, h);
  if (data.size() != offset + img.size() * 3) throw ConfigError(path.string() + ": truncated PPM payload");
  for (std::size_t i = 0; i < img.size(); ++i)
    img.pixels[i] = {static_cast<std::uint8_t>(data[offset + 3 * i]),
                     static_cast<std::uint8_t>(data[offset + 3 * i + 1]),
                     static_cast<std::uint8_t>(data[offset + 3 * i + 2])};
  return img;
}

inline void write_depth_raw(const fs::path& path, const DepthImage& depth) {
  std::string data(depth.size() * 4, '\0');
  for (std::size_t i = 0; i < depth.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(depth.pixels[i]);
    for (int b = 0; b < 4; ++b) data[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  write_text(path, data);
}

inline DepthImage read_depth_raw(const fs::path& path, int width, int height) {
  const std::string data = read_file(path);
  DepthImage depth(width, height);
  if (data.size() != depth.size() * 4)
    throw ConfigError(path.string() + ": depth file holds " + std::to_string(data.size()) +
                      " bytes, expected " + std::to_string(depth.size() * 4));
  for (std::size_t i = 0; i < depth.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[4 * i + b])) << (8 * b);
    depth.pixels[i] = std::bit_cast<float>(bits);
  }
  return depth;
}

inline ojson pose_json(const FrameRecord& r) {
  const QuatWC q = r.rotation;
  return ojson{{"frame", r.index},
               {"candidate_id", r.candidate_id},
               {"camera_type", kCameraType},
               {"q_wc", {q.w, q.x, q.y, q.z}},
               {"position", {r.position.x, r.position.y, r.position.z}},
               {"width", r.width},
               {"height", r.height},
               {"rgb_file", r.rgb_file},
               {"depth_file", r.depth_file},
               {"depth_encoding", kDepthEncoding}};
}

/// Writes frames/<idx>_rgb.ppm, frames/<idx>_depth.f32 and frames/<idx>_pose.json.
/// The pose position is stored relative to `first_pose`.
inline FrameRecord write_frame(const fs::path& dir, int idx, const RgbImage& rgb, const DepthImage& depth,
                               const PoseWC& pose, const PoseWC& first_pose, int candidate_id = -1) {
  if (rgb.width != depth.width || rgb.height != depth.height)
    throw ConfigError("RGB and depth dimensions differ");
  FrameRecord rec;
  rec.index = idx;
  rec.candidate_id = candidate_id;
  const std::string stem = frame_stem(idx);
  rec.rgb_file = "frames/" + stem + "_rgb.ppm";
  rec.depth_file = "frames/" + stem + "_depth.f32";
  rec.pose_file = "frames/" + stem + "_pose.json";
  rec.rotation = pose.rotation;
  rec.position = pose.position - first_pose.position;
  rec.width = depth.width;
  rec.height = depth.height;
  try {
    write_ppm(dir / rec.rgb_file, rgb);
    write_depth_raw(dir / rec.depth_file, depth);
    write_text(dir / rec.pose_file, pose_json(rec).dump(2) + "\n");
  } catch (const std::exception& e) {
    throw std::runtime_error("writing frame " + std::to_string(idx) + " under " + dir.string() + ": " + e.what());
  }
  return rec;
}

/// Parses and schema-checks a pose JSON.
inline FrameRecord parse_pose(const ojson& j, const std::string& where) {
  auto need = [&](const char* key) -> const ojson& {
    if (!j.contains(key)) throw ConfigError(where + ": missing key `" + key + "`");
    return j[key];
  };
  FrameRecord rec;
  try {
    rec.index = need("frame").get<int>();
    rec.candidate_id = j.value("candidate_id", -1);
    if (need("camera_type").get<std::string>() != kCameraType)
      throw ConfigError(where + ": camera_type must be \"erp\"");
    const auto& q = need("q_wc");
    const auto& p = need("position");
    if (!q.is_array() || q.size() != 4) throw ConfigError(where + ": q_wc must hold 4 numbers");
    if (!p.is_array() || p.size() != 3) throw ConfigError(where + ": position must hold 3 numbers");
    rec.rotation = {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()};
    rec.position = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
    rec.width = need("width").get<int>();
    rec.height = need("height").get<int>();
    rec.rgb_file = need("rgb_file").get<std::string>();
    rec.depth_file = need("depth_file").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return rec;
}

inline FrameRecord read_frame_record(const fs::path& dir, int idx) {
  const std::string rel = "frames/" + frame_stem(idx) + "_pose.json";
  FrameRecord rec = parse_pose(read_json(dir / rel), (dir / rel).string());
  rec.pose_file = rel;
  return rec;
}

// Metadata ---------------------------------------------------------------------------

inline ojson step_log_json(const StepLog& log) {
  ojson cands = ojson::array();
  for (const auto& c : log.candidates)
    cands.push_back(ojson{{"id", c.candidate_id}, {"G", c.G}, {"L", c.L}, {"s", c.s}});
  return ojson{{"step", log.step},     {"selected_id", log.selected_id}, {"G", log.G}, {"L", log.L},
               {"s", log.s},           {"tie_break", log.tie_break},     {"candidates", cands}};
}

/// metadata/per_step_log.jsonl: one object per step. Wall-clock times are
/// kept out of this file (see write_wallclock) so it is reproducible.
inline fs::path write_step_logs(const fs::path& dir, const std::vector<StepLog>& logs) {
  std::string text;
  for (const auto& log : logs) text += step_log_json(log).dump() + "\n";
  const fs::path path = dir / "metadata" / "per_step_log.jsonl";
  write_text(path, text);
  return path;
}

inline std::vector<StepLog> read_step_logs(const fs::path& dir) {
  const fs::path path = dir / "metadata" / "per_step_log.jsonl";
  std::istringstream in(read_file(path));
  std::vector<StepLog> logs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = ojson::parse(line);
      StepLog log;
      log.step = j.at("step").get<int>();
      log.selected_id = j.at("selected_id").get<int>();
      log.G = j.at("G").get<double>();
      log.L = j.at("L").get<double>();
      log.s = j.at("s").get<double>();
      log.tie_break = j.at("tie_break").get<bool>();
      for (const auto& c : j.at("candidates")) {
        OracleScore sc;
        sc.candidate_id = c.at("id").get<int>();
        sc.G = c.at("G").get<double>();
        sc.L = c.at("L").get<double>();
        sc.s = c.at("s").get<double>();
        log.candidates.push_back(sc);
      }
      logs.push_back(std::move(log));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return logs;
}

inline ojson selected_json(const std::string& selector, const std::vector<StepLog>& logs,
                           const CandidateSet& candidates) {
  ojson views = ojson::array();
  std::vector<int> ids;
  for (const auto& log : logs) {
    const Vec3 p = candidates.candidates.at(log.selected_id).position;
    ids.push_back(log.selected_id);
    views.push_back(ojson{{"step", log.step},
                          {"id", log.selected_id},
                          {"position", {p.x, p.y, p.z}},
                          {"score", log.s},
                          {"gain", log.G},
                          {"conflict", log.L}});
  }
  return ojson{{"selector", selector}, {"ids", ids}, {"viewpoints", views}};
}

inline fs::path write_selected(const fs::path& dir, const std::string& selector,
                               const std::vector<StepLog>& logs, const CandidateSet& candidates) {
  const fs::path path = dir / "metadata" / "selected_viewpoints.json";
  write_text(path, selected_json(selector, logs, candidates).dump(2) + "\n");
  return path;
}

namespace detail {
inline ojson finite_or_null(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }
}  // namespace detail

inline ojson candidate_json(const Candidate& c) {
  ojson layers;
  for (int l = 0; l < kFilterLayers; ++l) layers[kLayerNames[l]] = c.layer_pass[l];
  const auto& d = c.diag;
  ojson diag{{"up_m", detail::finite_or_null(d.up_m)},
             {"down_m", detail::finite_or_null(d.down_m)},
             {"vertical_near", d.vertical_near},
             {"horizontal_near_fraction", d.horizontal_near_fraction},
             {"hit_rate", d.hit_rate},
             {"cv", d.cv},
             {"max_m", d.max_m},
             {"horizontal_min_m", detail::finite_or_null(d.horizontal_min_m)},
             {"range_fraction", d.range_fraction},
             {"min_pair_sum_m", detail::finite_or_null(d.min_pair_sum_m)}};
  return ojson{{"id", c.id},
               {"position", {c.position.x, c.position.y, c.position.z}},
               {"feasible", c.feasible},
               {"layers", layers},
               {"diagnostics", diag}};
}

/// metadata/candidates.jsonl: every proposal, feasible or not, in id order.
inline fs::path write_candidates(const fs::path& dir, const CandidateSet& set) {
  std::string text;
  for (const auto& c : set.candidates) text += candidate_json(c).dump() + "\n";
  const fs::path path = dir / "metadata" / "candidates.jsonl";
  write_text(path, text);
  return path;
}

inline CandidateSet read_candidates(const fs::path& dir) {
  const fs::path path = dir / "metadata" / "candidates.jsonl";
  std::istringstream in(read_file(path));
  CandidateSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = ojson::parse(line);
      Candidate c;
      c.id = j.at("id").get<int>();
      const auto& p = j.at("position");
      c.position = {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
      c.feasible = j.at("feasible").get<bool>();
      for (int l = 0; l < kFilterLayers; ++l) c.layer_pass[l] = j.at("layers").at(kLayerNames[l]).get<bool>();
      set.candidates.push_back(c);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return set;
}

struct SceneMeta {
  std::string scene_id;
  std::string source = "procedural";
  std::string selector = "cover";
  std::string config_hash;
  int frame_count = 0;
  int width = 0;
  int height = 0;
};

inline ojson meta_json(const SceneMeta& m) {
  return ojson{{"scene_id", m.scene_id},
               {"source", m.source},
               {"selector", m.selector},
               {"conventions",
                {{"world", kWorldConvention},
                 {"camera", kCameraConvention},
                 {"pose", kPoseConvention},
                 {"erp", kErpConvention},
                 {"position_origin", "first selected frame"}}},
               {"camera_type", kCameraType},
               {"depth_encoding", kDepthEncoding},
               {"invalid_depth", kInvalidDepth},
               {"rgb_encoding", "binary PPM (P6), 8-bit"},
               {"config_hash", m.config_hash},
               {"frame_count", m.frame_count},
               {"width", m.width},
               {"height", m.height}};
}

inline fs::path write_meta(const fs::path& dir, const SceneMeta& meta) {
  const fs::path path = dir / "meta.json";
  write_text(path, meta_json(meta).dump(2) + "\n");
  return path;
}

inline fs::path write_config_hash(const fs::path& dir, const std::string& hash) {
  const fs::path path = dir / "config.sha256";
  write_text(path, hash + "\n");
  return path;
}

/// wallclock.json: per-step runtimes, the only non-reproducible artefact.
inline fs::path write_wallclock(const fs::path& dir, const std::vector<StepLog>& logs, double total_s) {
  ojson steps = ojson::array();
  for (const auto& log : logs) steps.push_back(ojson{{"step", log.step}, {"runtime_s", log.runtime_s}});
  const fs::path path = dir / "wallclock.json";
  write_text(path, ojson{{"total_s", total_s}, {"steps", steps}}.dump(2) + "\n");
  return path;
}

}  // namespace cover

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

// Triangle meshes, BVH ray casting, the procedural room generator and the
// discretisation of the observable surface into coverage elements.

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cover/error.hpp"
#include "cover/geom.hpp"
#include "json.hpp"

namespace cover {

struct Rgb8 {
  std::uint8_t r = 180, g = 180, b = 180;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

/// Triangles are counter-clockwise when seen from their observable side, so
/// cross(b - a, c - a) points out of the surface.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<Rgb8> face_colors;

  std::size_t size() const { return triangles.size(); }

  Vec3 corner(std::size_t tri, int k) const { return vertices[triangles[tri][k]]; }

  Vec3 face_normal(std::size_t tri) const {
    const Vec3 a = corner(tri, 0);
    return normalize(cross(corner(tri, 1) - a, corner(tri, 2) - a));
  }

  double face_area(std::size_t tri) const {
    const Vec3 a = corner(tri, 0);
    return 0.5 * length(cross(corner(tri, 1) - a, corner(tri, 2) - a));
  }

  double surface_area() const {
    double s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += face_area(i);
    return s;
  }

  Aabb bounds() const {
    Aabb box;
    for (const auto& v : vertices) box.expand(v);
    return box;
  }

  void add_triangle(const Vec3& a, const Vec3& b, const Vec3& c, Rgb8 color) {
    const auto base = static_cast<std::uint32_t>(vertices.size());
    vertices.insert(vertices.end(), {a, b, c});
    triangles.push_back({base, base + 1, base + 2});
    face_colors.push_back(color);
  }

  /// Quad a-b-c-d in counter-clockwise order seen from the observable side.
  void add_quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, Rgb8 color) {
    const auto base = static_cast<std::uint32_t>(vertices.size());
    vertices.insert(vertices.end(), {a, b, c, d});
    triangles.push_back({base, base + 1, base + 2});
    triangles.push_back({base, base + 2, base + 3});
    face_colors.push_back(color);
    face_colors.push_back(color);
  }
};

// Mesh file format ------------------------------------------------------------

struct MeshLoadReport {
  std::size_t degenerate_dropped = 0;
};

inline constexpr double kDegenerateArea = 1e-12;

/// Parses the ASCII mesh format: `v x y z` and `f i j k [r g b]` lines with
/// 0-based indices; `#` starts a comment. Zero-area faces are dropped.
inline TriMesh parse_mesh(std::istream& in, const std::string& name,
                          MeshLoadReport* report = nullptr) {
  TriMesh mesh;
  std::vector<std::array<long long, 3>> faces;
  std::vector<int> face_lines;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x >> p.y >> p.z)) throw ParseError(name, lineno, "expected `v x y z`");
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
        throw ParseError(name, lineno, "non-finite vertex coordinate");
      mesh.vertices.push_back(p);
    } else if (tag == "f") {
      std::array<long long, 3> f{};
      if (!(ls >> f[0] >> f[1] >> f[2])) throw ParseError(name, lineno, "expected `f i j k`");
      Rgb8 color;
      int r = 0, g = 0, b = 0;
      if (ls >> r) {
        if (!(ls >> g >> b)) throw ParseError(name, lineno, "face colour needs three components");
        if (r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
          throw ParseError(name, lineno, "face colour component outside [0, 255]");
        color = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                 static_cast<std::uint8_t>(b)};
      }
      std::string extra;
      if (ls >> extra) throw ParseError(name, lineno, "unexpected trailing token `" + extra + "`");
      faces.push_back(f);
      face_lines.push_back(lineno);
      mesh.face_colors.push_back(color);
    } else {
      throw ParseError(name, lineno, "unknown record `" + tag + "`");
    }
  }
  std::vector<Rgb8> colors;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    for (auto idx : faces[i])
      if (idx < 0 || idx >= static_cast<long long>(mesh.vertices.size()))
        throw ParseError(name, face_lines[i], "vertex index " + std::to_string(idx) + " out of range");
    const std::array<std::uint32_t, 3> t{static_cast<std::uint32_t>(faces[i][0]),
                                         static_cast<std::uint32_t>(faces[i][1]),
                                         static_cast<std::uint32_t>(faces[i][2])};
    const Vec3 a = mesh.vertices[t[0]];
    if (0.5 * length(cross(mesh.vertices[t[1]] - a, mesh.vertices[t[2]] - a)) <= kDegenerateArea) {
      ++dropped;
      continue;
    }
    mesh.triangles.push_back(t);
    colors.push_back(mesh.face_colors[i]);
  }
  mesh.face_colors = std::move(colors);
  if (mesh.triangles.empty()) throw ParseError(name, lineno, "mesh has no non-degenerate faces");
  if (report) report->degenerate_dropped = dropped;
  return mesh;
}

inline TriMesh load_mesh(const std::string& path, MeshLoadReport* report = nullptr) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file " + path);
  return parse_mesh(in, path, report);
}

inline void write_mesh(std::ostream& out, const TriMesh& mesh) {
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const auto& t = mesh.triangles[i];
    const auto& c = mesh.face_colors[i];
    out << "f " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << int(c.r) << ' ' << int(c.g) << ' '
        << int(c.b) << '\n';
  }
}

inline void save_mesh(const std::string& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file " + path);
  write_mesh(out, mesh);
}

// Ray casting -----------------------------------------------------------------

inline constexpr double kRayTMin = 1e-4;

struct RayHit {
  double t = 0;
  std::uint32_t triangle_id = 0;
  Vec3 point;
};

/// Moller-Trumbore, two-sided. Returns the hit distance or a negative value.
inline double intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b,
                                 const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 p = cross(dir, e2);
  const double det = dot(e1, p);
  if (std::abs(det) < 1e-14) return -1;
  const double inv = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = dot(s, p) * inv;
  if (u < 0 || u > 1) return -1;
  const Vec3 q = cross(s, e1);
  const double v = dot(dir, q) * inv;
  if (v < 0 || u + v > 1) return -1;
  return dot(e2, q) * inv;
}

/// Bounding volume hierarchy over a mesh. Nodes are stored depth-first; an
/// interior node's left child immediately follows it.
class Bvh {
 public:
  struct Node {
    Aabb box;
    std::uint32_t start = 0;   // first entry in order_ (leaves)
    std::uint32_t count = 0;   // triangles in leaf; 0 for interior nodes
    std::uint32_t right = 0;   // right child index (interior nodes)
    bool leaf() const { return count > 0; }
  };

  explicit Bvh(TriMesh mesh) : mesh_(std::move(mesh)) {
    if (mesh_.triangles.empty()) throw SceneError("cannot build a BVH over an empty mesh");
    const std::size_t n = mesh_.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
    centroids_.resize(n);
    tri_boxes_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      Aabb b;
      for (int k = 0; k < 3; ++k) b.expand(mesh_.corner(i, k));
      tri_boxes_[i] = b;
      centroids_[i] = b.centre();
    }
    nodes_.reserve(2 * n);
    build(0, static_cast<std::uint32_t>(n));
    centroids_.clear();
    centroids_.shrink_to_fit();
  }

  const TriMesh& mesh() const { return mesh_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::uint32_t>& order() const { return order_; }
  Aabb bounds() const { return nodes_.front().box; }

  /// Nearest hit with t > kRayTMin. Equal distances resolve to the lower
  /// triangle id.
  std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir,
                                double t_max = std::numeric_limits<double>::infinity()) const {
    double best_t = t_max;
    std::uint32_t best_id = std::numeric_limits<std::uint32_t>::max();
    traverse(origin, dir, best_t, [&](std::uint32_t tri, double t) {
      if (t < best_t || (t == best_t && tri < best_id)) {
        best_t = t;
        best_id = tri;
      }
      return false;
    });
    if (best_id == std::numeric_limits<std::uint32_t>::max()) return std::nullopt;
    return RayHit{best_t, best_id, origin + dir * best_t};
  }

  /// True when any surface lies on the ray within (kRayTMin, t_max).
  bool occluded(const Vec3& origin, const Vec3& dir, double t_max) const {
    double limit = t_max;
    bool hit = false;
    traverse(origin, dir, limit, [&](std::uint32_t, double t) {
      if (t < t_max) hit = true;
      return hit;
    });
    return hit;
  }

 private:
  static constexpr std::uint32_t kLeafSize = 4;

  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb box, cbox;
    for (std::uint32_t i = begin; i < end; ++i) {
      box.expand(tri_boxes_[order_[i]]);
      cbox.expand(centroids_[order_[i]]);
    }
    nodes_[index].box = box;
    const Vec3 ext = cbox.extent();
    int axis = 0;
    if (ext.y > ext[axis]) axis = 1;
    if (ext.z > ext[axis]) axis = 2;
    if (end - begin <= kLeafSize || ext[axis] <= 0) {
      nodes_[index].start = begin;
      nodes_[index].count = end - begin;
      return index;
    }
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double ca = centroids_[a][axis], cb = centroids_[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    build(begin, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[index].right = right;
    return index;
  }

  static bool slab(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, double t_max,
                   double& t_enter) {
    double t0 = 0, t1 = t_max;
    for (int a = 0; a < 3; ++a) {
      double tn = (box.min[a] - origin[a]) * inv_dir[a];
      double tf = (box.max[a] - origin[a]) * inv_dir[a];
      if (tn > tf) std::swap(tn, tf);
      if (std::isnan(tn)) tn = -std::numeric_limits<double>::infinity();
      if (std::isnan(tf)) tf = std::numeric_limits<double>::infinity();
      t0 = std::max(t0, tn);
      t1 = std::min(t1, tf * (1 + 4e-16));
      if (t0 > t1) return false;
    }
    t_enter = t0;
    return true;
  }

  // `visit(tri, t)` is called for every candidate hit with kRayTMin < t <= bound;
  // returning true terminates traversal.
  template <typename Visit>
  void traverse(const Vec3& origin, const Vec3& dir, double& bound, Visit&& visit) const {
    const Vec3 inv{1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
    std::uint32_t stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
      const Node& node = nodes_[stack[--sp]];
      double t_enter = 0;
      if (!slab(node.box, origin, inv, bound, t_enter)) continue;
      if (node.leaf()) {
        for (std::uint32_t i = node.start; i < node.start + node.count; ++i) {
          const std::uint32_t tri = order_[i];
          const double t = intersect_triangle(origin, dir, mesh_.corner(tri, 0),
                                              mesh_.corner(tri, 1), mesh_.corner(tri, 2));
          if (t > kRayTMin && t <= bound && visit(tri, t)) return;
        }
        continue;
      }
      const std::uint32_t left = static_cast<std::uint32_t>(&node - nodes_.data()) + 1;
      double tl = 0, tr = 0;
      const bool hl = slab(nodes_[left].box, origin, inv, bound, tl);
      const bool hr = slab(nodes_[node.right].box, origin, inv, bound, tr);
      if (hl && hr) {
        // push the farther child first
        if (tl <= tr) {
          stack[sp++] = node.right;
          stack[sp++] = left;
        } else {
          stack[sp++] = left;
          stack[sp++] = node.right;
        }
      } else if (hl) {
        stack[sp++] = left;
      } else if (hr) {
        stack[sp++] = node.right;
      }
    }
  }

  TriMesh mesh_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<Vec3> centroids_;
  std::vector<Aabb> tri_boxes_;
};

// Deterministic randomness ----------------------------------------------------

/// mt19937_64 with a portable mapping to [0, 1), so generated scenes and
/// samples are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do x = engine_(); while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
};

// Procedural rooms --------------------------------------------------------------

struct FurnitureBox {
  Vec3 min, max;
};

struct Doorway {
  double start_m = 0;
  double width_m = 0.9;
  double height_m = 2.0;
};

struct Partition {
  char axis = 'x';   // 'x': wall plane x = offset_m; 'z': wall plane z = offset_m
  double offset_m = 0;
  std::optional<Doorway> doorway;
  double thickness_m = 0.1;
};

/// Room footprint spans x in [0, width], z in [0, depth], floor at y = 0.
struct RoomSpec {
  double width_m = 4;
  double depth_m = 4;
  double height_m = 2.5;
  std::vector<FurnitureBox> furniture;
  std::vector<Partition> partitions;
  int random_furniture = 0;   // extra seeded boxes standing on the floor
  double jitter_m = 0;        // normal-direction noise on tessellated shell vertices
};

inline Vec3 vec3_from_json(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("`" + key + "` must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline RoomSpec room_spec_from_json(const nlohmann::json& j) {
  RoomSpec spec;
  auto number = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw ConfigError(std::string("`") + key + "` must be a number");
    out = j[key].get<double>();
  };
  number("width_m", spec.width_m);
  number("depth_m", spec.depth_m);
  number("height_m", spec.height_m);
  number("jitter_m", spec.jitter_m);
  if (j.contains("random_furniture")) spec.random_furniture = j["random_furniture"].get<int>();
  if (j.contains("furniture")) {
    for (const auto& f : j["furniture"])
      spec.furniture.push_back({vec3_from_json(f.at("min"), "furniture.min"),
                                vec3_from_json(f.at("max"), "furniture.max")});
  }
  if (j.contains("partitions")) {
    for (const auto& p : j["partitions"]) {
      Partition part;
      const auto axis = p.at("axis").get<std::string>();
      if (axis != "x" && axis != "z") throw ConfigError("`partitions.axis` must be \"x\" or \"z\"");
      part.axis = axis[0];
      part.offset_m = p.at("offset_m").get<double>();
      if (p.contains("thickness_m")) part.thickness_m = p["thickness_m"].get<double>();
      if (p.contains("doorway") && !p["doorway"].is_null()) {
        Doorway d;
        d.start_m = p["doorway"].at("start_m").get<double>();
        d.width_m = p["doorway"].at("width_m").get<double>();
        if (p["doorway"].contains("height_m")) d.height_m = p["doorway"]["height_m"].get<double>();
        part.doorway = d;
      }
      spec.partitions.push_back(part);
    }
  }
  return spec;
}

inline nlohmann::ordered_json room_spec_to_json(const RoomSpec& spec) {
  nlohmann::ordered_json j;
  j["width_m"] = spec.width_m;
  j["depth_m"] = spec.depth_m;
  j["height_m"] = spec.height_m;
  j["furniture"] = nlohmann::ordered_json::array();
  for (const auto& f : spec.furniture)
    j["furniture"].push_back({{"min", {f.min.x, f.min.y, f.min.z}}, {"max", {f.max.x, f.max.y, f.max.z}}});
  j["partitions"] = nlohmann::ordered_json::array();
  for (const auto& p : spec.partitions) {
    nlohmann::ordered_json pj;
    pj["axis"] = std::string(1, p.axis);
    pj["offset_m"] = p.offset_m;
    pj["thickness_m"] = p.thickness_m;
    if (p.doorway)
      pj["doorway"] = {{"start_m", p.doorway->start_m},
                       {"width_m", p.doorway->width_m},
                       {"height_m", p.doorway->height_m}};
    j["partitions"].push_back(pj);
  }
  j["random_furniture"] = spec.random_furniture;
  j["jitter_m"] = spec.jitter_m;
  return j;
}

namespace detail {

inline constexpr Rgb8 kFloorColor{150, 120, 90};
inline constexpr Rgb8 kCeilingColor{235, 235, 230};
inline constexpr Rgb8 kWallColor{200, 195, 185};
inline constexpr Rgb8 kPartitionColor{170, 180, 200};

// Axis-aligned rectangle on the plane `axis = offset`, spanning [a0, a1] on the
// first remaining axis and [b0, b1] on the second, facing `sign` along `axis`.
// Remaining axes are taken in cyclic order (axis+1, axis+2).
inline void add_rect(TriMesh& mesh, int axis, double offset, double a0, double a1, double b0,
                     double b1, int sign, Rgb8 color, int tiles_a = 1, int tiles_b = 1,
                     double jitter = 0, Rng* rng = nullptr) {
  const int ia = (axis + 1) % 3, ib = (axis + 2) % 3;
  auto point = [&](double a, double b) {
    Vec3 p;
    p[axis] = offset;
    p[ia] = a;
    p[ib] = b;
    return p;
  };
  // cross(e_ia, e_ib) = +e_axis, so (a,b) counter-clockwise faces +axis.
  const int na = std::max(1, tiles_a), nb = std::max(1, tiles_b);
  std::vector<Vec3> grid((na + 1) * (nb + 1));
  for (int j = 0; j <= nb; ++j)
    for (int i = 0; i <= na; ++i) {
      Vec3 p = point(a0 + (a1 - a0) * i / na, b0 + (b1 - b0) * j / nb);
      const bool interior = i > 0 && i < na && j > 0 && j < nb;
      if (interior && jitter > 0 && rng) p[axis] += rng->uniform(-jitter, jitter);
      grid[j * (na + 1) + i] = p;
    }
  for (int j = 0; j < nb; ++j)
    for (int i = 0; i < na; ++i) {
      const Vec3& p00 = grid[j * (na + 1) + i];
      const Vec3& p10 = grid[j * (na + 1) + i + 1];
      const Vec3& p11 = grid[(j + 1) * (na + 1) + i + 1];
      const Vec3& p01 = grid[(j + 1) * (na + 1) + i];
      if (sign > 0)
        mesh.add_quad(p00, p10, p11, p01, color);
      else
        mesh.add_quad(p00, p01, p11, p10, color);
    }
}

// Closed box with outward faces; faces flush with the room shell are skipped.
inline void add_box(TriMesh& mesh, const Vec3& lo, const Vec3& hi, const Vec3& room_max,
                    Rgb8 color) {
  constexpr double eps = 1e-9;
  for (int axis = 0; axis < 3; ++axis) {
    const int ia = (axis + 1) % 3, ib = (axis + 2) % 3;
    if (lo[axis] > eps)
      add_rect(mesh, axis, lo[axis], lo[ia], hi[ia], lo[ib], hi[ib], -1, color);
    if (hi[axis] < room_max[axis] - eps)
      add_rect(mesh, axis, hi[axis], lo[ia], hi[ia], lo[ib], hi[ib], +1, color);
  }
}

inline Rgb8 random_color(Rng& rng) {
  return {static_cast<std::uint8_t>(60 + rng.below(160)), static_cast<std::uint8_t>(60 + rng.below(160)),
          static_cast<std::uint8_t>(60 + rng.below(160))};
}

}  // namespace detail

/// Builds a closed room: floor, ceiling and four walls facing inward, interior
/// partition walls with optional doorway gaps, and furniture boxes. Without
/// jitter each shell face is split in two along its longer side (12 quads).
inline TriMesh gen_room_scene(const RoomSpec& spec, std::uint64_t rng_seed) {
  if (spec.width_m < 1 || spec.depth_m < 1 || spec.height_m < 1)
    throw ConfigError("room dimensions must be at least 1 m");
  if (spec.jitter_m < 0) throw ConfigError("`jitter_m` must be non-negative");
  if (spec.random_furniture < 0) throw ConfigError("`random_furniture` must be non-negative");
  const Vec3 room_max{spec.width_m, spec.height_m, spec.depth_m};
  const double room_volume = spec.width_m * spec.height_m * spec.depth_m;
  double furniture_volume = 0;
  for (const auto& f : spec.furniture) {
    for (int a = 0; a < 3; ++a) {
      if (!(f.min[a] < f.max[a])) throw ConfigError("furniture box has min >= max");
      if (f.min[a] < 0 || f.max[a] > room_max[a]) throw ConfigError("furniture box exceeds the room");
    }
    const Vec3 e = f.max - f.min;
    furniture_volume += e.x * e.y * e.z;
  }
  if (furniture_volume >= room_volume) throw ConfigError("furniture exceeds the room volume");

  Rng rng(rng_seed);
  TriMesh mesh;
  const double w = spec.width_m, h = spec.height_m, d = spec.depth_m;
  const double j = spec.jitter_m;
  auto tiles = [&](double len, bool split) {
    if (j > 0) return std::max(2, static_cast<int>(std::ceil(len / 0.25)));
    return split ? 2 : 1;
  };
  // Shell. For each face, remaining axes are (axis+1, axis+2) cyclic.
  // x-walls: a = y (height), b = z (depth)
  detail::add_rect(mesh, 0, 0, 0, h, 0, d, +1, detail::kWallColor, tiles(h, h > d), tiles(d, d >= h), j, &rng);
  detail::add_rect(mesh, 0, w, 0, h, 0, d, -1, detail::kWallColor, tiles(h, h > d), tiles(d, d >= h), j, &rng);
  // floor / ceiling: a = z, b = x
  detail::add_rect(mesh, 1, 0, 0, d, 0, w, +1, detail::kFloorColor, tiles(d, d > w), tiles(w, w >= d), j, &rng);
  detail::add_rect(mesh, 1, h, 0, d, 0, w, -1, detail::kCeilingColor, tiles(d, d > w), tiles(w, w >= d), j, &rng);
  // z-walls: a = x, b = y
  detail::add_rect(mesh, 2, 0, 0, w, 0, h, +1, detail::kWallColor, tiles(w, w >= h), tiles(h, h > w), j, &rng);
  detail::add_rect(mesh, 2, d, 0, w, 0, h, -1, detail::kWallColor, tiles(w, w >= h), tiles(h, h > w), j, &rng);

  for (const auto& p : spec.partitions) {
    const int axis = p.axis == 'x' ? 0 : 2;
    const int along = axis == 0 ? 2 : 0;
    const double span = room_max[along];
    const double half = 0.5 * p.thickness_m;
    if (p.offset_m - half <= 0 || p.offset_m + half >= room_max[axis])
      throw ConfigError("partition offset must lie strictly inside the room");
    auto segment = [&](double s0, double s1, double y0, double y1) {
      if (s1 - s0 <= 1e-9 || y1 - y0 <= 1e-9) return;
      Vec3 lo, hi;
      lo[axis] = p.offset_m - half;
      hi[axis] = p.offset_m + half;
      lo[along] = s0;
      hi[along] = s1;
      lo.y = y0;
      hi.y = y1;
      detail::add_box(mesh, lo, hi, room_max, detail::kPartitionColor);
    };
    if (!p.doorway) {
      segment(0, span, 0, h);
      continue;
    }
    const Doorway& door = *p.doorway;
    if (door.start_m < 0 || door.width_m <= 0 || door.start_m + door.width_m > span)
      throw ConfigError("doorway must lie within its partition");
    const double door_top = std::min(door.height_m, h);
    segment(0, door.start_m, 0, h);
    segment(door.start_m + door.width_m, span, 0, h);
    segment(door.start_m, door.start_m + door.width_m, door_top, h);
  }

  for (const auto& f : spec.furniture) detail::add_box(mesh, f.min, f.max, room_max, detail::kWallColor);

  for (int i = 0; i < spec.random_furniture; ++i) {
    const double sx = rng.uniform(0.3, std::min(1.2, 0.4 * w));
    const double sz = rng.uniform(0.3, std::min(1.2, 0.4 * d));
    const double sy = rng.uniform(0.4, std::min(1.2, 0.6 * h));
    const double x0 = rng.uniform(0.1, w - 0.1 - sx);
    const double z0 = rng.uniform(0.1, d - 0.1 - sz);
    const Rgb8 color = detail::random_color(rng);
    detail::add_box(mesh, {x0, 0, z0}, {x0 + sx, sy, z0 + sz}, room_max, color);
  }
  return mesh;
}

// Surface discretisation ------------------------------------------------------

/// Coverage elements: area-weighted samples of the observable surface.
struct SurfaceElements {
  std::vector<Vec3> points;
  std::vector<double> weights;         // m^2
  std::vector<Vec3> normals;           // observable-side unit normals
  std::vector<std::uint32_t> triangle; // source triangle per element

  std::size_t size() const { return points.size(); }
  double total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }
};

/// Default element spacing: 0.1 m up to a 10 m scene diagonal, growing
/// linearly beyond.
inline double default_surface_spacing(double scene_diagonal) {
  return scene_diagonal <= 10.0 ? 0.1 : 0.1 * scene_diagonal / 10.0;
}

/// Stratified per-triangle sampling at an expected density of one element
/// per spacing^2, with at least one element per triangle. Each element weighs
/// area / count, so weights sum to the mesh area.
inline SurfaceElements discretize_surface(const TriMesh& mesh, double spacing,
                                          std::uint64_t seed = 0) {
  if (!(spacing > 0)) throw ConfigError("surface spacing must be positive");
  SurfaceElements out;
  Rng rng(seed);
  const double cell = spacing * spacing;
  std::vector<int> strata;
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    const double area = mesh.face_area(t);
    const auto n = std::max<long long>(1, std::llround(area / cell));
    const Vec3 a = mesh.corner(t, 0), b = mesh.corner(t, 1), c = mesh.corner(t, 2);
    const Vec3 normal = mesh.face_normal(t);
    const int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    strata.resize(static_cast<std::size_t>(k) * k);
    std::iota(strata.begin(), strata.end(), 0);
    for (std::size_t i = strata.size(); i > 1; --i) std::swap(strata[i - 1], strata[rng.below(i)]);
    for (long long s = 0; s < n; ++s) {
      const int cell_index = strata[s];
      const double r1 = (cell_index % k + rng.uniform()) / k;
      const double r2 = (cell_index / k + rng.uniform()) / k;
      const double sq = std::sqrt(r1);
      out.points.push_back(a * (1 - sq) + b * (sq * (1 - r2)) + c * (sq * r2));
      out.weights.push_back(area / static_cast<double>(n));
      out.normals.push_back(normal);
      out.triangle.push_back(static_cast<std::uint32_t>(t));
    }
  }
  return out;
}

}  // namespace cover

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

// ERP range-depth / RGB rendering, depth unprojection and z-buffer splat
// warping of point clouds into ERP frames.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "cover/error.hpp"
#include "cover/geom.hpp"
#include "cover/parallel.hpp"
#include "cover/scene.hpp"

namespace cover {

/// Row-major W x H grid.
template <typename T>
struct ErpImage {
  int width = 0;
  int height = 0;
  std::vector<T> pixels;

  ErpImage() = default;
  ErpImage(int w, int h, T fill = T{})
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int u, int v) { return pixels[static_cast<std::size_t>(v) * width + u]; }
  const T& at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }
  std::size_t size() const { return pixels.size(); }
};

/// Range depth in metres; 0 marks no hit.
using DepthImage = ErpImage<float>;
using RgbImage = ErpImage<Rgb8>;

struct PointCloud {
  std::vector<Vec3> points;
  std::size_t size() const { return points.size(); }
  void append(const PointCloud& other) {
    points.insert(points.end(), other.points.begin(), other.points.end());
  }
};

struct RenderResult {
  DepthImage depth;
  RgbImage rgb;
};

inline void check_resolution(int width, int height) {
  if (width < 2 || height < 1) throw ConfigError("ERP resolution must be at least 2x1");
}

/// Range depth only; used for low-resolution probes.
inline DepthImage render_depth(const Bvh& bvh, const PoseWC& pose, int width, int height) {
  check_resolution(width, height);
  DepthImage depth(width, height, 0.0f);
  const CameraTransform cam(pose);
  parallel_for(static_cast<std::size_t>(height), [&](std::size_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < width; ++u) {
      const Vec3 d = cam.dir_to_world(pixel_to_dir(u + 0.5, v + 0.5, width, height));
      if (auto hit = bvh.raycast(cam.centre, d)) depth.at(u, v) = static_cast<float>(hit->t);
    }
  });
  return depth;
}

/// Range depth (Euclidean distance along each pixel-centre ray, not planar z)
/// plus face colour shaded by |n . d|.
inline RenderResult render_erp(const Bvh& bvh, const PoseWC& pose, int width, int height) {
  check_resolution(width, height);
  RenderResult out{DepthImage(width, height, 0.0f), RgbImage(width, height, Rgb8{0, 0, 0})};
  const CameraTransform cam(pose);
  const TriMesh& mesh = bvh.mesh();
  parallel_for(static_cast<std::size_t>(height), [&](std::size_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < width; ++u) {
      const Vec3 d = cam.dir_to_world(pixel_to_dir(u + 0.5, v + 0.5, width, height));
      auto hit = bvh.raycast(cam.centre, d);
      if (!hit) continue;
      out.depth.at(u, v) = static_cast<float>(hit->t);
      const double shade = std::abs(dot(mesh.face_normal(hit->triangle_id), d));
      const Rgb8 c = mesh.face_colors[hit->triangle_id];
      auto mod = [shade](std::uint8_t x) {
        return static_cast<std::uint8_t>(std::lround(x * shade));
      };
      out.rgb.at(u, v) = {mod(c.r), mod(c.g), mod(c.b)};
    }
  });
  return out;
}

/// World points of every valid pixel on a stride x stride grid.
inline PointCloud unproject(const DepthImage& depth, const PoseWC& pose, int stride = 1) {
  if (stride < 1) throw ConfigError("unprojection stride must be >= 1");
  PointCloud cloud;
  const CameraTransform cam(pose);
  for (int v = 0; v < depth.height; v += stride)
    for (int u = 0; u < depth.width; u += stride) {
      const float r = depth.at(u, v);
      if (!(r > 0)) continue;
      const Vec3 d = pixel_to_dir(u + 0.5, v + 0.5, depth.width, depth.height);
      cloud.points.push_back(cam.to_world(d * static_cast<double>(r)));
    }
  return cloud;
}

/// atan2 for pixel binning: odd minimax polynomial on [0, 1] plus octant
/// reduction, written without branches so loops over it vectorise. Absolute
/// error stays below 1e-5 rad, far under a pixel at any supported resolution.
/// Returns 0 for (0, 0).
inline float binning_atan2(float y, float x) {
  const float ax = std::abs(x), ay = std::abs(y);
  const float hi = std::max(ax, ay), lo = std::min(ax, ay);
  const float a = lo / std::max(hi, std::numeric_limits<float>::min());
  const float s = a * a;
  float r = ((((-0.0117212f * s + 0.05265332f) * s - 0.11643287f) * s + 0.19354346f) * s - 0.33262347f) * s *
                a + 0.99997726f * a;
  r = ay > ax ? static_cast<float>(kPi / 2) - r : r;
  r = x < 0 ? static_cast<float>(kPi) - r : r;
  return std::copysign(r, y);
}

/// History explained by a warped cloud: mask H_v and predicted depth D_hist.
struct WarpResult {
  std::vector<std::uint8_t> mask;
  DepthImage depth;

  std::size_t masked_count() const {
    std::size_t n = 0;
    for (auto m : mask) n += m;
    return n;
  }
};

/// Partial z-buffer of a warp: nearest range of the points landing directly
/// in each pixel. A min-reduction, so points can be folded in any order and
/// in any number of batches with the same result. The splat neighbourhood is
/// not stored; see warp_depth_at.
struct WarpBuffers {
  static constexpr float kEmpty = std::numeric_limits<float>::infinity();

  int width = 0;
  int height = 0;
  int splat_radius = 1;
  std::vector<float> direct;

  void reset(int w, int h, int radius) {
    check_resolution(w, h);
    if (radius < 0) throw ConfigError("splat radius must be >= 0");
    width = w;
    height = h;
    splat_radius = radius;
    direct.assign(static_cast<std::size_t>(w) * h, kEmpty);
  }
};

namespace detail {

inline constexpr std::size_t kWarpChunk = 1024;

// Pixel index (row-major, or -1 for a point at the centre) and range of at
// most kWarpChunk points seen from `cam`. Offsets are taken in double, the
// rest in float: ranges are stored as float and pixel binning needs far less
// than float precision. The float loop has no branches so it vectorises.
inline void project_points(const Vec3* pts, std::size_t n, const CameraTransform& cam, int width, int height,
                           std::int32_t* __restrict pixel, float* __restrict range) {
  alignas(32) float qx[kWarpChunk], qy[kWarpChunk], qz[kWarpChunk];
  const Vec3 c = cam.centre;
  for (std::size_t j = 0; j < n; ++j) {
    qx[j] = static_cast<float>(pts[j].x - c.x);
    qy[j] = static_cast<float>(pts[j].y - c.y);
    qz[j] = static_cast<float>(pts[j].z - c.z);
  }
  float m[9];
  for (int k = 0; k < 9; ++k) m[k] = static_cast<float>(cam.r_wc.m[k]);
  const float inv_two_pi = static_cast<float>(1.0 / kTwoPi);
  const float inv_pi = static_cast<float>(1.0 / kPi);
  const float fw = static_cast<float>(width), fh = static_cast<float>(height);
  for (std::size_t j = 0; j < n; ++j) {
    const float x = m[0] * qx[j] + m[1] * qy[j] + m[2] * qz[j];
    const float y = m[3] * qx[j] + m[4] * qy[j] + m[5] * qz[j];
    const float z = m[6] * qx[j] + m[7] * qy[j] + m[8] * qz[j];
    const float horiz2 = x * x + z * z;
    const float r = std::sqrt(horiz2 + y * y);
    const float horiz = std::sqrt(horiz2);
    const float lon_raw = binning_atan2(x, z);
    const float lon = horiz > 1e-12f * std::abs(y) ? lon_raw : 0.0f;
    const float u = (lon * inv_two_pi + 0.5f) * fw;
    const float v = (0.5f - binning_atan2(-y, horiz) * inv_pi) * fh;
    // floor without a libm call; u and v are finite and small here
    int pu = static_cast<int>(u);
    int pv = static_cast<int>(v);
    pu -= u < static_cast<float>(pu);
    pv -= v < static_cast<float>(pv);
    pu = pu >= width ? pu - width : pu;
    pu = pu < 0 ? pu + width : pu;
    pv = std::min(std::max(pv, 0), height - 1);
    const int k = pv * width + pu;
    pixel[j] = r > 0 ? k : -1;
    range[j] = r;
  }
}

}  // namespace detail

/// Folds points[begin, end) into the buffers, seen from `pose`.
inline void warp_accumulate(const PointCloud& cloud, std::size_t begin, std::size_t end, const PoseWC& pose,
                            WarpBuffers& buf) {
  constexpr std::size_t kChunk = detail::kWarpChunk;
  alignas(32) std::int32_t pixel[kChunk];
  alignas(32) float range[kChunk];
  const CameraTransform cam(pose);
  float* direct = buf.direct.data();
  for (std::size_t chunk = begin; chunk < end; chunk += kChunk) {
    const std::size_t n = std::min(kChunk, end - chunk);
    detail::project_points(cloud.points.data() + chunk, n, cam, buf.width, buf.height, pixel, range);
    for (std::size_t j = 0; j < n; ++j) {
      const std::int32_t k = pixel[j];
      if (k >= 0) direct[k] = std::min(direct[k], range[j]);
    }
  }
}

/// Warped range at pixel k, or WarpBuffers::kEmpty. A pixel hit directly by
/// some point keeps the nearest direct range. Otherwise it takes the nearest
/// point splatted over it: every point marks the (2r+1)^2 pixels around its
/// own, wrapping across the longitude seam, which is the same as the minimum
/// of `direct` over the neighbourhood of k.
inline float warp_depth_at(const WarpBuffers& buf, std::size_t k) {
  const float d = buf.direct[k];
  const int radius = buf.splat_radius;
  if (d != WarpBuffers::kEmpty || radius == 0) return d;
  const int w = buf.width;
  const int pu = static_cast<int>(k % static_cast<std::size_t>(w));
  const int pv = static_cast<int>(k / static_cast<std::size_t>(w));
  const int r0 = std::max(0, pv - radius), r1 = std::min(buf.height - 1, pv + radius);
  float best = WarpBuffers::kEmpty;
  for (int row = r0; row <= r1; ++row) {
    const float* line = buf.direct.data() + static_cast<std::size_t>(row) * w;
    if (pu >= radius && pu + radius < w) {
      for (int col = pu - radius; col <= pu + radius; ++col) best = std::min(best, line[col]);
    } else {
      for (int du = -radius; du <= radius; ++du) {
        int col = (pu + du) % w;
        if (col < 0) col += w;
        best = std::min(best, line[col]);
      }
    }
  }
  return best;
}

inline void warp_resolve(const WarpBuffers& buf, WarpResult& out) {
  const std::size_t n = buf.direct.size();
  out.mask.assign(n, 0);
  out.depth.width = buf.width;
  out.depth.height = buf.height;
  out.depth.pixels.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const float d = warp_depth_at(buf, k);
    const bool hit = d != WarpBuffers::kEmpty;
    out.depth.pixels[k] = hit ? d : 0.0f;
    out.mask[k] = hit;
  }
}

/// Z-buffer splat of world points into an ERP frame. Each point marks a
/// (2r+1)^2 neighbourhood around its pixel, wrapping across the longitude
/// seam; see warp_depth_at for how direct hits and splats combine. The
/// result does not depend on point order.
inline void warp_cloud_into(const PointCloud& cloud, const PoseWC& pose, int width, int height,
                            int splat_radius, WarpResult& out) {
  thread_local WarpBuffers buf;
  buf.reset(width, height, splat_radius);
  warp_accumulate(cloud, 0, cloud.size(), pose, buf);
  warp_resolve(buf, out);
}

inline WarpResult warp_cloud(const PointCloud& cloud, const PoseWC& pose, int width, int height,
                             int splat_radius = 1) {
  WarpResult out;
  warp_cloud_into(cloud, pose, width, height, splat_radius, out);
  return out;
}

}  // namespace cover

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

// Vectors, quaternions, poses, boxes and the ERP pixel <-> direction mapping.
//
// Conventions (shared by every module and declared in meta.json):
//   world  : right-handed, +Y up
//   camera : OpenCV, +x right, +y down, +z forward
//   pose   : scalar-first world-to-camera quaternion q_wc = [w, x, y, z] and
//            camera centre C_w, so that p_c = R_wc (p_w - C_w)
//   ERP    : lon = (u / W - 0.5) 2 pi, lat = (0.5 - v / H) pi

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace cover {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr const char* kWorldConvention = "right-handed, +Y up";
inline constexpr const char* kCameraConvention = "OpenCV: +x right, +y down, +z forward";
inline constexpr const char* kPoseConvention =
    "scalar-first world-to-camera quaternion q_wc=[w,x,y,z]; p_c = R_wc (p_w - C_w)";
inline constexpr const char* kErpConvention =
    "lon=(u/W-0.5)*2pi, lat=(0.5-v/H)*pi, pixel centres at index+0.5";

struct Vec3 {
  double x = 0, y = 0, z = 0;

  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
constexpr Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(const Vec3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
constexpr Vec3 operator*(double s, const Vec3& a) { return a * s; }
constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }
constexpr Vec3& operator+=(Vec3& a, const Vec3& b) { return a = a + b; }
constexpr Vec3& operator-=(Vec3& a, const Vec3& b) { return a = a - b; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return length(a - b); }
inline Vec3 normalize(const Vec3& a) {
  const double l = length(a);
  return l > 0 ? a / l : a;
}
constexpr Vec3 min(const Vec3& a, const Vec3& b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
constexpr Vec3 max(const Vec3& a, const Vec3& b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  constexpr double operator()(int r, int c) const { return m[r * 3 + c]; }
  constexpr double& operator()(int r, int c) { return m[r * 3 + c]; }

  constexpr Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  constexpr Mat3 transposed() const {
    return Mat3{{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
  }
};

constexpr Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
      r(i, j) = s;
    }
  return r;
}

/// Scalar-first unit quaternion representing the world-to-camera rotation R_wc.
struct QuatWC {
  double w = 1, x = 0, y = 0, z = 0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  QuatWC normalized() const {
    const double n = norm();
    return {w / n, x / n, y / n, z / n};
  }

  Mat3 to_matrix() const {
    const QuatWC q = normalized();
    const double ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
    const double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
    const double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
    return Mat3{{ww + xx - yy - zz, 2 * (xy - wz), 2 * (xz + wy),  //
                 2 * (xy + wz), ww - xx + yy - zz, 2 * (yz - wx),  //
                 2 * (xz - wy), 2 * (yz + wx), ww - xx - yy + zz}};
  }

  /// Rotation about a unit axis by `angle` radians.
  static QuatWC from_axis_angle(const Vec3& axis, double angle) {
    const Vec3 a = normalize(axis);
    const double s = std::sin(angle / 2);
    return {std::cos(angle / 2), a.x * s, a.y * s, a.z * s};
  }

  friend bool operator==(const QuatWC&, const QuatWC&) = default;
};

inline QuatWC operator*(const QuatWC& a, const QuatWC& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

/// Upright panorama orientation: camera +y (down) is world -Y and camera +z
/// (forward) is world -Z. A 180 degree turn about world X.
inline constexpr QuatWC kUprightRotation{0.0, 1.0, 0.0, 0.0};

struct PoseWC {
  QuatWC rotation = kUprightRotation;
  Vec3 position;  // camera centre C_w, world metres
};

inline Vec3 world_to_camera(const PoseWC& pose, const Vec3& p_w) {
  return pose.rotation.to_matrix() * (p_w - pose.position);
}

inline Vec3 camera_to_world(const PoseWC& pose, const Vec3& p_c) {
  return pose.rotation.to_matrix().transposed() * p_c + pose.position;
}

/// Precomputed world-to-camera transform for inner loops.
struct CameraTransform {
  Mat3 r_wc;
  Vec3 centre;

  explicit CameraTransform(const PoseWC& pose)
      : r_wc(pose.rotation.to_matrix()), centre(pose.position) {}

  Vec3 to_camera(const Vec3& p_w) const { return r_wc * (p_w - centre); }
  Vec3 to_world(const Vec3& p_c) const { return r_wc.transposed() * p_c + centre; }
  Vec3 dir_to_world(const Vec3& d_c) const { return r_wc.transposed() * d_c; }
};

struct Aabb {
  Vec3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Vec3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};

  void expand(const Vec3& p) {
    min = cover::min(min, p);
    max = cover::max(max, p);
  }
  void expand(const Aabb& b) {
    min = cover::min(min, b.min);
    max = cover::max(max, b.max);
  }
  bool empty() const { return min.x > max.x || min.y > max.y || min.z > max.z; }
  Vec3 centre() const { return (min + max) * 0.5; }
  Vec3 extent() const { return max - min; }
  bool contains(const Aabb& b, double eps = 0) const {
    return b.min.x >= min.x - eps && b.min.y >= min.y - eps && b.min.z >= min.z - eps &&
           b.max.x <= max.x + eps && b.max.y <= max.y + eps && b.max.z <= max.z + eps;
  }
};

inline double aabb_diagonal(const Aabb& box) { return length(box.max - box.min); }

// ERP mapping ---------------------------------------------------------------

struct PixelCoord {
  double u = 0, v = 0;
};

inline double pixel_longitude(double u, int width) { return (u / width - 0.5) * kTwoPi; }
inline double pixel_latitude(double v, int height) { return (0.5 - v / height) * kPi; }

/// Unit camera-frame direction of continuous ERP coordinates (u, v).
/// Callers sampling pixels pass centres (index + 0.5).
inline Vec3 pixel_to_dir(double u, double v, int width, int height) {
  const double lon = pixel_longitude(u, width);
  const double lat = pixel_latitude(v, height);
  const double cl = std::cos(lat);
  return {cl * std::sin(lon), -std::sin(lat), cl * std::cos(lon)};
}

/// Inverse of pixel_to_dir. u is wrapped into [0, W); at the poles u = W/2.
inline PixelCoord dir_to_pixel(const Vec3& d, int width, int height) {
  const double horiz = std::sqrt(d.x * d.x + d.z * d.z);
  const double lat = std::atan2(-d.y, horiz);
  double u = 0.5 * width;
  if (horiz > 1e-12 * std::abs(d.y)) {
    const double lon = std::atan2(d.x, d.z);
    u = (lon / kTwoPi + 0.5) * width;
    if (u >= width) u -= width;
    if (u < 0) u += width;
  }
  return {u, (0.5 - lat / kPi) * height};
}

}  // namespace cover

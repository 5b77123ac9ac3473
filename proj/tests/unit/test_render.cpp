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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "cover/render.hpp"
#include "support/oracles.hpp"

namespace cover {
namespace {

TriMesh furnished_room() {
  RoomSpec spec;
  spec.width_m = 4;
  spec.depth_m = 3.5;
  spec.random_furniture = 2;
  return gen_room_scene(spec, 21);
}

TEST(Render, DepthMatchesAllTriangleRenderer) {
  const TriMesh mesh = furnished_room();
  const Bvh bvh(mesh);
  const PoseWC pose{kUprightRotation, {1.7, 1.3, 1.4}};
  const DepthImage d = render_depth(bvh, pose, 32, 16);
  const auto ref = testing::brute_render(mesh, pose, 32, 16);
  for (std::size_t k = 0; k < d.size(); ++k) EXPECT_NEAR(d.pixels[k], static_cast<double>(ref[k]), 1e-6) << k;
}

TEST(Render, RgbAndDepthAgreeOnHits) {
  const Bvh bvh(furnished_room());
  const RenderResult r = render_erp(bvh, {kUprightRotation, {2, 1.2, 1.7}}, 48, 24);
  const DepthImage d = render_depth(bvh, {kUprightRotation, {2, 1.2, 1.7}}, 48, 24);
  EXPECT_EQ(r.depth.pixels, d.pixels);
  for (std::size_t k = 0; k < d.size(); ++k)
    if (d.pixels[k] == 0) EXPECT_EQ(r.rgb.pixels[k].r + r.rgb.pixels[k].g + r.rgb.pixels[k].b, 0);
}

TEST(Render, RejectsBadResolution) {
  const Bvh bvh(furnished_room());
  EXPECT_THROW(render_depth(bvh, {}, 1, 1), ConfigError);
}

TEST(Unproject, PointsLieAtRenderedRange) {
  const Bvh bvh(furnished_room());
  const PoseWC pose{kUprightRotation, {1.5, 1.1, 1.2}};
  const DepthImage d = render_depth(bvh, pose, 64, 32);
  const PointCloud cloud = unproject(d, pose, 1);
  std::size_t valid = 0;
  for (float r : d.pixels) valid += r > 0;
  ASSERT_EQ(cloud.size(), valid);
  for (const Vec3& p : cloud.points) {
    const double r = distance(p, pose.position);
    const auto hit = bvh.raycast(pose.position, (p - pose.position) / r);
    ASSERT_TRUE(hit.has_value());
    EXPECT_NEAR(hit->t, r, 1e-5);
  }
  EXPECT_EQ(unproject(d, pose, 4).size(), 16u * 8u);
  EXPECT_THROW(unproject(d, pose, 0), ConfigError);
}

TEST(BinningAtan2, CloseToLibmEverywhere) {
  double worst = 0;
  for (int i = -400; i <= 400; ++i)
    for (int j = -400; j <= 400; ++j) {
      if (i == 0 && j == 0) continue;
      const float y = i * 0.013f, x = j * 0.011f;
      worst = std::max(worst, std::abs(binning_atan2(y, x) - std::atan2(static_cast<double>(y), x)));
    }
  EXPECT_LT(worst, 1e-5);
  EXPECT_EQ(binning_atan2(0.0f, 0.0f), 0.0f);
}

TEST(Warp, MatchesDefinitionalSplat) {
  const Bvh bvh(furnished_room());
  const PoseWC from{kUprightRotation, {1.2, 1.0, 1.0}};
  const PoseWC to{kUprightRotation, {2.3, 1.5, 2.0}};
  const PointCloud cloud = unproject(render_depth(bvh, from, 96, 48), from, 1);
  for (int radius : {0, 1, 2}) {
    const WarpResult w = warp_cloud(cloud, to, 64, 32, radius);
    const auto ref = testing::brute_splat(cloud.points, to, 64, 32, radius);
    int mismatched = 0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      EXPECT_EQ(w.mask[k] != 0, ref[k] > 0) << "radius " << radius << " pixel " << k;
      if (w.mask[k] && std::abs(w.depth.pixels[k] - ref[k]) > 1e-4) ++mismatched;
    }
    // float binning may move a point sitting on a pixel edge; allow a trace
    EXPECT_LE(mismatched, 3) << "radius " << radius;
  }
}

TEST(Warp, IndependentOfPointOrderAndBatching) {
  const Bvh bvh(furnished_room());
  const PoseWC a{kUprightRotation, {1.0, 1.2, 1.0}}, b{kUprightRotation, {3.0, 1.0, 2.5}};
  PointCloud cloud = unproject(render_depth(bvh, a, 64, 32), a, 1);
  cloud.append(unproject(render_depth(bvh, b, 64, 32), b, 1));
  const PoseWC target{kUprightRotation, {2.0, 1.4, 1.8}};
  const WarpResult once = warp_cloud(cloud, target, 48, 24);

  PointCloud shuffled = cloud;
  std::mt19937_64 rng(3);
  std::shuffle(shuffled.points.begin(), shuffled.points.end(), rng);
  const WarpResult mixed = warp_cloud(shuffled, target, 48, 24);
  EXPECT_EQ(once.mask, mixed.mask);
  EXPECT_EQ(once.depth.pixels, mixed.depth.pixels);

  WarpBuffers buf;
  buf.reset(48, 24, 1);
  const std::size_t half = cloud.size() / 3;
  warp_accumulate(cloud, half, cloud.size(), target, buf);
  warp_accumulate(cloud, 0, half, target, buf);
  WarpResult parts;
  warp_resolve(buf, parts);
  EXPECT_EQ(once.mask, parts.mask);
  EXPECT_EQ(once.depth.pixels, parts.depth.pixels);
}

TEST(Warp, SelfWarpAtProbeResolutionIsExact) {
  const Bvh bvh(furnished_room());
  const PoseWC pose{kUprightRotation, {1.9, 1.2, 1.6}};
  const DepthImage d = render_depth(bvh, pose, 128, 64);
  const WarpResult w = warp_cloud(unproject(d, pose, 1), pose, 128, 64);
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (!(d.pixels[k] > 0)) continue;
    ASSERT_TRUE(w.mask[k]);
    EXPECT_NEAR(w.depth.pixels[k], d.pixels[k], 1e-4);
  }
}

TEST(Warp, SplatWrapsAcrossSeam) {
  PointCloud cloud;
  // straight behind an upright camera: longitude +-pi, column 0 or W-1
  cloud.points.push_back({0.0, 0.0, 2.0 + 1e-3});
  const PoseWC pose{kUprightRotation, {0, 0, 0}};
  const WarpResult w = warp_cloud(cloud, pose, 16, 8, 1);
  int left = 0, right = 0;
  for (int v = 0; v < 8; ++v) {
    left += w.mask[static_cast<std::size_t>(v) * 16 + 0];
    right += w.mask[static_cast<std::size_t>(v) * 16 + 15];
  }
  EXPECT_GT(left, 0);
  EXPECT_GT(right, 0);
  EXPECT_EQ(w.masked_count(), 9u);
}

TEST(Warp, NegativeRadiusRejected) {
  WarpBuffers buf;
  EXPECT_THROW(buf.reset(8, 4, -1), ConfigError);
}

}  // namespace
}  // namespace cover

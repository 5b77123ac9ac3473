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

#include "cover/candidates.hpp"

namespace cover {
namespace {

Aabb box(Vec3 lo, Vec3 hi) { return Aabb{lo, hi}; }

TEST(Grid, CountFollowsSpacingMarginAndLayers) {
  GridConfig cfg;
  cfg.spacing_m = 0.5;
  cfg.margin_m = 0.2;
  cfg.height_layers_m = {0.5, 1.0};
  cfg.extra_high_layers_m = {};
  const CandidateGrid g = gen_candidates(box({0, 0, 0}, {4.4, 3, 2.4}), cfg, 3);
  // x span 4.0 -> 9 points, z span 2.0 -> 5 points
  EXPECT_EQ(g.positions.size(), 9u * 5u * 2u);
  EXPECT_DOUBLE_EQ(g.spacing_m, 0.5);
  EXPECT_DOUBLE_EQ(g.positions.front().x, 0.2);
  EXPECT_DOUBLE_EQ(g.positions.front().y, 0.5);
}

TEST(Grid, IdsRunLayerThenZThenX) {
  GridConfig cfg;
  cfg.spacing_m = 1;
  cfg.margin_m = 0;
  cfg.height_layers_m = {0.5, 1.5};
  cfg.extra_high_layers_m = {};
  const CandidateGrid g = gen_candidates(box({0, 0, 0}, {1, 3, 1}), cfg, 3);
  ASSERT_EQ(g.positions.size(), 8u);
  EXPECT_DOUBLE_EQ(g.positions[1].x, 1);
  EXPECT_DOUBLE_EQ(g.positions[2].z, 1);
  EXPECT_DOUBLE_EQ(g.positions[4].y, 1.5);
}

TEST(Grid, CapDoublesSpacing) {
  GridConfig cfg;
  cfg.cap = 50;
  cfg.height_layers_m = {1.0};
  cfg.extra_high_layers_m = {};
  const CandidateGrid g = gen_candidates(box({0, 0, 0}, {10.4, 3, 10.4}), cfg, 3);
  EXPECT_LE(g.positions.size(), 50u);
  EXPECT_DOUBLE_EQ(g.spacing_m, 2.0);
}

TEST(Grid, LayersClipBelowCeilingAndExtrasNeedHeadroom) {
  GridConfig cfg;
  const auto low = candidate_layers(cfg, 2.5);
  EXPECT_EQ(low, (std::vector<double>{0.5, 0.8, 1.2, 1.7, 2.1}));
  EXPECT_EQ(candidate_layers(cfg, 2.0), (std::vector<double>{0.5, 0.8, 1.2, 1.7}));
  for (double h : low) EXPECT_LE(h, 2.5 - cfg.top_clip_m);
  const auto tall = candidate_layers(cfg, 6.0);
  EXPECT_GT(tall.size(), cfg.height_layers_m.size());
  for (double h : tall) EXPECT_LE(h, 6.0 - cfg.top_clip_m);
}

TEST(Grid, ValidationNamesKeys) {
  GridConfig cfg;
  cfg.spacing_m = 0;
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("spacing_m"), std::string::npos);
  }
  cfg = {};
  cfg.height_layers_m = {1.0, 0.5};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RayFan, HasTwentySixSphericalUnitRaysPlusVertical) {
  const RayFan fan = RayFan::standard();
  for (const Vec3& d : fan.dirs) EXPECT_NEAR(length(d), 1, 1e-12);
  for (int i = 0; i < kHorizontalRays; ++i) EXPECT_DOUBLE_EQ(fan.dirs[i].y, 0);
  for (int i = kHorizontalRays; i < kSphericalRays; ++i) EXPECT_NEAR(std::abs(fan.dirs[i].y), std::sqrt(0.5), 1e-12);
  EXPECT_DOUBLE_EQ(fan.dirs[kUpRay].y, 1);
  EXPECT_DOUBLE_EQ(fan.dirs[kDownRay].y, -1);
}

class FilterTest : public ::testing::Test {
 protected:
  static Bvh room() {
    RoomSpec spec;
    spec.width_m = 6;
    spec.depth_m = 5;
    spec.height_m = 2.7;
    spec.furniture.push_back({{3.5, 0, 3.0}, {4.5, 0.9, 4.0}});
    return Bvh(gen_room_scene(spec, 0));
  }
  Bvh bvh_ = room();
  FilterConfig cfg_ = FilterConfig::for_scene(bvh_.bounds());
  RayFan fan_ = RayFan::standard();
};

TEST_F(FilterTest, OpenMidRoomPointIsFeasible) {
  const Candidate c = sanity_filter(bvh_, {2.0, 1.2, 2.0}, fan_, 2.7, cfg_);
  EXPECT_TRUE(c.feasible);
  for (bool b : c.layer_pass) EXPECT_TRUE(b);
}

TEST_F(FilterTest, OutsideTheRoomFailsVerticalLayer) {
  const Candidate c = sanity_filter(bvh_, {2.0, 5.0, 2.0}, fan_, 2.7, cfg_);
  EXPECT_FALSE(c.feasible);
  EXPECT_FALSE(c.layer_pass[0]);
  EXPECT_TRUE(std::isinf(c.diag.up_m));
}

TEST_F(FilterTest, InsideFurnitureIsRejected) {
  const Candidate c = sanity_filter(bvh_, {4.0, 0.5, 3.5}, fan_, 2.7, cfg_);
  EXPECT_FALSE(c.feasible);
}

TEST_F(FilterTest, HuggingAWallFailsWallClearance) {
  const Candidate c = sanity_filter(bvh_, {0.1, 1.2, 2.5}, fan_, 2.7, cfg_);
  EXPECT_FALSE(c.layer_pass[4]);
  EXPECT_LT(c.diag.horizontal_min_m, 0.3);
}

TEST_F(FilterTest, CornerFailsCornerLayer) {
  const Candidate c = sanity_filter(bvh_, {0.35, 1.2, 0.35}, fan_, 2.7, cfg_);
  EXPECT_FALSE(c.feasible);
  EXPECT_GT(c.diag.horizontal_near_fraction, 0);
}

TEST_F(FilterTest, AllLayersReportedEvenAfterAFailure) {
  const Candidate c = sanity_filter(bvh_, {2.0, 5.0, 2.0}, fan_, 2.7, cfg_);
  EXPECT_GE(c.diag.hit_rate, 0);  // L4 still evaluated
  EXPECT_GE(c.diag.range_fraction, 0);
}

TEST_F(FilterTest, FilterAllKeepsInputOrderAndCountsRejections) {
  const std::vector<Vec3> pts{{2.0, 1.2, 2.0}, {2.0, 5.0, 2.0}, {1.0, 1.5, 1.0}};
  const CandidateSet set = filter_all(bvh_, pts);
  ASSERT_EQ(set.candidates.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(set.candidates[i].id, i);
  EXPECT_EQ(set.feasible_ids(), (std::vector<int>{0, 2}));
  EXPECT_EQ(set.layer_rejections()[0], 1u);
}

TEST_F(FilterTest, NoSurvivorsCarriesDiagnostics) {
  const std::vector<Vec3> pts{{2.0, 5.0, 2.0}, {-3.0, 1.0, 2.0}};
  try {
    filter_all(bvh_, pts);
    FAIL();
  } catch (const NoFeasibleCandidates& e) {
    EXPECT_EQ(e.candidates().candidates.size(), 2u);
  }
}

TEST(FilterConfig, EnclosureBoundScalesWithSmallScenes) {
  const FilterConfig small = FilterConfig::for_scene(Aabb{{0, 0, 0}, {3, 2.5, 4}});
  EXPECT_DOUBLE_EQ(small.enclosure_max_m, 1.5);
  const FilterConfig big = FilterConfig::for_scene(Aabb{{0, 0, 0}, {30, 3, 40}});
  EXPECT_DOUBLE_EQ(big.enclosure_max_m, 8.0);
}

}  // namespace
}  // namespace cover

#include <algorithm>
#include <cmath>

#include "corridor/energy.hpp"
#include "corridor/segmenter.hpp"
#include "support.hpp"

using namespace corridor;
using corridor::testing::clean_scene;
using corridor::testing::obstacle_scene;

namespace {

double iou(const Mask& a, const Mask& b) {
  std::int64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a.pixels()[i] && b.pixels()[i];
    uni += a.pixels()[i] || b.pixels()[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::int64_t interior_count(const Mask& m) {
  std::int64_t n = 0;
  for (int r = 1; r + 1 < m.height(); ++r) {
    for (int c = 1; c + 1 < m.width(); ++c) n += m(r, c) && m(r - 1, c) && m(r + 1, c) && m(r, c - 1) && m(r, c + 1);
  }
  return n;
}

}  // namespace

TEST(Segmenter, CleanIsGroundTruth) {
  const SceneRecord scene = obstacle_scene(100.0);
  const Segmentation seg = segment(scene, parse_corruptions("clean"));
  EXPECT_DOUBLE_EQ(iou(seg.mask, scene.gt_corridor), 1.0);
  EXPECT_EQ(seg.logits.classes(), 19);
  // Corridor pixels carry the winning score on class 0.
  const int r = scene.camera.height - 1, c = scene.camera.width / 2;
  EXPECT_FLOAT_EQ(seg.logits(kCorridorClass, r, c), 8.0f);
  EXPECT_FLOAT_EQ(seg.logits(kRoadClass, r, c), 0.0f);
}

TEST(Segmenter, WrapContinuesPastObstacle) {
  const SceneRecord scene = obstacle_scene(25.0);
  const CorridorMask mask = segment_mask(scene, parse_corruptions("wrap"));
  const int near_row = static_cast<int>(std::ceil(scene.meta.near_edge_row - 1e-9));
  std::int64_t beyond = 0;
  for (int r = 0; r < near_row; ++r) {
    for (auto v : mask.row(r)) beyond += v;
  }
  EXPECT_GT(beyond, 0);
  // No corridor pixel on the obstacle itself.
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (scene.gt_obstacle.pixels()[i]) {
      ASSERT_EQ(mask.pixels()[i], 0);
    }
  }
}

TEST(Segmenter, HolesFollowBinomial) {
  const SceneRecord scene = clean_scene();
  const std::int64_t n = interior_count(scene.gt_corridor);
  ASSERT_GE(n, 100000);
  const double p = 0.01;
  const CorridorMask mask = segment_mask(scene, parse_corruptions("holes:0.01", 31));
  const std::int64_t flipped = count_set(scene.gt_corridor) - count_set(mask);
  const double mean = static_cast<double>(n) * p;
  const double sigma = std::sqrt(mean * (1 - p));
  EXPECT_LE(std::abs(static_cast<double>(flipped) - mean), 3 * sigma) << flipped << " of " << n;
}

TEST(Segmenter, MissNearZeroIsClean) {
  const SceneRecord scene = obstacle_scene(25.0);
  EXPECT_EQ(segment_mask(scene, parse_corruptions("miss_near:0")), scene.gt_corridor);
  const CorridorMask missed = segment_mask(scene, parse_corruptions("miss_near:60"));
  EXPECT_LT(top_row(missed), top_row(scene.gt_corridor));
  // Beyond the threshold the obstacle is seen.
  const SceneRecord far = obstacle_scene(100.0);
  EXPECT_EQ(segment_mask(far, parse_corruptions("miss_near:60")), far.gt_corridor);
}

TEST(Segmenter, DeterministicUnderSeed) {
  const SceneRecord scene = obstacle_scene(50.0);
  const auto cfg = parse_corruptions("holes:0.02,edge_jitter:2,far_noise:0.001:150", 9);
  const Segmentation a = segment(scene, cfg);
  const Segmentation b = segment(scene, cfg);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_NE(segment_mask(scene, parse_corruptions("holes:0.02", 10)), a.mask);
}

TEST(Segmenter, ObstacleEnergyStandsOut) {
  const SceneRecord scene = obstacle_scene(25.0);
  const Segmentation seg = segment(scene, parse_corruptions("miss_near:60"));
  const EnergyMap energy = energy_from_logits(seg.logits);
  std::vector<float> all(energy.pixels().begin(), energy.pixels().end());
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2), all.end());
  const float median = all[all.size() / 2];
  constexpr float kMargin = 4.0f;
  std::int64_t checked = 0;
  for (std::size_t i = 0; i < energy.size(); ++i) {
    if (!scene.gt_obstacle.pixels()[i]) continue;
    ++checked;
    ASSERT_GE(energy.pixels()[i], median + kMargin);
  }
  EXPECT_GT(checked, 0);
}

TEST(Segmenter, IncompatibleDimensions) {
  SceneRecord scene = obstacle_scene(50.0);
  scene.gt_obstacle = Mask(10, 10, 0);
  EXPECT_ERRC(segment_mask(scene, parse_corruptions("clean")), Errc::incompatible_dimensions);
  SceneRecord other = clean_scene();
  other.camera.width = 640;
  EXPECT_ERRC(segment(other, parse_corruptions("clean")), Errc::incompatible_dimensions);
}

TEST(Segmenter, CorruptionParsing) {
  const auto cfg = parse_corruptions("wrap,holes:0.005,miss_near:60,far_noise:0.001:150", 3);
  ASSERT_EQ(cfg.modes.size(), 4u);
  EXPECT_EQ(cfg.modes[0].kind, CorruptionKind::wrap);
  EXPECT_DOUBLE_EQ(cfg.modes[1].a, 0.005);
  EXPECT_DOUBLE_EQ(cfg.modes[2].a, 60.0);
  EXPECT_DOUBLE_EQ(cfg.modes[3].b, 150.0);
  EXPECT_EQ(cfg.rng_seed, 3u);
  EXPECT_TRUE(parse_corruptions("").modes.empty());
  EXPECT_TRUE(parse_corruptions("clean").modes.empty());
  EXPECT_ERRC(parse_corruptions("melt"), Errc::config_parse_error);
  EXPECT_ERRC(parse_corruptions("holes:abc"), Errc::config_parse_error);
  EXPECT_ERRC(parse_corruptions("holes:1.5"), Errc::invalid_argument);
  EXPECT_ERRC(parse_corruptions("edge_jitter:-1"), Errc::invalid_argument);
}

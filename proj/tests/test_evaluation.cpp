#include <cmath>

#include "corridor/evaluation.hpp"
#include "corridor/postprocess.hpp"
#include "corridor/segmenter.hpp"
#include "support.hpp"

using namespace corridor;
using corridor::testing::clean_scene;
using corridor::testing::obstacle_scene;

namespace {

// Ground-truth lane from `first_row` down to the bottom.
CorridorMask lane_from_row(const SceneRecord& scene, int first_row) {
  return lane_region(scene.camera, scene.meta.lane_width, first_row);
}

int row_for(const CameraModel& cam, double d) { return first_row_within(cam, d); }

std::vector<DetectionVerdict> verdicts(double bin, int correct, int total) {
  std::vector<DetectionVerdict> out;
  for (int i = 0; i < total; ++i) {
    DetectionVerdict v;
    v.distance_bin = bin;
    v.correct = i < correct;
    v.failure_mode = v.correct ? FailureMode::none : FailureMode::over_segmentation;
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST(Judge, EdgeAt101MetresIsCorrect) {
  const SceneRecord scene = obstacle_scene(100.0);
  const CorridorMask pred = lane_from_row(scene, row_for(scene.camera, 101.0));
  const DetectionVerdict v = judge_detection(pred, scene, scene.camera, 0.10, "s");
  EXPECT_TRUE(v.correct);
  EXPECT_EQ(v.failure_mode, FailureMode::none);
  ASSERT_TRUE(v.estimated_edge_distance);
  EXPECT_NEAR(*v.estimated_edge_distance, 101.0, 1.0);
  EXPECT_NEAR(v.error, *v.estimated_edge_distance - 100.0, 1e-12);
  EXPECT_EQ(v.scene_id, "s");
}

TEST(Judge, WrapIsOverSegmentation) {
  const SceneRecord scene = obstacle_scene(25.0);
  const CorridorMask wrap = segment_mask(scene, parse_corruptions("wrap"));
  const DetectionVerdict v = judge_detection(wrap, scene, scene.camera, 0.10);
  EXPECT_FALSE(v.correct);
  EXPECT_EQ(v.failure_mode, FailureMode::over_segmentation);
}

TEST(Judge, EdgeAt40MetresIsUnderSegmentation) {
  const SceneRecord scene = obstacle_scene(100.0);
  const DetectionVerdict v =
      judge_detection(lane_from_row(scene, row_for(scene.camera, 40.0)), scene, scene.camera, 0.10);
  EXPECT_FALSE(v.correct);
  EXPECT_EQ(v.failure_mode, FailureMode::under_segmentation);
}

TEST(Judge, PixelOutsideLaneColumnsIsIgnored) {
  const SceneRecord scene = obstacle_scene(100.0);
  CorridorMask pred = scene.gt_corridor;
  pred(560, 10) = 1;  // far away but off-lane
  EXPECT_TRUE(judge_detection(pred, scene, scene.camera, 0.10).correct);
  pred(300, 960) = 1;  // above the horizon
  EXPECT_EQ(judge_detection(pred, scene, scene.camera, 0.10).failure_mode, FailureMode::over_segmentation);
}

TEST(Judge, EmptyPredictionHasNoEdge) {
  const SceneRecord scene = obstacle_scene(50.0);
  const DetectionVerdict v = judge_detection(Mask(1920, 1080, 0), scene, scene.camera, 0.10);
  EXPECT_EQ(v.failure_mode, FailureMode::no_edge);
  EXPECT_FALSE(v.estimated_edge_distance);
}

TEST(Judge, Errors) {
  const SceneRecord free = clean_scene();
  EXPECT_ERRC(judge_detection(free.gt_corridor, free, free.camera, 0.1), Errc::no_obstacle_in_scene);
  const SceneRecord scene = obstacle_scene(50.0);
  EXPECT_ERRC(judge_detection(Mask(10, 10, 0), scene, scene.camera, 0.1), Errc::incompatible_dimensions);
  EXPECT_ERRC(judge_detection(scene.gt_corridor, scene, scene.camera, 1.0), Errc::invalid_argument);
}

TEST(Judge, VerdictTrichotomy) {
  const SceneRecord scene = obstacle_scene(50.0);
  corridor::Rng rng(4);
  for (int i = 0; i < 60; ++i) {
    const double d = rng.uniform(10.0, 400.0);
    CorridorMask pred = lane_from_row(scene, row_for(scene.camera, d));
    if (i % 3 == 0) pred = segment_mask(scene, parse_corruptions("wrap,holes:0.05", static_cast<std::uint64_t>(i)));
    const DetectionVerdict v = judge_detection(pred, scene, scene.camera, 0.10);
    const int modes = (v.failure_mode == FailureMode::none) + (v.failure_mode == FailureMode::over_segmentation) +
                      (v.failure_mode == FailureMode::under_segmentation) + (v.failure_mode == FailureMode::no_edge);
    EXPECT_EQ(modes, 1);
    EXPECT_EQ(v.correct, v.failure_mode == FailureMode::none);
  }
}

TEST(Rates, TruncatedStrings) {
  EXPECT_EQ(format_rate(80, 84), "80 (95.2 %)");
  EXPECT_EQ(format_rate(76, 84), "76 (90.4 %)");
  EXPECT_EQ(format_rate(57, 84), "57 (67.8 %)");
  EXPECT_EQ(format_rate(0, 84), "0 (0.0 %)");
  EXPECT_EQ(format_rate(84, 84), "84 (100.0 %)");
  // 11/84 = 13.095 % truncates to 13.0, not 13.1.
  EXPECT_EQ(format_rate(11, 84), "11 (13.0 %)");
  EXPECT_EQ(format_rate(61, 84), "61 (72.6 %)");
  EXPECT_ERRC(format_rate(0, 0), Errc::empty_bin);
}

TEST(Rates, DetectionRateCounts) {
  auto v = verdicts(25.0, 80, 84);
  const auto more = verdicts(50.0, 3, 10);
  v.insert(v.end(), more.begin(), more.end());
  const auto cells = detection_rate("m", v);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].text(), "80 (95.2 %)");
  EXPECT_EQ(cells[1].correct, 3);
  EXPECT_EQ(cells[1].total, 10);
  const std::vector<double> bins{25.0, 100.0};
  EXPECT_ERRC(detection_rate("m", v, bins), Errc::empty_bin);
}

TEST(Rates, AddingCorrectVerdictNeverLowersRate) {
  for (int total = 1; total <= 120; ++total) {
    for (int correct = 0; correct <= total; ++correct) {
      EXPECT_GE(truncated_percent_tenths(correct + 1, total + 1), truncated_percent_tenths(correct, total));
    }
  }
}

TEST(FalsePositives, CleanSequenceHasNone) {
  std::vector<CorridorMask> frames;
  for (std::uint64_t s = 0; s < 200; s += 20) {
    const SceneRecord scene = clean_scene(s);
    frames.push_back(postprocess(scene.gt_corridor, {}, scene.camera).corridor);
  }
  EXPECT_EQ(false_positive_eval(frames, 150.0, default_camera()), 0);
}

TEST(FalsePositives, EmptyMasksAreAllFalseCuts) {
  const CameraModel cam = default_camera();
  const std::vector<CorridorMask> frames(200, Mask(cam.width, cam.height, 0));
  EXPECT_EQ(false_positive_eval(frames, 150.0, cam), 200);
}

TEST(FalsePositives, OneInjectedDrop) {
  const SceneRecord scene = clean_scene();
  std::vector<CorridorMask> frames(20, scene.gt_corridor);
  // Narrow the corridor to a sliver from 60 m on: post-processing cuts there.
  CorridorMask spurious = scene.gt_corridor;
  const int from = first_row_within(scene.camera, 60.0);
  for (int r = 0; r < from; ++r) {
    for (int c = 0; c < spurious.width(); ++c) {
      if (c < 955 || c > 965) spurious(r, c) = 0;
    }
  }
  frames[7] = spurious;
  for (auto& f : frames) f = postprocess(f, {}, scene.camera).corridor;
  EXPECT_EQ(false_positive_eval(frames, 150.0, scene.camera), 1);
  EXPECT_TRUE(is_false_cut(frames[7], 150.0, scene.camera));
}

TEST(Report, FourMethodsFiveBins) {
  EvalReport rep;
  for (const char* m : {"a", "b", "c", "d"}) {
    for (double bin : {25.0, 50.0, 100.0, 200.0, 300.0}) rep.cells.push_back({m, bin, 41, 84});
  }
  rep.fp_runs = {{0, 200, 0}, {1, 200, 2}};
  const ReportArtifacts art = render_report(rep);
  const auto rows = parse_rates_csv(art.rates_csv);
  EXPECT_EQ(rows.size(), 20u);
  for (const RateCell& c : rows) EXPECT_EQ(c.text(), format_rate(c.correct, c.total));
  EXPECT_NE(art.markdown.find("| a | 41 (48.8 %) |"), std::string::npos) << art.markdown;
  EXPECT_NE(art.markdown.find("2 of 400 frames over 2 runs"), std::string::npos);
  EXPECT_EQ(parse_fp_csv(art.fp_csv), rep.fp_runs);
}

TEST(Report, EmptyReportIsHeaderOnly) {
  const ReportArtifacts art = render_report(EvalReport{});
  EXPECT_EQ(art.rates_csv, "method,bin_m,correct,total,pct_truncated\n");
  EXPECT_EQ(art.fp_csv, "run_id,frames,fp_count\n");
  EXPECT_TRUE(parse_rates_csv(art.rates_csv).empty());
}

TEST(Report, TamperedPercentageIsRejected) {
  const std::string csv = "method,bin_m,correct,total,pct_truncated\nx,50,61,84,72.0\n";
  EXPECT_ERRC(parse_rates_csv(csv), Errc::format_mismatch);
  EXPECT_ERRC(parse_rates_csv("nonsense\n"), Errc::format_mismatch);
}

#include "roadcal/pipeline.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <memory>

using namespace roadcal;
using roadcal::testing::small_dataset;

namespace {

Config quick_config() {
  Config c = parse_config("optimizer.max_iter=15 optimizer.restart=false");
  return c;
}

CalibrationProblem& problem() {
  static CalibrationProblem p(small_dataset(), quick_config(), CameraSide::Left);
  return p;
}

}  // namespace

TEST(Pipeline, CameraSideParsing) {
  EXPECT_EQ(parse_camera_side("left"), CameraSide::Left);
  EXPECT_EQ(parse_camera_side("right"), CameraSide::Right);
  EXPECT_THROW(parse_camera_side("centre"), CalibrationError);
}

TEST(Pipeline, EveryFrameFindsTheRoad) {
  const auto& analyses = problem().analyses();
  ASSERT_EQ(analyses.size(), small_dataset().frames.size());
  for (const FrameAnalysis& a : analyses) {
    EXPECT_TRUE(a.road_found) << a.frame_id << ": " << a.failure;
    EXPECT_NEAR(a.horizon, 88.5, 3.0);
    EXPECT_GE(a.utility.u_i, 0.0);
  }
}

TEST(Pipeline, SelectionIsOrderedByUtility) {
  const auto ids = problem().select(3);
  ASSERT_EQ(ids.size(), 3u);
  for (std::size_t i = 1; i < ids.size(); ++i)
    EXPECT_GE(problem().analysis(ids[i - 1]).utility.u_i, problem().analysis(ids[i]).utility.u_i);
}

TEST(Pipeline, FramesWithoutRoadAreNotSelected) {
  std::vector<FrameAnalysis> none(3);
  EXPECT_THROW(select_frames(none, 2), CalibrationError);
  std::vector<FrameAnalysis> one(3);
  one[1].road_found = true;
  one[1].frame_id = 1;
  EXPECT_EQ(select_frames(one, 2), (std::vector<int>{1}));
}

TEST(Pipeline, AnchorIsTheShippedNominal) {
  const Pose6 a = problem().anchor({});
  for (int i = 0; i < 6; ++i) EXPECT_EQ(a[i], (*small_dataset().nominal)[i]);
}

TEST(Pipeline, PreparedPointsAreLabelledAndInFront) {
  const auto ids = problem().select(1);
  const auto frames = problem().prepare(ids, problem().anchor({}));
  ASSERT_EQ(frames.size(), 1u);
  const FrameInputs& f = frames[0];
  EXPECT_EQ(f.frame_id, ids[0]);
  EXPECT_GT(f.points.xyz.size(), 10000u);
  EXPECT_EQ(f.points.label.size(), f.points.xyz.size());
  EXPECT_TRUE(f.regions);
  EXPECT_LT(f.row_begin, f.row_end);
}

TEST(Pipeline, TruthCostsLessThanNominal) {
  const auto frames = problem().prepare(problem().select(2), problem().anchor({}));
  const Config& cfg = problem().config();
  const CostBreakdown at_truth = total_cost(frames, *small_dataset().truth_left, cfg.weights, cfg.cost);
  const CostBreakdown at_nominal = total_cost(frames, *small_dataset().nominal, cfg.weights, cfg.cost);
  EXPECT_LT(at_truth.f_sum, at_nominal.f_sum);
  EXPECT_LT(at_truth.f_edge, at_nominal.f_edge);
}

TEST(Pipeline, SweepOffsetsAndCentreRow) {
  const auto frames = problem().prepare(problem().select(1), problem().anchor({}));
  const Pose6 ref = *small_dataset().truth_left;
  const auto rows = sweep(frames, problem().config(), ref, 3, 3.0, 5);
  ASSERT_EQ(rows.size(), 5u);
  const double expected[] = {-3, -1.5, 0, 1.5, 3};
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(rows[static_cast<std::size_t>(i)].offset, expected[i]);
  const auto& cfg = problem().config();
  EXPECT_EQ(rows[2].cost.f_sum, total_cost(frames, ref, cfg.weights, cfg.cost).f_sum);
  const auto flat = sweep(frames, cfg, ref, 0, 0.0, 7);
  ASSERT_EQ(flat.size(), 1u);
  EXPECT_EQ(flat[0].offset, 0.0);
  EXPECT_THROW(sweep(frames, cfg, ref, 6, 1.0, 3), CalibrationError);
}

TEST(Pipeline, SweepArgminTakesFirstTie) {
  std::vector<SweepRow> rows(4);
  const double sums[] = {3, 1, 1, 2};
  for (int i = 0; i < 4; ++i) rows[static_cast<std::size_t>(i)].cost.f_sum = sums[i];
  EXPECT_EQ(sweep_argmin(rows), 1u);
}

TEST(Pipeline, OptimizeIsDeterministicAndMonotone) {
  const auto frames = problem().prepare(problem().select(1), problem().anchor({}));
  const Pose6 init = *small_dataset().nominal;
  const CalibrationResult a = optimize(frames, problem().config(), init);
  const CalibrationResult b = optimize(frames, problem().config(), init);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(a.estimate[i], b.estimate[i]);
  EXPECT_EQ(a.cost, b.cost);
  EXPECT_LE(a.cost, a.initial_cost);
  EXPECT_TRUE(is_non_increasing(a.best_history));
  EXPECT_NEAR(a.breakdown.f_sum, a.cost, 1e-9 * std::max(1.0, a.cost));
}

TEST(Pipeline, RepeatWithoutPerturbationIsIdentical) {
  RepeatOptions o;
  o.runs = 2;
  o.perturb_t = 0;
  o.perturb_r_deg = 0;
  o.counts = {1};
  o.threads = 1;
  const RepeatabilityReport r = repeatability(problem(), *small_dataset().truth_left, o);
  ASSERT_EQ(r.runs.size(), 2u);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(r.runs[0].estimate[i], r.runs[1].estimate[i]);
  EXPECT_EQ(r.summary.size(), 6u);
  EXPECT_EQ(r.at(1, 0).iqr(), 0.0);
  EXPECT_THROW(r.at(7, 0), CalibrationError);
}

TEST(Pipeline, ProjectionOverlayHasImageSize) {
  const int id = problem().select(1)[0];
  const RgbImage img = projection_overlay(problem(), id, *small_dataset().truth_left);
  EXPECT_EQ(img.width(), small_dataset().intrinsics.width);
  EXPECT_EQ(img.height(), small_dataset().intrinsics.height);
}

TEST(Pipeline, SweepCentreEqualsCalibratedCost) {
  const CalibrationResult r = calibrate(problem(), *small_dataset().nominal, 1);
  const auto frames = problem().prepare(r.frame_ids, problem().anchor({}));
  const auto rows = sweep(frames, problem().config(), r.estimate, 4, 3.0, 11);
  EXPECT_EQ(rows[5].offset, 0.0);
  EXPECT_EQ(rows[5].cost.f_sum, r.cost);
}

TEST(Pipeline, UnperturbedRepeatReproducesCalibrate) {
  const Pose6 ref = *small_dataset().nominal;
  RepeatOptions o;
  o.runs = 1;
  o.perturb_t = 0;
  o.perturb_r_deg = 0;
  o.counts = {2};
  o.threads = 1;
  const RepeatabilityReport rep = repeatability(problem(), ref, o);
  const CalibrationResult r = calibrate(problem(), ref, 2);
  ASSERT_EQ(rep.runs.size(), 1u);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(rep.runs[0].estimate[i], r.estimate[i]);
  EXPECT_EQ(rep.runs[0].cost, r.cost);
}

TEST(Pipeline, TruthIsTheGridMinimumWithoutNoise) {
  const auto frames = problem().prepare(problem().select(5), problem().anchor({}));
  const Pose6 truth = *small_dataset().truth_left;
  const Config& cfg = problem().config();
  const double at_truth = total_cost(frames, truth, cfg.weights, cfg.cost).f_sum;
  for (int p = 0; p < 6; ++p)
    for (const SweepRow& row : sweep(frames, cfg, truth, p, p < 3 ? 0.3 : 3.0, 31))
      EXPECT_LE(at_truth, row.cost.f_sum) << "param " << p << " offset " << row.offset;
}

TEST(Pipeline, CrosswalkFrameOutranksBlankRoad) {
  SceneSpec with = roadcal::testing::small_scene();
  SceneSpec blank = with;
  blank.crosswalks.clear();
  // the first crosswalk is then about 5 m ahead; at 10 m and beyond its 3 m
  // stripes shrink below the minimum segment length at this resolution
  const double t = 3.05;
  auto frame = [&](const SceneSpec& spec) {
    const SyntheticScene scene(spec);
    StereoFrame f;
    f.timestamp = t;
    auto quantize = [&](const std::vector<double>& v) {
      GrayImage g(spec.intrinsics.width, spec.intrinsics.height);
      for (std::size_t i = 0; i < v.size(); ++i) g.data()[i] = clamp_intensity(v[i]);
      return g;
    };
    f.left = quantize(scene.render_camera(t, false));
    f.right = quantize(scene.render_camera(t, true));
    return f;
  };
  const Config cfg;
  const FrameAnalysis a = analyze_frame(frame(with), with.intrinsics, CameraSide::Left, cfg);
  const FrameAnalysis b = analyze_frame(frame(blank), blank.intrinsics, CameraSide::Left, cfg);
  ASSERT_TRUE(a.road_found && b.road_found);
  EXPECT_GT(a.utility.u_i, b.utility.u_i);
  EXPECT_GT(a.segments.size(), b.segments.size());
}

TEST(Pipeline, ProjectedMarkingsOverlapRenderedMarkings) {
  // LiDAR marking pixels at the true extrinsic against the camera's marking
  // pixels, both thresholded halfway between asphalt and paint
  const int id = problem().select(1)[0];
  const auto frames = problem().prepare({id}, problem().anchor({}));
  const FrameInputs& f = frames[0];
  CostOptions opts = problem().config().cost;
  opts.render.splat_radius = 0;
  FrameEvaluator ev;
  FrameRender keep;
  ev.evaluate(f, *small_dataset().truth_left, problem().config().weights, opts, &keep);
  std::size_t both = 0, either = 0;
  for (std::size_t i = 0; i < f.gray.size(); ++i) {
    if (!f.road_mask.data()[i] || !keep.lidar.valid.data()[i]) continue;
    const bool lidar = keep.lidar.intensity.data()[i] > 120;
    const bool camera = f.gray.data()[i] > 120;
    both += lidar && camera;
    either += lidar || camera;
  }
  ASSERT_GT(either, 100u);
  EXPECT_GE(static_cast<double>(both) / static_cast<double>(either), 0.8);
}

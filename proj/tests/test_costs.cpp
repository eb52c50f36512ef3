#include "roadcal/costs.hpp"
#include "roadcal/region_growing.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <set>

using namespace roadcal;

namespace {

constexpr double kHeight = 1.6;

bool stripe(double x) { return std::fmod(x + 100.0, 1.0) < 0.3; }

// Flat striped ground 1.6 m below a level camera. The camera frame is the
// vehicle frame, so the true extrinsic is the identity.
FrameInputs striped_ground_frame(bool with_regions) {
  const CameraIntrinsics k{150, 80, 60, 0.5, 160, 120};
  GrayImage gray(160, 120, 170);
  BinaryImage mask(160, 120, 0);
  for (int v = 66; v < 120; ++v)
    for (int u = 0; u < 160; ++u) {
      const double z = k.f * kHeight / (v - k.cv);
      const double x = (u - k.cu) * z / k.f;
      gray(u, v) = stripe(x) ? 200 : 40;
      mask(u, v) = 1;
    }
  FrameInputs f = make_frame_inputs(3, 1.5, k, gray, mask, PlaneModel{0, -1, 0, kHeight}, {});
  std::vector<Eigen::Vector3d> pts;
  for (double z = 3.0; z <= 15.0; z += 0.025)
    for (double x = -5.0; x <= 5.0; x += 0.025) {
      pts.emplace_back(x, kHeight, z);
      f.points.xyz.emplace_back(static_cast<float>(x), static_cast<float>(kHeight),
                                static_cast<float>(z));
      f.points.intensity.push_back(stripe(x) ? 180 : 30);
    }
  if (with_regions) {
    auto seg = std::make_shared<RegionSegmentation>(pts, RegionGrowingOptions{});
    for (const auto& p : pts) f.points.label.push_back(seg->label_of(p));
    f.regions = seg;
  } else {
    f.points.label.assign(pts.size(), -1);
  }
  return f;
}

GrayImage pattern(int w, int h, int which) {
  GrayImage img(w, h);
  for (int i = 0; i < w * h; ++i) {
    const int x = (i * 37) % 256;
    img.data()[static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>(which == 0 ? x : (x / 2 + (i * i) % 61) % 256);
  }
  return img;
}

}  // namespace

TEST(EdgeCost, MeanOverEdgePixels) {
  BinaryImage e(4, 1, 0);
  FloatImage dt(4, 1);
  dt.data() = {1, 2, 3, 4};
  e(1, 0) = e(3, 0) = 1;
  EXPECT_DOUBLE_EQ(edge_cost(e, dt, nullptr, true, 99), 3.0);
  EXPECT_DOUBLE_EQ(edge_cost(e, dt, nullptr, false, 99), 6.0);
  BinaryImage valid(4, 1, 1);
  valid(3, 0) = 0;
  EXPECT_DOUBLE_EQ(edge_cost(e, dt, &valid, true, 99), 2.0);
}

TEST(EdgeCost, NoEdgesSaturates) {
  EXPECT_DOUBLE_EQ(edge_cost(BinaryImage(4, 4, 0), FloatImage(4, 4, 1.0f), nullptr, true, 7.5),
                   7.5);
}

TEST(EdgeCost, CoincidentEdgesCostZero) {
  BinaryImage e(30, 20, 0);
  for (int v = 0; v < 20; ++v) e(12, v) = 1;
  EXPECT_DOUBLE_EQ(edge_cost(e, distance_transform(e, 100), nullptr, true, 100), 0.0);
  BinaryImage shifted(30, 20, 0);
  for (int v = 0; v < 20; ++v) shifted(15, v) = 1;
  EXPECT_DOUBLE_EQ(edge_cost(shifted, distance_transform(e, 100), nullptr, true, 100), 3.0);
}

TEST(Nid, IdenticalImagesAreZero) {
  const GrayImage x = pattern(60, 40, 0);
  EXPECT_NEAR(nid_from_histogram(joint_histogram(x, x, nullptr, 32), 0), 0.0, 1e-12);
}

TEST(Nid, RelabellingIsInvariant) {
  const GrayImage x = pattern(60, 40, 1);
  GrayImage inv(60, 40);
  for (std::size_t i = 0; i < x.size(); ++i) inv.data()[i] = static_cast<std::uint8_t>(255 - x.data()[i]);
  EXPECT_NEAR(nid_from_histogram(joint_histogram(x, inv, nullptr, 32), 0), 0.0, 1e-12);
}

TEST(Nid, IndependentBinaryPairIsOne) {
  GrayImage x(4, 1), y(4, 1);
  x.data() = {0, 0, 255, 255};
  y.data() = {0, 255, 0, 255};
  EXPECT_NEAR(nid_from_histogram(joint_histogram(x, y, nullptr, 2), 0), 1.0, 1e-12);
}

TEST(Nid, IndependentNoiseNearOne) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> d(0, 255);
  GrayImage x(200, 200), y(200, 200);
  for (auto& p : x.data()) p = static_cast<std::uint8_t>(d(rng));
  for (auto& p : y.data()) p = static_cast<std::uint8_t>(d(rng));
  EXPECT_GT(nid_from_histogram(joint_histogram(x, y, nullptr, 32), 0), 0.9);
}

TEST(Nid, FrozenReferenceValue) {
  // computed independently with numpy from the same two patterns
  const double nid = nid_from_histogram(joint_histogram(pattern(60, 40, 0), pattern(60, 40, 1),
                                                        nullptr, 32), 0);
  EXPECT_NEAR(nid, 0.8240436093088777, 1e-12);
}

TEST(Nid, SymmetricAndBounded) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> d(0, 255);
  for (int t = 0; t < 50; ++t) {
    GrayImage x(30, 30), y(30, 30);
    for (auto& p : x.data()) p = static_cast<std::uint8_t>(d(rng));
    for (std::size_t i = 0; i < y.size(); ++i)
      y.data()[i] = static_cast<std::uint8_t>(t % 2 ? d(rng) : (x.data()[i] + d(rng) % 40) % 256);
    const double a = nid_from_histogram(joint_histogram(x, y, nullptr, 32), 0);
    const double b = nid_from_histogram(joint_histogram(y, x, nullptr, 32), 0);
    EXPECT_NEAR(a, b, 1e-12);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(Nid, TooFewCovalidSamplesIsOne) {
  const GrayImage x = pattern(60, 40, 0);
  BinaryImage mask(60, 40, 0);
  for (int u = 0; u < 10; ++u) mask(u, 0) = 1;
  EXPECT_DOUBLE_EQ(nid_from_histogram(joint_histogram(x, x, &mask, 32), 11), 1.0);
  EXPECT_NEAR(nid_from_histogram(joint_histogram(x, x, &mask, 32), 10), 0.0, 1e-12);
}

TEST(Nid, ConstantImagesAreZero) {
  const GrayImage x(10, 10, 7);
  EXPECT_DOUBLE_EQ(nid_from_histogram(joint_histogram(x, x, nullptr, 32), 0), 0.0);
}

TEST(PlaneCost, ReferenceValues) {
  const PlaneModel ground{0, -1, 0, 1.6};
  const std::vector<Eigen::Vector3d> pts{{0, 1.6, 5}, {1, 1.7, 6}, {2, 1.4, 7}};
  EXPECT_NEAR(plane_cost(pts, ground), (0 + 0.1 + 0.2) / 3.0, 1e-12);
  EXPECT_NEAR(plane_cost(pts, ground, PlaneResidual::Signed), (0 - 0.1 + 0.2) / 3.0, 1e-12);
  EXPECT_THROW(plane_cost(std::vector<Eigen::Vector3d>{}, ground), RoadNotFound);
}

TEST(PlaneCost, OnPlaneIsZero) {
  const PlaneModel m{0.6, -0.8, 0, 2.0};
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 10; ++i) pts.emplace_back(i, (0.6 * i + 2.0) / 0.8, i * 0.3);
  EXPECT_NEAR(plane_cost(pts, m), 0.0, 1e-12);
}

TEST(RegionGrowing, KnnExcludesSelfAndSorts) {
  const std::vector<Eigen::Vector3d> pts{{0, 0, 0}, {1, 0, 0}, {3, 0, 0}, {0.5, 0, 0}};
  const auto nn = k_nearest_neighbours(pts, 2);
  EXPECT_EQ(nn[0], (std::vector<int>{3, 1}));
  EXPECT_EQ(nn[2], (std::vector<int>{1, 3}));
}

TEST(RegionGrowing, GroundSeparatedFromBoxAndCurb) {
  // camera frame: y down, ground at y = 1.6, sidewalk 15 cm higher for x < -3
  IntensityCloud cloud;
  std::set<std::tuple<int, int, int>> road_keys;
  auto add = [&](double x, double y, double z) { cloud.points.push_back({x, y, z, 100}); };
  for (double z = 4; z <= 12; z += 0.05)
    for (double x = -3; x <= 3; x += 0.05) add(x, kHeight, z);
  const std::size_t ground = cloud.size();
  for (double z = 4; z <= 12; z += 0.05) {
    for (double x = -4.5; x < -3.02; x += 0.05) add(x, kHeight - 0.15, z);
    for (double y = kHeight - 0.15; y < kHeight - 0.01; y += 0.03) add(-3.0, y, z);
  }
  for (double x = 0.5; x <= 1.5; x += 0.05)
    for (double y = kHeight - 1.0; y < kHeight - 0.02; y += 0.05) add(x, y, 8.0);
  const IntensityCloud road = segment_road_points(cloud, PlaneModel{0, -1, 0, kHeight});
  EXPECT_GE(road.size(), ground * 95 / 100);
  for (const auto& p : road.points) EXPECT_NEAR(p.y, kHeight, 0.03) << p.x << " " << p.z;
}

TEST(RegionGrowing, LabelsSurviveRigidMotion) {
  std::vector<Eigen::Vector3d> pts;
  for (double z = 4; z <= 8; z += 0.05)
    for (double x = -2; x <= 2; x += 0.05) pts.emplace_back(x, kHeight, z);
  for (double x = -2; x <= 2; x += 0.05)
    for (double y = 0; y < kHeight - 0.05; y += 0.05) pts.emplace_back(x, y, 8.0);
  const RegionSegmentation seg(pts, {});
  EXPECT_GE(seg.region_count(), 2u);
  EXPECT_NE(seg.label_of({0, kHeight, 5}), seg.label_of({0, 0.5, 8.0}));
  EXPECT_EQ(seg.label_of({100, 100, 100}), -1);
}

TEST(RegionGrowing, NoSeedsThrows) {
  IntensityCloud cloud;
  for (double z = 4; z <= 8; z += 0.05)
    for (double x = -2; x <= 2; x += 0.05) cloud.points.push_back({x, 0.0, z, 1});
  EXPECT_THROW(segment_road_points(cloud, PlaneModel{0, -1, 0, kHeight}), RoadNotFound);
}

TEST(FrameEvaluator, WeightedSumOfTerms) {
  const FrameInputs f = striped_ground_frame(true);
  FrameEvaluator ev;
  const Pose6 off{0.1, 0.05, -0.2, deg2rad(0.5), deg2rad(-0.3), deg2rad(0.4)};
  const FrameCost c = ev.evaluate(f, off, CostWeights{}, CostOptions{});
  EXPECT_NEAR(c.f_sum, 2.0 * c.f_edge + 500.0 * c.f_nid + 0.1 * c.f_plane, 1e-9);
  EXPECT_TRUE(c.plane_used);
  EXPECT_GT(c.lidar_edge_pixels, 0u);
  EXPECT_GT(c.covalid_pixels, 1000u);
}

TEST(FrameEvaluator, ZeroWeightsGiveZero) {
  const FrameInputs f = striped_ground_frame(true);
  FrameEvaluator ev;
  EXPECT_EQ(ev.evaluate(f, {0.2, 0, 0, 0, 0, 0}, CostWeights{0, 0, 0}, CostOptions{}).f_sum, 0.0);
}

TEST(FrameEvaluator, SingleTermWeights) {
  const FrameInputs f = striped_ground_frame(true);
  FrameEvaluator ev;
  const Pose6 p{0.1, 0, 0, 0, 0, 0};
  const FrameCost full = ev.evaluate(f, p, CostWeights{}, CostOptions{});
  EXPECT_DOUBLE_EQ(ev.evaluate(f, p, {1, 0, 0}, {}).f_sum, full.f_edge);
  EXPECT_DOUBLE_EQ(ev.evaluate(f, p, {0, 1, 0}, {}).f_sum, full.f_nid);
  EXPECT_DOUBLE_EQ(ev.evaluate(f, p, {0, 0, 1}, {}).f_sum, full.f_plane);
}

TEST(FrameEvaluator, TruthBeatsPerturbations) {
  const FrameInputs f = striped_ground_frame(true);
  FrameEvaluator ev;
  const FrameCost at_truth = ev.evaluate(f, {}, CostWeights{}, CostOptions{});
  EXPECT_LT(at_truth.f_plane, 1e-6);
  EXPECT_LT(at_truth.f_edge, 1.0);
  for (const Pose6& p : {Pose6{0.3, 0, 0, 0, 0, 0}, Pose6{0, 0.2, 0, 0, 0, 0},
                         Pose6{0, 0, 0, deg2rad(2), 0, 0}, Pose6{0, 0, 0, 0, 0, deg2rad(3)}}) {
    const FrameCost c = ev.evaluate(f, p, CostWeights{}, CostOptions{});
    EXPECT_GT(c.f_sum, at_truth.f_sum);
  }
}

TEST(FrameEvaluator, NoRegionsSkipsPlaneTerm) {
  const FrameInputs f = striped_ground_frame(false);
  FrameEvaluator ev;
  const FrameCost c = ev.evaluate(f, {0, 0.3, 0, 0, 0, 0}, CostWeights{}, CostOptions{});
  EXPECT_FALSE(c.plane_used);
  EXPECT_EQ(c.f_plane, 0.0);
}

TEST(FrameEvaluator, EmptyViewSaturates) {
  const FrameInputs f = striped_ground_frame(true);
  FrameEvaluator ev;
  // camera turned to face away from every point
  const FrameCost c = ev.evaluate(f, {0, 0, 0, 0, kPi, 0}, CostWeights{}, CostOptions{});
  EXPECT_EQ(c.lidar_edge_pixels, 0u);
  EXPECT_DOUBLE_EQ(c.f_edge, f.k.diagonal());
  EXPECT_DOUBLE_EQ(c.f_nid, 1.0);
  EXPECT_TRUE(std::isfinite(c.f_sum));
}

TEST(CostModel, DeterministicAndMatchesTotalCost) {
  std::vector<FrameInputs> frames{striped_ground_frame(true), striped_ground_frame(false)};
  const Pose6 p{0.05, -0.02, 0.1, deg2rad(0.2), 0, deg2rad(-0.4)};
  CostModel model(frames, {}, {});
  const CostBreakdown a = model.evaluate(p);
  const CostBreakdown b = model.evaluate(p);
  const CostBreakdown c = total_cost(frames, p, {}, {});
  EXPECT_EQ(a.f_sum, b.f_sum);
  EXPECT_EQ(a.f_sum, c.f_sum);
  EXPECT_NEAR(a.f_sum, a.frames[0].f_sum + a.frames[1].f_sum, 1e-9);
  EXPECT_THROW(CostModel({}, {}, {}), CalibrationError);
  EXPECT_THROW(CostModel(frames, CostWeights{-1, 0, 0}, {}), CalibrationError);
}

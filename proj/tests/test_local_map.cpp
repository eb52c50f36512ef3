#include "roadcal/local_map.hpp"
#include "roadcal/synthetic_world.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <random>
#include <tuple>

using namespace roadcal;

namespace {

Trajectory line_trajectory(double x0, double x1, double t1) {
  return {{0.0, {x0, 0, 0, 0, 0, 0}}, {t1, {x1, 0, 0, 0, 0, 0}}};
}

LidarScan make_scan(double t, int id, std::vector<IntensityPoint> pts) {
  return {t, id, {"lidar" + std::to_string(id), std::move(pts)}};
}

std::vector<std::tuple<double, double, double, int>> as_multiset(const IntensityCloud& c) {
  std::vector<std::tuple<double, double, double, int>> v;
  for (const auto& p : c.points) v.emplace_back(p.x, p.y, p.z, p.intensity);
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(Accumulate, IdentityOdometryKeepsCloud) {
  const Trajectory traj{{0.0, {}}, {1.0, {}}};
  const LidarScan scan = make_scan(0.5, 0, {{1, 2, 3, 40}, {4, 5, 6, 200}});
  const GlobalMap m = accumulate(std::span(&scan, 1), traj, {{0, Pose6{}}});
  EXPECT_EQ(m.cloud.points, scan.cloud.points);
  EXPECT_EQ(m.timestamps, (std::vector<double>{0.5, 0.5}));
}

TEST(Accumulate, VehicleOffsetShiftsPoints) {
  const Trajectory traj{{0.0, {10, 0, 0, 0, 0, 0}}, {1.0, {10, 0, 0, 0, 0, 0}}};
  const LidarScan scan = make_scan(0.2, 0, {{1, 2, 3, 40}, {-4, 5, 6, 200}});
  const GlobalMap m = accumulate(std::span(&scan, 1), traj, {{0, Pose6{}}});
  ASSERT_EQ(m.cloud.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_DOUBLE_EQ(m.cloud.points[i].x, scan.cloud.points[i].x + 10);
    EXPECT_DOUBLE_EQ(m.cloud.points[i].y, scan.cloud.points[i].y);
  }
}

TEST(Accumulate, UsesPoseAtScanTime) {
  const Trajectory traj = line_trajectory(0, 10, 1);
  const LidarScan scan = make_scan(0.25, 3, {{0, 0, 0, 1}});
  const GlobalMap m = accumulate(std::span(&scan, 1), traj, {{3, Pose6{0, 1, 0, 0, 0, 0}}});
  EXPECT_NEAR(m.cloud.points[0].x, 2.5, 1e-12);
  EXPECT_NEAR(m.cloud.points[0].y, 1.0, 1e-12);
}

TEST(Accumulate, RejectsScansOutsideTheTrajectory) {
  const Trajectory traj = line_trajectory(0, 10, 1);
  const std::vector<LidarScan> scans{make_scan(0.5, 0, {{0, 0, 0, 1}}),
                                     make_scan(1.5, 0, {{0, 0, 0, 1}}),
                                     make_scan(0.5, 9, {{0, 0, 0, 1}})};
  AccumulateReport report;
  const GlobalMap m = accumulate(scans, traj, {{0, Pose6{}}}, &report);
  EXPECT_EQ(m.cloud.size(), 1u);
  EXPECT_EQ(report.accepted_scans, 1u);
  EXPECT_EQ(report.diagnostics.size(), 2u);
}

TEST(Accumulate, OrderIndependent) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5, 5), t(0, 2);
  const Trajectory traj{{0.0, {0, 0, 0, 0, 0, 0}}, {1.0, {3, 1, 0, 0, 0, 0.3}}, {2.0, {5, 2, 0.1, 0, 0, 0.8}}};
  std::vector<LidarScan> scans;
  for (int s = 0; s < 12; ++s) {
    std::vector<IntensityPoint> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({u(rng), u(rng), u(rng), static_cast<std::uint8_t>(i)});
    scans.push_back(make_scan(t(rng), s % 3, pts));
  }
  const LidarExtrinsics ext{{0, {0.5, 0.8, 1.9, -0.7, 0, 0}}, {1, {0.5, -0.8, 1.9, 0.7, 0, 0}}, {2, {}}};
  const auto reference = as_multiset(accumulate(scans, traj, ext).cloud);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(scans.begin(), scans.end(), rng);
    EXPECT_EQ(as_multiset(accumulate(scans, traj, ext).cloud), reference);
  }
}

TEST(Accumulate, TwoViewsOfAWallStayPlanar) {
  // one planar lidar sweeping a wall from two vehicle poses
  SceneSpec spec = without_noise(default_scene_spec());
  const SyntheticScene scene(spec);
  const Pose6 mount{0, 0, 1.0, 0, 0, kPi / 2};  // looking left
  const Trajectory traj{{0.0, {10, 0, 0, 0, 0, 0}}, {1.0, {14, 0.5, 0, 0, 0, 0.1}}};
  std::vector<LidarScan> scans;
  for (double t : {0.0, 1.0}) {
    const RigidTransform sensor = pose_to_transform(pose_at(traj, t)) * pose_to_transform(mount);
    LidarScan s{t, 0, {"lidar0", {}}};
    for (double az = -40; az <= 40; az += 2)
      for (double el = 5; el <= 40; el += 5) {
        const double a = deg2rad(az), e = deg2rad(el);
        const Eigen::Vector3d d(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
        const Hit h = scene.intersect(sensor.translation(), sensor.rotation() * d);
        if (h.surface != Surface::Wall) continue;
        const Eigen::Vector3d p = d * h.t;
        s.cloud.points.push_back({p.x(), p.y(), p.z(), 130});
      }
    scans.push_back(s);
  }
  const GlobalMap m = accumulate(scans, traj, {{0, mount}});
  ASSERT_GT(m.cloud.size(), 100u);
  const double wall_y = 0.5 * spec.road_width + spec.sidewalk_width;
  double ss = 0;
  for (const auto& p : m.cloud.points) ss += (p.y - wall_y) * (p.y - wall_y);
  EXPECT_LT(std::sqrt(ss / static_cast<double>(m.cloud.size())), 1e-6);
}

TEST(PoseAt, ExactSampleTime) {
  const Trajectory traj{{0.0, {1, 2, 3, 0.1, 0.2, 0.3}}, {1.0, {2, 3, 4, 0.2, 0.3, 0.4}}};
  EXPECT_EQ(pose_at(traj, 1.0), traj[1].pose);
  EXPECT_EQ(pose_at(traj, 0.0), traj[0].pose);
}

TEST(PoseAt, MidpointInterpolatesTranslation) {
  const Trajectory traj = line_trajectory(0, 2, 1);
  const Pose6 p = pose_at(traj, 0.5);
  EXPECT_DOUBLE_EQ(p.tx, 1.0);
  EXPECT_DOUBLE_EQ(p.ty, 0.0);
}

TEST(PoseAt, YawAcrossSeamTakesShortArc) {
  const double a = deg2rad(170), b = deg2rad(-170);
  const Trajectory traj{{0.0, {0, 0, 0, 0, 0, a}}, {1.0, {0, 0, 0, 0, 0, b}}};
  const Eigen::Quaterniond qa(Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()));
  const Eigen::Quaterniond qb(Eigen::AngleAxisd(b, Eigen::Vector3d::UnitZ()));
  for (double s : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    // rotation-matrix slerp as the independent reference
    const Eigen::Matrix3d expected = qa.slerp(s, qb).toRotationMatrix();
    const Eigen::Matrix3d got = pose_to_transform(pose_at(traj, s)).rotation();
    EXPECT_LT((expected - got).cwiseAbs().maxCoeff(), 1e-12) << "s = " << s;
  }
}

TEST(PoseAt, OutOfSpanThrows) {
  const Trajectory traj = line_trajectory(0, 2, 1);
  EXPECT_THROW(pose_at(traj, -0.1), CalibrationError);
  EXPECT_THROW(pose_at(traj, 1.1), CalibrationError);
}

TEST(Trajectory, RequiresIncreasingTimestamps) {
  EXPECT_THROW(validate_trajectory({{1.0, {}}, {1.0, {}}}), CalibrationError);
  EXPECT_THROW(validate_trajectory({}), CalibrationError);
}

TEST(MapWindows, SplitsLongDrives) {
  Trajectory traj;
  for (int i = 0; i <= 200; ++i) traj.push_back({i * 1.0, {i * 1.0, 0, 0, 0, 0, 0}});
  const auto w = map_windows(traj, 80.0);
  ASSERT_EQ(w.size(), 3u);
  for (const auto& [b, e] : w) EXPECT_LE(e - b, 80.0 + 1e-9);
  EXPECT_EQ(w.front().first, 0.0);
  EXPECT_EQ(w.back().second, 200.0);
}

TEST(ToCameraFrame, IdentityKeepsCloud) {
  GlobalMap m;
  m.cloud.points = {{1, 2, 3, 4}, {-1, 0.5, 9, 200}};
  const IntensityCloud c = to_camera_frame(m, {}, {});
  EXPECT_EQ(c.points, m.cloud.points);
}

TEST(ToCameraFrame, InverseRecoversGlobalCloud) {
  GlobalMap m;
  m.cloud.points = {{1, 2, 3, 4}, {-1, 0.5, 9, 200}, {30, -4, 0, 50}};
  const Pose6 vehicle{12, -3, 0.2, 0.01, -0.02, 1.2};
  const Pose6 cam{1.7, 0.2, 1.6, deg2rad(-96), 0, deg2rad(-90)};
  const IntensityCloud c = to_camera_frame(m, vehicle, cam);
  const IntensityCloud back = apply(global_to_camera(vehicle, cam).inverse(), c);
  for (std::size_t i = 0; i < c.size(); ++i)
    EXPECT_LT((back.points[i].position() - m.cloud.points[i].position()).norm(), 1e-9);
}

TEST(ToCameraFrame, SyntheticRoadSitsAtMountingHeight) {
  const Dataset& ds = roadcal::testing::small_dataset();
  const GlobalMap m = accumulate(ds.scans, ds.trajectory, ds.lidar_extrinsics);
  const double t = ds.frames[2].timestamp;
  const IntensityCloud cam = to_camera_frame(m, pose_at(ds.trajectory, t), *ds.truth_left);
  // the road plane in the camera frame under the true extrinsic
  const RigidTransform g2c = global_to_camera(pose_at(ds.trajectory, t), *ds.truth_left);
  const Eigen::Vector3d up = g2c.rotation() * Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d origin = g2c * Eigen::Vector3d::Zero();
  std::size_t road = 0;
  for (std::size_t i = 0; i < m.cloud.size(); ++i) {
    const auto& g = m.cloud.points[i];
    if (std::abs(g.y) > 3.0 || std::abs(g.z) > 0.01) continue;
    ++road;
    const double height = up.dot(cam.points[i].position() - origin);
    EXPECT_NEAR(height, 0.0, 1e-3);
  }
  EXPECT_GT(road, 1000u);
  // the vehicle stays level, so the camera is its mounting height above the road
  EXPECT_NEAR(-up.dot(origin), ds.truth_left->tz, 1e-9);
}

TEST(RenderIntensity, EmptyCloudIsAllInvalid) {
  const CameraIntrinsics k{300, 160, 120, 0.475, 320, 240};
  const LidarIntensityImage img = render_intensity_image({}, k);
  EXPECT_EQ(count_nonzero(img.valid), 0u);
}

TEST(RenderIntensity, SinglePointFillsItsSplat) {
  const CameraIntrinsics k{300, 160, 120, 0.475, 320, 240};
  const LidarIntensityImage img = render_intensity_image({"cam", {{0, 0, 2, 77}}}, k);
  EXPECT_EQ(count_nonzero(img.valid), 9u);
  for (int dv = -1; dv <= 1; ++dv)
    for (int du = -1; du <= 1; ++du) {
      EXPECT_TRUE(img.valid(160 + du, 120 + dv));
      EXPECT_EQ(img.intensity(160 + du, 120 + dv), 77);
      EXPECT_FLOAT_EQ(img.depth(160 + du, 120 + dv), 2.0f);
    }
}

TEST(RenderIntensity, NearestPointWins) {
  const CameraIntrinsics k{300, 160, 120, 0.475, 320, 240};
  const LidarIntensityImage img =
      render_intensity_image({"cam", {{0, 0, 5, 50}, {0, 0, 2, 200}}}, k);
  EXPECT_EQ(img.intensity(160, 120), 200);
  const LidarIntensityImage img2 =
      render_intensity_image({"cam", {{0, 0, 2, 200}, {0, 0, 5, 50}}}, k);
  EXPECT_EQ(img2.intensity, img.intensity);
}

TEST(RenderIntensity, DeterministicAndBoundedBySplatArea) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> x(-3, 3), z(-1, 20);
  IntensityCloud c{"cam", {}};
  for (int i = 0; i < 500; ++i) c.points.push_back({x(rng), x(rng), z(rng), static_cast<std::uint8_t>(i)});
  const CameraIntrinsics k{300, 160, 120, 0.475, 320, 240};
  const LidarIntensityImage a = render_intensity_image(c, k);
  const LidarIntensityImage b = render_intensity_image(c, k);
  EXPECT_EQ(a.intensity, b.intensity);
  EXPECT_EQ(a.valid, b.valid);
  std::size_t in_bounds = 0;
  for (const auto& p : c.points)
    if (project(k, p.position())) ++in_bounds;
  EXPECT_LE(count_nonzero(a.valid), in_bounds * 9);
  for (std::size_t i = 0; i < a.valid.size(); ++i)
    if (a.valid.data()[i]) EXPECT_GT(a.depth.data()[i], kDefaultNearPlane);
}

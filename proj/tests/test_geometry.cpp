#include "roadcal/geometry.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace roadcal;

namespace {

Pose6 random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> t(-10, 10), a(-kPi + 1e-6, kPi), p(-1.5, 1.5);
  return {t(rng), t(rng), t(rng), a(rng), p(rng), a(rng)};
}

void expect_pose_near(const Pose6& a, const Pose6& b, double tol) {
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(a[i], b[i], tol) << "component " << i;
}

}  // namespace

TEST(PoseToTransform, ZeroPoseIsIdentity) {
  const RigidTransform t = pose_to_transform({});
  EXPECT_TRUE(t.rotation().isApprox(Eigen::Matrix3d::Identity(), 0));
  EXPECT_EQ(t.translation(), Eigen::Vector3d::Zero());
}

TEST(PoseToTransform, QuarterTurnAboutZ) {
  const RigidTransform t = pose_to_transform({0, 0, 0, 0, 0, kPi / 2});
  EXPECT_TRUE((t * Eigen::Vector3d(1, 0, 0)).isApprox(Eigen::Vector3d(0, 1, 0), 1e-12));
}

TEST(PoseToTransform, YawPitchRollOrder) {
  // R = Rz * Ry * Rx: roll is applied first
  const Pose6 p{0, 0, 0, kPi / 2, 0, kPi / 2};
  const Eigen::Vector3d y = pose_to_transform(p) * Eigen::Vector3d(0, 1, 0);
  // roll turns y into z, yaw leaves z alone
  EXPECT_TRUE(y.isApprox(Eigen::Vector3d(0, 0, 1), 1e-12));
}

TEST(PoseToTransform, RoundTripRandomPoses) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Pose6 p = random_pose(rng);
    expect_pose_near(transform_to_pose(pose_to_transform(p)), p, 1e-9);
  }
}

TEST(PoseToTransform, MatrixRoundTrip) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const Pose6 p = random_pose(rng);
    const RigidTransform back = RigidTransform::from_matrix(pose_to_transform(p).matrix());
    expect_pose_near(transform_to_pose(back), p, 1e-9);
  }
}

TEST(Pose6, NormalizedAnglesInHalfOpenInterval) {
  const Pose6 p = Pose6{0, 0, 0, 3 * kPi, -kPi, 7.0}.normalized();
  for (int i = 3; i < 6; ++i) {
    EXPECT_GT(p[i], -kPi);
    EXPECT_LE(p[i], kPi);
  }
  EXPECT_NEAR(p.rx, kPi, 1e-12);
  EXPECT_NEAR(p.ry, kPi, 1e-12);
  EXPECT_NEAR(p.rz, 7.0 - 2 * kPi, 1e-12);
}

TEST(Compose, IdentityIsNeutral) {
  const RigidTransform t = pose_to_transform({1, 2, 3, 0.1, 0.2, 0.3});
  EXPECT_TRUE(compose(t, RigidTransform::identity()).matrix().isApprox(t.matrix(), 1e-15));
}

TEST(Compose, InverseGivesIdentity) {
  const RigidTransform t = pose_to_transform({1, -2, 3, 0.4, -0.2, 2.3});
  EXPECT_TRUE(compose(t.inverse(), t).matrix().isApprox(Eigen::Matrix4d::Identity(), 1e-9));
}

TEST(Compose, TranslationsAdd) {
  const RigidTransform c = compose(RigidTransform::from_translation(1, 2, 3),
                                   RigidTransform::from_translation(-4, 5, 0.5));
  EXPECT_TRUE(c.translation().isApprox(Eigen::Vector3d(-3, 7, 3.5), 1e-15));
}

TEST(Compose, AppliesRightOperandFirst) {
  const RigidTransform a = pose_to_transform({1, 0, 0, 0, 0, kPi / 2});
  const RigidTransform b = pose_to_transform({0, 2, 0, 0.3, 0, 0});
  const Eigen::Vector3d p(0.5, -1, 2);
  EXPECT_TRUE((compose(a, b) * p).isApprox(a * (b * p), 1e-12));
}

TEST(Compose, Associative) {
  std::mt19937_64 rng(3);
  const RigidTransform a = pose_to_transform(random_pose(rng));
  const RigidTransform b = pose_to_transform(random_pose(rng));
  const RigidTransform c = pose_to_transform(random_pose(rng));
  EXPECT_TRUE(((a * b) * c).matrix().isApprox((a * (b * c)).matrix(), 1e-12));
}

TEST(Compose, StaysOrthonormalUnderRepetition) {
  std::mt19937_64 rng(4);
  RigidTransform acc;
  for (int i = 0; i < 10000; ++i) acc = acc * pose_to_transform(random_pose(rng));
  const Eigen::Matrix3d r = acc.rotation();
  EXPECT_LT((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
}

TEST(ApplyCloud, IdentityLeavesCloudUnchanged) {
  IntensityCloud c{"lidar", {{1, 2, 3, 10}, {-1, 0, 5, 200}}};
  const IntensityCloud out = apply(RigidTransform::identity(), c);
  EXPECT_EQ(out.points, c.points);
}

TEST(ApplyCloud, TranslationMovesEveryPoint) {
  IntensityCloud c{"lidar", {{1, 2, 3, 10}, {-1, 0, 5, 200}}};
  const IntensityCloud out = apply(RigidTransform::from_translation(1, 2, 3), c, "vehicle");
  EXPECT_EQ(out.frame_id, "vehicle");
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_DOUBLE_EQ(out.points[i].x, c.points[i].x + 1);
    EXPECT_DOUBLE_EQ(out.points[i].y, c.points[i].y + 2);
    EXPECT_DOUBLE_EQ(out.points[i].z, c.points[i].z + 3);
    EXPECT_EQ(out.points[i].intensity, c.points[i].intensity);
  }
}

TEST(ApplyCloud, PreservesPairwiseDistances) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int trial = 0; trial < 20; ++trial) {
    IntensityCloud c;
    for (int i = 0; i < 50; ++i) c.points.push_back({u(rng), u(rng), u(rng), 0});
    const IntensityCloud out = apply(pose_to_transform(random_pose(rng)), c);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j)
        EXPECT_NEAR((out.points[i].position() - out.points[j].position()).norm(),
                    (c.points[i].position() - c.points[j].position()).norm(), 1e-9);
  }
}

TEST(Project, OpticalAxisHitsPrincipalPoint) {
  const CameraIntrinsics k{500, 320, 240, 0.5, 640, 480};
  const auto px = project(k, {0, 0, 2});
  ASSERT_TRUE(px);
  EXPECT_DOUBLE_EQ(px->x(), 320);
  EXPECT_DOUBLE_EQ(px->y(), 240);
}

TEST(Project, PinholeFormula) {
  const CameraIntrinsics k{500, 320, 240, 0.5, 640, 480};
  const auto px = project(k, {1, 0, 2});
  ASSERT_TRUE(px);
  EXPECT_DOUBLE_EQ(px->x(), 570);
  EXPECT_DOUBLE_EQ(px->y(), 240);
}

TEST(Project, RejectsPointsAtOrBehindTheCamera) {
  const CameraIntrinsics k{500, 320, 240, 0.5, 640, 480};
  EXPECT_FALSE(project(k, {0, 0, 0}));
  EXPECT_FALSE(project(k, {0, 0, -1}));
  EXPECT_FALSE(project(k, {0, 0, 0.05}));  // inside the near plane
  EXPECT_FALSE(project(k, {10, 0, 1}));    // outside the image
}

TEST(DisparityToPoint, DepthFromDisparity) {
  const CameraIntrinsics k{500, 320, 240, 0.5, 640, 480};
  const auto p = disparity_to_point(k, 100, 50, 50);
  ASSERT_TRUE(p);
  EXPECT_DOUBLE_EQ(p->z(), 5.0);
}

TEST(DisparityToPoint, PrincipalPointMapsToAxis) {
  const CameraIntrinsics k{500, 320, 240, 0.5, 640, 480};
  for (double d : {1.0, 7.5, 100.0}) {
    const auto p = disparity_to_point(k, 320, 240, d);
    ASSERT_TRUE(p);
    EXPECT_DOUBLE_EQ(p->x(), 0);
    EXPECT_DOUBLE_EQ(p->y(), 0);
  }
}

TEST(DisparityToPoint, NonPositiveDisparitySkipped) {
  const CameraIntrinsics k{500, 320, 240, 0.5, 640, 480};
  EXPECT_FALSE(disparity_to_point(k, 10, 10, 0));
  EXPECT_FALSE(disparity_to_point(k, 10, 10, -3));
}

TEST(DisparityToPoint, ProjectionRoundTrip) {
  const CameraIntrinsics k{300, 160, 120, 0.475, 320, 240};
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uu(0, 319), vv(0, 239), dd(1, 128);
  for (int i = 0; i < 10000; ++i) {
    const double u = uu(rng), v = vv(rng), d = dd(rng);
    const auto p = disparity_to_point(k, u, v, d);
    ASSERT_TRUE(p);
    const auto px = project(k, *p);
    ASSERT_TRUE(px);
    EXPECT_LE(std::abs(px->x() - u), 0.5);
    EXPECT_LE(std::abs(px->y() - v), 0.5);
  }
}

TEST(CameraIntrinsics, ValidationRejectsBadValues) {
  EXPECT_NO_THROW((CameraIntrinsics{300, 160, 120, 0.475, 320, 240}.validate()));
  EXPECT_THROW((CameraIntrinsics{0, 160, 120, 0.475, 320, 240}.validate()), CalibrationError);
  EXPECT_THROW((CameraIntrinsics{300, 160, 120, 0, 320, 240}.validate()), CalibrationError);
  EXPECT_THROW((CameraIntrinsics{300, 320, 120, 0.475, 320, 240}.validate()), CalibrationError);
}

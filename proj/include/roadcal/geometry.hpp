#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace roadcal {

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

/// Base class for every error raised by the library.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Rigid transform as {t_x, t_y, t_z, roll, pitch, yaw}; meters and radians.
/// Rotation convention: R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct Pose6 {
  double tx = 0, ty = 0, tz = 0;
  double rx = 0, ry = 0, rz = 0;

  static Pose6 from_vector(const Vector6d& v);
  Vector6d to_vector() const;

  /// Same pose with all three angles wrapped into (-pi, pi].
  Pose6 normalized() const;

  double operator[](int i) const;
  double& operator[](int i);

  bool operator==(const Pose6&) const = default;
};

class RigidTransform {
 public:
  RigidTransform() = default;
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(double x, double y, double z);
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation_ * p + translation_;
  }

  RigidTransform inverse() const;

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

/// Applying the result equals applying `b` first and then `a`.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return compose(a, b);
}

RigidTransform pose_to_transform(const Pose6& p);
Pose6 transform_to_pose(const RigidTransform& t);

/// Rectified square-pixel pinhole camera of a stereo pair.
struct CameraIntrinsics {
  double f = 0;         // focal length, px
  double cu = 0;        // principal point, px
  double cv = 0;
  double baseline = 0;  // stereo baseline, m
  int width = 0;
  int height = 0;

  /// Throws CalibrationError when an invariant is violated.
  void validate() const;
  double diagonal() const;
};

struct IntensityPoint {
  double x = 0, y = 0, z = 0;
  std::uint8_t intensity = 0;

  Eigen::Vector3d position() const { return {x, y, z}; }
  bool operator==(const IntensityPoint&) const = default;
};

struct IntensityCloud {
  std::string frame_id;
  std::vector<IntensityPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Clamps and rounds a raw reflectance reading into 8 bits.
std::uint8_t clamp_intensity(double value);

/// Transforms every point; intensities are kept and the frame id is replaced.
IntensityCloud apply(const RigidTransform& t, const IntensityCloud& cloud,
                     const std::string& target_frame);
inline IntensityCloud apply(const RigidTransform& t, const IntensityCloud& cloud) {
  return apply(t, cloud, cloud.frame_id);
}

inline constexpr double kDefaultNearPlane = 0.1;

/// Pinhole projection. Empty when the point is not in front of the near plane
/// or lands outside the image.
std::optional<Eigen::Vector2d> project(const CameraIntrinsics& k, const Eigen::Vector3d& p,
                                       double z_min = kDefaultNearPlane);

/// Back-projection of a left-image pixel with disparity `d` (px). Empty for d <= 0.
std::optional<Eigen::Vector3d> disparity_to_point(const CameraIntrinsics& k, double u, double v,
                                                  double d);

}  // namespace roadcal

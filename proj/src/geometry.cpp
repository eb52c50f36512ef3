#include "roadcal/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace roadcal {

double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

Pose6 Pose6::from_vector(const Vector6d& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }

Vector6d Pose6::to_vector() const {
  Vector6d v;
  v << tx, ty, tz, rx, ry, rz;
  return v;
}

Pose6 Pose6::normalized() const {
  Pose6 p = *this;
  p.rx = normalize_angle(rx);
  p.ry = normalize_angle(ry);
  p.rz = normalize_angle(rz);
  return p;
}

double Pose6::operator[](int i) const {
  switch (i) {
    case 0: return tx;
    case 1: return ty;
    case 2: return tz;
    case 3: return rx;
    case 4: return ry;
    case 5: return rz;
  }
  throw std::out_of_range("Pose6 index");
}

double& Pose6::operator[](int i) {
  switch (i) {
    case 0: return tx;
    case 1: return ty;
    case 2: return tz;
    case 3: return rx;
    case 4: return ry;
    case 5: return rz;
  }
  throw std::out_of_range("Pose6 index");
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {}

RigidTransform RigidTransform::from_translation(double x, double y, double z) {
  return {Eigen::Matrix3d::Identity(), Eigen::Vector3d(x, y, z)};
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  Eigen::Matrix3d rt = rotation_.transpose();
  return {rt, -(rt * translation_)};
}

namespace {

// Projects onto SO(3) once accumulated round-off exceeds the tolerance.
Eigen::Matrix3d reorthonormalize(const Eigen::Matrix3d& r) {
  const double drift = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (drift <= 1e-9) return r;
  Eigen::Quaterniond q(r);
  q.normalize();
  return q.toRotationMatrix();
}

}  // namespace

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {reorthonormalize(a.rotation() * b.rotation()),
          a.rotation() * b.translation() + a.translation()};
}

RigidTransform pose_to_transform(const Pose6& p) {
  const Eigen::Matrix3d r = (Eigen::AngleAxisd(p.rz, Eigen::Vector3d::UnitZ()) *
                             Eigen::AngleAxisd(p.ry, Eigen::Vector3d::UnitY()) *
                             Eigen::AngleAxisd(p.rx, Eigen::Vector3d::UnitX()))
                                .toRotationMatrix();
  return {r, Eigen::Vector3d(p.tx, p.ty, p.tz)};
}

Pose6 transform_to_pose(const RigidTransform& t) {
  const Eigen::Matrix3d& r = t.rotation();
  Pose6 p;
  p.tx = t.translation().x();
  p.ty = t.translation().y();
  p.tz = t.translation().z();
  const double sp = std::clamp(-r(2, 0), -1.0, 1.0);
  p.ry = std::asin(sp);
  if (std::abs(sp) < 1.0 - 1e-12) {
    p.rx = std::atan2(r(2, 1), r(2, 2));
    p.rz = std::atan2(r(1, 0), r(0, 0));
  } else {
    // gimbal lock: only rz - rx (or rz + rx) is observable; put it all in yaw
    p.rx = 0.0;
    p.rz = std::atan2(-r(0, 1), r(1, 1));
  }
  return p.normalized();
}

void CameraIntrinsics::validate() const {
  if (!(f > 0)) throw CalibrationError("camera focal length must be positive");
  if (!(baseline > 0)) throw CalibrationError("stereo baseline must be positive");
  if (width <= 0 || height <= 0) throw CalibrationError("camera image size must be positive");
  if (!(cu >= 0 && cu < width && cv >= 0 && cv < height))
    throw CalibrationError("principal point outside the image");
}

double CameraIntrinsics::diagonal() const {
  return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

std::uint8_t clamp_intensity(double value) {
  if (!std::isfinite(value)) return 0;
  return static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
}

IntensityCloud apply(const RigidTransform& t, const IntensityCloud& cloud,
                     const std::string& target_frame) {
  IntensityCloud out;
  out.frame_id = target_frame;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d q = t * p.position();
    out.points.push_back({q.x(), q.y(), q.z(), p.intensity});
  }
  return out;
}

std::optional<Eigen::Vector2d> project(const CameraIntrinsics& k, const Eigen::Vector3d& p,
                                       double z_min) {
  if (!(p.z() > z_min)) return std::nullopt;
  const double u = k.f * p.x() / p.z() + k.cu;
  const double v = k.f * p.y() / p.z() + k.cv;
  // pixel (i, j) covers [i - 0.5, i + 0.5)
  if (u < -0.5 || v < -0.5 || u >= k.width - 0.5 || v >= k.height - 0.5) return std::nullopt;
  return Eigen::Vector2d(u, v);
}

std::optional<Eigen::Vector3d> disparity_to_point(const CameraIntrinsics& k, double u, double v,
                                                  double d) {
  if (!(d > 0)) return std::nullopt;
  const double z = k.f * k.baseline / d;
  return Eigen::Vector3d((u - k.cu) * z / k.f, (v - k.cv) * z / k.f, z);
}

}  // namespace roadcal

#pragma once

#include "roadcal/geometry.hpp"
#include "roadcal/image.hpp"

#include <cstdint>
#include <vector>

namespace roadcal {

/// Disparity in 1/16 px fixed point; 0 marks an invalid pixel.
using DisparityImage = Image<std::uint16_t>;
inline constexpr int kDisparityScale = 16;

inline double disparity_px(std::uint16_t raw) { return static_cast<double>(raw) / kDisparityScale; }

/// Thrown when an image carries no usable road surface.
class RoadNotFound : public CalibrationError {
 public:
  using CalibrationError::CalibrationError;
};

struct DisparityOptions {
  int window = 9;          // SAD window side, odd
  int max_disparity = 128;
  double lr_tolerance = 1.0;
};

/// SAD block matching with the left image as reference, parabolic sub-pixel
/// refinement and a left-right consistency check.
DisparityImage compute_disparity(const GrayImage& left, const GrayImage& right,
                                 const DisparityOptions& opts = {});

/// Same matcher with the right image as reference: d(u) is such that
/// right(u) matches left(u + d).
DisparityImage compute_disparity_right_reference(const GrayImage& left, const GrayImage& right,
                                                 const DisparityOptions& opts = {});

/// Row-wise disparity histogram, 1 px bins.
struct VDisparity {
  int rows = 0;
  int bins = 0;
  std::vector<std::uint32_t> counts;  // rows x bins

  std::uint32_t operator()(int v, int bin) const {
    return counts[static_cast<std::size_t>(v) * bins + bin];
  }
  std::uint64_t total() const;
};

VDisparity build_v_disparity(const DisparityImage& d, int bins = 128);

/// Road line in (disparity, v) space: v = intercept + slope * d.
struct RoadLine {
  double slope = 0;
  double intercept = 0;
  std::size_t inliers = 0;

  double disparity_at(double v) const { return (v - intercept) / slope; }
};

struct RoadLineOptions {
  int iterations = 500;
  double inlier_threshold = 1.0;   // disparity bins
  double min_inlier_fraction = 0.3;  // of image height
  std::uint64_t seed = 0;
};

/// RANSAC over v-disparity cells with count-weighted scoring, refined by
/// weighted least squares. Throws RoadNotFound on insufficient support or
/// a non-positive slope.
RoadLine fit_road_line(const VDisparity& vd, const RoadLineOptions& opts = {});

/// Row where the road line reaches zero disparity, clamped to [0, height - 1].
double horizon_row(const RoadLine& line, int image_height);

/// Road pixels: valid disparity within `tau` bins of the line, strictly below
/// the horizon.
BinaryImage extract_road_mask(const DisparityImage& d, const RoadLine& line, double tau = 2.0);

/// Plane n . p + d = 0 with unit normal, camera frame.
struct PlaneModel {
  double nx = 0, ny = -1, nz = 0;
  double d = 0;

  Eigen::Vector3d normal() const { return {nx, ny, nz}; }
  double signed_distance(const Eigen::Vector3d& p) const { return normal().dot(p) + d; }
};

struct PlaneFitOptions {
  double inlier_threshold = 0.05;  // m
  std::size_t min_points = 500;
  int iterations = 500;
  double min_inlier_ratio = 0.5;
  std::uint64_t seed = 0;
};

/// Plane through `points` by RANSAC and a least-squares refit on the inliers,
/// normal oriented so that n_y < 0 (up in the camera frame). Throws
/// RoadNotFound when there are too few points or too few inliers.
PlaneModel fit_plane(const std::vector<Eigen::Vector3d>& points, const PlaneFitOptions& opts = {},
                     std::size_t* inlier_count = nullptr);

/// Back-projects masked pixels with valid disparity and fits the road plane.
PlaneModel fit_road_plane(const DisparityImage& d, const BinaryImage& mask,
                          const CameraIntrinsics& k, const PlaneFitOptions& opts = {});

}  // namespace roadcal

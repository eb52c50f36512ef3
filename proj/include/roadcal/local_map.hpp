#pragma once

#include "roadcal/geometry.hpp"
#include "roadcal/image.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace roadcal {

/// Vehicle pose in the global frame (vehicle -> global) at a timestamp.
struct TrajectorySample {
  double timestamp = 0;
  Pose6 pose;
};
using Trajectory = std::vector<TrajectorySample>;

struct LidarScan {
  double timestamp = 0;
  int sensor_id = 0;
  IntensityCloud cloud;  // in the sensor frame
};

/// Lidar-to-vehicle extrinsic per sensor id.
using LidarExtrinsics = std::map<int, Pose6>;

struct GlobalMap {
  IntensityCloud cloud;             // global frame
  std::vector<double> timestamps;   // source scan time per point
};

struct LidarIntensityImage {
  GrayImage intensity;
  FloatImage depth;   // meters, 0 where invalid
  BinaryImage valid;
};

/// Throws CalibrationError if timestamps are not strictly increasing.
void validate_trajectory(const Trajectory& trajectory);

/// Interpolated vehicle pose: translation linearly, each angle along its
/// shortest arc. Throws CalibrationError outside the sampled span.
Pose6 pose_at(const Trajectory& trajectory, double timestamp);

/// Cumulative path length of the trajectory at each sample.
std::vector<double> arc_lengths(const Trajectory& trajectory);

/// Splits the trajectory into consecutive time spans of at most `window_m`
/// arc length each.
std::vector<std::pair<double, double>> map_windows(const Trajectory& trajectory,
                                                   double window_m);

struct AccumulateReport {
  std::size_t accepted_scans = 0;
  std::vector<std::string> diagnostics;  // one line per rejected scan
};

/// Lidar -> vehicle -> global for every scan; the union is returned ordered
/// by (timestamp, sensor id) regardless of input order. Scans outside the
/// trajectory span or from unknown sensors are rejected with a diagnostic.
GlobalMap accumulate(std::span<const LidarScan> scans, const Trajectory& trajectory,
                     const LidarExtrinsics& lidar_extrinsics, AccumulateReport* report = nullptr);

/// Re-expresses the global map in the camera frame. `camera_to_vehicle` is
/// the camera pose in the vehicle frame (the calibrated extrinsic).
IntensityCloud to_camera_frame(const GlobalMap& map, const Pose6& vehicle_pose,
                               const Pose6& camera_to_vehicle);

/// Global -> camera transform for a vehicle pose and camera extrinsic.
RigidTransform global_to_camera(const Pose6& vehicle_pose, const Pose6& camera_to_vehicle);

struct RenderOptions {
  int splat_radius = 1;
  double z_min = kDefaultNearPlane;
};

/// Camera-frame point prepared for rendering.
struct CameraPoint {
  float x, y, z;
  std::uint8_t intensity;
};

/// Scratch buffers reused across renders of the same size.
struct ProjectedPoint {
  float u, v;
  std::uint32_t index;
};

struct RenderScratch {
  std::vector<ProjectedPoint> projected;
  std::vector<float> fringe_key;
  std::vector<float> fringe_depth;
  std::vector<std::uint8_t> fringe_value;
};

/// Z-buffered projection of camera-frame points. Pixels hit by a point's own
/// projection resolve by nearest depth; the remaining pixels of each splat
/// footprint are filled afterwards, preferring the closest footprint centre
/// and then the nearest depth. Rows outside [row_begin, row_end) are skipped.
void render_points(std::span<const CameraPoint> points, const CameraIntrinsics& k,
                   const RenderOptions& opts, LidarIntensityImage& out, RenderScratch& scratch,
                   int row_begin = 0, int row_end = -1);

LidarIntensityImage render_intensity_image(const IntensityCloud& camera_cloud,
                                           const CameraIntrinsics& k,
                                           const RenderOptions& opts = {});

}  // namespace roadcal

#pragma once

#include "roadcal/dataset_io.hpp"
#include "roadcal/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace roadcal {

/// Axis-aligned (up to a yaw) box standing on the road.
struct BoxObstacle {
  double cx = 0, cy = 0;          // footprint centre, global frame
  double sx = 1, sy = 1, sz = 1;  // size, m
  double yaw = 0;                 // rad
};

struct LidarSpec {
  enum class Kind { Spinning, Planar };
  int id = 0;
  Kind kind = Kind::Spinning;
  Pose6 mount;                          // lidar -> vehicle
  double rate_hz = 10.0;
  double time_offset = 0.0;             // s, first scan time
  std::vector<double> elevations_deg;   // one per ring; {0} for planar
  double az_min_deg = -180, az_max_deg = 180, az_step_deg = 1.0;  // sensor frame
  // optional vehicle-frame azimuth window for returned points
  bool use_sector = false;
  double sector_min_deg = 0, sector_max_deg = 0;
  double max_range = 100.0;
};

/// Full description of a synthetic road scene and its sensors.
///
/// Global frame: x along the road, y to the left, z up; the road surface is
/// z = 0 for |y| <= road_width / 2. Vehicle frame: x forward, y left, z up.
struct SceneSpec {
  // geometry
  double road_width = 7.0;
  double road_x_min = -30.0, road_x_max = 150.0;
  double sidewalk_width = 3.0;
  double curb_height = 0.15;
  double wall_height = 10.0;
  // markings
  double edge_line_width = 0.15;
  double edge_line_inset = 0.3;     // centre of the edge line from the road edge
  double center_line_width = 0.15;
  double center_dash = 0.0;         // 0: solid
  double center_gap = 0.0;
  std::vector<double> crosswalks{28.0, 55.0};
  double crosswalk_stripe_width = 0.5;
  double crosswalk_pitch = 1.2;
  double crosswalk_length = 3.0;
  double stop_line_width = 0.4;
  double stop_line_gap = 2.0;
  std::vector<BoxObstacle> boxes;
  // trajectory
  double start_x = 0.0;
  double trajectory_length = 80.0;  // m along x
  double speed = 2.5;               // m/s
  double weave_amplitude = 0.3;     // m
  double weave_period = 40.0;       // m
  double trajectory_rate = 100.0;   // Hz
  // camera
  CameraIntrinsics intrinsics{300.0, 160.0, 120.0, 0.475, 320, 240};
  Pose6 camera_truth{1.70, 0.2375, 1.60, deg2rad(-96.0), 0.0, deg2rad(-90.0)};
  double camera_rate = 1.0;
  double camera_offset = 0.05;
  int supersample = 3;
  Pose6 nominal_offset{0.1, -0.1, 0.05, deg2rad(1.0), deg2rad(-1.0), deg2rad(1.0)};
  // sensors
  std::vector<LidarSpec> lidars;
  // appearance
  double reflect_asphalt = 40, reflect_marking = 200, reflect_sidewalk = 90, reflect_curb = 110,
         reflect_wall = 130, reflect_box = 160, sky_gray = 170;
  double texture_asphalt = 24, texture_marking = 8, texture_sidewalk = 16, texture_wall = 30,
         texture_box = 20;
  // noise
  double range_sigma = 0.02;
  double intensity_sigma = 8.0;
  double gray_sigma = 4.0;

  void validate() const;
};

/// Default scene: straight walled street with edge and centre lines, two
/// crosswalks with stop lines, and four lidars (two 16-ring side units, one
/// planar unit looking down ahead and one behind).
SceneSpec default_scene_spec();
std::vector<LidarSpec> default_lidars();

/// Applies key=value overrides on top of `base`; unknown keys are rejected.
SceneSpec parse_scene_spec(const KeyValues& kv, SceneSpec base = default_scene_spec());
SceneSpec load_scene_spec(const std::filesystem::path& path);

enum class Surface { None, Road, Sidewalk, Curb, Wall, Box };

struct Hit {
  double t = 0;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Surface surface = Surface::None;
};

/// Ray casting and appearance of a scene.
class SyntheticScene {
 public:
  explicit SyntheticScene(SceneSpec spec, std::uint64_t texture_seed = 0);

  const SceneSpec& spec() const { return spec_; }

  /// Nearest hit along origin + t * dir for t > t_min.
  Hit intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, double t_min = 1e-6) const;

  bool is_marking(double x, double y) const;
  /// LiDAR reflectance of a surface point (no noise).
  double reflectance(const Hit& h) const;
  /// Camera gray level of a surface point: reflectance plus fixed texture.
  double albedo(const Hit& h) const;

  Pose6 vehicle_pose(double t) const;
  double duration() const { return spec_.trajectory_length / spec_.speed; }

  /// Left camera pose in the global frame (camera -> global), or the right
  /// camera when `right` is set.
  RigidTransform camera_to_global(double t, bool right) const;

  /// Noise-free gray rendering (before quantization) of one camera.
  std::vector<double> render_camera(double t, bool right) const;

 private:
  double value_noise(double x, double y, double cell, std::uint64_t channel) const;

  SceneSpec spec_;
  std::uint64_t seed_;
};

/// Camera-to-vehicle truth of the left camera.
Pose6 truth(const SceneSpec& spec);
/// Right camera: the left one displaced by the baseline along its x axis.
Pose6 right_camera_truth(const SceneSpec& spec);

/// Renders trajectory, lidar scans and stereo images. Deterministic for
/// fixed (spec, seed). Throws CalibrationError if no camera frame sees the
/// road.
Dataset render_dataset(const SceneSpec& spec, std::uint64_t seed);

/// Spec with every noise level set to zero.
SceneSpec without_noise(SceneSpec spec);

}  // namespace roadcal

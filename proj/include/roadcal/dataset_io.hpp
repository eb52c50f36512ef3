#pragma once

#include "roadcal/geometry.hpp"
#include "roadcal/image.hpp"
#include "roadcal/local_map.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace roadcal {

/// Flat key=value text: tokens separated by whitespace or newlines, '#'
/// starts a comment. Later keys override earlier ones.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);
double kv_double(const KeyValues& kv, const std::string& key);

// --- LiDAR scans: ASCII PLY with x y z (float) intensity (uchar) ---------

IntensityCloud read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const IntensityCloud& cloud);

/// "scan_<sensorid>_<timestamp_ns>.ply"
std::string scan_file_name(int sensor_id, std::int64_t timestamp_ns);
/// Inverse of scan_file_name; empty if the name does not match.
std::optional<std::pair<int, std::int64_t>> parse_scan_file_name(const std::string& name);

std::int64_t seconds_to_ns(double t);
inline double ns_to_seconds(std::int64_t ns) { return static_cast<double>(ns) * 1e-9; }

// --- trajectory CSV: timestamp_s,tx,ty,tz,rx,ry,rz -------------------------

Trajectory read_trajectory_csv(const std::filesystem::path& path);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);

// --- lidar extrinsics: lidar<id>.tx=... lidar<id>.rz=... --------------------

LidarExtrinsics read_lidar_extrinsics(const std::filesystem::path& path);
void write_lidar_extrinsics(const std::filesystem::path& path, const LidarExtrinsics& ext);

// --- camera intrinsics: f= cu= cv= baseline= width= height= -----------------

CameraIntrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k);

// --- result file: tx= ty= tz= rx_deg= ry_deg= rz_deg= cost= iters= converged=

struct ResultRecord {
  Pose6 pose;
  double cost = 0;
  int iterations = 0;
  bool converged = false;
};
std::string format_result(const ResultRecord& r);
ResultRecord parse_result(const std::string& text);
ResultRecord read_result(const std::filesystem::path& path);
void write_result(const std::filesystem::path& path, const ResultRecord& r);

/// Reads just the pose of a result-format file.
Pose6 read_pose_file(const std::filesystem::path& path);

// --- whole dataset -----------------------------------------------------------

struct StereoFrame {
  int id = 0;
  double timestamp = 0;
  GrayImage left;
  GrayImage right;
};

/// In-memory dataset: everything the calibration pipeline consumes.
struct Dataset {
  CameraIntrinsics intrinsics;
  Trajectory trajectory;
  LidarExtrinsics lidar_extrinsics;
  std::vector<LidarScan> scans;
  std::vector<StereoFrame> frames;  // ordered by timestamp, id = index
  std::optional<Pose6> truth_left;
  std::optional<Pose6> truth_right;
  std::optional<Pose6> nominal;        // initial guess shipped with the data
  std::optional<Pose6> nominal_right;
};

/// Directory layout:
///   camera.txt  trajectory.csv  lidar_extrinsics.txt
///   scans/scan_<id>_<ns>.ply    images/left_<ns>.pgm  images/right_<ns>.pgm
///   truth.txt  truth_right.txt  nominal.txt  nominal_right.txt
///                                             (optional, result format)
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);

}  // namespace roadcal

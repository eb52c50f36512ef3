#include "roadcal/local_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace roadcal {

void validate_trajectory(const Trajectory& trajectory) {
  if (trajectory.empty()) throw CalibrationError("empty trajectory");
  for (std::size_t i = 1; i < trajectory.size(); ++i)
    if (!(trajectory[i].timestamp > trajectory[i - 1].timestamp))
      throw CalibrationError("trajectory timestamps must be strictly increasing");
}

Pose6 pose_at(const Trajectory& trajectory, double timestamp) {
  if (trajectory.empty()) throw CalibrationError("empty trajectory");
  const double t0 = trajectory.front().timestamp;
  const double t1 = trajectory.back().timestamp;
  if (!(timestamp >= t0 && timestamp <= t1)) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "timestamp " << timestamp << " outside trajectory span [" << t0 << ", " << t1 << "]";
    throw CalibrationError(msg.str());
  }
  auto hi = std::upper_bound(trajectory.begin(), trajectory.end(), timestamp,
                             [](double t, const TrajectorySample& s) { return t < s.timestamp; });
  if (hi == trajectory.begin()) return trajectory.front().pose;
  auto lo = std::prev(hi);
  if (hi == trajectory.end() || lo->timestamp == timestamp) return lo->pose;

  const double w = (timestamp - lo->timestamp) / (hi->timestamp - lo->timestamp);
  const Pose6& a = lo->pose;
  const Pose6& b = hi->pose;
  Pose6 p;
  for (int i = 0; i < 3; ++i) p[i] = a[i] + w * (b[i] - a[i]);
  for (int i = 3; i < 6; ++i) p[i] = normalize_angle(a[i] + w * normalize_angle(b[i] - a[i]));
  return p;
}

std::vector<double> arc_lengths(const Trajectory& trajectory) {
  std::vector<double> s(trajectory.size(), 0.0);
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    const Pose6& a = trajectory[i - 1].pose;
    const Pose6& b = trajectory[i].pose;
    s[i] = s[i - 1] + std::sqrt((b.tx - a.tx) * (b.tx - a.tx) + (b.ty - a.ty) * (b.ty - a.ty) +
                                (b.tz - a.tz) * (b.tz - a.tz));
  }
  return s;
}

std::vector<std::pair<double, double>> map_windows(const Trajectory& trajectory,
                                                   double window_m) {
  validate_trajectory(trajectory);
  const std::vector<double> s = arc_lengths(trajectory);
  std::vector<std::pair<double, double>> windows;
  std::size_t start = 0;
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    if (s[i] - s[start] > window_m + 1e-9) {
      windows.emplace_back(trajectory[start].timestamp, trajectory[i - 1].timestamp);
      start = i - 1;
    }
  }
  windows.emplace_back(trajectory[start].timestamp, trajectory.back().timestamp);
  return windows;
}

GlobalMap accumulate(std::span<const LidarScan> scans, const Trajectory& trajectory,
                     const LidarExtrinsics& lidar_extrinsics, AccumulateReport* report) {
  validate_trajectory(trajectory);
  std::vector<std::size_t> order(scans.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scans[a].timestamp != scans[b].timestamp) return scans[a].timestamp < scans[b].timestamp;
    return scans[a].sensor_id < scans[b].sensor_id;
  });

  GlobalMap map;
  map.cloud.frame_id = "global";
  const double t0 = trajectory.front().timestamp;
  const double t1 = trajectory.back().timestamp;
  for (std::size_t idx : order) {
    const LidarScan& scan = scans[idx];
    auto ext = lidar_extrinsics.find(scan.sensor_id);
    if (ext == lidar_extrinsics.end()) {
      if (report)
        report->diagnostics.push_back("scan from unregistered lidar " +
                                      std::to_string(scan.sensor_id) + " rejected");
      continue;
    }
    if (!(scan.timestamp >= t0 && scan.timestamp <= t1)) {
      if (report) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "scan of lidar " << scan.sensor_id << " at t=" << scan.timestamp
            << " outside trajectory span, rejected";
        report->diagnostics.push_back(msg.str());
      }
      continue;
    }
    const RigidTransform lidar_to_global =
        pose_to_transform(pose_at(trajectory, scan.timestamp)) *
        pose_to_transform(ext->second);
    for (const auto& p : scan.cloud.points) {
      const Eigen::Vector3d q = lidar_to_global * p.position();
      map.cloud.points.push_back({q.x(), q.y(), q.z(), p.intensity});
      map.timestamps.push_back(scan.timestamp);
    }
    if (report) ++report->accepted_scans;
  }
  return map;
}

RigidTransform global_to_camera(const Pose6& vehicle_pose, const Pose6& camera_to_vehicle) {
  return (pose_to_transform(vehicle_pose) * pose_to_transform(camera_to_vehicle)).inverse();
}

IntensityCloud to_camera_frame(const GlobalMap& map, const Pose6& vehicle_pose,
                               const Pose6& camera_to_vehicle) {
  return apply(global_to_camera(vehicle_pose, camera_to_vehicle), map.cloud, "camera");
}

void render_points(std::span<const CameraPoint> points, const CameraIntrinsics& k,
                   const RenderOptions& opts, LidarIntensityImage& out, RenderScratch& scratch,
                   int row_begin, int row_end) {
  const int w = k.width;
  const int h = k.height;
  if (row_end < 0 || row_end > h) row_end = h;
  row_begin = std::max(row_begin, 0);
  if (!out.intensity.same_size(w, h)) {
    out.intensity = GrayImage(w, h);
    out.depth = FloatImage(w, h);
    out.valid = BinaryImage(w, h);
  } else {
    out.intensity.fill(0);
    out.depth.fill(0.0f);
    out.valid.fill(0);
  }
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  constexpr float kInf = std::numeric_limits<float>::infinity();
  scratch.fringe_key.assign(n, kInf);
  scratch.fringe_depth.assign(n, kInf);
  scratch.fringe_value.assign(n, 0);

  const float f = static_cast<float>(k.f);
  const float cu = static_cast<float>(k.cu);
  const float cv = static_cast<float>(k.cv);
  const float z_min = static_cast<float>(opts.z_min);
  const int r = std::max(opts.splat_radius, 0);

  auto* depth = out.depth.data().data();
  auto* value = out.intensity.data().data();
  auto* valid = out.valid.data().data();

  // pass 1: direct hits; projections are kept for the splat pass
  scratch.projected.clear();
  for (std::size_t j = 0; j < points.size(); ++j) {
    const CameraPoint& p = points[j];
    if (!(p.z > z_min)) continue;
    const float u = f * p.x / p.z + cu;
    const float v = f * p.y / p.z + cv;
    const int ui = static_cast<int>(std::floor(u + 0.5f));
    const int vi = static_cast<int>(std::floor(v + 0.5f));
    if (ui < 0 || ui >= w || vi < 0 || vi >= h) continue;
    if (r > 0 && vi + r >= row_begin && vi - r < row_end)
      scratch.projected.push_back({u, v, static_cast<std::uint32_t>(j)});
    if (vi < row_begin || vi >= row_end) continue;
    const std::size_t i = static_cast<std::size_t>(vi) * w + ui;
    if (!valid[i] || p.z < depth[i]) {
      valid[i] = 1;
      depth[i] = p.z;
      value[i] = p.intensity;
    }
  }
  if (r == 0) return;

  // pass 2: splat footprints fill what no point hit directly
  // (footprint centres must lie in the image)
  for (const ProjectedPoint& pp : scratch.projected) {
    const CameraPoint& p = points[pp.index];
    const float u = pp.u, v = pp.v;
    const int ui = static_cast<int>(std::floor(u + 0.5f));
    const int vi = static_cast<int>(std::floor(v + 0.5f));
    for (int dv = -r; dv <= r; ++dv) {
      const int pv = vi + dv;
      if (pv < row_begin || pv >= row_end) continue;
      for (int du = -r; du <= r; ++du) {
        const int pu = ui + du;
        if (pu < 0 || pu >= w || (du == 0 && dv == 0)) continue;
        const std::size_t i = static_cast<std::size_t>(pv) * w + pu;
        if (valid[i]) continue;
        const float eu = static_cast<float>(pu) - u;
        const float ev = static_cast<float>(pv) - v;
        const float key = eu * eu + ev * ev;
        if (key < scratch.fringe_key[i] ||
            (key == scratch.fringe_key[i] && p.z < scratch.fringe_depth[i])) {
          scratch.fringe_key[i] = key;
          scratch.fringe_depth[i] = p.z;
          scratch.fringe_value[i] = p.intensity;
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i] && scratch.fringe_key[i] < kInf) {
      valid[i] = 1;
      depth[i] = scratch.fringe_depth[i];
      value[i] = scratch.fringe_value[i];
    }
  }
}

LidarIntensityImage render_intensity_image(const IntensityCloud& camera_cloud,
                                           const CameraIntrinsics& k, const RenderOptions& opts) {
  std::vector<CameraPoint> pts;
  pts.reserve(camera_cloud.size());
  for (const auto& p : camera_cloud.points)
    pts.push_back({static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z),
                   p.intensity});
  LidarIntensityImage img;
  RenderScratch scratch;
  render_points(pts, k, opts, img, scratch);
  return img;
}

}  // namespace roadcal

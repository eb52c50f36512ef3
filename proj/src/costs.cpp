#include "roadcal/costs.hpp"

#include <algorithm>
#include <cmath>

namespace roadcal {

double edge_cost(const BinaryImage& lidar_edges, const FloatImage& dt, const BinaryImage* valid,
                 bool normalize, double saturation) {
  if (!lidar_edges.same_size(dt) || (valid && !valid->same_size(dt)))
    throw CalibrationError("edge cost inputs differ in size");
  double sum = 0;
  std::size_t count = 0;
  const auto& e = lidar_edges.data();
  const auto& g = dt.data();
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!e[i] || (valid && !valid->data()[i])) continue;
    sum += g[i];
    ++count;
  }
  if (count == 0) return saturation;
  return normalize ? sum / static_cast<double>(count) : sum;
}

JointHistogram joint_histogram(const GrayImage& x, const GrayImage& y, const BinaryImage* mask,
                               int bins) {
  if (!x.same_size(y) || (mask && !mask->same_size(x)))
    throw CalibrationError("histogram inputs differ in size");
  if (bins < 1 || bins > 256) throw CalibrationError("histogram bins must be in [1, 256]");
  JointHistogram h;
  h.bins = bins;
  h.joint.assign(static_cast<std::size_t>(bins) * bins, 0);
  h.px.assign(static_cast<std::size_t>(bins), 0);
  h.py.assign(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask && !mask->data()[i]) continue;
    const int bx = x.data()[i] * bins / 256;
    const int by = y.data()[i] * bins / 256;
    ++h.joint[static_cast<std::size_t>(bx) * bins + by];
    ++h.px[static_cast<std::size_t>(bx)];
    ++h.py[static_cast<std::size_t>(by)];
    ++h.total;
  }
  return h;
}

double entropy(const std::vector<std::uint64_t>& counts, std::uint64_t total) {
  if (total == 0) return 0.0;
  const double n = static_cast<double>(total);
  double h = 0;
  for (auto c : counts)
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
  return h;
}

double nid_from_histogram(const JointHistogram& h, std::size_t min_covalid) {
  if (h.total < min_covalid || h.total == 0) return 1.0;
  const double hxy = entropy(h.joint, h.total);
  if (hxy <= 0.0) return 0.0;
  const double nid = 2.0 - (entropy(h.px, h.total) + entropy(h.py, h.total)) / hxy;
  return std::clamp(nid, 0.0, 1.0);
}

double nid_cost(const GrayImage& stereo, const LidarIntensityImage& lidar, const BinaryImage& mask,
                int bins, std::size_t min_covalid) {
  BinaryImage covalid(mask.width(), mask.height(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i)
    covalid.data()[i] = mask.data()[i] && lidar.valid.data()[i];
  return nid_from_histogram(joint_histogram(stereo, lidar.intensity, &covalid, bins), min_covalid);
}

double plane_cost(const std::vector<Eigen::Vector3d>& road, const PlaneModel& m,
                  PlaneResidual mode) {
  if (road.empty()) throw RoadNotFound("plane cost of an empty road cloud");
  double sum = 0;
  for (const auto& p : road) {
    const double r = m.signed_distance(p);
    sum += mode == PlaneResidual::Absolute ? std::abs(r) : r;
  }
  return sum / static_cast<double>(road.size());
}

double plane_cost(const IntensityCloud& road, const PlaneModel& m, PlaneResidual mode) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(road.size());
  for (const auto& p : road.points) pts.push_back(p.position());
  return plane_cost(pts, m, mode);
}

FrameInputs make_frame_inputs(int frame_id, double timestamp, const CameraIntrinsics& k,
                              GrayImage gray, BinaryImage road_mask, const PlaneModel& plane,
                              const CannyOptions& canny) {
  FrameInputs f;
  f.frame_id = frame_id;
  f.timestamp = timestamp;
  f.k = k;
  f.plane = plane;
  f.row_begin = road_mask.height();
  f.row_end = 0;
  for (int v = 0; v < road_mask.height(); ++v)
    for (int u = 0; u < road_mask.width(); ++u)
      if (road_mask(u, v)) {
        f.row_begin = std::min(f.row_begin, v);
        f.row_end = v + 1;
        break;
      }
  if (f.row_begin >= f.row_end) f.row_begin = f.row_end = 0;
  f.stereo_edges = canny_edges(gray, canny, &road_mask);
  f.stereo_dt = distance_transform(f.stereo_edges, static_cast<float>(k.diagonal()));
  f.gray = std::move(gray);
  f.road_mask = std::move(road_mask);
  return f;
}

FrameCost FrameEvaluator::evaluate(const FrameInputs& frame, const Pose6& camera_to_vehicle,
                                   const CostWeights& w, const CostOptions& opts,
                                   FrameRender* keep) {
  const CameraIntrinsics& k = frame.k;
  const RigidTransform vehicle_to_camera = pose_to_transform(camera_to_vehicle).inverse();
  const Eigen::Matrix3f r = vehicle_to_camera.rotation().cast<float>();
  const Eigen::Vector3f t = vehicle_to_camera.translation().cast<float>();
  const Eigen::Vector3f n = frame.plane.normal().cast<float>();
  const float d = static_cast<float>(frame.plane.d);

  const std::size_t count = frame.points.xyz.size();
  cam_.resize(count);
  plane_dist_.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::Vector3f p = r * frame.points.xyz[i] + t;
    cam_[i] = {p.x(), p.y(), p.z(), frame.points.intensity[i]};
    plane_dist_[i] = n.dot(p) + d;
  }

  const int pad = static_cast<int>(std::ceil(3.0 * opts.canny.sigma)) + 3;
  render_points(cam_, k, opts.render, render_, scratch_, frame.row_begin - pad,
                frame.row_end + pad);
  BinaryImage lidar_edges = canny_edges(render_.intensity, opts.canny, &frame.road_mask,
                                        &render_.valid, frame.row_begin, frame.row_end);

  FrameCost c;
  c.frame_id = frame.frame_id;
  c.lidar_edge_pixels = count_nonzero(lidar_edges);
  c.f_edge = edge_cost(lidar_edges, frame.stereo_dt, &render_.valid, opts.edge_normalize,
                       k.diagonal());
  for (std::size_t i = 0; i < frame.road_mask.size(); ++i)
    if (frame.road_mask.data()[i] && render_.valid.data()[i]) ++c.covalid_pixels;
  c.f_nid = nid_cost(frame.gray, render_, frame.road_mask, opts.nid_bins, opts.min_covalid);

  // plane term: the largest region seeded by points near the stereo plane,
  // evaluated on its points that land on the road mask
  if (frame.regions) {
    int road = -1;
    for (std::size_t i = 0; i < count; ++i) {
      if (std::abs(plane_dist_[i]) > opts.tau_seed) continue;
      const int label = frame.points.label[i];
      if (label < 0 || label == road) continue;
      const std::size_t size = frame.regions->region_size(label);
      if (road < 0 || size > frame.regions->region_size(road) ||
          (size == frame.regions->region_size(road) && label < road))
        road = label;
    }
    double sum = 0;
    std::size_t used = 0;
    const float z_min = static_cast<float>(opts.render.z_min);
    for (std::size_t i = 0; road >= 0 && i < count; ++i) {
      if (frame.points.label[i] != road) continue;
      const CameraPoint& p = cam_[i];
      if (!(p.z > z_min)) continue;
      const int u = static_cast<int>(std::floor(static_cast<float>(k.f) * p.x / p.z +
                                                static_cast<float>(k.cu) + 0.5f));
      const int v = static_cast<int>(std::floor(static_cast<float>(k.f) * p.y / p.z +
                                                static_cast<float>(k.cv) + 0.5f));
      if (!frame.road_mask.contains(u, v) || !frame.road_mask(u, v)) continue;
      sum += opts.plane_residual == PlaneResidual::Absolute ? std::abs(plane_dist_[i])
                                                             : plane_dist_[i];
      ++used;
    }
    if (used > 0) {
      c.f_plane = sum / static_cast<double>(used);
      c.plane_used = true;
    }
  }
  c.f_sum = w.k1 * c.f_edge + w.k2 * c.f_nid + w.k3 * c.f_plane;
  if (keep) {
    keep->lidar = render_;
    keep->lidar_edges = std::move(lidar_edges);
  }
  return c;
}

CostModel::CostModel(std::vector<FrameInputs> frames, CostWeights weights, CostOptions options)
    : frames_(std::move(frames)), weights_(weights), options_(options) {
  if (frames_.empty()) throw CalibrationError("cost model needs at least one frame");
  if (weights_.k1 < 0 || weights_.k2 < 0 || weights_.k3 < 0)
    throw CalibrationError("cost weights must be non-negative");
}

CostBreakdown CostModel::evaluate(const Pose6& camera_to_vehicle) {
  CostBreakdown b;
  for (const FrameInputs& f : frames_) {
    const FrameCost c = evaluator_.evaluate(f, camera_to_vehicle, weights_, options_);
    b.f_edge += c.f_edge;
    b.f_nid += c.f_nid;
    b.f_plane += c.f_plane;
    b.f_sum += c.f_sum;
    b.frames.push_back(c);
  }
  return b;
}

CostBreakdown total_cost(const std::vector<FrameInputs>& frames, const Pose6& camera_to_vehicle,
                         const CostWeights& w, const CostOptions& opts) {
  if (frames.empty()) throw CalibrationError("total cost needs at least one frame");
  FrameEvaluator ev;
  CostBreakdown b;
  for (const FrameInputs& f : frames) {
    const FrameCost c = ev.evaluate(f, camera_to_vehicle, w, opts);
    b.f_edge += c.f_edge;
    b.f_nid += c.f_nid;
    b.f_plane += c.f_plane;
    b.f_sum += c.f_sum;
    b.frames.push_back(c);
  }
  return b;
}

}  // namespace roadcal

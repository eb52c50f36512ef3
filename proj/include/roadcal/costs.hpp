#pragma once

#include "roadcal/edges.hpp"
#include "roadcal/geometry.hpp"
#include "roadcal/image.hpp"
#include "roadcal/local_map.hpp"
#include "roadcal/region_growing.hpp"
#include "roadcal/stereo_road.hpp"

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace roadcal {

// --- individual costs -------------------------------------------------------

/// Mean (or, with normalize = false, summed) distance-transform value over
/// LiDAR edge pixels, restricted to `valid` when given. With no LiDAR edge
/// pixels the frame is uninformative and the cost is `saturation`.
double edge_cost(const BinaryImage& lidar_edges, const FloatImage& dt, const BinaryImage* valid,
                 bool normalize, double saturation);

struct JointHistogram {
  int bins = 0;
  std::vector<std::uint64_t> joint;  // bins x bins, row = x bin
  std::vector<std::uint64_t> px, py;
  std::uint64_t total = 0;

  std::uint64_t operator()(int bx, int by) const {
    return joint[static_cast<std::size_t>(bx) * bins + by];
  }
};

/// Histogram of (x, y) pixel pairs where `mask` is set (all pixels when null).
JointHistogram joint_histogram(const GrayImage& x, const GrayImage& y, const BinaryImage* mask,
                               int bins);

/// Entropy in nats of a count vector.
double entropy(const std::vector<std::uint64_t>& counts, std::uint64_t total);

/// 2 - (H(X) + H(Y)) / H(X,Y), clamped to [0, 1]; 1 when fewer than
/// `min_covalid` samples; 0 when H(X,Y) = 0.
double nid_from_histogram(const JointHistogram& h, std::size_t min_covalid);

/// NID over pixels that are road-masked and LiDAR-valid.
double nid_cost(const GrayImage& stereo, const LidarIntensityImage& lidar, const BinaryImage& mask,
                int bins = 32, std::size_t min_covalid = 1000);

enum class PlaneResidual { Absolute, Signed };

/// Mean |n.p + d| over the points (or the mean signed residual). Throws
/// RoadNotFound for an empty set.
double plane_cost(const std::vector<Eigen::Vector3d>& road, const PlaneModel& m,
                  PlaneResidual mode = PlaneResidual::Absolute);
double plane_cost(const IntensityCloud& road, const PlaneModel& m,
                  PlaneResidual mode = PlaneResidual::Absolute);

// --- multi-frame objective --------------------------------------------------

struct CostWeights {
  double k1 = 2.0;
  double k2 = 500.0;
  double k3 = 0.1;
};

struct CostOptions {
  CannyOptions canny;
  int nid_bins = 32;
  std::size_t min_covalid = 1000;
  bool edge_normalize = true;
  PlaneResidual plane_residual = PlaneResidual::Absolute;
  RenderOptions render;
  double tau_seed = 0.1;
};

/// Map points prepared for one frame, in the vehicle frame at image time.
struct FramePoints {
  std::vector<Eigen::Vector3f> xyz;
  std::vector<std::uint8_t> intensity;
  std::vector<int> label;  // region label, -1 when unlabelled
};

/// Everything one frame contributes to the objective, fixed before
/// optimization starts.
struct FrameInputs {
  int frame_id = 0;
  double timestamp = 0;
  CameraIntrinsics k;
  GrayImage gray;          // stereo reference image
  BinaryImage road_mask;
  BinaryImage stereo_edges;
  FloatImage stereo_dt;
  PlaneModel plane;        // road plane in the camera frame
  int row_begin = 0;       // rows that contain road pixels
  int row_end = 0;
  FramePoints points;
  std::shared_ptr<const RegionSegmentation> regions;
};

/// Builds the stereo-side images of a frame (edges, distance transform, row
/// band) from its gray image, road mask and plane.
FrameInputs make_frame_inputs(int frame_id, double timestamp, const CameraIntrinsics& k,
                              GrayImage gray, BinaryImage road_mask, const PlaneModel& plane,
                              const CannyOptions& canny);

struct FrameCost {
  int frame_id = 0;
  double f_edge = 0;
  double f_nid = 0;
  double f_plane = 0;
  double f_sum = 0;
  bool plane_used = false;
  std::size_t lidar_edge_pixels = 0;
  std::size_t covalid_pixels = 0;
};

struct CostBreakdown {
  double f_edge = 0;
  double f_nid = 0;
  double f_plane = 0;
  double f_sum = 0;
  std::vector<FrameCost> frames;
};

/// Artifacts of one frame evaluation, for inspection.
struct FrameRender {
  LidarIntensityImage lidar;
  BinaryImage lidar_edges;
};

/// Evaluates the weighted sum for one frame under a camera-to-vehicle
/// extrinsic. Never throws for an uninformative candidate: missing data
/// saturates the affected term.
class FrameEvaluator {
 public:
  FrameCost evaluate(const FrameInputs& frame, const Pose6& camera_to_vehicle,
                     const CostWeights& w, const CostOptions& opts, FrameRender* keep = nullptr);

 private:
  std::vector<CameraPoint> cam_;
  std::vector<float> plane_dist_;
  LidarIntensityImage render_;
  RenderScratch scratch_;
};

/// Sum of per-frame weighted costs in frame order.
class CostModel {
 public:
  CostModel(std::vector<FrameInputs> frames, CostWeights weights, CostOptions options);

  CostBreakdown evaluate(const Pose6& camera_to_vehicle);
  double operator()(const Pose6& camera_to_vehicle) { return evaluate(camera_to_vehicle).f_sum; }

  const std::vector<FrameInputs>& frames() const { return frames_; }
  const CostWeights& weights() const { return weights_; }
  const CostOptions& options() const { return options_; }

 private:
  std::vector<FrameInputs> frames_;
  CostWeights weights_;
  CostOptions options_;
  FrameEvaluator evaluator_;
};

/// Stateless form of CostModel::evaluate.
CostBreakdown total_cost(const std::vector<FrameInputs>& frames, const Pose6& camera_to_vehicle,
                         const CostWeights& w, const CostOptions& opts = {});

}  // namespace roadcal

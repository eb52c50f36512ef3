#pragma once

#include "roadcal/config.hpp"
#include "roadcal/costs.hpp"
#include "roadcal/dataset_io.hpp"
#include "roadcal/image_selection.hpp"
#include "roadcal/nelder_mead.hpp"
#include "roadcal/stereo_road.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace roadcal {

/// Which stereo image is the reference (the camera being calibrated).
enum class CameraSide { Left, Right };

CameraSide parse_camera_side(const std::string& s);

/// Road detection and selection score of one stereo frame.
struct FrameAnalysis {
  int frame_id = 0;
  double timestamp = 0;
  bool road_found = false;
  std::string failure;  // why road detection failed, when it did
  RoadLine line;
  double horizon = 0;
  BinaryImage road_mask;
  PlaneModel plane;
  std::vector<LineSegment> segments;
  VanishingEstimate vanishing;
  ImageUtility utility;
};

using DisparityMap = std::map<int, DisparityImage>;  // frame id -> reference disparity

/// Disparity (unless supplied), v-disparity road line, road mask, plane,
/// segments, vanishing point and utility. A frame without a road gets
/// road_found = false and utility 0; it never throws for that.
FrameAnalysis analyze_frame(const StereoFrame& frame, const CameraIntrinsics& k, CameraSide side,
                            const Config& cfg, const DisparityImage* disparity = nullptr);

std::vector<FrameAnalysis> analyze_frames(const Dataset& ds, CameraSide side, const Config& cfg,
                                          const DisparityMap* disparities = nullptr);

std::vector<ImageUtility> utilities_of(const std::vector<FrameAnalysis>& analyses);

/// Top-K frames among those with a road. Throws CalibrationError
/// "no informative frames" when no frame qualifies.
std::vector<int> select_frames(const std::vector<FrameAnalysis>& analyses, int k);

/// Dataset plus its stereo analysis and lazily built local maps; the source
/// of per-frame cost inputs for calibrate, sweep and repeatability.
class CalibrationProblem {
 public:
  CalibrationProblem(const Dataset& ds, Config cfg, CameraSide side,
                     const DisparityMap* disparities = nullptr);

  const Dataset& dataset() const { return ds_; }
  const Config& config() const { return cfg_; }
  CameraSide side() const { return side_; }
  const std::vector<FrameAnalysis>& analyses() const { return analyses_; }
  const FrameAnalysis& analysis(int frame_id) const;

  /// Pose used to crop and thin the map per frame: the shipped nominal for
  /// this camera when present, otherwise `fallback`.
  Pose6 anchor(const Pose6& fallback) const;

  std::vector<int> select(int k) const { return select_frames(analyses_, k); }

  /// Cost inputs for the given frames. Map points are cropped to the anchor
  /// camera's enlarged frustum and thinned with distance.
  std::vector<FrameInputs> prepare(const std::vector<int>& frame_ids, const Pose6& anchor);

  /// Global-frame map covering `timestamp`, with its region segmentation.
  const GlobalMap& map_at(double timestamp);
  std::shared_ptr<const RegionSegmentation> regions_at(double timestamp);

 private:
  struct LocalMap {
    double t_begin = 0, t_end = 0;
    GlobalMap map;
    std::shared_ptr<const RegionSegmentation> regions;
    std::vector<int> labels;  // per map point
  };
  LocalMap& local_map_for(double timestamp);

  const Dataset& ds_;
  Config cfg_;
  CameraSide side_;
  std::vector<FrameAnalysis> analyses_;
  std::vector<std::pair<double, double>> windows_;
  std::vector<std::unique_ptr<LocalMap>> maps_;
};

struct CalibrationResult {
  Pose6 estimate;
  double cost = 0;
  double initial_cost = 0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  CostBreakdown breakdown;           // at the estimate
  std::vector<double> best_history;  // best vertex cost per iteration
  std::vector<int> frame_ids;
};

/// Nelder-Mead on the summed cost of the given frames, starting at `init`.
CalibrationResult optimize(const std::vector<FrameInputs>& frames, const Config& cfg,
                           const Pose6& init);

/// Full pipeline: selection of K frames, cost inputs, optimization.
CalibrationResult calibrate(CalibrationProblem& problem, const Pose6& init, int k);

struct SweepRow {
  int param = 0;
  double offset = 0;  // m or deg
  CostBreakdown cost;
};

/// Offsets r * (2i - (N-1)) / (N-1), i = 0..N-1, of one parameter (0..2
/// translation in m, 3..5 rotation in deg) around `reference`. A zero range
/// or N = 1 gives a single row at the reference.
std::vector<SweepRow> sweep(const std::vector<FrameInputs>& frames, const Config& cfg,
                            const Pose6& reference, int param, double range, int steps);

/// Index of the minimum f_sum (first on ties).
std::size_t sweep_argmin(const std::vector<SweepRow>& rows);

struct RepeatRun {
  int run = 0;
  int images = 0;
  Pose6 init;
  Pose6 estimate;
  Vector6d error = Vector6d::Zero();  // m and deg
  double cost = 0;
  int iterations = 0;
  bool converged = false;
  bool history_monotone = true;
};

struct RepeatSummary {
  int images = 0;
  int param = 0;
  double q25 = 0, q50 = 0, q75 = 0;  // signed error quartiles
  double median_abs = 0;

  double iqr() const { return q75 - q25; }
};

struct RepeatabilityReport {
  std::vector<RepeatRun> runs;
  std::vector<RepeatSummary> summary;

  const RepeatSummary& at(int images, int param) const;
};

struct RepeatOptions {
  int runs = 40;
  double perturb_t = 0.3;      // m
  double perturb_r_deg = 3.0;
  std::vector<int> counts{1, 2, 5};
  std::uint64_t seed = 0;
  int threads = 0;             // 0: hardware concurrency
};

/// Every run draws one initial offset (uniform in the perturbation box) and
/// optimizes from it with the top-K frames for each K in `counts`.
RepeatabilityReport repeatability(CalibrationProblem& problem, const Pose6& reference,
                                  const RepeatOptions& opts);

/// Linear-interpolation quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Per-axis difference in m and deg, angles wrapped.
Vector6d pose_error(const Pose6& estimate, const Pose6& reference);

/// Map intensity projected onto the reference image under `camera_to_vehicle`.
RgbImage projection_overlay(CalibrationProblem& problem, int frame_id,
                            const Pose6& camera_to_vehicle);

}  // namespace roadcal

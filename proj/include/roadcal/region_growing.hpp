#pragma once

#include "roadcal/geometry.hpp"
#include "roadcal/stereo_road.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace roadcal {

struct RegionGrowingOptions {
  int k = 12;                     // neighbours for normals and growth
  double theta_smooth_deg = 10.0; // max deviation from the region normal
  double voxel = 0.1;             // m, downsampling before segmentation
  double tau_seed = 0.1;          // m, seed distance from the road plane
};

/// Uniform voxel grid keyed by integer cell coordinates.
class VoxelGrid {
 public:
  explicit VoxelGrid(double size = 0.1) : size_(size) {}

  std::int64_t key(const Eigen::Vector3d& p) const;
  double size() const { return size_; }

 private:
  double size_;
};

/// k nearest neighbours (excluding the query point itself) for every point,
/// ordered by distance and then index.
std::vector<std::vector<int>> k_nearest_neighbours(const std::vector<Eigen::Vector3d>& points,
                                                   int k);

/// Smoothness-constrained region growing over a voxel-downsampled cloud.
///
/// Labels depend only on relative geometry, so a segmentation computed in
/// one frame stays valid after any rigid transform of the cloud.
class RegionSegmentation {
 public:
  RegionSegmentation() = default;
  RegionSegmentation(const std::vector<Eigen::Vector3d>& points, const RegionGrowingOptions& opts);

  /// Label of the voxel containing `p` (same frame as the construction
  /// points), or -1 if that voxel is empty.
  int label_of(const Eigen::Vector3d& p) const;

  std::size_t region_count() const { return region_sizes_.size(); }
  std::size_t region_size(int label) const {
    return label < 0 ? 0 : region_sizes_[static_cast<std::size_t>(label)];
  }

  const std::vector<Eigen::Vector3d>& voxel_points() const { return voxel_points_; }
  const std::vector<int>& voxel_labels() const { return voxel_labels_; }
  const std::vector<Eigen::Vector3d>& voxel_normals() const { return voxel_normals_; }

 private:
  VoxelGrid grid_;
  std::unordered_map<std::int64_t, int> voxel_index_;
  std::vector<Eigen::Vector3d> voxel_points_;
  std::vector<Eigen::Vector3d> voxel_normals_;
  std::vector<int> voxel_labels_;
  std::vector<std::size_t> region_sizes_;  // in voxels
};

/// Among the labels of `seed_labels` (labels of points near the plane), the
/// one with the largest region; -1 if none.
int largest_seeded_region(const RegionSegmentation& seg, const std::vector<int>& seed_labels);

/// Road points of a camera-frame cloud: region growing on the cloud, seeded
/// by points within tau_seed of `plane`; the largest seeded region is
/// returned. Throws RoadNotFound when nothing is found.
IntensityCloud segment_road_points(const IntensityCloud& map_in_camera, const PlaneModel& plane,
                                   const RegionGrowingOptions& opts = {});

}  // namespace roadcal

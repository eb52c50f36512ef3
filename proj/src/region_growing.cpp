#include "roadcal/region_growing.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace roadcal {

namespace {

constexpr std::int64_t kAxisOffset = 1 << 20;

std::int64_t pack(std::int64_t i, std::int64_t j, std::int64_t k) {
  return ((i + kAxisOffset) << 42) | ((j + kAxisOffset) << 21) | (k + kAxisOffset);
}

Eigen::Vector3i cell_of(const Eigen::Vector3d& p, double size) {
  return {static_cast<int>(std::floor(p.x() / size)), static_cast<int>(std::floor(p.y() / size)),
          static_cast<int>(std::floor(p.z() / size))};
}

}  // namespace

std::int64_t VoxelGrid::key(const Eigen::Vector3d& p) const {
  const Eigen::Vector3i c = cell_of(p, size_);
  return pack(c.x(), c.y(), c.z());
}

std::vector<std::vector<int>> k_nearest_neighbours(const std::vector<Eigen::Vector3d>& points,
                                                   int k) {
  const std::size_t n = points.size();
  std::vector<std::vector<int>> out(n);
  if (n < 2 || k < 1) return out;

  // cell size from the mean spacing implied by the bounding box area; the
  // ring search below is exact whatever the cell size
  Eigen::Vector3d lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::Vector3d ext = (hi - lo).cwiseMax(1e-6);
  const double area = std::max({ext.x() * ext.y(), ext.y() * ext.z(), ext.x() * ext.z()});
  const double density = (k + 1) / static_cast<double>(n);
  const double cell = std::max({1e-3, std::sqrt(area * density), ext.maxCoeff() * density});

  std::unordered_map<std::int64_t, std::vector<int>> grid;
  grid.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3i c = cell_of(points[i], cell);
    grid[pack(c.x(), c.y(), c.z())].push_back(static_cast<int>(i));
  }
  const Eigen::Vector3i cmin = cell_of(lo, cell), cmax = cell_of(hi, cell);
  const int max_ring = (cmax - cmin).maxCoeff() + 1;
  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k), n - 1);

  std::vector<std::pair<double, int>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3i c = cell_of(points[i], cell);
    cand.clear();
    for (int r = 0; r <= max_ring; ++r) {
      for (int dx = -r; dx <= r; ++dx)
        for (int dy = -r; dy <= r; ++dy)
          for (int dz = -r; dz <= r; ++dz) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
            auto it = grid.find(pack(c.x() + dx, c.y() + dy, c.z() + dz));
            if (it == grid.end()) continue;
            for (int j : it->second)
              if (j != static_cast<int>(i))
                cand.emplace_back((points[static_cast<std::size_t>(j)] - points[i]).squaredNorm(), j);
          }
      if (cand.size() >= want) {
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(want), cand.end());
        // anything outside the searched cube is at least r * cell away
        const double bound = r * cell;
        if (cand[want - 1].first <= bound * bound) break;
      }
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(want), cand.end());
    out[i].reserve(want);
    for (std::size_t m = 0; m < want; ++m) out[i].push_back(cand[m].second);
  }
  return out;
}

RegionSegmentation::RegionSegmentation(const std::vector<Eigen::Vector3d>& points,
                                       const RegionGrowingOptions& opts)
    : grid_(opts.voxel) {
  // voxel centroids, in first-seen order
  std::vector<Eigen::Vector3d> sums;
  std::vector<int> counts;
  for (const auto& p : points) {
    const std::int64_t key = grid_.key(p);
    auto [it, inserted] = voxel_index_.try_emplace(key, static_cast<int>(sums.size()));
    if (inserted) {
      sums.push_back(p);
      counts.push_back(1);
    } else {
      sums[static_cast<std::size_t>(it->second)] += p;
      ++counts[static_cast<std::size_t>(it->second)];
    }
  }
  const std::size_t n = sums.size();
  voxel_points_.resize(n);
  for (std::size_t i = 0; i < n; ++i) voxel_points_[i] = sums[i] / counts[i];

  const auto nbrs = k_nearest_neighbours(voxel_points_, opts.k);
  voxel_normals_.assign(n, Eigen::Vector3d::UnitZ());
  std::vector<double> curvature(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (nbrs[i].size() < 2) continue;
    Eigen::Vector3d mean = voxel_points_[i];
    for (int j : nbrs[i]) mean += voxel_points_[static_cast<std::size_t>(j)];
    mean /= static_cast<double>(nbrs[i].size() + 1);
    Eigen::Matrix3d cov = (voxel_points_[i] - mean) * (voxel_points_[i] - mean).transpose();
    for (int j : nbrs[i]) {
      const Eigen::Vector3d q = voxel_points_[static_cast<std::size_t>(j)] - mean;
      cov += q * q.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    voxel_normals_[i] = es.eigenvectors().col(0).normalized();
    const double trace = es.eigenvalues().sum();
    curvature[i] = trace > 0 ? es.eigenvalues()(0) / trace : 0.0;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return curvature[a] < curvature[b]; });

  const double cos_limit = std::cos(deg2rad(opts.theta_smooth_deg));
  voxel_labels_.assign(n, -1);
  std::deque<std::size_t> queue;
  for (std::size_t seed : order) {
    if (voxel_labels_[seed] >= 0) continue;
    const int label = static_cast<int>(region_sizes_.size());
    region_sizes_.push_back(1);
    voxel_labels_[seed] = label;
    Eigen::Vector3d normal_sum = voxel_normals_[seed];
    queue.assign(1, seed);
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      const Eigen::Vector3d region_normal = normal_sum.normalized();
      for (int j : nbrs[cur]) {
        const auto nj = static_cast<std::size_t>(j);
        if (voxel_labels_[nj] >= 0) continue;
        const double c = voxel_normals_[nj].dot(region_normal);
        if (std::abs(c) < cos_limit) continue;
        voxel_labels_[nj] = label;
        ++region_sizes_.back();
        normal_sum += c < 0 ? -voxel_normals_[nj] : voxel_normals_[nj];
        queue.push_back(nj);
      }
    }
  }
}

int RegionSegmentation::label_of(const Eigen::Vector3d& p) const {
  auto it = voxel_index_.find(grid_.key(p));
  return it == voxel_index_.end() ? -1 : voxel_labels_[static_cast<std::size_t>(it->second)];
}

int largest_seeded_region(const RegionSegmentation& seg, const std::vector<int>& seed_labels) {
  int best = -1;
  for (int label : seed_labels) {
    if (label < 0) continue;
    if (best < 0 || seg.region_size(label) > seg.region_size(best) ||
        (seg.region_size(label) == seg.region_size(best) && label < best))
      best = label;
  }
  return best;
}

IntensityCloud segment_road_points(const IntensityCloud& map_in_camera, const PlaneModel& plane,
                                   const RegionGrowingOptions& opts) {
  if (map_in_camera.empty()) throw RoadNotFound("empty cloud for road segmentation");
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(map_in_camera.size());
  for (const auto& p : map_in_camera.points) pts.push_back(p.position());
  const RegionSegmentation seg(pts, opts);

  std::vector<int> seeds;
  for (const auto& p : pts)
    if (std::abs(plane.signed_distance(p)) <= opts.tau_seed) seeds.push_back(seg.label_of(p));
  if (seeds.empty()) throw RoadNotFound("no points near the stereo road plane");
  const int road = largest_seeded_region(seg, seeds);
  IntensityCloud out;
  out.frame_id = map_in_camera.frame_id;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (seg.label_of(pts[i]) == road) out.points.push_back(map_in_camera.points[i]);
  if (out.empty()) throw RoadNotFound("no road points found by region growing");
  return out;
}

}  // namespace roadcal

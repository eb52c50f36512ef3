#pragma once

#include "roadcal/edges.hpp"
#include "roadcal/image.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace roadcal {

/// Image line segment with start, end and centre pixel.
struct LineSegment {
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  Eigen::Vector2d e = Eigen::Vector2d::Zero();
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  double length = 0;

  static LineSegment from_endpoints(const Eigen::Vector2d& s, const Eigen::Vector2d& e) {
    return {s, e, 0.5 * (s + e), (e - s).norm()};
  }
};

struct HoughOptions {
  double rho = 1.0;         // px
  double theta_deg = 1.0;
  int threshold = 10;       // accumulator votes before a line is traced
  double min_length = 20.0; // px
  int max_gap = 3;          // px
  std::uint64_t seed = 0;
};

/// Progressive probabilistic Hough transform over the nonzero pixels of
/// `edges`. Deterministic for a fixed seed.
std::vector<LineSegment> hough_segments(const BinaryImage& edges, const HoughOptions& opts = {});

struct MergeOptions {
  double angle_deg = 2.0;  // direction tolerance
  double distance = 2.0;   // px, endpoint distance from the longer segment's line
  double gap = 3.0;        // px, largest gap bridged along the line
};

/// Greedily fuses near-collinear segments that overlap or nearly touch, so an
/// edge traced in several pieces comes back as one segment. Longest first;
/// each fusion keeps the longer segment's line and extends it to the union.
std::vector<LineSegment> merge_collinear(std::vector<LineSegment> segments, const MergeOptions& opts = {});

struct SegmentOptions {
  CannyOptions canny;
  HoughOptions hough;
  MergeOptions merge;
  double min_mask_fraction = 0.9;
};

/// Fraction of the pixels along the segment that lie in `mask`.
double mask_fraction(const LineSegment& seg, const BinaryImage& mask);

/// Canny edges of the masked road image traced into segments and merged; only segments
/// lying at least `min_mask_fraction` inside the mask are kept.
std::vector<LineSegment> detect_segments(const GrayImage& road_image, const BinaryImage& mask,
                                         const SegmentOptions& opts = {});

}  // namespace roadcal

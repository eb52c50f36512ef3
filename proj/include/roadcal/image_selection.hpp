#pragma once

#include "roadcal/hough.hpp"
#include "roadcal/image.hpp"

#include <Eigen/Core>

#include <vector>

namespace roadcal {

struct VoteOptions {
  double threshold_deg = 3.0;  // votes vanish above this angle
  double cap = 10.0;           // weight ceiling near zero angle
};

/// min(1/alpha, cap) for alpha <= threshold, 0 beyond; alpha in degrees.
double vote_weight(double alpha_deg, const VoteOptions& opts = {});

/// Angle in degrees between two undirected lines, in [0, 90].
double line_angle_deg(const Eigen::Vector2d& a, const Eigen::Vector2d& b);

/// Rectangular vote accumulator; cell (i, j) is pixel (origin_u + i, origin_v + j).
struct VotingRegion {
  int origin_u = 0;
  int origin_v = 0;
  int width = 0;
  int height = 0;
  std::vector<double> votes;  // height x width, row-major

  double& at(int i, int j) { return votes[static_cast<std::size_t>(j) * width + i]; }
  double at(int i, int j) const { return votes[static_cast<std::size_t>(j) * width + i]; }
};

/// Region of size width x height centred on `center`.
VotingRegion make_voting_region(const Eigen::Vector2d& center, int width, int height);

struct VanishingEstimate {
  Eigen::Vector2d p_van = Eigen::Vector2d::Zero();
  double u_van = 0;
  VotingRegion region;
};

/// Every segment votes for every region cell p with weight
/// vote_weight(angle between its own line and the line c -> p). The argmax
/// cell wins, ties to the smallest row and then the smallest column. A cell
/// that coincides with a segment centre gets no vote from it. With no
/// segments the estimate sits at the region centre with zero score.
VanishingEstimate estimate_vanishing_point(const std::vector<LineSegment>& segments,
                                           const Eigen::Vector2d& horizon_center, int region_width,
                                           int region_height, const VoteOptions& opts = {});

struct ImageUtility {
  int frame_id = 0;
  double timestamp = 0;
  double u_i = 0;
  std::size_t n_segments = 0;
  double u_van = 0;
};

/// U_I = sum_i min(1 / angle_i, 1) * U_van, angle_i between segment i and the
/// line from its centre to p_van (degrees; 0 contributes 1).
double image_utility(const std::vector<LineSegment>& segments, const VanishingEstimate& van);

/// Frame ids of the K largest utilities in descending order; ties go to the
/// earlier timestamp. Returns everything (and warns) when fewer than K exist.
std::vector<int> select_informative(const std::vector<ImageUtility>& utilities, int k);

/// Debug overlay: segments green, voting region outline red, p_van a red dot.
RgbImage draw_selection_overlay(const GrayImage& image, const std::vector<LineSegment>& segments,
                                const VanishingEstimate& van);

}  // namespace roadcal

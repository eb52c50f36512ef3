#include "roadcal/image_selection.hpp"

#include "roadcal/geometry.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace roadcal {

double vote_weight(double alpha_deg, const VoteOptions& opts) {
  if (alpha_deg > opts.threshold_deg) return 0.0;
  if (alpha_deg <= 0.0) return opts.cap;
  return std::min(1.0 / alpha_deg, opts.cap);
}

double line_angle_deg(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const double cross = a.x() * b.y() - a.y() * b.x();
  const double dot = a.dot(b);
  return rad2deg(std::atan2(std::abs(cross), std::abs(dot)));
}

VotingRegion make_voting_region(const Eigen::Vector2d& center, int width, int height) {
  VotingRegion r;
  r.width = std::max(1, width);
  r.height = std::max(1, height);
  r.origin_u = static_cast<int>(std::lround(center.x() - 0.5 * (r.width - 1)));
  r.origin_v = static_cast<int>(std::lround(center.y() - 0.5 * (r.height - 1)));
  r.votes.assign(static_cast<std::size_t>(r.width) * r.height, 0.0);
  return r;
}

VanishingEstimate estimate_vanishing_point(const std::vector<LineSegment>& segments,
                                           const Eigen::Vector2d& horizon_center, int region_width,
                                           int region_height, const VoteOptions& opts) {
  VanishingEstimate est;
  est.region = make_voting_region(horizon_center, region_width, region_height);
  VotingRegion& r = est.region;
  est.p_van = {r.origin_u + (r.width - 1) / 2, r.origin_v + (r.height - 1) / 2};
  if (segments.empty()) return est;

  for (const LineSegment& seg : segments) {
    const Eigen::Vector2d dir = seg.e - seg.s;
    for (int j = 0; j < r.height; ++j)
      for (int i = 0; i < r.width; ++i) {
        const Eigen::Vector2d to_cell = Eigen::Vector2d(r.origin_u + i, r.origin_v + j) - seg.c;
        if (to_cell.squaredNorm() == 0.0) continue;
        r.at(i, j) += vote_weight(line_angle_deg(dir, to_cell), opts);
      }
  }
  // row-major scan with a strict comparison keeps the first maximum, i.e.
  // the smallest row and then the smallest column
  double best = -1;
  for (int j = 0; j < r.height; ++j)
    for (int i = 0; i < r.width; ++i)
      if (r.at(i, j) > best) {
        best = r.at(i, j);
        est.p_van = {r.origin_u + i, r.origin_v + j};
      }
  est.u_van = best;
  return est;
}

double image_utility(const std::vector<LineSegment>& segments, const VanishingEstimate& van) {
  double sum = 0;
  for (const LineSegment& seg : segments) {
    const Eigen::Vector2d to_van = van.p_van - seg.c;
    const double alpha = to_van.squaredNorm() == 0.0 ? 0.0 : line_angle_deg(seg.e - seg.s, to_van);
    sum += alpha <= 0.0 ? 1.0 : std::min(1.0 / alpha, 1.0);
  }
  return sum * van.u_van;
}

std::vector<int> select_informative(const std::vector<ImageUtility>& utilities, int k) {
  if (k < 1) throw CalibrationError("number of images to select must be at least 1");
  std::vector<std::size_t> order(utilities.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (utilities[a].u_i != utilities[b].u_i) return utilities[a].u_i > utilities[b].u_i;
    return utilities[a].timestamp < utilities[b].timestamp;
  });
  if (utilities.size() < static_cast<std::size_t>(k))
    spdlog::warn("only {} frames available, fewer than the {} requested", utilities.size(), k);
  std::vector<int> ids;
  for (std::size_t i = 0; i < order.size() && ids.size() < static_cast<std::size_t>(k); ++i)
    ids.push_back(utilities[order[i]].frame_id);
  return ids;
}

namespace {

void draw_line(RgbImage& img, Eigen::Vector2d a, Eigen::Vector2d b, const Rgb& color) {
  const int steps = std::max(1, static_cast<int>(std::ceil((b - a).lpNorm<Eigen::Infinity>())));
  for (int i = 0; i <= steps; ++i) {
    const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(i) / steps);
    const int u = static_cast<int>(std::lround(p.x()));
    const int v = static_cast<int>(std::lround(p.y()));
    if (img.contains(u, v)) img(u, v) = color;
  }
}

}  // namespace

RgbImage draw_selection_overlay(const GrayImage& image, const std::vector<LineSegment>& segments,
                                const VanishingEstimate& van) {
  RgbImage out(image.width(), image.height());
  for (int v = 0; v < image.height(); ++v)
    for (int u = 0; u < image.width(); ++u) out(u, v) = {image(u, v), image(u, v), image(u, v)};
  const Rgb green{0, 255, 0}, red{255, 0, 0};
  for (const LineSegment& s : segments) draw_line(out, s.s, s.e, green);
  const auto& r = van.region;
  const Eigen::Vector2d tl(r.origin_u, r.origin_v);
  const Eigen::Vector2d br(r.origin_u + r.width - 1, r.origin_v + r.height - 1);
  draw_line(out, tl, {br.x(), tl.y()}, red);
  draw_line(out, {br.x(), tl.y()}, br, red);
  draw_line(out, br, {tl.x(), br.y()}, red);
  draw_line(out, {tl.x(), br.y()}, tl, red);
  const int pu = static_cast<int>(std::lround(van.p_van.x()));
  const int pv = static_cast<int>(std::lround(van.p_van.y()));
  for (int dv = -2; dv <= 2; ++dv)
    for (int du = -2; du <= 2; ++du)
      if (du * du + dv * dv <= 4 && out.contains(pu + du, pv + dv)) out(pu + du, pv + dv) = red;
  return out;
}

}  // namespace roadcal

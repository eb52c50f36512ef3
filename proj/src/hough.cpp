#include "roadcal/hough.hpp"

#include "roadcal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace roadcal {

std::vector<LineSegment> hough_segments(const BinaryImage& edges, const HoughOptions& opts) {
  const int w = edges.width();
  const int h = edges.height();
  std::vector<LineSegment> out;
  if (w == 0 || h == 0) return out;

  const double theta = deg2rad(opts.theta_deg);
  const int numangle = std::max(1, static_cast<int>(std::lround(kPi / theta)));
  const int numrho = static_cast<int>(std::lround(((w + h) * 2 + 1) / opts.rho));
  std::vector<float> cos_t(static_cast<std::size_t>(numangle)), sin_t(cos_t.size());
  for (int n = 0; n < numangle; ++n) {
    cos_t[static_cast<std::size_t>(n)] = static_cast<float>(std::cos(n * theta) / opts.rho);
    sin_t[static_cast<std::size_t>(n)] = static_cast<float>(std::sin(n * theta) / opts.rho);
  }
  std::vector<int> accum(static_cast<std::size_t>(numangle) * numrho, 0);
  auto rho_index = [&](int n, int x, int y) {
    return static_cast<int>(std::lround(x * cos_t[static_cast<std::size_t>(n)] +
                                        y * sin_t[static_cast<std::size_t>(n)])) +
           (numrho - 1) / 2;
  };
  auto vote = [&](int x, int y, int delta) {
    for (int n = 0; n < numangle; ++n)
      accum[static_cast<std::size_t>(n) * numrho + rho_index(n, x, y)] += delta;
  };

  // pending: edge pixel not yet consumed by a traced line
  std::vector<std::uint8_t> pending(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::uint8_t> voted(pending.size(), 0);
  std::vector<Eigen::Vector2i> points;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (edges(x, y)) {
        points.emplace_back(x, y);
        pending[static_cast<std::size_t>(y) * w + x] = 1;
      }

  std::mt19937_64 rng(opts.seed);
  for (std::size_t i = points.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(points[i - 1], points[pick(rng)]);
  }

  constexpr int kShift = 16;
  for (const Eigen::Vector2i& pt : points) {
    const int px = pt.x(), py = pt.y();
    const std::size_t pi = static_cast<std::size_t>(py) * w + px;
    if (!pending[pi]) continue;

    int max_val = opts.threshold - 1, max_n = 0;
    for (int n = 0; n < numangle; ++n) {
      const int val = ++accum[static_cast<std::size_t>(n) * numrho + rho_index(n, px, py)];
      if (val > max_val) {
        max_val = val;
        max_n = n;
      }
    }
    voted[pi] = 1;
    if (max_val < opts.threshold) continue;

    // walk along the strongest line through this point in both directions
    const float a = -sin_t[static_cast<std::size_t>(max_n)];
    const float b = cos_t[static_cast<std::size_t>(max_n)];
    int x0 = px, y0 = py, dx0, dy0;
    const bool xflag = std::abs(a) > std::abs(b);
    if (xflag) {
      dx0 = a > 0 ? 1 : -1;
      dy0 = static_cast<int>(std::lround(b * (1 << kShift) / std::abs(a)));
      y0 = (y0 << kShift) + (1 << (kShift - 1));
    } else {
      dy0 = b > 0 ? 1 : -1;
      dx0 = static_cast<int>(std::lround(a * (1 << kShift) / std::abs(b)));
      x0 = (x0 << kShift) + (1 << (kShift - 1));
    }
    auto pixel = [&](int x, int y) {
      return xflag ? Eigen::Vector2i(x, y >> kShift) : Eigen::Vector2i(x >> kShift, y);
    };

    Eigen::Vector2i line_end[2] = {{px, py}, {px, py}};
    for (int k = 0; k < 2; ++k) {
      int gap = 0;
      const int dx = k ? -dx0 : dx0, dy = k ? -dy0 : dy0;
      for (int x = x0, y = y0;; x += dx, y += dy) {
        const Eigen::Vector2i q = pixel(x, y);
        if (q.x() < 0 || q.x() >= w || q.y() < 0 || q.y() >= h) break;
        if (pending[static_cast<std::size_t>(q.y()) * w + q.x()]) {
          gap = 0;
          line_end[k] = q;
        } else if (++gap > opts.max_gap) {
          break;
        }
      }
    }
    const Eigen::Vector2d s = line_end[0].cast<double>();
    const Eigen::Vector2d e = line_end[1].cast<double>();
    const bool good = (e - s).norm() >= opts.min_length;

    // consume the traced pixels; a good line also withdraws their votes
    for (int k = 0; k < 2; ++k) {
      const int dx = k ? -dx0 : dx0, dy = k ? -dy0 : dy0;
      for (int x = x0, y = y0;; x += dx, y += dy) {
        const Eigen::Vector2i q = pixel(x, y);
        if (q.x() < 0 || q.x() >= w || q.y() < 0 || q.y() >= h) break;
        const std::size_t qi = static_cast<std::size_t>(q.y()) * w + q.x();
        if (pending[qi]) {
          if (good && voted[qi]) {
            vote(q.x(), q.y(), -1);
            voted[qi] = 0;
          }
          pending[qi] = 0;
        }
        if (q == line_end[k]) break;
      }
    }
    if (good) out.push_back(LineSegment::from_endpoints(s, e));
  }
  return out;
}

std::vector<LineSegment> merge_collinear(std::vector<LineSegment> segments, const MergeOptions& opts) {
  const double cos_tol = std::cos(deg2rad(opts.angle_deg));
  bool changed = true;
  while (changed) {
    changed = false;
    std::stable_sort(segments.begin(), segments.end(),
                     [](const LineSegment& a, const LineSegment& b) { return a.length > b.length; });
    std::vector<LineSegment> kept;
    for (const LineSegment& seg : segments) {
      bool fused = false;
      for (LineSegment& k : kept) {
        if (k.length <= 0 || seg.length <= 0) continue;
        const Eigen::Vector2d dir = (k.e - k.s) / k.length;
        if (std::abs(dir.dot((seg.e - seg.s) / seg.length)) < cos_tol) continue;
        const Eigen::Vector2d normal(-dir.y(), dir.x());
        if (std::abs(normal.dot(seg.s - k.s)) > opts.distance ||
            std::abs(normal.dot(seg.e - k.s)) > opts.distance)
          continue;
        const double a = dir.dot(seg.s - k.s), b = dir.dot(seg.e - k.s);
        const double lo = std::min(a, b), hi = std::max(a, b);
        if (lo > k.length + opts.gap || hi < -opts.gap) continue;
        const Eigen::Vector2d origin = k.s;
        k = LineSegment::from_endpoints(origin + std::min(0.0, lo) * dir,
                                        origin + std::max(k.length, hi) * dir);
        fused = true;
        changed = true;
        break;
      }
      if (!fused) kept.push_back(seg);
    }
    segments = std::move(kept);
  }
  return segments;
}

double mask_fraction(const LineSegment& seg, const BinaryImage& mask) {
  const int steps = std::max(1, static_cast<int>(std::ceil(seg.length)));
  int inside = 0;
  for (int i = 0; i <= steps; ++i) {
    const Eigen::Vector2d p = seg.s + (seg.e - seg.s) * (static_cast<double>(i) / steps);
    const int u = static_cast<int>(std::lround(p.x()));
    const int v = static_cast<int>(std::lround(p.y()));
    if (mask.contains(u, v) && mask(u, v)) ++inside;
  }
  return static_cast<double>(inside) / (steps + 1);
}

std::vector<LineSegment> detect_segments(const GrayImage& road_image, const BinaryImage& mask,
                                         const SegmentOptions& opts) {
  if (!road_image.same_size(mask)) throw CalibrationError("road image and mask differ in size");
  int top = mask.height(), bottom = 0;
  for (int v = 0; v < mask.height(); ++v)
    for (int u = 0; u < mask.width(); ++u)
      if (mask(u, v)) {
        top = std::min(top, v);
        bottom = v + 1;
        break;
      }
  if (top >= bottom) return {};
  const BinaryImage edges = canny_edges(road_image, opts.canny, &mask, nullptr, top, bottom);
  std::vector<LineSegment> out;
  for (const LineSegment& seg : merge_collinear(hough_segments(edges, opts.hough), opts.merge))
    if (mask_fraction(seg, mask) >= opts.min_mask_fraction) out.push_back(seg);
  return out;
}

}  // namespace roadcal

#include "roadcal/stereo_road.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace roadcal {

DisparityImage compute_disparity(const GrayImage& left, const GrayImage& right,
                                 const DisparityOptions& opts) {
  if (!left.same_size(right)) throw CalibrationError("stereo images differ in size");
  if (opts.window < 1 || opts.window % 2 == 0) throw CalibrationError("SAD window must be odd");
  const int w = left.width();
  const int h = left.height();
  const int r = opts.window / 2;
  const int max_d = std::max(1, std::min(opts.max_disparity, w - 2 * r));
  const std::size_t n = static_cast<std::size_t>(w) * h;
  constexpr int kInf = std::numeric_limits<int>::max();

  std::vector<int> best(n, kInf), best_d(n, -1), c_minus(n, kInf), c_plus(n, kInf), prev(n, kInf);
  std::vector<int> best_r(n, kInf), best_r_d(n, -1), r_minus(n, kInf), r_plus(n, kInf), prev_r(n, kInf);
  std::vector<int> column(n, 0);
  std::vector<int> sad(static_cast<std::size_t>(w), kInf);
  std::vector<int> colsum(static_cast<std::size_t>(w), 0);

  const auto* L = left.data().data();
  const auto* R = right.data().data();

  for (int d = 0; d < max_d; ++d) {
    // vertical running sums of |L(u) - R(u - d)| over the window rows
    std::fill(column.begin(), column.end(), 0);
    for (int v = 0; v < h; ++v) {
      int* col = column.data() + static_cast<std::size_t>(v) * w;
      for (int u = d; u < w; ++u) {
        const std::size_t i = static_cast<std::size_t>(v) * w + u;
        col[u] = std::abs(static_cast<int>(L[i]) - static_cast<int>(R[i - d]));
      }
    }
    for (int v = r; v < h - r; ++v) {
      std::fill(sad.begin(), sad.end(), kInf);
      int run = 0;
      std::fill(colsum.begin(), colsum.end(), 0);
      for (int dv = -r; dv <= r; ++dv) {
        const int* col = column.data() + static_cast<std::size_t>(v + dv) * w;
        for (int u = d; u < w; ++u) colsum[u] += col[u];
      }
      const int u_begin = d + r;
      const int u_end = w - r;
      if (u_begin >= u_end) continue;
      for (int u = u_begin - r; u <= u_begin + r; ++u) run += colsum[u];
      for (int u = u_begin; u < u_end; ++u) {
        if (u > u_begin) run += colsum[u + r] - colsum[u - r - 1];
        sad[u] = run;
      }
      for (int u = u_begin; u < u_end; ++u) {
        const std::size_t i = static_cast<std::size_t>(v) * w + u;
        const int c = sad[u];
        if (best_d[i] == d - 1) c_plus[i] = c;
        if (c < best[i]) {
          best[i] = c;
          best_d[i] = d;
          c_minus[i] = prev[i];
          c_plus[i] = kInf;
        }
        prev[i] = c;
        const std::size_t ir = i - d;  // right-image pixel u - d
        if (best_r_d[ir] == d - 1) r_plus[ir] = c;
        if (c < best_r[ir]) {
          best_r[ir] = c;
          best_r_d[ir] = d;
          r_minus[ir] = prev_r[ir];
          r_plus[ir] = kInf;
        }
        prev_r[ir] = c;
      }
    }
  }

  // parabola through the costs at d-1, d, d+1; a minimum that is not
  // bracketed on both sides sits on the search limit and is rejected
  auto refine = [&](int d, int c0, int cm, int cp, double& sub) {
    if (d < 0 || cm == kInf || cp == kInf) return false;
    sub = d;
    const double denom = static_cast<double>(cm) - 2.0 * c0 + cp;
    if (denom > 0) sub += std::clamp((cm - cp) / (2.0 * denom), -0.5, 0.5);
    return true;
  };

  DisparityImage out(w, h, 0);
  for (int v = r; v < h - r; ++v) {
    for (int u = r; u < w - r; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      if (best_d[i] <= 0) continue;
      double sub = 0;
      if (!refine(best_d[i], best[i], c_minus[i], c_plus[i], sub)) continue;
      const long raw = std::lround(sub * kDisparityScale);
      const long ur = std::lround(u - static_cast<double>(raw) / kDisparityScale);
      if (ur < 0) continue;
      const std::size_t ir = static_cast<std::size_t>(v) * w + static_cast<std::size_t>(ur);
      double sub_r = 0;
      if (!refine(best_r_d[ir], best_r[ir], r_minus[ir], r_plus[ir], sub_r)) continue;
      // compared after quantization so the stored values obey the tolerance
      if (std::abs(raw - std::lround(sub_r * kDisparityScale)) > opts.lr_tolerance * kDisparityScale) continue;
      if (raw <= 0 || raw >= static_cast<long>(w) * kDisparityScale) continue;
      out(u, v) = static_cast<std::uint16_t>(raw);
    }
  }
  return out;
}

DisparityImage compute_disparity_right_reference(const GrayImage& left, const GrayImage& right,
                                                 const DisparityOptions& opts) {
  return flip_horizontal(compute_disparity(flip_horizontal(right), flip_horizontal(left), opts));
}

std::uint64_t VDisparity::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

VDisparity build_v_disparity(const DisparityImage& d, int bins) {
  VDisparity vd;
  vd.rows = d.height();
  vd.bins = bins;
  vd.counts.assign(static_cast<std::size_t>(vd.rows) * bins, 0);
  for (int v = 0; v < d.height(); ++v) {
    for (int u = 0; u < d.width(); ++u) {
      const std::uint16_t raw = d(u, v);
      if (raw == 0) continue;
      const int bin = (raw + kDisparityScale / 2) / kDisparityScale;
      if (bin >= bins) continue;
      ++vd.counts[static_cast<std::size_t>(v) * bins + bin];
    }
  }
  return vd;
}

namespace {

struct Cell {
  double v;
  double bin;
  double weight;
};

// weighted least squares of bin = a * v + b
bool fit_weighted(const std::vector<Cell>& cells, double& a, double& b) {
  double sw = 0, sv = 0, sk = 0, svv = 0, svk = 0;
  for (const Cell& c : cells) {
    sw += c.weight;
    sv += c.weight * c.v;
    sk += c.weight * c.bin;
    svv += c.weight * c.v * c.v;
    svk += c.weight * c.v * c.bin;
  }
  const double det = sw * svv - sv * sv;
  if (sw <= 0 || std::abs(det) < 1e-12) return false;
  a = (sw * svk - sv * sk) / det;
  b = (sk - a * sv) / sw;
  return true;
}

}  // namespace

RoadLine fit_road_line(const VDisparity& vd, const RoadLineOptions& opts) {
  std::vector<Cell> cells;
  std::vector<double> weights;
  for (int v = 0; v < vd.rows; ++v)
    for (int k = 0; k < vd.bins; ++k)
      if (const auto c = vd(v, k); c > 0) {
        cells.push_back({static_cast<double>(v), static_cast<double>(k), static_cast<double>(c)});
        weights.push_back(static_cast<double>(c));
      }
  const auto min_inliers =
      static_cast<std::size_t>(std::ceil(opts.min_inlier_fraction * vd.rows));
  if (cells.size() < std::max<std::size_t>(min_inliers, 2))
    throw RoadNotFound("v-disparity has too few populated cells for a road line");

  std::mt19937_64 rng(opts.seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  const double thr = opts.inlier_threshold;

  auto score_line = [&](double a, double b) {
    double s = 0;
    for (const Cell& c : cells)
      if (std::abs(c.bin - (a * c.v + b)) <= thr) s += c.weight;
    return s;
  };

  double best_score = -1, best_a = 0, best_b = 0;
  for (int it = 0; it < opts.iterations; ++it) {
    const Cell& p = cells[pick(rng)];
    const Cell& q = cells[pick(rng)];
    if (p.v == q.v) continue;
    const double a = (q.bin - p.bin) / (q.v - p.v);
    if (!(a > 1e-6)) continue;  // disparity must grow towards the bottom rows
    const double b = p.bin - a * p.v;
    const double s = score_line(a, b);
    if (s > best_score) {
      best_score = s;
      best_a = a;
      best_b = b;
    }
  }
  if (best_score <= 0) throw RoadNotFound("no road line with positive slope in v-disparity");

  double a = best_a, b = best_b;
  std::vector<Cell> inliers;
  for (int round = 0; round < 3; ++round) {
    inliers.clear();
    for (const Cell& c : cells)
      if (std::abs(c.bin - (a * c.v + b)) <= thr) inliers.push_back(c);
    double ra, rb;
    if (!fit_weighted(inliers, ra, rb) || !(ra > 1e-6)) break;
    a = ra;
    b = rb;
  }
  inliers.clear();
  for (const Cell& c : cells)
    if (std::abs(c.bin - (a * c.v + b)) <= thr) inliers.push_back(c);

  if (inliers.size() < min_inliers)
    throw RoadNotFound("road line has too few inliers (" + std::to_string(inliers.size()) + ")");
  RoadLine line;
  line.slope = 1.0 / a;
  line.intercept = -b / a;
  line.inliers = inliers.size();
  if (!(line.slope > 0) || !std::isfinite(line.slope))
    throw RoadNotFound("degenerate road line");
  return line;
}

double horizon_row(const RoadLine& line, int image_height) {
  return std::clamp(line.intercept, 0.0, static_cast<double>(image_height - 1));
}

BinaryImage extract_road_mask(const DisparityImage& d, const RoadLine& line, double tau) {
  BinaryImage mask(d.width(), d.height(), 0);
  const double horizon = horizon_row(line, d.height());
  for (int v = 0; v < d.height(); ++v) {
    if (!(v > horizon)) continue;
    const double expected = line.disparity_at(v);
    for (int u = 0; u < d.width(); ++u) {
      const std::uint16_t raw = d(u, v);
      if (raw == 0) continue;
      if (std::abs(disparity_px(raw) - expected) <= tau) mask(u, v) = 1;
    }
  }
  return mask;
}

namespace {

bool plane_from_points(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                       Eigen::Vector3d& n, double& d) {
  n = (b - a).cross(c - a);
  const double norm = n.norm();
  if (norm < 1e-12) return false;
  n /= norm;
  d = -n.dot(a);
  return true;
}

bool refit(const std::vector<Eigen::Vector3d>& pts, const std::vector<std::size_t>& idx,
           Eigen::Vector3d& n, double& d) {
  if (idx.size() < 3) return false;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (auto i : idx) mean += pts[i];
  mean /= static_cast<double>(idx.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto i : idx) {
    const Eigen::Vector3d q = pts[i] - mean;
    cov += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  if (es.info() != Eigen::Success) return false;
  n = es.eigenvectors().col(0).normalized();
  d = -n.dot(mean);
  return true;
}

}  // namespace

PlaneModel fit_plane(const std::vector<Eigen::Vector3d>& points, const PlaneFitOptions& opts,
                     std::size_t* inlier_count) {
  if (points.size() < std::max<std::size_t>(opts.min_points, 3))
    throw RoadNotFound("too few road points for a plane (" + std::to_string(points.size()) + ")");
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  const double thr = opts.inlier_threshold;

  std::size_t best_count = 0;
  Eigen::Vector3d best_n(0, -1, 0);
  double best_d = 0;
  for (int it = 0; it < opts.iterations; ++it) {
    const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
    if (i == j || j == k || i == k) continue;
    Eigen::Vector3d n;
    double d;
    if (!plane_from_points(points[i], points[j], points[k], n, d)) continue;
    std::size_t count = 0;
    for (const auto& p : points)
      if (std::abs(n.dot(p) + d) <= thr) ++count;
    if (count > best_count) {
      best_count = count;
      best_n = n;
      best_d = d;
    }
  }
  if (best_count < 3) throw RoadNotFound("plane RANSAC found no consensus");

  std::vector<std::size_t> idx;
  for (int round = 0; round < 3; ++round) {
    idx.clear();
    for (std::size_t i = 0; i < points.size(); ++i)
      if (std::abs(best_n.dot(points[i]) + best_d) <= thr) idx.push_back(i);
    Eigen::Vector3d n;
    double d;
    if (!refit(points, idx, n, d)) break;
    best_n = n;
    best_d = d;
  }
  idx.clear();
  for (std::size_t i = 0; i < points.size(); ++i)
    if (std::abs(best_n.dot(points[i]) + best_d) <= thr) idx.push_back(i);
  if (static_cast<double>(idx.size()) < opts.min_inlier_ratio * static_cast<double>(points.size()))
    throw RoadNotFound("road plane inlier ratio too low");
  if (inlier_count) *inlier_count = idx.size();

  if (best_n.y() > 0) {
    best_n = -best_n;
    best_d = -best_d;
  }
  return {best_n.x(), best_n.y(), best_n.z(), best_d};
}

PlaneModel fit_road_plane(const DisparityImage& d, const BinaryImage& mask,
                          const CameraIntrinsics& k, const PlaneFitOptions& opts) {
  std::vector<Eigen::Vector3d> pts;
  for (int v = 0; v < d.height(); ++v)
    for (int u = 0; u < d.width(); ++u) {
      if (!mask(u, v) || d(u, v) == 0) continue;
      if (auto p = disparity_to_point(k, u, v, disparity_px(d(u, v)))) pts.push_back(*p);
    }
  return fit_plane(pts, opts);
}

}  // namespace roadcal

#include "roadcal/edges.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace roadcal {

namespace {

std::vector<float> gaussian_kernel(double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0;
  for (int i = -r; i <= r; ++i) {
    const double g = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + r)] = static_cast<float>(g);
    sum += g;
  }
  for (auto& x : k) x = static_cast<float>(x / sum);
  return k;
}

// Canny on a contiguous band of rows; output rows map 1:1 to the band.
void canny_band(const GrayImage& img, const CannyOptions& opts, const BinaryImage* validity,
                int y0, int y1, BinaryImage& out) {
  const int w = img.width();
  const int bh = y1 - y0;
  if (bh <= 0 || w <= 0) return;
  const std::size_t n = static_cast<std::size_t>(w) * bh;
  const std::vector<float> kernel = gaussian_kernel(opts.sigma);
  const int r = static_cast<int>(kernel.size() / 2);

  // normalized convolution: smooth value*weight and weight separately
  std::vector<float> val(n), wgt(n);
  for (int y = 0; y < bh; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const float valid = validity ? ((*validity)(x, y + y0) ? 1.0f : 0.0f) : 1.0f;
      wgt[i] = valid;
      val[i] = valid * img(x, y + y0);
    }
  std::vector<float> tv(n, 0.0f), tw(n, 0.0f);
  for (int y = 0; y < bh; ++y)
    for (int x = 0; x < w; ++x) {
      float sv = 0, sw = 0;
      for (int k = -r; k <= r; ++k) {
        const int xx = x + k;
        if (xx < 0 || xx >= w) continue;
        const std::size_t j = static_cast<std::size_t>(y) * w + xx;
        sv += kernel[static_cast<std::size_t>(k + r)] * val[j];
        sw += kernel[static_cast<std::size_t>(k + r)] * wgt[j];
      }
      tv[static_cast<std::size_t>(y) * w + x] = sv;
      tw[static_cast<std::size_t>(y) * w + x] = sw;
    }
  std::vector<float> smooth(n, 0.0f);
  std::vector<std::uint8_t> has(n, 0);
  for (int y = 0; y < bh; ++y)
    for (int x = 0; x < w; ++x) {
      float sv = 0, sw = 0;
      for (int k = -r; k <= r; ++k) {
        const int yy = y + k;
        if (yy < 0 || yy >= bh) continue;
        const std::size_t j = static_cast<std::size_t>(yy) * w + x;
        sv += kernel[static_cast<std::size_t>(k + r)] * tv[j];
        sw += kernel[static_cast<std::size_t>(k + r)] * tw[j];
      }
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      // a pixel without own data and little support nearby stays empty
      if (sw > 0.25f && (wgt[i] > 0 || sw > 0.5f)) {
        smooth[i] = sv / sw;
        has[i] = 1;
      }
    }

  // Sobel magnitude and quantized direction
  std::vector<float> mag(n, 0.0f);
  std::vector<std::uint8_t> dir(n, 0);
  for (int y = 1; y + 1 < bh; ++y)
    for (int x = 1; x + 1 < w; ++x) {
      bool full = true;
      for (int dy = -1; dy <= 1 && full; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (!has[static_cast<std::size_t>(y + dy) * w + x + dx]) {
            full = false;
            break;
          }
      if (!full) continue;
      auto s = [&](int dx, int dy) { return smooth[static_cast<std::size_t>(y + dy) * w + x + dx]; };
      const float gx = (s(1, -1) + 2 * s(1, 0) + s(1, 1)) - (s(-1, -1) + 2 * s(-1, 0) + s(-1, 1));
      const float gy = (s(-1, 1) + 2 * s(0, 1) + s(1, 1)) - (s(-1, -1) + 2 * s(0, -1) + s(1, -1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      mag[i] = std::sqrt(gx * gx + gy * gy);
      // 0: horizontal gradient, 1: 45 deg, 2: vertical, 3: 135 deg (image y down)
      const float ax = std::abs(gx), ay = std::abs(gy);
      constexpr float kTan22 = 0.41421356f;
      if (ay <= kTan22 * ax) dir[i] = 0;
      else if (ax <= kTan22 * ay) dir[i] = 2;
      else dir[i] = (gx * gy > 0) ? 1 : 3;
    }

  // non-maximum suppression: strictly greater than the "previous" neighbour
  // and not smaller than the "next" one keeps plateaus one pixel wide
  std::vector<std::uint8_t> state(n, 0);  // 0 none, 1 weak, 2 strong
  static constexpr int kOff[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
  for (int y = 1; y + 1 < bh; ++y)
    for (int x = 1; x + 1 < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const float m = mag[i];
      if (m <= opts.low) continue;
      const int ox = kOff[dir[i]][0], oy = kOff[dir[i]][1];
      const float prev = mag[static_cast<std::size_t>(y - oy) * w + x - ox];
      const float next = mag[static_cast<std::size_t>(y + oy) * w + x + ox];
      if (!(m > prev && m >= next)) continue;
      state[i] = m >= opts.high ? 2 : 1;
    }

  // hysteresis from strong pixels over 8-connected weak ones
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i)
    if (state[i] == 2) stack.push_back(i);
  std::vector<std::uint8_t> edge(n, 0);
  for (std::size_t i : stack) edge[i] = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int xx = x + dx, yy = y + dy;
        if (xx < 0 || yy < 0 || xx >= w || yy >= bh) continue;
        const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
        if (state[j] && !edge[j]) {
          edge[j] = 1;
          stack.push_back(j);
        }
      }
  }
  for (int y = 0; y < bh; ++y)
    for (int x = 0; x < w; ++x) out(x, y + y0) = edge[static_cast<std::size_t>(y) * w + x];
}

}  // namespace

BinaryImage canny_edges(const GrayImage& img, const CannyOptions& opts, const BinaryImage* mask,
                        const BinaryImage* validity, int row_begin, int row_end) {
  const int h = img.height();
  if (row_end < 0 || row_end > h) row_end = h;
  row_begin = std::clamp(row_begin, 0, h);
  BinaryImage out(img.width(), h, 0);
  if (row_begin >= row_end) return out;

  // work on a padded band so that rows at the band limits see the same
  // neighbourhood as in a full-image run
  const int pad = static_cast<int>(std::ceil(3.0 * opts.sigma)) + 3;
  const int y0 = std::max(0, row_begin - pad);
  const int y1 = std::min(h, row_end + pad);
  BinaryImage band(img.width(), h, 0);
  canny_band(img, opts, validity, y0, y1, band);
  for (int v = row_begin; v < row_end; ++v)
    for (int u = 0; u < img.width(); ++u) {
      if (mask && !(*mask)(u, v)) continue;
      out(u, v) = band(u, v);
    }
  return out;
}

namespace {

// Lower envelope of parabolas over the finite entries of f (exact for integer
// inputs); entries with no finite source stay at `inf`.
void edt_1d(const std::int64_t* f, std::int64_t* d, int n, std::ptrdiff_t stride, std::int64_t inf,
            std::vector<int>& v, std::vector<double>& z) {
  v.resize(static_cast<std::size_t>(n));
  z.resize(static_cast<std::size_t>(n) + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    const std::int64_t fq = f[q * stride];
    if (fq >= inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -std::numeric_limits<double>::infinity();
      z[1] = std::numeric_limits<double>::infinity();
      continue;
    }
    double s;
    while (true) {  // z[0] = -inf stops the backtracking at k = 0
      const int p = v[static_cast<std::size_t>(k)];
      const double fp = static_cast<double>(f[p * stride]);
      s = ((static_cast<double>(fq) + static_cast<double>(q) * q) - (fp + static_cast<double>(p) * p)) /
          (2.0 * (q - p));
      if (s <= z[static_cast<std::size_t>(k)]) --k;
      else break;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::infinity();
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q * stride] = inf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
    const int p = v[static_cast<std::size_t>(j)];
    d[q * stride] = f[p * stride] + static_cast<std::int64_t>(q - p) * (q - p);
  }
}

}  // namespace

Image<std::int64_t> squared_distance_transform(const BinaryImage& edges) {
  const int w = edges.width(), h = edges.height();
  const std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
  Image<std::int64_t> f(w, h, inf);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      if (edges(u, v)) f(u, v) = 0;
  Image<std::int64_t> tmp(w, h, inf);
  std::vector<int> vbuf;
  std::vector<double> zbuf;
  // the first (column) pass copies rows through a temporary so that input
  // and output never alias
  for (int u = 0; u < w; ++u)
    edt_1d(f.data().data() + u, tmp.data().data() + u, h, w, inf, vbuf, zbuf);
  for (int v = 0; v < h; ++v) {
    const std::int64_t* src = tmp.data().data() + static_cast<std::size_t>(v) * w;
    std::int64_t* dst = f.data().data() + static_cast<std::size_t>(v) * w;
    edt_1d(src, dst, w, 1, inf, vbuf, zbuf);
  }
  return f;
}

FloatImage distance_transform(const BinaryImage& edges, float saturation) {
  FloatImage out(edges.width(), edges.height(), saturation);
  bool any = false;
  for (auto e : edges.data())
    if (e) {
      any = true;
      break;
    }
  if (!any) return out;
  const Image<std::int64_t> sq = squared_distance_transform(edges);
  for (std::size_t i = 0; i < sq.size(); ++i)
    out.data()[i] = static_cast<float>(std::sqrt(static_cast<double>(sq.data()[i])));
  return out;
}

}  // namespace roadcal

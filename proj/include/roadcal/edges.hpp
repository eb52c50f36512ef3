#pragma once

#include "roadcal/image.hpp"

namespace roadcal {

struct CannyOptions {
  double sigma = 1.4;
  double low = 40.0;    // hysteresis thresholds on the L2 Sobel magnitude
  double high = 100.0;
};

/// Canny edge detector.
///
/// `validity` (optional) marks which input pixels carry data; smoothing is
/// then a normalized convolution over valid pixels only and no gradient is
/// taken where the smoothed support is missing, so holes in a sparse LiDAR
/// image do not produce edges. Pixels outside `mask` (optional) are cleared
/// after detection. Only rows in [row_begin, row_end) are processed; the
/// rest of the output is zero.
BinaryImage canny_edges(const GrayImage& img, const CannyOptions& opts = {},
                        const BinaryImage* mask = nullptr, const BinaryImage* validity = nullptr,
                        int row_begin = 0, int row_end = -1);

/// Exact Euclidean distance (px) to the nearest nonzero pixel of `edges`.
/// Every cell is `saturation` when there are no edge pixels.
FloatImage distance_transform(const BinaryImage& edges, float saturation);

/// Squared distances as integers; the exact quantity behind distance_transform.
Image<std::int64_t> squared_distance_transform(const BinaryImage& edges);

}  // namespace roadcal

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace roadcal {

/// Row-major raster addressed as (u, v) = (column, row).
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative image size");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }

  T& operator()(int u, int v) { return data_[index(u, v)]; }
  const T& operator()(int u, int v) const { return data_[index(u, v)]; }

  T& at(int u, int v) {
    if (!contains(u, v)) throw std::out_of_range("pixel outside image");
    return (*this)(u, v);
  }
  const T& at(int u, int v) const {
    if (!contains(u, v)) throw std::out_of_range("pixel outside image");
    return (*this)(u, v);
  }

  std::span<T> row(int v) { return {data_.data() + index(0, v), static_cast<std::size_t>(width_)}; }
  std::span<const T> row(int v) const {
    return {data_.data() + index(0, v), static_cast<std::size_t>(width_)};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool same_size(int w, int h) const { return w == width_ && h == height_; }
  template <typename U>
  bool same_size(const Image<U>& o) const {
    return o.width() == width_ && o.height() == height_;
  }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Image<std::uint8_t>;
/// 0/1 raster (road masks, edge maps, validity masks).
using BinaryImage = Image<std::uint8_t>;
using FloatImage = Image<float>;
using Rgb = std::array<std::uint8_t, 3>;
using RgbImage = Image<Rgb>;

template <typename T>
Image<T> flip_horizontal(const Image<T>& img) {
  Image<T> out(img.width(), img.height());
  for (int v = 0; v < img.height(); ++v)
    for (int u = 0; u < img.width(); ++u) out(img.width() - 1 - u, v) = img(u, v);
  return out;
}

std::size_t count_nonzero(const BinaryImage& img);

// ---------------------------------------------------------------------------
// Netpbm I/O. Binary variants only: P5 (8 or 16 bit, big endian) and P6.
// ---------------------------------------------------------------------------

GrayImage read_pgm8(const std::filesystem::path& path);
Image<std::uint16_t> read_pgm16(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
void write_pgm(const std::filesystem::path& path, const Image<std::uint16_t>& img);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);
RgbImage read_ppm(const std::filesystem::path& path);

/// Scales a 0/1 mask to 0/255 for inspection.
GrayImage mask_to_gray(const BinaryImage& mask);

}  // namespace roadcal

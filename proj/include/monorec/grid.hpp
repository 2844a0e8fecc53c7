#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace monorec {

/// Raised when two maps, images or volumes that must share a shape do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major H x W x C raster. Pixel (x, y) channel c lives at
/// ((y * width) + x) * channels + c.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, int channels = 1, T fill = T{})
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels < 1) {
      throw DimensionError("grid: invalid shape " + std::to_string(width) + "x" +
                           std::to_string(height) + "x" + std::to_string(channels));
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& operator()(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& operator()(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  std::span<T> row(int y) {
    return std::span<T>(data_).subspan(static_cast<std::size_t>(y) * width_ * channels_,
                                       static_cast<std::size_t>(width_) * channels_);
  }
  std::span<const T> row(int y) const {
    return std::span<const T>(data_).subspan(static_cast<std::size_t>(y) * width_ * channels_,
                                             static_cast<std::size_t>(width_) * channels_);
  }

  template <typename U>
  bool same_size(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return same_size(other) && channels_ == other.channels();
  }

  void fill(const T& value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using Image = Grid<double>;
using Mask = Grid<std::uint8_t>;

template <typename A, typename B>
void require_same_size(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (!a.same_size(b)) {
    throw DimensionError(std::string(what) + ": size mismatch " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()));
  }
}

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  require_same_size(a, b, what);
  if (a.channels() != b.channels()) {
    throw DimensionError(std::string(what) + ": channel mismatch " + std::to_string(a.channels()) +
                         " vs " + std::to_string(b.channels()));
  }
}

/// Per-channel mean collapsed into a single-channel image.
inline Image to_gray(const Image& image) {
  if (image.channels() == 1) return image;
  Image gray(image.width(), image.height(), 1);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double sum = 0.0;
      for (int c = 0; c < image.channels(); ++c) sum += image(x, y, c);
      gray(x, y) = sum / image.channels();
    }
  }
  return gray;
}

/// 2x2 area-average downsampling; an odd trailing row/column is dropped.
template <typename T>
Grid<T> downsample_area(const Grid<T>& in) {
  Grid<T> out(in.width() / 2, in.height() / 2, in.channels());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < in.channels(); ++c) {
        out(x, y, c) = (in(2 * x, 2 * y, c) + in(2 * x + 1, 2 * y, c) + in(2 * x, 2 * y + 1, c) +
                        in(2 * x + 1, 2 * y + 1, c)) *
                       0.25;
      }
    }
  }
  return out;
}

}  // namespace monorec

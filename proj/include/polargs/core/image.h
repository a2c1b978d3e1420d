#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "polargs/core/error.h"

namespace polargs {

// Row-major interleaved image, `channels` samples per pixel.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, T fill = T(0))
      : width_(width), height_(height), channels_(channels) {
    POLARGS_CHECK(width >= 0 && height >= 0 && channels > 0,
                  ErrorKind::kDimension, "image: invalid dimensions");
    data_.assign(static_cast<size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  size_t pixel_count() const { return static_cast<size_t>(width_) * height_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool SameShape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }
  template <typename U>
  bool SameSize(const Image<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  bool InBounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& at(int x, int y, int c = 0) {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }
  const T& at(int x, int y, int c = 0) const {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }

  T* pixel(int x, int y) {
    return data_.data() + (static_cast<size_t>(y) * width_ + x) * channels_;
  }
  const T* pixel(int x, int y) const {
    return data_.data() + (static_cast<size_t>(y) * width_ + x) * channels_;
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> samples() { return data_; }
  std::span<const T> samples() const { return data_; }

  bool AllFinite() const {
    for (const T& v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  bool operator==(const Image& other) const {
    return SameShape(other) && data_ == other.data_;
  }

  template <typename U>
  Image<U> Cast() const {
    Image<U> out(width_, height_, channels_);
    for (size_t i = 0; i < data_.size(); ++i) {
      out.data()[i] = static_cast<U>(data_[i]);
    }
    return out;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using FloatImage = Image<float>;
using DoubleImage = Image<double>;

// Binary image, one byte per pixel (0 or 1).
using Mask = Image<uint8_t>;

// Bilinear sample of channel c at continuous pixel coordinates; pixel centres
// sit at integer coordinates. Returns false outside [0, w-1] x [0, h-1].
template <typename T>
bool SampleBilinear(const Image<T>& img, double x, double y, int c,
                    double* out) {
  if (!(x >= 0.0 && y >= 0.0 && x <= img.width() - 1 &&
        y <= img.height() - 1)) {
    return false;
  }
  int x0 = static_cast<int>(x);
  int y0 = static_cast<int>(y);
  int x1 = x0 + 1 < img.width() ? x0 + 1 : x0;
  int y1 = y0 + 1 < img.height() ? y0 + 1 : y0;
  const double fx = x - x0;
  const double fy = y - y0;
  const double a = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
  const double b = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
  *out = a * (1.0 - fy) + b * fy;
  return true;
}

int CountNonZero(const Mask& mask);

// 3x3 binary opening (erode then dilate). Border pixels treat the outside as
// background.
Mask MorphologicalOpen3x3(const Mask& mask);

}  // namespace polargs

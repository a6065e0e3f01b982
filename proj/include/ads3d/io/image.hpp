#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ads3d/error.hpp"
#include "ads3d/io/tensor.hpp"

namespace ads3d {

// Dense H x W x C raster, row-major with interleaved channels.
template <class T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int height, int width, int channels = 1, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    require(height >= 0 && width >= 0 && channels >= 1, "invalid image shape");
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const { return data_.empty(); }

  T& at(int i, int j, int c = 0) { return data_[index(i, j, c)]; }
  const T& at(int i, int j, int c = 0) const { return data_[index(i, j, c)]; }

  T* pixel(int i, int j) { return data_.data() + index(i, j, 0); }
  const T* pixel(int i, int j) const { return data_.data() + index(i, j, 0); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool same_shape(const Image& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int i, int j, int c) const {
    return (static_cast<std::size_t>(i) * width_ + j) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using RgbImage = Image<std::uint8_t>;   // 3 channels
using Mask = Image<std::uint8_t>;       // 1 channel, values 0/1
using DepthMap = Image<float>;          // 1 channel, meters

// H x W grid of XYZ triples in meters. The all-zero triple marks an invalid
// point; every other triple is valid.
class OrganizedPointCloud {
 public:
  OrganizedPointCloud() = default;
  OrganizedPointCloud(int height, int width) : xyz_(height, width, 3, 0.0f) {}
  explicit OrganizedPointCloud(Image<float> xyz) : xyz_(std::move(xyz)) {
    if (xyz_.channels() != 3) fail(ErrorCode::kDimensionMismatch, "point cloud needs 3 channels");
  }

  int height() const { return xyz_.height(); }
  int width() const { return xyz_.width(); }

  const float* point(int i, int j) const { return xyz_.pixel(i, j); }
  float* point(int i, int j) { return xyz_.pixel(i, j); }

  void set(int i, int j, float x, float y, float z) {
    float* p = xyz_.pixel(i, j);
    p[0] = x;
    p[1] = y;
    p[2] = z;
  }
  void invalidate(int i, int j) { set(i, j, 0.0f, 0.0f, 0.0f); }

  bool valid(int i, int j) const {
    const float* p = xyz_.pixel(i, j);
    return !(p[0] == 0.0f && p[1] == 0.0f && p[2] == 0.0f);
  }

  Mask valid_mask() const {
    Mask m(height(), width(), 1, 0);
    for (int i = 0; i < height(); ++i)
      for (int j = 0; j < width(); ++j) m.at(i, j) = valid(i, j) ? 1 : 0;
    return m;
  }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (int i = 0; i < height(); ++i)
      for (int j = 0; j < width(); ++j) n += valid(i, j);
    return n;
  }

  // The Z channel, i.e. the paired depth image.
  DepthMap depth() const {
    DepthMap d(height(), width(), 1, 0.0f);
    for (int i = 0; i < height(); ++i)
      for (int j = 0; j < width(); ++j) d.at(i, j) = xyz_.at(i, j, 2);
    return d;
  }

  const Image<float>& xyz() const { return xyz_; }
  Image<float>& xyz() { return xyz_; }

  bool operator==(const OrganizedPointCloud&) const = default;

 private:
  Image<float> xyz_;
};

template <class T>
Tensor to_tensor(const Image<T>& img) {
  std::vector<std::uint64_t> dims{static_cast<std::uint64_t>(img.height()),
                                  static_cast<std::uint64_t>(img.width())};
  if (img.channels() != 1) dims.push_back(static_cast<std::uint64_t>(img.channels()));
  return Tensor::from<T>(std::move(dims), img.storage());
}

inline Tensor to_tensor(const OrganizedPointCloud& cloud) { return to_tensor(cloud.xyz()); }

// Accepts (H, W) or (H, W, C) tensors of element type T.
template <class T>
Image<T> image_from_tensor(const Tensor& t) {
  if (!t.holds<T>()) fail(ErrorCode::kUnsupportedDtype, "unexpected tensor dtype for image");
  if (t.ndim() != 2 && t.ndim() != 3) {
    fail(ErrorCode::kDimensionMismatch, "image tensor must have 2 or 3 dims");
  }
  const auto& d = t.dims();
  const int channels = t.ndim() == 3 ? static_cast<int>(d[2]) : 1;
  Image<T> img(static_cast<int>(d[0]), static_cast<int>(d[1]), channels);
  auto src = t.values<T>();
  std::copy(src.begin(), src.end(), img.storage().begin());
  return img;
}

inline OrganizedPointCloud cloud_from_tensor(const Tensor& t) {
  if (t.ndim() != 3 || t.dims()[2] != 3) {
    fail(ErrorCode::kDimensionMismatch, "point cloud tensor must be H x W x 3");
  }
  return OrganizedPointCloud(image_from_tensor<float>(t));
}

}  // namespace ads3d

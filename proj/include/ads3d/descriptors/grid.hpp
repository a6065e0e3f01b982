#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ads3d/error.hpp"
#include "ads3d/io/image.hpp"
#include "ads3d/io/tensor.hpp"

namespace ads3d {

inline constexpr int kGridSize = 28;

enum class Method { kRaw, kHog, kDsift, kFpfh, kRgbDeep, kFused, kRgbRaw };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::kRaw: return "raw";
    case Method::kHog: return "hog";
    case Method::kDsift: return "dsift";
    case Method::kFpfh: return "fpfh";
    case Method::kRgbDeep: return "rgb_deep";
    case Method::kFused: return "fused";
    case Method::kRgbRaw: return "rgb_raw";
  }
  return "unknown";
}

inline Method parse_method_tag(std::string_view s) {
  for (Method m : {Method::kRaw, Method::kHog, Method::kDsift, Method::kFpfh, Method::kRgbDeep,
                   Method::kFused, Method::kRgbRaw}) {
    if (method_name(m) == s) return m;
  }
  if (s == "rgb_plus_fpfh") return Method::kFused;
  fail(ErrorCode::kInvalidArgument, "unknown descriptor tag '" + std::string(s) + "'");
}

// rows x cols patches, each a `dim`-vector, row-major. This is phi(x, j) for
// every representation.
struct PatchFeatureGrid {
  int rows = 0;
  int cols = 0;
  int dim = 0;
  Method method = Method::kRaw;
  std::vector<float> values;

  PatchFeatureGrid() = default;
  PatchFeatureGrid(int rows_, int cols_, int dim_, Method m)
      : rows(rows_), cols(cols_), dim(dim_), method(m),
        values(static_cast<std::size_t>(rows_) * cols_ * dim_, 0.0f) {}

  int patch_count() const { return rows * cols; }
  std::span<float> patch(int p) { return {values.data() + static_cast<std::size_t>(p) * dim, static_cast<std::size_t>(dim)}; }
  std::span<const float> patch(int p) const {
    return {values.data() + static_cast<std::size_t>(p) * dim, static_cast<std::size_t>(dim)};
  }
  std::span<float> patch(int r, int c) { return patch(r * cols + c); }
  std::span<const float> patch(int r, int c) const { return patch(r * cols + c); }

  bool operator==(const PatchFeatureGrid&) const = default;
};

// Adaptive average pooling of an H' x W' x D feature image to G x G. Block g
// spans [floor(g H'/G), ceil((g+1) H'/G)), which is the plain uniform block
// when G divides H'.
inline PatchFeatureGrid pool_to_grid(const Image<float>& dense, int grid, Method method) {
  require(grid >= 1, "grid size must be >= 1");
  if (dense.height() < grid || dense.width() < grid) {
    fail(ErrorCode::kInvalidArgument, "feature map " + std::to_string(dense.height()) + "x" +
                                          std::to_string(dense.width()) + " is smaller than grid " +
                                          std::to_string(grid));
  }
  const int d = dense.channels();
  PatchFeatureGrid out(grid, grid, d, method);
  std::vector<double> acc(static_cast<std::size_t>(d));
  for (int gr = 0; gr < grid; ++gr) {
    const int r0 = gr * dense.height() / grid;
    const int r1 = ((gr + 1) * dense.height() + grid - 1) / grid;
    for (int gc = 0; gc < grid; ++gc) {
      const int c0 = gc * dense.width() / grid;
      const int c1 = ((gc + 1) * dense.width() + grid - 1) / grid;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int i = r0; i < r1; ++i) {
        for (int j = c0; j < c1; ++j) {
          const float* px = dense.pixel(i, j);
          for (int k = 0; k < d; ++k) acc[static_cast<std::size_t>(k)] += px[k];
        }
      }
      const double n = static_cast<double>((r1 - r0) * (c1 - c0));
      auto dst = out.patch(gr, gc);
      for (int k = 0; k < d; ++k) dst[static_cast<std::size_t>(k)] = static_cast<float>(acc[static_cast<std::size_t>(k)] / n);
    }
  }
  return out;
}

// Per-patch concatenation (a || b). No rescaling of either part.
inline PatchFeatureGrid concat_features(const PatchFeatureGrid& a, const PatchFeatureGrid& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    fail(ErrorCode::kDimensionMismatch, "cannot concatenate grids of different sizes");
  }
  PatchFeatureGrid out(a.rows, a.cols, a.dim + b.dim, Method::kFused);
  for (int p = 0; p < a.patch_count(); ++p) {
    auto dst = out.patch(p);
    std::copy(a.patch(p).begin(), a.patch(p).end(), dst.begin());
    std::copy(b.patch(p).begin(), b.patch(p).end(), dst.begin() + a.dim);
  }
  return out;
}

inline Tensor grid_to_tensor(const PatchFeatureGrid& g) {
  return Tensor::from<float>({static_cast<std::uint64_t>(g.rows), static_cast<std::uint64_t>(g.cols),
                              static_cast<std::uint64_t>(g.dim)},
                             g.values);
}

// Deep RGB features produced by the external exporter: an ADTN f32 tensor of
// shape G x G x D (28 x 28 x 1536 for the wide-residual backbone).
inline PatchFeatureGrid grid_from_tensor(const Tensor& t, Method method, int expected_dim = 0) {
  if (!t.holds<float>()) fail(ErrorCode::kUnsupportedDtype, "feature tensor must be f32");
  if (t.ndim() != 3 || t.dims()[0] != t.dims()[1]) {
    fail(ErrorCode::kDimensionMismatch, "feature tensor must be G x G x D");
  }
  PatchFeatureGrid g(static_cast<int>(t.dims()[0]), static_cast<int>(t.dims()[1]),
                     static_cast<int>(t.dims()[2]), method);
  if (expected_dim > 0 && g.dim != expected_dim) {
    fail(ErrorCode::kDimensionMismatch, "feature dim " + std::to_string(g.dim) + ", expected " +
                                            std::to_string(expected_dim));
  }
  auto v = t.values<float>();
  std::copy(v.begin(), v.end(), g.values.begin());
  return g;
}

inline constexpr int kDeepRgbDim = 1536;

inline PatchFeatureGrid load_deep_features(const std::filesystem::path& path) {
  const PatchFeatureGrid g = grid_from_tensor(read_tensor(path), Method::kRgbDeep, kDeepRgbDim);
  if (g.rows != kGridSize) {
    fail(ErrorCode::kDimensionMismatch, path.string() + ": expected a 28 x 28 grid");
  }
  return g;
}

}  // namespace ads3d

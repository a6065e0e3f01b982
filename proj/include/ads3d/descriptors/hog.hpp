#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "ads3d/descriptors/grid.hpp"
#include "ads3d/descriptors/raw.hpp"

namespace ads3d {

inline constexpr int kHogBins = 8;

struct Gradients {
  Image<float> gx;  // d/dcol
  Image<float> gy;  // d/drow
};

// Central differences; the one-pixel border has zero gradient.
inline Gradients central_gradients(const DepthMap& d) {
  Gradients g{Image<float>(d.height(), d.width(), 1, 0.0f), Image<float>(d.height(), d.width(), 1, 0.0f)};
  for (int i = 1; i + 1 < d.height(); ++i) {
    for (int j = 1; j + 1 < d.width(); ++j) {
      g.gx.at(i, j) = d.at(i, j + 1) - d.at(i, j - 1);
      g.gy.at(i, j) = d.at(i + 1, j) - d.at(i - 1, j);
    }
  }
  return g;
}

// Unsigned orientation in [0, pi) split into 8 equal bins starting at 0.
inline int hog_bin(float gx, float gy) {
  double a = std::atan2(static_cast<double>(gy), static_cast<double>(gx));
  if (a < 0.0) a += std::numbers::pi;
  if (a >= std::numbers::pi) a -= std::numbers::pi;
  const int b = static_cast<int>(a / (std::numbers::pi / kHogBins));
  return std::min(b, kHogBins - 1);
}

// Magnitude-weighted orientation histograms of every 8x8 cell,
// cells x kHogBins row-major.
inline std::vector<double> hog_cells(const DepthMap& d) {
  const int rows = d.height() / kPatchSize;
  const int cols = d.width() / kPatchSize;
  const Gradients g = central_gradients(d);
  std::vector<double> cells(static_cast<std::size_t>(rows) * cols * kHogBins, 0.0);
  for (int i = 0; i < rows * kPatchSize; ++i) {
    for (int j = 0; j < cols * kPatchSize; ++j) {
      const float gx = g.gx.at(i, j);
      const float gy = g.gy.at(i, j);
      if (gx == 0.0f && gy == 0.0f) continue;
      const double mag = std::hypot(static_cast<double>(gx), static_cast<double>(gy));
      const std::size_t cell = static_cast<std::size_t>((i / kPatchSize) * cols + j / kPatchSize);
      cells[cell * kHogBins + static_cast<std::size_t>(hog_bin(gx, gy))] += mag;
    }
  }
  return cells;
}

// One 32-d descriptor per cell: the 2x2 block of cells anchored at it
// (row-major cell order), with the neighbour index clamped at the last
// row/column, L2-normalised as v / sqrt(|v|^2 + eps^2).
inline PatchFeatureGrid hog_depth(const DepthMap& d) {
  if (d.channels() != 1 || d.empty() || d.height() % kPatchSize || d.width() % kPatchSize) {
    fail(ErrorCode::kDimensionMismatch, "depth map dims must be positive multiples of 8");
  }
  constexpr double eps = 1e-6;
  const int rows = d.height() / kPatchSize;
  const int cols = d.width() / kPatchSize;
  const auto cells = hog_cells(d);
  PatchFeatureGrid out(rows, cols, 4 * kHogBins, Method::kHog);
  std::vector<double> v(4 * kHogBins);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int r1 = std::min(r + 1, rows - 1);
      const int c1 = std::min(c + 1, cols - 1);
      const int block[4][2] = {{r, c}, {r, c1}, {r1, c}, {r1, c1}};
      double sq = 0.0;
      for (int k = 0; k < 4; ++k) {
        const std::size_t cell = static_cast<std::size_t>(block[k][0] * cols + block[k][1]);
        for (int b = 0; b < kHogBins; ++b) {
          const double x = cells[cell * kHogBins + static_cast<std::size_t>(b)];
          v[static_cast<std::size_t>(k * kHogBins + b)] = x;
          sq += x * x;
        }
      }
      const double norm = std::sqrt(sq + eps * eps);
      auto dst = out.patch(r, c);
      for (std::size_t k = 0; k < v.size(); ++k) dst[k] = static_cast<float>(v[k] / norm);
    }
  }
  return out;
}

}  // namespace ads3d

#pragma once

#include "ads3d/descriptors/grid.hpp"

namespace ads3d {

inline constexpr int kPatchSize = 8;

// Non-overlapping 8x8 depth patches, each flattened row-major (D = 64).
inline PatchFeatureGrid raw_depth_patches(const DepthMap& depth) {
  if (depth.channels() != 1 || depth.height() % kPatchSize || depth.width() % kPatchSize ||
      depth.empty()) {
    fail(ErrorCode::kDimensionMismatch, "depth map dims must be positive multiples of 8");
  }
  PatchFeatureGrid g(depth.height() / kPatchSize, depth.width() / kPatchSize, kPatchSize * kPatchSize,
                     Method::kRaw);
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      auto dst = g.patch(r, c);
      for (int i = 0; i < kPatchSize; ++i)
        for (int j = 0; j < kPatchSize; ++j)
          dst[static_cast<std::size_t>(i * kPatchSize + j)] = depth.at(r * kPatchSize + i, c * kPatchSize + j);
    }
  }
  return g;
}

// Colour control: 8x8x3 RGB patches scaled to [0, 1] (D = 192).
inline PatchFeatureGrid raw_rgb_patches(const RgbImage& rgb) {
  if (rgb.channels() != 3 || rgb.height() % kPatchSize || rgb.width() % kPatchSize || rgb.empty()) {
    fail(ErrorCode::kDimensionMismatch, "rgb dims must be positive multiples of 8 with 3 channels");
  }
  PatchFeatureGrid g(rgb.height() / kPatchSize, rgb.width() / kPatchSize,
                     kPatchSize * kPatchSize * 3, Method::kRgbRaw);
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      auto dst = g.patch(r, c);
      std::size_t k = 0;
      for (int i = 0; i < kPatchSize; ++i)
        for (int j = 0; j < kPatchSize; ++j)
          for (int ch = 0; ch < 3; ++ch)
            dst[k++] = rgb.at(r * kPatchSize + i, c * kPatchSize + j, ch) / 255.0f;
    }
  }
  return g;
}

}  // namespace ads3d

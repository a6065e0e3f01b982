#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ads3d/error.hpp"
#include "ads3d/io/image.hpp"
#include "ads3d/scoring/memory_bank.hpp"

namespace ads3d {

struct AnomalyMap {
  Image<double> map;         // per-pixel score
  double image_score = 0.0;  // max patch score, taken before any smoothing
};

// Bilinear upsampling with half-pixel centres (no corner alignment); edges
// replicate.
inline Image<double> upsample_bilinear(const PatchScores& ps, int out_h, int out_w) {
  Image<double> out(out_h, out_w, 1, 0.0);
  const double sy = static_cast<double>(ps.rows) / out_h;
  const double sx = static_cast<double>(ps.cols) / out_w;
  for (int i = 0; i < out_h; ++i) {
    const double y = std::max((i + 0.5) * sy - 0.5, 0.0);
    const int y0 = std::min(static_cast<int>(y), ps.rows - 1);
    const int y1 = std::min(y0 + 1, ps.rows - 1);
    const double fy = y - y0;
    for (int j = 0; j < out_w; ++j) {
      const double x = std::max((j + 0.5) * sx - 0.5, 0.0);
      const int x0 = std::min(static_cast<int>(x), ps.cols - 1);
      const int x1 = std::min(x0 + 1, ps.cols - 1);
      const double fx = x - x0;
      out.at(i, j) = (1.0 - fy) * ((1.0 - fx) * ps.at(y0, x0) + fx * ps.at(y0, x1)) +
                     fy * ((1.0 - fx) * ps.at(y1, x0) + fx * ps.at(y1, x1));
    }
  }
  return out;
}

inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

// Separable Gaussian, kernel truncated at 4 sigma, mirrored borders
// (edge sample repeated).
inline Image<double> gaussian_blur(const Image<double>& src, double sigma) {
  if (sigma <= 0.0) return src;
  const int rad = static_cast<int>(std::lround(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * rad + 1));
  double total = 0.0;
  for (int t = -rad; t <= rad; ++t) {
    k[static_cast<std::size_t>(t + rad)] = std::exp(-0.5 * t * t / (sigma * sigma));
    total += k[static_cast<std::size_t>(t + rad)];
  }
  for (double& v : k) v /= total;
  const int h = src.height();
  const int w = src.width();
  Image<double> tmp(h, w, 1, 0.0), out(h, w, 1, 0.0);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double s = 0.0;
      for (int t = -rad; t <= rad; ++t) s += k[static_cast<std::size_t>(t + rad)] * src.at(i, reflect_index(j + t, w));
      tmp.at(i, j) = s;
    }
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double s = 0.0;
      for (int t = -rad; t <= rad; ++t) s += k[static_cast<std::size_t>(t + rad)] * tmp.at(reflect_index(i + t, h), j);
      out.at(i, j) = s;
    }
  return out;
}

inline AnomalyMap render_anomaly_map(const PatchScores& ps, int out_size = 224, double sigma = 4.0) {
  if (ps.rows < 1 || ps.cols < 1 || out_size % ps.rows != 0 || out_size % ps.cols != 0) {
    fail(ErrorCode::kInvalidArgument, "out_size must be a multiple of the patch grid");
  }
  AnomalyMap am;
  am.image_score = *std::max_element(ps.scores.begin(), ps.scores.end());
  am.map = gaussian_blur(upsample_bilinear(ps, out_size, out_size), sigma);
  return am;
}

}  // namespace ads3d

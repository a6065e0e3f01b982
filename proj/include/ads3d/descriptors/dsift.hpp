#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "ads3d/descriptors/grid.hpp"
#include "ads3d/descriptors/hog.hpp"
#include "ads3d/parallel.hpp"

namespace ads3d {

struct DsiftParams {
  int step = 1;              // keypoint spacing in pixels; 1 = every pixel
  int bin_size = 4;          // pixels per spatial bin, 4x4 bins -> 16x16 support
  double window_sigma = 8.0;  // descriptor Gaussian, half the support width
  double orient_sigma = 4.0;
  int orient_bins = 36;
};

inline constexpr int kSiftSpatialBins = 4;
inline constexpr int kSiftOrientBins = 8;
inline constexpr int kSiftDim = kSiftSpatialBins * kSiftSpatialBins * kSiftOrientBins;

// Gradient magnitude and direction (radians, (-pi, pi]) per pixel.
struct GradientField {
  Image<float> mag;
  Image<float> ang;
};

inline GradientField gradient_field(const DepthMap& d) {
  const Gradients g = central_gradients(d);
  GradientField f{Image<float>(d.height(), d.width(), 1, 0.0f), Image<float>(d.height(), d.width(), 1, 0.0f)};
  for (int i = 0; i < d.height(); ++i) {
    for (int j = 0; j < d.width(); ++j) {
      const double gx = g.gx.at(i, j);
      const double gy = g.gy.at(i, j);
      f.mag.at(i, j) = static_cast<float>(std::hypot(gx, gy));
      f.ang.at(i, j) = static_cast<float>(std::atan2(gy, gx));
    }
  }
  return f;
}

// Dominant gradient direction around (ci, cj): Gaussian-weighted 36-bin
// histogram, circularly smoothed, peak refined with a parabola.
inline double dominant_orientation(const GradientField& f, int ci, int cj, const DsiftParams& p) {
  const double two_pi = 2.0 * std::numbers::pi;
  const int nb = p.orient_bins;
  const int rad = static_cast<int>(std::ceil(3.0 * p.orient_sigma));
  std::vector<double> h(static_cast<std::size_t>(nb), 0.0);
  const double inv = 1.0 / (2.0 * p.orient_sigma * p.orient_sigma);
  for (int di = -rad; di <= rad; ++di) {
    const int i = ci + di;
    if (i < 0 || i >= f.mag.height()) continue;
    for (int dj = -rad; dj <= rad; ++dj) {
      const int j = cj + dj;
      if (j < 0 || j >= f.mag.width()) continue;
      const int r2 = di * di + dj * dj;
      if (r2 > rad * rad) continue;
      const double m = f.mag.at(i, j);
      if (m == 0.0) continue;
      double a = f.ang.at(i, j);
      if (a < 0.0) a += two_pi;
      int b = static_cast<int>(std::floor(a / two_pi * nb));
      b = ((b % nb) + nb) % nb;
      h[static_cast<std::size_t>(b)] += m * std::exp(-r2 * inv);
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> s(h.size());
    for (int b = 0; b < nb; ++b) {
      s[static_cast<std::size_t>(b)] = 0.25 * h[static_cast<std::size_t>((b + nb - 1) % nb)] +
                                        0.5 * h[static_cast<std::size_t>(b)] +
                                        0.25 * h[static_cast<std::size_t>((b + 1) % nb)];
    }
    h.swap(s);
  }
  int best = 0;
  for (int b = 1; b < nb; ++b)
    if (h[static_cast<std::size_t>(b)] > h[static_cast<std::size_t>(best)]) best = b;
  if (h[static_cast<std::size_t>(best)] <= 0.0) return 0.0;
  const double l = h[static_cast<std::size_t>((best + nb - 1) % nb)];
  const double c = h[static_cast<std::size_t>(best)];
  const double r = h[static_cast<std::size_t>((best + 1) % nb)];
  const double denom = l - 2.0 * c + r;
  const double off = denom != 0.0 ? 0.5 * (l - r) / denom : 0.0;
  return (best + 0.5 + off) * two_pi / nb;
}

// 128-d descriptor centred on pixel (ci, cj), expressed in the frame of the
// dominant orientation. Normalise, clamp at 0.2, renormalise; a flat region
// stays all zero.
inline std::array<float, kSiftDim> sift_descriptor_at(const GradientField& f, int ci, int cj,
                                                      const DsiftParams& p = {}) {
  std::array<double, kSiftDim> h{};
  const double theta = dominant_orientation(f, ci, cj, p);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const double two_pi = 2.0 * std::numbers::pi;
  const double bw = p.bin_size;
  const double half = kSiftSpatialBins / 2.0;
  // Any pixel whose rotated bin coordinate can reach the grid.
  const int rad = static_cast<int>(std::ceil(std::sqrt(2.0) * bw * (half + 0.5)));
  const double inv = 1.0 / (2.0 * p.window_sigma * p.window_sigma);
  for (int di = -rad; di <= rad; ++di) {
    const int i = ci + di;
    if (i < 0 || i >= f.mag.height()) continue;
    for (int dj = -rad; dj <= rad; ++dj) {
      const int j = cj + dj;
      if (j < 0 || j >= f.mag.width()) continue;
      const double m = f.mag.at(i, j);
      if (m == 0.0) continue;
      // offsets in the keypoint frame (x along columns, y along rows)
      const double xr = (ct * dj + st * di) / bw;
      const double yr = (-st * dj + ct * di) / bw;
      const double xb = xr + half - 0.5;
      const double yb = yr + half - 0.5;
      if (xb <= -1.0 || xb >= kSiftSpatialBins || yb <= -1.0 || yb >= kSiftSpatialBins) continue;
      double rel = f.ang.at(i, j) - theta;
      rel = std::fmod(rel, two_pi);
      if (rel < 0.0) rel += two_pi;
      const double ob = rel / two_pi * kSiftOrientBins;
      const double w = m * std::exp(-(di * di + dj * dj) * inv);

      const int x0 = static_cast<int>(std::floor(xb));
      const int y0 = static_cast<int>(std::floor(yb));
      const int o0 = static_cast<int>(std::floor(ob));
      const double fx = xb - x0;
      const double fy = yb - y0;
      const double fo = ob - o0;
      for (int dy = 0; dy < 2; ++dy) {
        const int y = y0 + dy;
        if (y < 0 || y >= kSiftSpatialBins) continue;
        const double wy = dy ? fy : 1.0 - fy;
        for (int dx = 0; dx < 2; ++dx) {
          const int x = x0 + dx;
          if (x < 0 || x >= kSiftSpatialBins) continue;
          const double wx = dx ? fx : 1.0 - fx;
          for (int dob = 0; dob < 2; ++dob) {
            const int o = (o0 + dob) % kSiftOrientBins;
            const double wo = dob ? fo : 1.0 - fo;
            h[static_cast<std::size_t>((y * kSiftSpatialBins + x) * kSiftOrientBins + o)] += w * wy * wx * wo;
          }
        }
      }
    }
  }
  auto normalize = [&h]() {
    double s = 0.0;
    for (double v : h) s += v * v;
    if (s <= 0.0) return;
    const double n = std::sqrt(s);
    for (double& v : h) v /= n;
  };
  normalize();
  for (double& v : h) v = std::min(v, 0.2);
  normalize();
  std::array<float, kSiftDim> out{};
  for (int k = 0; k < kSiftDim; ++k) out[static_cast<std::size_t>(k)] = static_cast<float>(h[static_cast<std::size_t>(k)]);
  return out;
}

// Dense SIFT on the depth image. Keypoints every `step` pixels, offset by
// step/2 so that step 8 puts one at the centre of each 8x8 cell; the dense
// map is then average-pooled to the grid.
inline PatchFeatureGrid dsift_depth(const DepthMap& d, const DsiftParams& p = {}, int grid = kGridSize,
                                    int threads = thread_count()) {
  require(p.step >= 1 && p.bin_size >= 1, "dsift step and bin size must be >= 1");
  const int support = kSiftSpatialBins * p.bin_size;
  if (d.channels() != 1 || d.height() < support || d.width() < support) {
    fail(ErrorCode::kDimensionMismatch, "depth map is smaller than the dsift support");
  }
  const GradientField f = gradient_field(d);
  const int kh = d.height() / p.step;
  const int kw = d.width() / p.step;
  Image<float> dense(kh, kw, kSiftDim, 0.0f);
  parallel_for(static_cast<std::size_t>(kh), [&](std::size_t r) {
    for (int c = 0; c < kw; ++c) {
      const auto desc = sift_descriptor_at(f, static_cast<int>(r) * p.step + p.step / 2, c * p.step + p.step / 2, p);
      std::copy(desc.begin(), desc.end(), dense.pixel(static_cast<int>(r), c));
    }
  }, threads);
  return pool_to_grid(dense, grid, Method::kDsift);
}

}  // namespace ads3d

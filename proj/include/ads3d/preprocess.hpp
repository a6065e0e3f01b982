#pragma once

// Resize and background removal for organized RGB + XYZ samples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ads3d/error.hpp"
#include "ads3d/geometry/dbscan.hpp"
#include "ads3d/geometry/point_set.hpp"
#include "ads3d/geometry/ransac.hpp"
#include "ads3d/io/dataset.hpp"

namespace ads3d {

// Center crop applied before resizing. A zero height/width means "square of
// the shorter side".
struct AspectOverride {
  int height = 0;
  int width = 0;
};

struct PreprocessConfig {
  int target_size = 224;
  int boundary_strip = 10;
  float plane_dist = 0.005f;
  float dbscan_eps = 0.006f;
  int dbscan_min_points = 30;
  bool enabled = true;  // background removal on/off ("Pre" vs "Raw")
  int ransac_n = 50;
  int ransac_iterations = 1000;
  std::uint64_t seed = 0;
  std::map<std::string, AspectOverride> aspect_override{{"rope", {}}, {"tire", {}}};

  void validate() const {
    if (target_size < 28 || target_size % 28 != 0) {
      fail(ErrorCode::kInvalidArgument, "target_size must be >= 28 and divisible by 28");
    }
    require(boundary_strip >= 1, "boundary_strip must be >= 1");
    require(plane_dist > 0.0f, "plane_dist must be > 0");
    require(dbscan_eps > 0.0f, "dbscan_eps must be > 0");
    require(dbscan_min_points >= 1, "dbscan_min_points must be >= 1");
  }
};

using Warnings = std::vector<std::string>;

inline void warn(Warnings* w, std::string msg) {
  if (w) w->push_back(std::move(msg));
}

// Nearest-neighbour resampling: destination index d reads source floor(d * src / dst).
template <class T>
Image<T> resize_nearest(const Image<T>& src, int out_h, int out_w) {
  Image<T> out(out_h, out_w, src.channels());
  for (int i = 0; i < out_h; ++i) {
    const int si = static_cast<int>(static_cast<std::int64_t>(i) * src.height() / out_h);
    for (int j = 0; j < out_w; ++j) {
      const int sj = static_cast<int>(static_cast<std::int64_t>(j) * src.width() / out_w);
      std::copy_n(src.pixel(si, sj), src.channels(), out.pixel(i, j));
    }
  }
  return out;
}

namespace detail {

inline double cubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
  return 0.0;
}

struct ResampleTaps {
  std::vector<int> first;
  std::vector<std::vector<double>> weights;
};

// Antialiased bicubic taps: the kernel is stretched by the downscale factor
// and renormalised to sum to one.
inline ResampleTaps bicubic_taps(int in, int out) {
  ResampleTaps taps;
  const double scale = static_cast<double>(in) / out;
  const double filter_scale = std::max(scale, 1.0);
  const double support = 2.0 * filter_scale;
  for (int o = 0; o < out; ++o) {
    const double center = (o + 0.5) * scale;
    const int lo = std::max(static_cast<int>(std::floor(center - support + 0.5)), 0);
    const int hi = std::min(static_cast<int>(std::floor(center + support + 0.5)), in);
    std::vector<double> w;
    double total = 0.0;
    for (int x = lo; x < hi; ++x) {
      const double v = cubic_kernel((x - center + 0.5) / filter_scale);
      w.push_back(v);
      total += v;
    }
    if (total != 0.0)
      for (double& v : w) v /= total;
    taps.first.push_back(lo);
    taps.weights.push_back(std::move(w));
  }
  return taps;
}

}  // namespace detail

inline RgbImage resize_bicubic(const RgbImage& src, int out_h, int out_w) {
  const auto th = detail::bicubic_taps(src.width(), out_w);
  const auto tv = detail::bicubic_taps(src.height(), out_h);
  const int c = src.channels();
  Image<double> tmp(src.height(), out_w, c);
  for (int i = 0; i < src.height(); ++i) {
    for (int j = 0; j < out_w; ++j) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        const auto& w = th.weights[j];
        for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * src.at(i, th.first[j] + static_cast<int>(k), ch);
        tmp.at(i, j, ch) = acc;
      }
    }
  }
  RgbImage out(out_h, out_w, c);
  for (int i = 0; i < out_h; ++i) {
    const auto& w = tv.weights[i];
    for (int j = 0; j < out_w; ++j) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * tmp.at(tv.first[i] + static_cast<int>(k), j, ch);
        out.at(i, j, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
      }
    }
  }
  return out;
}

template <class T>
Image<T> center_crop(const Image<T>& src, int h, int w) {
  h = std::min(h, src.height());
  w = std::min(w, src.width());
  const int top = (src.height() - h) / 2;
  const int left = (src.width() - w) / 2;
  Image<T> out(h, w, src.channels());
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) std::copy_n(src.pixel(top + i, left + j), src.channels(), out.pixel(i, j));
  return out;
}

inline Sample crop_sample(const Sample& s, int h, int w) {
  Sample out = s;
  out.cloud = OrganizedPointCloud(center_crop(s.cloud.xyz(), h, w));
  out.rgb = center_crop(s.rgb, h, w);
  if (s.gt_mask) out.gt_mask = center_crop(*s.gt_mask, h, w);
  return out;
}

// Resizes cloud (nearest), rgb (bicubic) and gt (nearest) to target_size^2.
// Per-class aspect overrides crop first.
inline Sample resize_sample(const Sample& s, const PreprocessConfig& cfg,
                            const std::string& class_name = {}) {
  cfg.validate();
  Sample src = s;
  if (auto it = cfg.aspect_override.find(class_name); it != cfg.aspect_override.end()) {
    const int shorter = std::min(s.height(), s.width());
    const int h = it->second.height > 0 ? it->second.height : shorter;
    const int w = it->second.width > 0 ? it->second.width : shorter;
    src = crop_sample(s, h, w);
  }
  const int t = cfg.target_size;
  if (src.height() < t || src.width() < t) {
    fail(ErrorCode::kInvalidArgument, "resize would upscale " + std::to_string(src.height()) + "x" +
                                          std::to_string(src.width()) + " to " + std::to_string(t));
  }
  if (src.rgb.height() != src.height() || src.rgb.width() != src.width()) {
    fail(ErrorCode::kDimensionMismatch, "rgb and cloud sizes differ");
  }
  Sample out = src;
  out.cloud = OrganizedPointCloud(resize_nearest(src.cloud.xyz(), t, t));
  out.rgb = resize_bicubic(src.rgb, t, t);
  if (src.gt_mask) out.gt_mask = resize_nearest(*src.gt_mask, t, t);
  return out;
}

namespace detail {

inline void zero_pixel(Sample& s, int i, int j) {
  s.cloud.invalidate(i, j);
  std::fill_n(s.rgb.pixel(i, j), s.rgb.channels(), std::uint8_t{0});
}

}  // namespace detail

// Removes the supporting plane and everything not connected to the largest
// remaining cluster. Removed pixels are zeroed in both XYZ and RGB; the gt
// mask is left untouched and the resolution is preserved.
inline Sample remove_background(const Sample& s, const PreprocessConfig& cfg,
                                Warnings* warnings = nullptr) {
  cfg.validate();
  Sample out = s;
  const int h = out.height();
  const int w = out.width();

  // NaN coordinates count as missing data.
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const float* p = out.cloud.point(i, j);
      if (std::isnan(p[0]) || std::isnan(p[1]) || std::isnan(p[2])) out.cloud.invalidate(i, j);
    }
  }

  const int strip = cfg.boundary_strip;
  std::vector<Vec3> border;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const bool on_strip = i < strip || j < strip || i >= h - strip || j >= w - strip;
      if (!on_strip || !out.cloud.valid(i, j)) continue;
      const float* p = out.cloud.point(i, j);
      border.emplace_back(p[0], p[1], p[2]);
    }
  }

  if (static_cast<int>(border.size()) < cfg.ransac_n) {
    warn(warnings, s.id + ": boundary strip has " + std::to_string(border.size()) +
                       " valid points, skipping plane removal");
  } else {
    RansacParams rp;
    rp.n_sample = cfg.ransac_n;
    rp.iterations = cfg.ransac_iterations;
    rp.inlier_thresh = cfg.plane_dist;
    rp.seed = cfg.seed;
    const PlaneModel plane = ransac_plane(border, rp);
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        if (!out.cloud.valid(i, j)) continue;
        const float* p = out.cloud.point(i, j);
        if (plane.distance(Vec3(p[0], p[1], p[2])) < cfg.plane_dist) detail::zero_pixel(out, i, j);
      }
    }
  }

  const PointSet survivors = PointSet::from_cloud(out.cloud);
  const DbscanResult clusters = dbscan(survivors.points, cfg.dbscan_eps, cfg.dbscan_min_points);
  int keep = -1;
  if (clusters.cluster_count > 0) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(clusters.cluster_count), 0);
    for (int l : clusters.labels)
      if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
    keep = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  } else {
    warn(warnings, s.id + ": no cluster survived background removal, sample is empty");
  }
  for (std::size_t k = 0; k < survivors.size(); ++k) {
    if (clusters.labels[k] != keep) {
      detail::zero_pixel(out, survivors.back_index[k].row, survivors.back_index[k].col);
    }
  }
  return out;
}

// resize -> (plane removal -> largest cluster) when enabled.
inline Sample preprocess_sample(const Sample& s, const PreprocessConfig& cfg,
                                const std::string& class_name = {}, Warnings* warnings = nullptr) {
  Sample out = resize_sample(s, cfg, class_name);
  if (cfg.enabled) out = remove_background(out, cfg, warnings);
  return out;
}

}  // namespace ads3d

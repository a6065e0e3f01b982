#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "ads3d/descriptors/grid.hpp"
#include "ads3d/geometry/kdtree.hpp"
#include "ads3d/geometry/normals.hpp"
#include "ads3d/parallel.hpp"
#include "ads3d/preprocess.hpp"

namespace ads3d {

struct FpfhParams {
  float radius = 0.25f;
  int max_nn = 100;
  int bins_per_angle = 11;
  NormalParams normals{};

  int dim() const { return 3 * bins_per_angle; }

  void validate() const {
    require(radius > 0.0f, "fpfh radius must be > 0");
    require(max_nn >= 1, "fpfh max_nn must be >= 1");
    require(bins_per_angle >= 2, "bins_per_angle must be >= 2");
    require(normals.radius > 0.0f && normals.max_nn >= 1, "invalid normal estimation parameters");
  }
};

struct PairFeatures {
  double alpha = 0.0;  // v . n_t
  double phi = 0.0;    // u . d / |d|
  double theta = 0.0;  // atan2(w . n_t, u . n_t)
};

// Darboux-frame angles for the ordered pair (source s, target t). Returns
// nothing when the frame is undefined: coincident points, or displacement
// parallel to the source normal.
inline std::optional<PairFeatures> pair_features(const Eigen::Vector3d& ps, const Eigen::Vector3d& ns,
                                                 const Eigen::Vector3d& pt, const Eigen::Vector3d& nt) {
  const Eigen::Vector3d d = pt - ps;
  const double len = d.norm();
  if (len == 0.0) return std::nullopt;
  const Eigen::Vector3d& u = ns;
  Eigen::Vector3d v = d.cross(u);
  const double vn = v.norm();
  if (vn <= 1e-12 * len) return std::nullopt;
  v /= vn;
  const Eigen::Vector3d w = u.cross(v);
  PairFeatures f;
  f.alpha = v.dot(nt);
  f.phi = u.dot(d) / len;
  f.theta = std::atan2(w.dot(nt), u.dot(nt));
  return f;
}

inline int feature_bin(double value, double lo, double hi, int bins) {
  const int b = static_cast<int>(std::floor((value - lo) / (hi - lo) * bins));
  return std::clamp(b, 0, bins - 1);
}

// Simplified point feature histogram of point `p` against its neighbours:
// alpha | phi | theta, each sub-histogram summing to 100. All-zero when no
// pair yields a frame.
inline std::vector<double> spfh(int p, std::span<const Vec3> points,
                                std::span<const Eigen::Vector3d> normals, std::span<const Neighbor> nbrs,
                                int bins = 11) {
  std::vector<double> h(static_cast<std::size_t>(3 * bins), 0.0);
  const Eigen::Vector3d ps = points[p].cast<double>();
  std::vector<PairFeatures> feats;
  feats.reserve(nbrs.size());
  for (const Neighbor& nb : nbrs) {
    if (nb.index == p) continue;
    if (auto f = pair_features(ps, normals[p], points[nb.index].cast<double>(), normals[nb.index])) {
      feats.push_back(*f);
    }
  }
  if (feats.empty()) return h;
  const double inc = 100.0 / static_cast<double>(feats.size());
  const double pi = std::numbers::pi;
  for (const PairFeatures& f : feats) {
    h[static_cast<std::size_t>(feature_bin(f.alpha, -1.0, 1.0, bins))] += inc;
    h[static_cast<std::size_t>(bins + feature_bin(f.phi, -1.0, 1.0, bins))] += inc;
    h[static_cast<std::size_t>(2 * bins + feature_bin(f.theta, -pi, pi, bins))] += inc;
  }
  return h;
}

// Per-point FPFH for a point set, row-major N x dim in double.
// FPFH(p) = SPFH(p) + (1/k) sum_i SPFH(p_i) / |p - p_i|.
inline std::vector<double> compute_fpfh(const PointSet& ps, const FpfhParams& params,
                                        int threads = thread_count()) {
  params.validate();
  const std::size_t n = ps.size();
  const std::size_t dim = static_cast<std::size_t>(params.dim());
  std::vector<double> out(n * dim, 0.0);
  if (n == 0) return out;

  const KdTree index(ps.points);
  const auto normals = estimate_normals_d(ps, index, params.normals, threads);

  std::vector<std::vector<Neighbor>> nbrs(n);
  std::vector<double> hist(n * dim, 0.0);
  parallel_for(n, [&](std::size_t i) {
    index.radius_knn(ps.points[i], params.radius, params.max_nn, nbrs[i]);
    const auto h = spfh(static_cast<int>(i), ps.points, normals, nbrs[i], params.bins_per_angle);
    std::copy(h.begin(), h.end(), hist.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }, threads);

  parallel_for(n, [&](std::size_t i) {
    double* dst = out.data() + i * dim;
    const double* own = hist.data() + i * dim;
    const auto& nb = nbrs[i];
    if (nb.empty()) return;  // empty neighbourhood: zero descriptor
    for (std::size_t b = 0; b < dim; ++b) dst[b] = own[b];
    const double inv_k = 1.0 / static_cast<double>(nb.size());
    for (const Neighbor& q : nb) {
      const double wgt = inv_k / std::sqrt(q.dist2);
      const double* src = hist.data() + static_cast<std::size_t>(q.index) * dim;
      for (std::size_t b = 0; b < dim; ++b) dst[b] += wgt * src[b];
    }
  }, threads);
  return out;
}

// FPFH over the valid points of an organized cloud, scattered back to the
// grid (invalid cells stay zero) and average-pooled to `grid` x `grid`.
inline PatchFeatureGrid fpfh_grid(const OrganizedPointCloud& cloud, const FpfhParams& params = {},
                                  Warnings* warnings = nullptr, int grid = kGridSize,
                                  int threads = thread_count()) {
  params.validate();
  const PointSet ps = PointSet::from_cloud(cloud);
  if (ps.empty()) {
    warn(warnings, "cloud has no valid points, fpfh grid is all zero");
    return PatchFeatureGrid(grid, grid, params.dim(), Method::kFpfh);
  }
  const auto feats = compute_fpfh(ps, params, threads);
  const int dim = params.dim();
  Image<float> dense(cloud.height(), cloud.width(), dim, 0.0f);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    float* px = dense.pixel(ps.back_index[k].row, ps.back_index[k].col);
    for (int b = 0; b < dim; ++b) px[b] = static_cast<float>(feats[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(b)]);
  }
  return pool_to_grid(dense, grid, Method::kFpfh);
}

}  // namespace ads3d

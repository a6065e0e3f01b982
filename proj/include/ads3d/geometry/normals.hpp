#pragma once

#include <Eigen/Eigenvalues>

#include <vector>

#include "ads3d/geometry/kdtree.hpp"
#include "ads3d/geometry/point_set.hpp"
#include "ads3d/parallel.hpp"

namespace ads3d {

struct NormalParams {
  float radius = 0.05f;
  int max_nn = 30;
  Vec3 viewpoint = Vec3::Zero();
};

// Unit normals, one per point, oriented so that n . (viewpoint - p) >= 0.
using NormalField = std::vector<Vec3>;

inline Vec3 orient_toward(Vec3 n, const Vec3& p, const Vec3& viewpoint) {
  const double s = static_cast<double>(n.x()) * (static_cast<double>(viewpoint.x()) - p.x()) +
                   static_cast<double>(n.y()) * (static_cast<double>(viewpoint.y()) - p.y()) +
                   static_cast<double>(n.z()) * (static_cast<double>(viewpoint.z()) - p.z());
  return s < 0.0 ? Vec3(-n) : n;
}

// Least-variance direction of {p} U neighbours. Covariance is accumulated on
// offsets from p, so the result depends only on relative positions.
inline Eigen::Vector3d fit_normal_d(const Vec3& p, std::span<const Vec3> points,
                                    std::span<const Neighbor> nbrs) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d second = Eigen::Matrix3d::Zero();
  for (const Neighbor& nb : nbrs) {
    const Vec3& q = points[nb.index];
    const Eigen::Vector3d d(static_cast<double>(q.x()) - p.x(), static_cast<double>(q.y()) - p.y(),
                            static_cast<double>(q.z()) - p.z());
    mean += d;
    second += d * d.transpose();
  }
  const double n = static_cast<double>(nbrs.size() + 1);  // p itself contributes a zero offset
  mean /= n;
  const Eigen::Matrix3d cov = second / n - mean * mean.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Eigen::Vector3d normal = es.eigenvectors().col(0);
  normal.normalize();
  return normal;
}

inline Vec3 fit_normal(const Vec3& p, std::span<const Vec3> points, std::span<const Neighbor> nbrs) {
  return fit_normal_d(p, points, nbrs).cast<float>();
}

// Double-precision normals; the float field below is a rounded copy.
inline std::vector<Eigen::Vector3d> estimate_normals_d(const PointSet& ps, const KdTree& index,
                                                       const NormalParams& params = {},
                                                       int threads = thread_count()) {
  std::vector<Eigen::Vector3d> normals(ps.size());
  const Eigen::Vector3d view = params.viewpoint.cast<double>();
  parallel_for(ps.size(), [&](std::size_t i) {
    thread_local std::vector<Neighbor> nbrs;
    const Vec3& p = ps.points[i];
    index.radius_knn(p, params.radius, params.max_nn, nbrs);
    // Fewer than three neighbours cannot define a plane.
    Eigen::Vector3d n = nbrs.size() < 3 ? Eigen::Vector3d(0.0, 0.0, 1.0) : fit_normal_d(p, ps.points, nbrs);
    if (n.dot(view - p.cast<double>()) < 0.0) n = -n;
    normals[i] = n;
  }, threads);
  return normals;
}

inline NormalField estimate_normals(const PointSet& ps, const KdTree& index,
                                    const NormalParams& params = {}) {
  NormalField normals(ps.size());
  const auto nd = estimate_normals_d(ps, index, params);
  for (std::size_t i = 0; i < ps.size(); ++i) normals[i] = nd[i].cast<float>();
  return normals;
}

inline NormalField estimate_normals(const PointSet& ps, const NormalParams& params = {}) {
  const KdTree index(ps.points);
  return estimate_normals(ps, index, params);
}

}  // namespace ads3d

#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ads3d/error.hpp"
#include "ads3d/geometry/point_set.hpp"

namespace ads3d {

// Plane n . p + offset = 0 with |n| = 1.
struct PlaneModel {
  Vec3 normal = Vec3::UnitZ();
  float offset = 0.0f;

  double signed_distance(const Vec3& p) const {
    return static_cast<double>(normal.x()) * p.x() + static_cast<double>(normal.y()) * p.y() +
           static_cast<double>(normal.z()) * p.z() + offset;
  }
  double distance(const Vec3& p) const { return std::abs(signed_distance(p)); }
};

struct RansacParams {
  int n_sample = 50;
  int iterations = 1000;
  float inlier_thresh = 0.005f;
  std::uint64_t seed = 0;
};

// Least-squares plane through `idx` (all of `pts` when empty). Returns
// nullopt when the points are collinear or coincident.
inline std::optional<PlaneModel> fit_plane(std::span<const Vec3> pts, std::span<const int> idx = {}) {
  const std::size_t n = idx.empty() ? pts.size() : idx.size();
  if (n < 3) return std::nullopt;
  auto at = [&](std::size_t k) -> const Vec3& { return idx.empty() ? pts[k] : pts[idx[k]]; };
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (std::size_t k = 0; k < n; ++k) c += at(k).cast<double>();
  c /= static_cast<double>(n);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector3d d = at(k).cast<double>() - c;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Eigen::Vector3d ev = es.eigenvalues();
  // Rank < 2 spread: no unique plane.
  if (!(ev[1] > 1e-12 * std::max(ev[2], 1e-300))) return std::nullopt;
  Eigen::Vector3d normal = es.eigenvectors().col(0).normalized();
  PlaneModel m;
  m.normal = normal.cast<float>();
  m.normal.normalize();
  m.offset = static_cast<float>(-normal.dot(c));
  return m;
}

inline std::vector<int> plane_inliers(std::span<const Vec3> pts, const PlaneModel& plane,
                                      float thresh) {
  std::vector<int> out;
  for (std::size_t k = 0; k < pts.size(); ++k)
    if (plane.distance(pts[k]) < thresh) out.push_back(static_cast<int>(k));
  return out;
}

// RANSAC plane fit. Each round draws `n_sample` distinct points uniformly and
// fits a least-squares plane to all of them; the model with the most inliers
// (ties: lower inlier residual) wins and is refit on its inlier set.
inline PlaneModel ransac_plane(std::span<const Vec3> pts, const RansacParams& params = {}) {
  require(params.n_sample >= 3, "ransac n_sample must be >= 3");
  require(params.iterations >= 1, "ransac iterations must be >= 1");
  if (pts.size() < static_cast<std::size_t>(params.n_sample)) {
    fail(ErrorCode::kInsufficientPoints, "ransac needs " + std::to_string(params.n_sample) +
                                             " points, got " + std::to_string(pts.size()));
  }
  std::mt19937_64 rng(params.seed);
  std::vector<int> perm(pts.size());
  std::iota(perm.begin(), perm.end(), 0);
  const double thresh = params.inlier_thresh;

  std::optional<PlaneModel> best;
  std::size_t best_count = 0;
  double best_residual = 0.0;
  for (int it = 0; it < params.iterations; ++it) {
    for (int k = 0; k < params.n_sample; ++k) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), perm.size() - 1);
      std::swap(perm[k], perm[pick(rng)]);
    }
    const auto model =
        fit_plane(pts, std::span<const int>(perm.data(), static_cast<std::size_t>(params.n_sample)));
    if (!model) continue;
    std::size_t count = 0;
    double residual = 0.0;
    for (const Vec3& p : pts) {
      const double d = model->distance(p);
      if (d < thresh) {
        ++count;
        residual += d * d;
      }
    }
    if (!best || count > best_count || (count == best_count && residual < best_residual)) {
      best = model;
      best_count = count;
      best_residual = residual;
    }
  }
  if (!best) fail(ErrorCode::kInsufficientPoints, "every ransac sample was degenerate");

  const auto inliers = plane_inliers(pts, *best, params.inlier_thresh);
  if (auto refined = fit_plane(pts, inliers)) {
    if (plane_inliers(pts, *refined, params.inlier_thresh).size() >= inliers.size()) best = refined;
  }
  return *best;
}

}  // namespace ads3d

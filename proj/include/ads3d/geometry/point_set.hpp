#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

#include "ads3d/io/image.hpp"

namespace ads3d {

using Vec3 = Eigen::Vector3f;

struct GridCell {
  int row = 0;
  int col = 0;
  bool operator==(const GridCell&) const = default;
};

// Unorganized view of the valid points of an organized cloud. Row k of
// `points` came from grid cell `back_index[k]`; origin (invalid) cells are
// dropped.
struct PointSet {
  std::vector<Vec3> points;
  std::vector<GridCell> back_index;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  static PointSet from_cloud(const OrganizedPointCloud& cloud) {
    PointSet ps;
    ps.points.reserve(cloud.valid_count());
    ps.back_index.reserve(ps.points.capacity());
    for (int i = 0; i < cloud.height(); ++i) {
      for (int j = 0; j < cloud.width(); ++j) {
        if (!cloud.valid(i, j)) continue;
        const float* p = cloud.point(i, j);
        ps.points.emplace_back(p[0], p[1], p[2]);
        ps.back_index.push_back({i, j});
      }
    }
    return ps;
  }

  static PointSet from_points(std::vector<Vec3> pts) {
    PointSet ps;
    ps.points = std::move(pts);
    return ps;
  }
};

// Squared Euclidean distance accumulated in double. Every neighbour query in
// the library ranks points with this function so that results are reproducible
// bit for bit.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = static_cast<double>(a.x()) - static_cast<double>(b.x());
  const double dy = static_cast<double>(a.y()) - static_cast<double>(b.y());
  const double dz = static_cast<double>(a.z()) - static_cast<double>(b.z());
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace ads3d

#pragma once

#include <span>
#include <vector>

#include "ads3d/error.hpp"
#include "ads3d/geometry/kdtree.hpp"

namespace ads3d {

inline constexpr int kNoise = -1;

struct DbscanResult {
  std::vector<int> labels;  // cluster id per point, kNoise for noise
  int cluster_count = 0;
};

// Density-based clustering. A point is core when at least `min_points` points
// (itself included) lie within `eps`. Clusters are numbered in the order their
// lowest-index core point appears; a border point joins the first cluster that
// reaches it.
inline DbscanResult dbscan(std::span<const Vec3> pts, float eps, int min_points) {
  require(eps > 0.0f, "dbscan eps must be > 0");
  require(min_points >= 1, "dbscan min_points must be >= 1");
  constexpr int kUnvisited = -2;
  DbscanResult res;
  res.labels.assign(pts.size(), kUnvisited);
  if (pts.empty()) return res;

  const KdTree index(pts);
  std::vector<Neighbor> nbrs;
  std::vector<int> queue;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (res.labels[i] != kUnvisited) continue;
    index.radius_search(pts[i], eps, nbrs);
    if (static_cast<int>(nbrs.size()) < min_points) {
      res.labels[i] = kNoise;
      continue;
    }
    const int cluster = res.cluster_count++;
    res.labels[i] = cluster;
    queue.clear();
    for (const Neighbor& n : nbrs) queue.push_back(n.index);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int j = queue[head];
      if (res.labels[j] == kNoise) res.labels[j] = cluster;  // border point
      if (res.labels[j] != kUnvisited) continue;
      res.labels[j] = cluster;
      index.radius_search(pts[j], eps, nbrs);
      if (static_cast<int>(nbrs.size()) >= min_points) {
        for (const Neighbor& n : nbrs)
          if (res.labels[n.index] < 0) queue.push_back(n.index);
      }
    }
  }
  return res;
}

}  // namespace ads3d

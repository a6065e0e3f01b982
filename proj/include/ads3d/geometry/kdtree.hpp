#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <vector>

#include "ads3d/error.hpp"
#include "ads3d/geometry/point_set.hpp"

namespace ads3d {

struct Neighbor {
  int index = 0;
  double dist2 = 0.0;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }
  bool operator==(const Neighbor&) const = default;
};

// Static 3-d tree over a copy of the input points. Immutable after
// construction, so concurrent queries are safe.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points, int leaf_size = 24)
      : points_(points.begin(), points.end()), leaf_size_(std::max(1, leaf_size)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / leaf_size_ + 2);
      build(0, static_cast<int>(points_.size()));
    }
    sorted_.reserve(points_.size());
    for (int idx : order_) sorted_.push_back(points_[idx]);
  }

  std::size_t size() const { return points_.size(); }
  const Vec3& point(int i) const { return points_[i]; }
  std::span<const Vec3> points() const { return points_; }

  // Up to `max_nn` nearest points within `radius` (inclusive), ascending by
  // (distance, index). Points coinciding with `q` are excluded, so querying
  // with a member of the set never returns the member itself.
  void radius_knn(const Vec3& q, float radius, int max_nn, std::vector<Neighbor>& out) const {
    out.clear();
    require(radius > 0.0f, "radius must be > 0");
    require(max_nn >= 1, "max_nn must be >= 1");
    if (points_.empty()) return;
    const double r2 = static_cast<double>(radius) * static_cast<double>(radius);
    // Candidates accumulate unsorted; whenever the buffer doubles the
    // requested size it is cut back to the best max_nn and the search bound
    // tightens to the worst survivor. Ties at the bound are kept so the
    // final (distance, index) order decides.
    const std::size_t k = static_cast<std::size_t>(max_nn);
    const std::size_t cap = std::max<std::size_t>(2 * k, 32);
    double limit = r2;
    auto shrink = [&]() {
      std::nth_element(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k - 1), out.end());
      out.resize(k);
      limit = out[k - 1].dist2;
    };
    auto visit = [&](int idx, double d2) {
      if (d2 == 0.0 || d2 > limit) return;
      out.push_back({idx, d2});
      if (out.size() >= cap) shrink();
    };
    search(0, q, visit, [&limit]() { return limit; });
    std::sort(out.begin(), out.end());
    if (out.size() > k) out.resize(k);
  }

  std::vector<Neighbor> radius_knn(const Vec3& q, float radius, int max_nn) const {
    std::vector<Neighbor> out;
    radius_knn(q, radius, max_nn, out);
    return out;
  }

  // All points within `radius` (inclusive), including any coinciding with
  // `q`, ascending by (distance, index).
  void radius_search(const Vec3& q, float radius, std::vector<Neighbor>& out) const {
    out.clear();
    require(radius > 0.0f, "radius must be > 0");
    if (points_.empty()) return;
    const double r2 = static_cast<double>(radius) * static_cast<double>(radius);
    auto visit = [&](int idx, double d2) {
      if (d2 <= r2) out.push_back({idx, d2});
    };
    search(0, q, visit, [r2]() { return r2; });
    std::sort(out.begin(), out.end());
  }

  std::vector<Neighbor> radius_search(const Vec3& q, float radius) const {
    std::vector<Neighbor> out;
    radius_search(q, radius, out);
    return out;
  }

 private:
  struct Node {
    float lo[3];
    float hi[3];
    int begin = 0;
    int end = 0;
    int left = -1;  // leaf when left < 0
    int right = -1;
  };

  int build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Node node;
    node.begin = begin;
    node.end = end;
    for (int d = 0; d < 3; ++d) {
      node.lo[d] = std::numeric_limits<float>::infinity();
      node.hi[d] = -std::numeric_limits<float>::infinity();
    }
    for (int k = begin; k < end; ++k) {
      const Vec3& p = points_[order_[k]];
      for (int d = 0; d < 3; ++d) {
        node.lo[d] = std::min(node.lo[d], p[d]);
        node.hi[d] = std::max(node.hi[d], p[d]);
      }
    }
    if (end - begin > leaf_size_) {
      int dim = 0;
      for (int d = 1; d < 3; ++d)
        if (node.hi[d] - node.lo[d] > node.hi[dim] - node.lo[dim]) dim = d;
      if (node.hi[dim] > node.lo[dim]) {
        const int mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) { return points_[a][dim] < points_[b][dim]; });
        node.left = build(begin, mid);
        node.right = build(mid, end);
      }
    }
    nodes_[id] = node;
    return id;
  }

  static double box_dist2(const Node& n, const Vec3& q) {
    double s = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double v = q[d];
      double diff = 0.0;
      if (v < n.lo[d]) diff = static_cast<double>(n.lo[d]) - v;
      else if (v > n.hi[d]) diff = v - static_cast<double>(n.hi[d]);
      s += diff * diff;
    }
    return s;
  }

  template <class Visit, class Bound>
  void search(int node_id, const Vec3& q, Visit& visit, const Bound& bound) const {
    const Node& n = nodes_[node_id];
    if (n.left < 0) {
      for (int k = n.begin; k < n.end; ++k) visit(order_[k], squared_distance(q, sorted_[k]));
      return;
    }
    const double dl = box_dist2(nodes_[n.left], q);
    const double dr = box_dist2(nodes_[n.right], q);
    const int first = dl <= dr ? n.left : n.right;
    const int second = dl <= dr ? n.right : n.left;
    const double dfirst = std::min(dl, dr);
    const double dsecond = std::max(dl, dr);
    if (dfirst <= bound()) search(first, q, visit, bound);
    if (dsecond <= bound()) search(second, q, visit, bound);
  }

  std::vector<Vec3> points_;
  std::vector<Vec3> sorted_;  // points_ in leaf order, for locality
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int leaf_size_ = 24;
};

}  // namespace ads3d

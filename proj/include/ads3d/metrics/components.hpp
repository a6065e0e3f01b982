#pragma once

#include <numeric>
#include <vector>

#include "ads3d/io/image.hpp"

namespace ads3d {

struct ComponentSet {
  Image<int> labels;  // 0 = background, 1..count
  int count = 0;
};

// 8-connected labelling. Labels follow the raster order of each
// component's first pixel.
inline ComponentSet connected_components(const Mask& mask) {
  const int h = mask.height();
  const int w = mask.width();
  ComponentSet cs{Image<int>(h, w, 1, 0), 0};
  std::vector<int> parent{0};
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent[static_cast<std::size_t>(b)] = a;
    else parent[static_cast<std::size_t>(a)] = b;
  };
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (!mask.at(i, j)) continue;
      int lab = 0;
      // already-visited neighbours: W, NW, N, NE
      const int nb[4][2] = {{i, j - 1}, {i - 1, j - 1}, {i - 1, j}, {i - 1, j + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[1] < 0 || q[1] >= w) continue;
        const int l = cs.labels.at(q[0], q[1]);
        if (!l) continue;
        if (!lab) lab = l;
        else unite(lab, l);
      }
      if (!lab) {
        lab = static_cast<int>(parent.size());
        parent.push_back(lab);
      }
      cs.labels.at(i, j) = lab;
    }
  }
  // Provisional labels are created in raster order and every set is rooted
  // at its smallest member, so numbering roots in increasing order keeps
  // the first-pixel ordering.
  std::vector<int> final_id(parent.size(), 0);
  for (std::size_t l = 1; l < parent.size(); ++l) {
    const int r = find(static_cast<int>(l));
    if (r == static_cast<int>(l)) final_id[l] = ++cs.count;
  }
  for (int& v : cs.labels.storage())
    if (v) v = final_id[static_cast<std::size_t>(find(v))];
  return cs;
}

}  // namespace ads3d

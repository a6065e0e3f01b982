#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "ads3d/error.hpp"
#include "ads3d/io/image.hpp"

namespace ads3d {

// Area under the ROC curve as the Mann-Whitney statistic
// P(s+ > s-) + P(s+ == s-) / 2. Counting is done in integers per tie group,
// so the only rounding is the final division.
inline double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) fail(ErrorCode::kDimensionMismatch, "scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::uint64_t pos = 0, neg = 0;
  unsigned __int128 twice = 0;  // 2 * (wins + ties / 2)
  std::size_t g = 0;
  while (g < order.size()) {
    std::size_t e = g;
    std::uint64_t p = 0, n = 0;
    while (e < order.size() && scores[order[e]] == scores[order[g]]) {
      (labels[order[e]] ? p : n) += 1;
      ++e;
    }
    twice += static_cast<unsigned __int128>(2) * p * neg + static_cast<unsigned __int128>(p) * n;
    pos += p;
    neg += n;
    g = e;
  }
  if (pos == 0 || neg == 0) {
    fail(ErrorCode::kUndefinedMetric, "ROC AUC needs both positive and negative samples");
  }
  return static_cast<double>(static_cast<long double>(twice) /
                             (2.0L * static_cast<long double>(pos) * static_cast<long double>(neg)));
}

// Every pixel of every map is one sample; labels come from the masks.
inline double pixel_roc_auc(std::span<const Image<double>> maps, std::span<const Mask> masks) {
  if (maps.size() != masks.size()) fail(ErrorCode::kDimensionMismatch, "maps and masks differ in count");
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (maps[i].height() != masks[i].height() || maps[i].width() != masks[i].width()) {
      fail(ErrorCode::kDimensionMismatch, "map and mask sizes differ");
    }
    s.insert(s.end(), maps[i].storage().begin(), maps[i].storage().end());
    for (std::uint8_t v : masks[i].storage()) l.push_back(v ? 1 : 0);
  }
  return roc_auc(s, l);
}

}  // namespace ads3d

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "ads3d/error.hpp"
#include "ads3d/io/image.hpp"
#include "ads3d/metrics/components.hpp"

namespace ads3d {

struct CurvePoint {
  double fpr = 0.0;
  double pro = 0.0;
};

struct ProResult {
  std::vector<CurvePoint> curve;  // fpr ascending, ends at the limit
  double integrated = 0.0;        // area over [0, limit] / limit
};

// Trapezoidal area under a curve with ascending fpr, clipped at `limit`
// (the last segment is interpolated), divided by `limit`.
inline ProResult integrate_curve(std::vector<CurvePoint> pts, double limit) {
  ProResult r;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const CurvePoint& p = pts[i];
    if (p.fpr <= limit) {
      if (!r.curve.empty()) {
        const CurvePoint& q = r.curve.back();
        r.integrated += (p.fpr - q.fpr) * (p.pro + q.pro) / 2.0;
      }
      r.curve.push_back(p);
      continue;
    }
    const CurvePoint& q = r.curve.back();
    if (q.fpr < limit) {
      const double t = (limit - q.fpr) / (p.fpr - q.fpr);
      const CurvePoint m{limit, q.pro + t * (p.pro - q.pro)};
      r.integrated += (m.fpr - q.fpr) * (m.pro + q.pro) / 2.0;
      r.curve.push_back(m);
    }
    break;
  }
  r.integrated /= limit;
  return r;
}

// Per-region overlap against false positive rate, every distinct score
// value a threshold (pixels with score >= t are positive). Components are
// 8-connected regions of the masks, pooled over the whole set so each
// component has weight 1/K. The curve starts at (0, PRO at the top
// threshold).
inline ProResult pro_curve(std::span<const Image<double>> maps, std::span<const Mask> masks,
                           double fpr_limit = 0.3) {
  if (maps.size() != masks.size()) fail(ErrorCode::kDimensionMismatch, "maps and masks differ in count");
  if (!(fpr_limit > 0.0 && fpr_limit <= 1.0)) fail(ErrorCode::kInvalidArgument, "fpr_limit must be in (0, 1]");
  struct Px {
    double score;
    int comp;  // -1 for normal pixels
  };
  std::vector<Px> px;
  std::vector<double> comp_size;
  for (std::size_t s = 0; s < maps.size(); ++s) {
    if (maps[s].height() != masks[s].height() || maps[s].width() != masks[s].width()) {
      fail(ErrorCode::kDimensionMismatch, "map and mask sizes differ");
    }
    const ComponentSet cs = connected_components(masks[s]);
    const int base = static_cast<int>(comp_size.size());
    comp_size.resize(comp_size.size() + static_cast<std::size_t>(cs.count), 0.0);
    const auto& lab = cs.labels.storage();
    const auto& sc = maps[s].storage();
    for (std::size_t k = 0; k < sc.size(); ++k) {
      const int c = lab[k] ? base + lab[k] - 1 : -1;
      if (c >= 0) comp_size[static_cast<std::size_t>(c)] += 1.0;
      px.push_back({sc[k], c});
    }
  }
  const std::size_t K = comp_size.size();
  std::uint64_t negatives = 0;
  for (const Px& p : px) negatives += p.comp < 0;
  if (K == 0) fail(ErrorCode::kUndefinedMetric, "PRO needs at least one ground-truth region");
  if (negatives == 0) fail(ErrorCode::kUndefinedMetric, "PRO needs at least one normal pixel");

  std::sort(px.begin(), px.end(), [](const Px& a, const Px& b) { return a.score > b.score; });
  // sum_k |P & C_k| / |C_k|, compensated: large regions add up many tiny
  // terms and a plain running sum drifts past K
  long double overlap_sum = 0.0L, overlap_err = 0.0L;
  std::uint64_t fp = 0;
  std::vector<CurvePoint> pts;
  std::size_t g = 0;
  while (g < px.size()) {
    std::size_t e = g;
    while (e < px.size() && px[e].score == px[g].score) {
      const int c = px[e].comp;
      if (c < 0) ++fp;
      else {
        const long double term = 1.0L / comp_size[static_cast<std::size_t>(c)];
        const long double t = overlap_sum + term;
        overlap_err += std::abs(overlap_sum) >= term ? (overlap_sum - t) + term : (term - t) + overlap_sum;
        overlap_sum = t;
      }
      ++e;
    }
    const double pro = std::min(1.0, static_cast<double>((overlap_sum + overlap_err) / static_cast<long double>(K)));
    if (pts.empty()) pts.push_back({0.0, pro});
    pts.push_back({static_cast<double>(fp) / static_cast<double>(negatives), pro});
    g = e;
  }
  return integrate_curve(std::move(pts), fpr_limit);
}

}  // namespace ads3d

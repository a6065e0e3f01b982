#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "ads3d/parallel.hpp"
#include "ads3d/scoring/memory_bank.hpp"

namespace ads3d {

struct KCenterResult {
  std::vector<std::size_t> order;  // selection order, order[0] = start
  // gains[i] = distance from order[i] to the set chosen before it
  // (infinity for the start). After selecting i points the covering radius
  // of the bank is gains[i] when i < order.size().
  std::vector<double> gains;
  double covering_radius = 0.0;  // of the full selection
};

// Farthest-point selection of `count` rows starting at `start`. Ties go to
// the lowest row index.
inline KCenterResult greedy_kcenter(const MemoryBank& bank, std::size_t count, std::size_t start,
                                    int threads = 1) {
  const std::size_t m = bank.size();
  require(start < m, "k-center start index out of range");
  count = std::min(count, m);
  KCenterResult r;
  std::vector<double> mind(m, std::numeric_limits<double>::infinity());
  std::size_t cur = start;
  double gain = std::numeric_limits<double>::infinity();
  constexpr std::size_t chunk = 4096;
  const std::size_t chunks = (m + chunk - 1) / chunk;
  std::vector<std::size_t> best_idx(chunks);
  std::vector<double> best_val(chunks);
  std::vector<char> taken(m, 0);
  for (std::size_t sel = 0; sel < count; ++sel) {
    r.order.push_back(cur);
    taken[cur] = 1;
    r.gains.push_back(gain);
    const auto c = bank.row(cur);
    parallel_for(chunks, [&](std::size_t ch) {
      const std::size_t lo = ch * chunk;
      const std::size_t hi = std::min(m, lo + chunk);
      std::size_t bi = lo;
      double bv = -1.0;
      for (std::size_t j = lo; j < hi; ++j) {
        mind[j] = std::min(mind[j], exact_distance(bank.row(j), c));
        if (!taken[j] && mind[j] > bv) {
          bv = mind[j];
          bi = j;
        }
      }
      best_idx[ch] = bi;
      best_val[ch] = bv;
    }, m >= 16384 ? threads : 1);
    std::size_t bi = best_idx[0];
    double bv = best_val[0];  // -1 when every row is taken
    for (std::size_t ch = 1; ch < chunks; ++ch) {
      if (best_val[ch] > bv) {
        bv = best_val[ch];
        bi = best_idx[ch];
      }
    }
    cur = bi;
    gain = std::max(bv, 0.0);
  }
  r.covering_radius = gain;
  return r;
}

inline std::size_t coreset_size(std::size_t m, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) fail(ErrorCode::kInvalidArgument, "coreset ratio must be in (0, 1]");
  const double n = std::ceil(ratio * static_cast<double>(m) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(n), 1, m);
}

// Keeps ceil(ratio * M) rows chosen by greedy k-center from a seeded random
// start. Kept rows stay in their original bank order.
inline MemoryBank coreset_select(const MemoryBank& bank, double ratio, std::uint64_t seed, int threads = 1) {
  const std::size_t m = bank.size();
  const std::size_t n = coreset_size(m, ratio);
  BankInfo info = bank.info();
  info.coreset_ratio = ratio;
  info.seed = seed;
  if (n == m) return MemoryBank(bank.vectors(), bank.dim(), info);
  std::mt19937_64 rng(seed);
  const std::size_t start = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
  auto sel = greedy_kcenter(bank, n, start, threads).order;
  std::sort(sel.begin(), sel.end());
  std::vector<float> v;
  v.reserve(n * static_cast<std::size_t>(bank.dim()));
  for (std::size_t j : sel) {
    const auto row = bank.row(j);
    v.insert(v.end(), row.begin(), row.end());
  }
  return MemoryBank(std::move(v), bank.dim(), info);
}

}  // namespace ads3d

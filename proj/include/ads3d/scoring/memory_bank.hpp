#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ads3d/descriptors/grid.hpp"
#include "ads3d/error.hpp"
#include "ads3d/io/tensor.hpp"
#include "ads3d/parallel.hpp"

namespace ads3d {

// Euclidean distance in double, accumulated in index order. Scoring reranks
// with this exact expression.
inline double exact_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

struct BankInfo {
  Method method = Method::kRaw;
  int k = 1;
  double coreset_ratio = 1.0;
  std::uint64_t seed = 0;
};

// M x D matrix of normal training patch vectors. Immutable once built.
class MemoryBank {
 public:
  MemoryBank() = default;
  MemoryBank(std::vector<float> vectors, int dim, BankInfo info = {})
      : vectors_(std::move(vectors)), dim_(dim), info_(info) {
    require(dim_ >= 1, "bank dim must be >= 1");
    if (vectors_.empty() || vectors_.size() % static_cast<std::size_t>(dim_) != 0) {
      fail(ErrorCode::kInvalidArgument, "bank needs at least one vector of the stated dim");
    }
    build_index();
  }

  std::size_t size() const { return vectors_.size() / static_cast<std::size_t>(dim_); }
  int dim() const { return dim_; }
  const BankInfo& info() const { return info_; }
  const std::vector<float>& vectors() const { return vectors_; }
  std::span<const float> row(std::size_t m) const {
    return {vectors_.data() + m * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  // Mean Euclidean distance from `q` to its k nearest bank vectors.
  double knn_distance(std::span<const float> q, int k) const {
    std::vector<double> one;
    score_block(q.data(), 1, k, one);
    return one[0];
  }

  // Scores `count` queries stored row-major at `q`. A float GEMM on centred
  // data proposes candidates; every candidate that could be among the k
  // nearest under a rounding-error bound is rescored exactly, so results are
  // identical to a linear scan with exact_distance.
  void score_block(const float* q, std::size_t count, int k, std::vector<double>& out) const {
    using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const std::size_t m = size();
    if (k < 1 || static_cast<std::size_t>(k) > m) {
      fail(ErrorCode::kInvalidArgument, "k=" + std::to_string(k) + " must be in [1, bank size " +
                                            std::to_string(m) + "]");
    }
    out.assign(count, 0.0);
    const std::size_t d = static_cast<std::size_t>(dim_);
    RowMat qc(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
    std::vector<double> qn(count);
    for (std::size_t i = 0; i < count; ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const float v = static_cast<float>(static_cast<double>(q[i * d + c]) - mean_[c]);
        qc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
        s += static_cast<double>(v) * v;
      }
      qn[i] = s;
    }
    Eigen::Map<const RowMat> bank(centered_.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    const RowMat dots = qc * bank.transpose();
    // |fl(x.y) - x.y| <= gamma_D sum|x_i y_i| <= gamma_D (|x|^2 + |y|^2) / 2;
    // the centring round-off adds at most ~4u (|x|^2 + |y|^2).
    constexpr double u = std::numeric_limits<float>::epsilon() / 2.0;
    const double rel = 2.0 * ((static_cast<double>(d) + 2.0) * u * 1.05 + 6.0 * u);
    std::vector<double> lo(m), hi(m);
    std::vector<std::size_t> cand;
    std::vector<double> exact;
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double approx = qn[i] + norms_[j] - 2.0 * static_cast<double>(dots(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        const double tol = rel * (qn[i] + norms_[j]) + 1e-30;
        lo[j] = approx - tol;
        hi[j] = approx + tol;
      }
      std::vector<double> his(hi);
      std::nth_element(his.begin(), his.begin() + (k - 1), his.end());
      const double cut = his[static_cast<std::size_t>(k - 1)];
      cand.clear();
      for (std::size_t j = 0; j < m; ++j)
        if (lo[j] <= cut) cand.push_back(j);
      exact.clear();
      const std::span<const float> qi(q + i * d, d);
      for (std::size_t j : cand) exact.push_back(exact_distance(qi, row(j)));
      std::partial_sort(exact.begin(), exact.begin() + k, exact.end());
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += exact[static_cast<std::size_t>(t)];
      out[i] = s / k;
    }
  }

  bool operator==(const MemoryBank& o) const {
    return dim_ == o.dim_ && vectors_ == o.vectors_ && info_.method == o.info_.method && info_.k == o.info_.k &&
           info_.coreset_ratio == o.info_.coreset_ratio && info_.seed == o.info_.seed;
  }

 private:
  void build_index() {
    const std::size_t m = size();
    const std::size_t d = static_cast<std::size_t>(dim_);
    mean_.assign(d, 0.0);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t c = 0; c < d; ++c) mean_[c] += vectors_[j * d + c];
    for (double& v : mean_) v /= static_cast<double>(m);
    centered_.resize(vectors_.size());
    norms_.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const float v = static_cast<float>(static_cast<double>(vectors_[j * d + c]) - mean_[c]);
        centered_[j * d + c] = v;
        s += static_cast<double>(v) * v;
      }
      norms_[j] = s;
    }
  }

  std::vector<float> vectors_;
  int dim_ = 0;
  BankInfo info_;
  std::vector<double> mean_;
  std::vector<float> centered_;
  std::vector<double> norms_;
};

// Stacks every patch vector of every grid, grid by grid, patch by patch.
inline MemoryBank fit_memory_bank(std::span<const PatchFeatureGrid> grids, BankInfo info = {}) {
  if (grids.empty()) fail(ErrorCode::kInvalidArgument, "memory bank needs at least one grid");
  const int dim = grids.front().dim;
  std::vector<float> v;
  for (const auto& g : grids) {
    if (g.dim != dim) {
      fail(ErrorCode::kDimensionMismatch, "grid dim " + std::to_string(g.dim) + " != bank dim " + std::to_string(dim));
    }
    v.insert(v.end(), g.values.begin(), g.values.end());
  }
  info.method = grids.front().method;
  return MemoryBank(std::move(v), dim, info);
}

// Per-patch kNN distances, rows x cols.
struct PatchScores {
  int rows = 0;
  int cols = 0;
  std::vector<double> scores;

  double at(int r, int c) const { return scores[static_cast<std::size_t>(r * cols + c)]; }
};

inline PatchScores score_sample(const MemoryBank& bank, const PatchFeatureGrid& grid, int k = 1,
                                int threads = 1) {
  if (grid.dim != bank.dim()) {
    fail(ErrorCode::kDimensionMismatch, "grid dim " + std::to_string(grid.dim) + " != bank dim " +
                                            std::to_string(bank.dim()));
  }
  PatchScores ps{grid.rows, grid.cols, std::vector<double>(static_cast<std::size_t>(grid.patch_count()))};
  constexpr std::size_t block = 64;
  const std::size_t n = ps.scores.size();
  const std::size_t blocks = (n + block - 1) / block;
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t lo = b * block;
    const std::size_t cnt = std::min(block, n - lo);
    std::vector<double> out;
    bank.score_block(grid.values.data() + lo * static_cast<std::size_t>(grid.dim), cnt, k, out);
    std::copy(out.begin(), out.end(), ps.scores.begin() + static_cast<std::ptrdiff_t>(lo));
  }, threads);
  return ps;
}

// Bank persistence: vectors as an M x D f32 ADTN file plus a key=value
// sidecar carrying method, k, coreset ratio and seed.
inline std::filesystem::path bank_sidecar_path(const std::filesystem::path& bank_path) {
  auto p = bank_path;
  p += ".meta";
  return p;
}

inline void save_memory_bank(const MemoryBank& bank, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_tensor(Tensor::from<float>({bank.size(), static_cast<std::uint64_t>(bank.dim())}, bank.vectors()), path);
  std::ofstream meta(bank_sidecar_path(path), std::ios::binary | std::ios::trunc);
  if (!meta) fail(ErrorCode::kIo, "cannot write " + bank_sidecar_path(path).string());
  std::ostringstream ratio;
  ratio.precision(17);
  ratio << bank.info().coreset_ratio;
  meta << "method=" << method_name(bank.info().method) << "\n"
       << "k=" << bank.info().k << "\n"
       << "coreset_ratio=" << ratio.str() << "\n"
       << "seed=" << bank.info().seed << "\n"
       << "rows=" << bank.size() << "\n"
       << "dim=" << bank.dim() << "\n";
}

inline std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kInvalidArgument, path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline MemoryBank load_memory_bank(const std::filesystem::path& path) {
  const Tensor t = read_tensor(path);
  if (!t.holds<float>() || t.ndim() != 2) fail(ErrorCode::kDimensionMismatch, path.string() + ": bank must be M x D f32");
  const auto kv = read_key_values(bank_sidecar_path(path));
  BankInfo info;
  try {
    info.method = parse_method_tag(kv.at("method"));
    info.k = std::stoi(kv.at("k"));
    info.coreset_ratio = std::stod(kv.at("coreset_ratio"));
    info.seed = std::stoull(kv.at("seed"));
  } catch (const std::out_of_range&) {
    fail(ErrorCode::kInvalidArgument, bank_sidecar_path(path).string() + ": missing field");
  } catch (const std::invalid_argument&) {
    fail(ErrorCode::kInvalidArgument, bank_sidecar_path(path).string() + ": malformed field");
  }
  auto v = t.values<float>();
  return MemoryBank(std::vector<float>(v.begin(), v.end()), static_cast<int>(t.dims()[1]), info);
}

}  // namespace ads3d

#pragma once

// fit / eval over a dataset in the standard layout.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ads3d/descriptors/dsift.hpp"
#include "ads3d/descriptors/fpfh.hpp"
#include "ads3d/descriptors/grid.hpp"
#include "ads3d/descriptors/hog.hpp"
#include "ads3d/descriptors/raw.hpp"
#include "ads3d/io/dataset.hpp"
#include "ads3d/io/png.hpp"
#include "ads3d/metrics/pro.hpp"
#include "ads3d/metrics/report.hpp"
#include "ads3d/metrics/roc.hpp"
#include "ads3d/parallel.hpp"
#include "ads3d/preprocess.hpp"
#include "ads3d/scoring/anomaly_map.hpp"
#include "ads3d/scoring/coreset.hpp"
#include "ads3d/scoring/memory_bank.hpp"

namespace ads3d {

struct RunConfig {
  std::filesystem::path dataset_root;
  std::vector<std::string> classes;  // empty: every class under the root
  Method method = Method::kFpfh;
  PreprocessConfig preprocess;
  int k = 1;
  double coreset_ratio = 1.0;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "ads3d_out";
  int eval_resolution = 224;  // 0: evaluate at the resolution of the (cropped) input
  double sigma = 4.0;         // anomaly map smoothing, pixels at target_size
  double fpr_limit = 0.3;
  std::filesystem::path features_root;  // exported deep RGB features
  bool standardize = false;             // per-channel z-score before fusion
  bool heatmaps = true;
  FpfhParams fpfh;
  DsiftParams dsift;
  int threads = thread_count();

  void validate() const {
    if (dataset_root.empty()) fail(ErrorCode::kInvalidArgument, "dataset_root is required");
    preprocess.validate();
    fpfh.validate();
    require(k >= 1, "k must be >= 1");
    require(coreset_ratio > 0.0 && coreset_ratio <= 1.0, "coreset_ratio must be in (0, 1]");
    require(sigma >= 0.0, "sigma must be >= 0");
    require(fpr_limit > 0.0 && fpr_limit <= 1.0, "fpr_limit must be in (0, 1]");
    require(eval_resolution == 0 || eval_resolution == preprocess.target_size,
            "eval_resolution must be 0 (input resolution) or target_size");
    require(threads >= 1, "threads must be >= 1");
  }

  bool needs_deep_features() const { return method == Method::kRgbDeep || method == Method::kFused; }
};

inline std::vector<std::string> resolve_classes(const RunConfig& cfg) {
  return cfg.classes.empty() ? list_classes(cfg.dataset_root) : cfg.classes;
}

inline std::filesystem::path deep_feature_path(const RunConfig& cfg, const std::string& cls,
                                               const std::string& split, const std::string& id) {
  const auto slash = id.find('/');
  return cfg.features_root / cls / split / id.substr(0, slash) / (id.substr(slash + 1) + ".feat.adtn");
}

inline PatchFeatureGrid load_deep_for(const RunConfig& cfg, const std::string& cls, const std::string& split,
                                      const std::string& id) {
  if (cfg.features_root.empty()) {
    fail(ErrorCode::kInvalidArgument,
         "method " + std::string(method_name(cfg.method)) +
             " needs deep RGB features: run the exporter (export --root <dataset> --out <dir> --modality rgb)"
             " and pass --features_root <dir>");
  }
  const auto path = deep_feature_path(cfg, cls, split, id);
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::kMissingFile,
         path.string() + " not found; deep RGB features come from the exporter "
                         "(export --root <dataset> --out <dir> --modality rgb), one <id>.feat.adtn per sample");
  }
  return load_deep_features(path);
}

// Descriptor grid of an already preprocessed sample.
inline PatchFeatureGrid extract_features(const RunConfig& cfg, const Sample& pre, const std::string& cls,
                                         const std::string& split, Warnings* warnings = nullptr,
                                         int threads = 1) {
  const int grid = pre.height() / kPatchSize;
  switch (cfg.method) {
    case Method::kRaw: return raw_depth_patches(pre.cloud.depth());
    case Method::kHog: return hog_depth(pre.cloud.depth());
    case Method::kDsift: return dsift_depth(pre.cloud.depth(), cfg.dsift, grid, threads);
    case Method::kFpfh: return fpfh_grid(pre.cloud, cfg.fpfh, warnings, grid, threads);
    case Method::kRgbRaw: return raw_rgb_patches(pre.rgb);
    case Method::kRgbDeep: return load_deep_for(cfg, cls, split, pre.id);
    case Method::kFused:
      return concat_features(load_deep_for(cfg, cls, split, pre.id),
                             fpfh_grid(pre.cloud, cfg.fpfh, warnings, grid, threads));
  }
  fail(ErrorCode::kInvalidArgument, "unknown method");
}

// Per-channel mean and standard deviation of the training patches.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  static ChannelStats fit(std::span<const PatchFeatureGrid> grids) {
    const std::size_t d = static_cast<std::size_t>(grids.front().dim);
    ChannelStats st{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    double n = 0.0;
    for (const auto& g : grids)
      for (int p = 0; p < g.patch_count(); ++p) {
        const auto v = g.patch(p);
        for (std::size_t c = 0; c < d; ++c) st.mean[c] += v[c];
        n += 1.0;
      }
    for (double& m : st.mean) m /= n;
    for (const auto& g : grids)
      for (int p = 0; p < g.patch_count(); ++p) {
        const auto v = g.patch(p);
        for (std::size_t c = 0; c < d; ++c) st.stddev[c] += (v[c] - st.mean[c]) * (v[c] - st.mean[c]);
      }
    for (double& s : st.stddev) s = std::sqrt(s / n);
    return st;
  }

  void apply(PatchFeatureGrid& g) const {
    const std::size_t d = mean.size();
    require(static_cast<std::size_t>(g.dim) == d, "standardization dim mismatch");
    for (int p = 0; p < g.patch_count(); ++p) {
      auto v = g.patch(p);
      for (std::size_t c = 0; c < d; ++c) {
        const double s = stddev[c] > 0.0 ? stddev[c] : 1.0;
        v[c] = static_cast<float>((v[c] - mean[c]) / s);
      }
    }
  }

  Tensor to_tensor() const {
    std::vector<double> v(mean);
    v.insert(v.end(), stddev.begin(), stddev.end());
    return Tensor::from<double>({2, mean.size()}, v);
  }

  static ChannelStats from_tensor(const Tensor& t) {
    if (!t.holds<double>() || t.ndim() != 2 || t.dims()[0] != 2) {
      fail(ErrorCode::kDimensionMismatch, "channel stats must be a 2 x D f64 tensor");
    }
    const auto v = t.values<double>();
    const std::size_t d = t.dims()[1];
    return {std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(d)),
            std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(d), v.end())};
  }
};

inline std::filesystem::path bank_path(const RunConfig& cfg, const std::string& cls) {
  return cfg.output_dir / cls / "bank.adtn";
}
inline std::filesystem::path stats_path(const RunConfig& cfg, const std::string& cls) {
  return cfg.output_dir / cls / "channel_stats.adtn";
}

struct FitSummary {
  std::string cls;
  std::size_t train_samples = 0;
  std::size_t bank_rows = 0;
  int dim = 0;
  Warnings warnings;
};

// Feature grids for a list of samples, computed across samples in parallel.
inline std::vector<PatchFeatureGrid> extract_split(const RunConfig& cfg, const std::string& cls,
                                                   const std::string& split, const std::vector<std::string>& ids,
                                                   Warnings& warnings, std::vector<Sample>* keep = nullptr) {
  std::vector<PatchFeatureGrid> grids(ids.size());
  std::vector<Warnings> w(ids.size());
  if (keep) keep->assign(ids.size(), Sample{});
  parallel_for(ids.size(), [&](std::size_t i) {
    const Sample s = load_sample(cfg.dataset_root, cls, split, ids[i]);
    const Sample pre = preprocess_sample(s, cfg.preprocess, cls, &w[i]);
    grids[i] = extract_features(cfg, pre, cls, split, &w[i]);
    if (keep) {
      Sample& k = (*keep)[i];
      k.id = pre.id;
      k.label = pre.label;
      k.gt_mask = cfg.eval_resolution == 0 ? s.gt_mask : pre.gt_mask;
      if (cfg.eval_resolution == 0 && k.gt_mask) {
        // full resolution still honours the per-class crop
        if (auto it = cfg.preprocess.aspect_override.find(cls); it != cfg.preprocess.aspect_override.end()) {
          const int shorter = std::min(s.height(), s.width());
          k.gt_mask = center_crop(*k.gt_mask, it->second.height > 0 ? it->second.height : shorter,
                                  it->second.width > 0 ? it->second.width : shorter);
        }
      }
    }
  }, cfg.threads);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (auto& m : w[i]) warnings.push_back(ids[i] + ": " + m);
  return grids;
}

inline std::vector<FitSummary> cmd_fit(const RunConfig& cfg) {
  cfg.validate();
  std::vector<FitSummary> out;
  for (const std::string& cls : resolve_classes(cfg)) {
    FitSummary fs;
    fs.cls = cls;
    const auto ids = list_samples(cfg.dataset_root, cls, "train");
    if (ids.empty()) fail(ErrorCode::kMissingFile, "no training samples for class " + cls);
    auto grids = extract_split(cfg, cls, "train", ids, fs.warnings);
    std::filesystem::create_directories(cfg.output_dir / cls);
    if (cfg.standardize) {
      const ChannelStats st = ChannelStats::fit(grids);
      for (auto& g : grids) st.apply(g);
      write_tensor(st.to_tensor(), stats_path(cfg, cls));
    }
    BankInfo info;
    info.k = cfg.k;
    info.seed = cfg.seed;
    MemoryBank bank = fit_memory_bank(grids, info);
    grids.clear();
    if (cfg.coreset_ratio < 1.0) bank = coreset_select(bank, cfg.coreset_ratio, cfg.seed, cfg.threads);
    save_memory_bank(bank, bank_path(cfg, cls));
    fs.train_samples = ids.size();
    fs.bank_rows = bank.size();
    fs.dim = bank.dim();
    out.push_back(std::move(fs));
  }
  return out;
}

// Bilinear resize of a score map (half-pixel centres).
inline Image<double> resize_map(const Image<double>& m, int out_h, int out_w) {
  if (m.height() == out_h && m.width() == out_w) return m;
  PatchScores ps{m.height(), m.width(), m.storage()};
  return upsample_bilinear(ps, out_h, out_w);
}

// Min-max normalised 8-bit rendering; a constant map renders black.
inline Image<std::uint8_t> heatmap_image(const Image<double>& m) {
  const auto [lo, hi] = std::minmax_element(m.storage().begin(), m.storage().end());
  Image<std::uint8_t> img(m.height(), m.width(), 1, 0);
  const double range = *hi - *lo;
  if (range <= 0.0) return img;
  for (std::size_t k = 0; k < m.storage().size(); ++k) {
    img.storage()[k] = static_cast<std::uint8_t>(std::lround(255.0 * (m.storage()[k] - *lo) / range));
  }
  return img;
}

struct ClassEval {
  ClassReport report;
  std::vector<std::string> ids;
  std::vector<double> image_scores;
  std::vector<Image<double>> maps;
  std::vector<Mask> masks;
  std::vector<std::uint8_t> labels;
};

// Scores every test sample of `cls` against `bank` and computes the metrics.
inline ClassEval evaluate_class(const RunConfig& cfg, const std::string& cls, const MemoryBank& bank,
                                const std::optional<ChannelStats>& stats, Warnings& warnings) {
  ClassEval ce;
  ce.ids = list_samples(cfg.dataset_root, cls, "test");
  if (ce.ids.empty()) fail(ErrorCode::kMissingFile, "no test samples for class " + cls);
  std::vector<Sample> kept;
  auto grids = extract_split(cfg, cls, "test", ce.ids, warnings, &kept);
  const std::size_t n = ce.ids.size();
  ce.image_scores.resize(n);
  ce.maps.resize(n);
  ce.masks.resize(n);
  ce.labels.resize(n);
  parallel_for(n, [&](std::size_t i) {
    if (stats) stats->apply(grids[i]);
    const PatchScores ps = score_sample(bank, grids[i], bank.info().k);
    const AnomalyMap am = render_anomaly_map(ps, cfg.preprocess.target_size, cfg.sigma);
    ce.image_scores[i] = am.image_score;
    const Mask& gt = *kept[i].gt_mask;
    ce.maps[i] = resize_map(am.map, gt.height(), gt.width());
    ce.masks[i] = gt;
    ce.labels[i] = kept[i].label == Label::kAnomalous ? 1 : 0;
  }, cfg.threads);

  ce.report.test_samples = n;
  ce.report.i_roc = guarded_metric([&] { return roc_auc(ce.image_scores, ce.labels); });
  ce.report.p_roc = guarded_metric([&] { return pixel_roc_auc(ce.maps, ce.masks); });
  ProResult pro;
  ce.report.pro = guarded_metric([&] {
    pro = pro_curve(ce.maps, ce.masks, cfg.fpr_limit);
    return pro.integrated;
  });
  ce.report.pro_curve = pro.curve;
  return ce;
}

inline EvalReport cmd_eval(const RunConfig& cfg, Warnings* warnings_out = nullptr) {
  cfg.validate();
  EvalReport report;
  report.method = std::string(method_name(cfg.method));
  report.fpr_limit = cfg.fpr_limit;
  Warnings warnings;
  for (const std::string& cls : resolve_classes(cfg)) {
    const MemoryBank bank = load_memory_bank(bank_path(cfg, cls));
    std::optional<ChannelStats> stats;
    if (std::filesystem::exists(stats_path(cfg, cls))) stats = ChannelStats::from_tensor(read_tensor(stats_path(cfg, cls)));
    ClassEval ce = evaluate_class(cfg, cls, bank, stats, warnings);
    if (cfg.heatmaps) {
      for (std::size_t i = 0; i < ce.ids.size(); ++i) {
        const auto slash = ce.ids[i].find('/');
        const auto path = cfg.output_dir / "heatmaps" / cls / ce.ids[i].substr(0, slash) /
                          (ce.ids[i].substr(slash + 1) + ".png");
        std::filesystem::create_directories(path.parent_path());
        write_png(heatmap_image(ce.maps[i]), path);
      }
    }
    report.per_class[cls] = std::move(ce.report);
  }
  write_report(report, cfg.output_dir);
  if (warnings_out) *warnings_out = std::move(warnings);
  return report;
}

}  // namespace ads3d

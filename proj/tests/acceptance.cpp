// Acceptance runner: one PASS/FAIL/SKIP line per criterion, exit status 1
// when anything fails.
//
//   acceptance [--workdir DIR] [--only N] [--mvtec_root DIR]

#include <CLI11.hpp>
#include <Eigen/Geometry>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "ads3d/ads3d.hpp"
#include "oracles.hpp"

using namespace ads3d;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  enum Status { kPass, kFail, kSkip } status = kFail;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------- oracles

struct Tally {
  int instances = 0;
  int failures = 0;
  std::string first;
  void check(bool ok, const std::string& what) {
    ++instances;
    if (!ok && failures++ == 0) first = what;
  }
};

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * (1.0 + std::abs(b)); }

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::vector<std::pair<std::string, Tally>> rows;
  auto row = [&](const std::string& name) -> Tally& {
    rows.emplace_back(name, Tally{});
    return rows.back().second;
  };
  auto dim = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1)); };
  std::uniform_real_distribution<float> U01(0.0f, 1.0f);

  {
    Tally& t = row("roc_auc");
    for (int k = 0; k < 100; ++k) {
      const int n = dim(2, 1000);
      const int levels = k % 2 ? 7 : 1 << 20;
      std::vector<double> s(static_cast<std::size_t>(n));
      std::vector<std::uint8_t> y(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        s[static_cast<std::size_t>(i)] = static_cast<double>(rng() % static_cast<unsigned>(levels));
        y[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(rng() % 2);
      }
      y[0] = 0;
      y[1] = 1;
      t.check(close(roc_auc(s, y), oracle::roc_auc(s, y), 1e-9), "instance " + std::to_string(k));
    }
  }
  auto random_set = [&](std::vector<Mask>& masks, std::vector<Image<double>>& maps, bool ensure_region) {
    const int count = dim(1, 2);
    masks.clear();
    maps.clear();
    for (int c = 0; c < count; ++c) {
      const int h = dim(4, 64), w = dim(4, 64);
      masks.push_back(oracle::random_mask(rng, h, w, dim(0, 4), 0.002 * static_cast<double>(rng() % 10)));
      maps.push_back(oracle::random_map(rng, masks.back(), dim(2, 400), 0.3));
    }
    masks[0].at(0, 0) = 0;
    if (ensure_region) masks[0].at(masks[0].height() - 1, masks[0].width() - 1) = 1;
  };
  {
    Tally& t = row("pixel_roc_auc");
    std::vector<Mask> masks;
    std::vector<Image<double>> maps;
    for (int k = 0; k < 100; ++k) {
      random_set(masks, maps, true);
      std::vector<double> s;
      std::vector<std::uint8_t> y;
      for (std::size_t i = 0; i < maps.size(); ++i) {
        s.insert(s.end(), maps[i].storage().begin(), maps[i].storage().end());
        y.insert(y.end(), masks[i].storage().begin(), masks[i].storage().end());
      }
      t.check(close(pixel_roc_auc(maps, masks), oracle::roc_auc(s, y), 1e-9), "instance " + std::to_string(k));
    }
  }
  {
    Tally& t = row("pro_curve");
    std::vector<Mask> masks;
    std::vector<Image<double>> maps;
    for (int k = 0; k < 100; ++k) {
      random_set(masks, maps, true);
      const double limit = k % 5 == 0 ? 1.0 : 0.3;
      t.check(close(pro_curve(maps, masks, limit).integrated, oracle::pro_integrated(maps, masks, limit), 1e-9),
              "instance " + std::to_string(k));
    }
  }
  {
    Tally& t = row("connected_components");
    for (int k = 0; k < 100; ++k) {
      const Mask m = oracle::random_mask(rng, dim(1, 64), dim(1, 64), dim(0, 6), 0.02 * static_cast<double>(rng() % 15));
      int count = 0;
      const auto want = oracle::flood_fill(m, &count);
      const auto got = connected_components(m);
      t.check(got.count == count && got.labels == want, "instance " + std::to_string(k));
    }
  }
  auto random_points = [&](int n, bool lattice) {
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i) {
      if (lattice) {
        pts.emplace_back(static_cast<float>(rng() % 10) / 9.0f, static_cast<float>(rng() % 10) / 9.0f,
                         static_cast<float>(rng() % 10) / 9.0f);
      } else {
        pts.emplace_back(U01(rng), U01(rng), U01(rng));
      }
    }
    return pts;
  };
  {
    Tally& t = row("radius_knn");
    for (int k = 0; k < 100; ++k) {
      const auto pts = random_points(dim(10, 1000), k % 2);
      const KdTree tree(pts, dim(1, 32));
      bool ok = true;
      for (int q = 0; q < 10 && ok; ++q) {
        const Vec3 query = q % 2 ? pts[rng() % pts.size()] : Vec3(U01(rng), U01(rng), U01(rng));
        const float r = 0.05f + 0.4f * U01(rng);
        const int nn = dim(1, 64);
        ok = tree.radius_knn(query, r, nn) == oracle::radius_knn(pts, query, r, nn);
      }
      t.check(ok, "instance " + std::to_string(k));
    }
  }
  {
    Tally& t = row("dbscan");
    for (int k = 0; k < 100; ++k) {
      const auto pts = random_points(dim(10, 1000), k % 3 == 0);
      const float eps = 0.04f + 0.12f * U01(rng);
      const int minp = dim(1, 10);
      t.check(dbscan(pts, eps, minp).labels == oracle::dbscan(pts, eps, minp), "instance " + std::to_string(k));
    }
  }
  {
    Tally& t = row("raw_depth_patches");
    for (int k = 0; k < 100; ++k) {
      const int h = 8 * dim(1, 8), w = 8 * dim(1, 8);
      DepthMap d(h, w, 1, 0.0f);
      for (auto& v : d.storage()) v = U01(rng);
      const auto g = raw_depth_patches(d);
      bool ok = g.rows == h / 8 && g.cols == w / 8 && g.dim == 64;
      for (int r = 0; r < h / 8 && ok; ++r)
        for (int c = 0; c < w / 8 && ok; ++c)
          for (int e = 0; e < 64 && ok; ++e) ok = g.patch(r, c)[static_cast<std::size_t>(e)] == d.at(8 * r + e / 8, 8 * c + e % 8);
      t.check(ok, "instance " + std::to_string(k));
    }
  }
  {
    Tally& t = row("pool_to_grid");
    for (int k = 0; k < 100; ++k) {
      const int grid = dim(1, 8);
      const int bh = dim(1, 64 / grid), bw = dim(1, 64 / grid), ch = dim(1, 6);
      Image<float> img(grid * bh, grid * bw, ch, 0.0f);
      for (auto& v : img.storage()) v = U01(rng) * 10.0f;
      const auto g = pool_to_grid(img, grid, Method::kRaw);
      const auto want = oracle::block_means(img, grid);
      bool ok = g.values.size() == want.size();
      // stored as float: equal to the float nearest the exact mean
      for (std::size_t i = 0; i < want.size() && ok; ++i)
        ok = std::abs(g.values[i] - want[i]) <= std::ldexp(std::abs(want[i]), -23);
      t.check(ok, "instance " + std::to_string(k));
    }
  }
  {
    Tally& t = row("score_sample");
    for (int k = 0; k < 100; ++k) {
      const int d = dim(1, 64), m = dim(1, 200);
      std::normal_distribution<float> N(k % 3 ? 0.0f : 40.0f, k % 2 ? 0.01f : 1.0f);
      std::vector<float> bank(static_cast<std::size_t>(m) * static_cast<std::size_t>(d));
      for (auto& v : bank) v = N(rng);
      const MemoryBank b(bank, d);
      PatchFeatureGrid g(dim(1, 8), dim(1, 8), d, Method::kRaw);
      for (auto& v : g.values) v = N(rng);
      const int kk = dim(1, std::min(m, 5));
      const auto s = score_sample(b, g, kk);
      bool ok = true;
      for (int p = 0; p < g.patch_count() && ok; ++p)
        ok = close(s.scores[static_cast<std::size_t>(p)], oracle::knn_score(bank, d, g.patch(p).data(), kk), 1e-9);
      t.check(ok, "instance " + std::to_string(k));
    }
  }

  const double elapsed = seconds_since(t0);
  Outcome o;
  int failed_rows = 0;
  int instances = 0;
  std::string notes;
  for (const auto& [name, t] : rows) {
    instances += t.instances;
    if (t.failures) {
      ++failed_rows;
      notes += " " + name + ":" + std::to_string(t.failures) + " mismatches (first " + t.first + ")";
    }
  }
  o.status = failed_rows == 0 && elapsed < 60.0 ? Outcome::kPass : Outcome::kFail;
  o.detail = std::to_string(rows.size()) + " functions x 100 instances (" + std::to_string(instances) +
             "), " + fmt("%.1f s (limit 60 s)", elapsed) + (notes.empty() ? "" : ";" + notes);
  return o;
}

// ---------------------------------------------------------------- FPFH

Outcome fpfh_invariance() {
  // 40 x 50 = 2000 points, jittered 2 cm lattice on a gently curved sheet;
  // coordinates on a 2^-20 grid so that a dyadic translation is exact
  const int H = 40, W = 50;
  const double pitch = 0.02;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> J(-0.3, 0.3);
  auto q = [](double v) { return static_cast<float>(std::round(v * 1048576.0) / 1048576.0); };
  OrganizedPointCloud c(H, W);
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      const double x = (j - W / 2 + J(rng)) * pitch, y = (i - H / 2 + J(rng)) * pitch;
      const double z = 1.0 + 0.15 * std::sin(x * 3 / (pitch * 50)) * std::cos(y * 2 / (pitch * 40)) * pitch * 25;
      c.set(i, j, q(x), q(y), q(z));
    }
  FpfhParams p;
  p.normals.radius = 0.08f;
  p.normals.max_nn = 30;
  const auto g0 = fpfh_grid(c, p, nullptr, 28, 1);

  OrganizedPointCloud t = c;
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      float* pt = t.point(i, j);
      pt[0] += 0.25f;
      pt[1] -= 0.125f;
      pt[2] += 0.0625f;
    }
  const auto gt = fpfh_grid(t, p, nullptr, 28, 1);
  double trans = 0.0;
  for (std::size_t k = 0; k < g0.values.size(); ++k)
    trans = std::max(trans, static_cast<double>(std::abs(g0.values[k] - gt.values[k])));

  // interior: grid cells two away from the border
  std::normal_distribution<double> N;
  double worst = 0.0;
  for (int r = 0; r < 20; ++r) {
    Eigen::Quaterniond qq(N(rng), N(rng), N(rng), N(rng));
    const Eigen::Matrix3d R = qq.normalized().toRotationMatrix();
    OrganizedPointCloud rc = c;
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j) {
        float* pt = rc.point(i, j);
        const Eigen::Vector3d v = R * Eigen::Vector3d(pt[0], pt[1], pt[2]);
        rc.set(i, j, static_cast<float>(v.x()), static_cast<float>(v.y()), static_cast<float>(v.z()));
      }
    const auto g1 = fpfh_grid(rc, p, nullptr, 28, 1);
    for (int a = 2; a < 26; ++a)
      for (int b = 2; b < 26; ++b) {
        double l1 = 0.0;
        for (int k = 0; k < g0.dim; ++k) l1 += std::abs(g0.patch(a, b)[static_cast<std::size_t>(k)] - g1.patch(a, b)[static_cast<std::size_t>(k)]);
        worst = std::max(worst, l1);
      }
  }

  // plane: estimated normals, SPFH mass in the bins holding angle 0
  std::vector<Vec3> plane;
  std::uniform_real_distribution<float> U(-0.1f, 0.1f);
  const Eigen::Matrix3f tilt = Eigen::AngleAxisf(0.4f, Eigen::Vector3f(1, 2, 0).normalized()).toRotationMatrix();
  for (int k = 0; k < 2000; ++k) plane.push_back(tilt * Vec3(U(rng), U(rng), 0.0f) + Vec3(0, 0, 0.6f));
  const PointSet ps = PointSet::from_points(plane);
  const KdTree tree(ps.points);
  NormalParams np;
  np.radius = 0.02f;
  const auto normals = estimate_normals_d(ps, tree, np, 1);
  double zero_mass = 0.0, mass = 0.0;
  const int bins = p.bins_per_angle;
  for (int k = 0; k < static_cast<int>(plane.size()); ++k) {
    const auto nb = tree.radius_knn(plane[static_cast<std::size_t>(k)], 0.02f, 50);
    const auto h = spfh(k, ps.points, normals, nb, bins);
    for (int a = 0; a < 3; ++a) {
      // alpha and phi range over [-1, 1], theta over [-pi, pi]
      const double hi = a == 2 ? std::numbers::pi : 1.0;
      zero_mass += h[static_cast<std::size_t>(a * bins + feature_bin(0.0, -hi, hi, bins))];
      for (int b = 0; b < bins; ++b) mass += h[static_cast<std::size_t>(a * bins + b)];
    }
  }
  const double frac = mass > 0.0 ? zero_mass / mass : 0.0;

  Outcome o;
  o.status = worst <= 1e-2 && trans == 0.0 && frac >= 0.95 ? Outcome::kPass : Outcome::kFail;
  o.detail = fmt("rotation worst interior L1 %.3g (<= 1e-2)", worst) + fmt(", translation max |diff| %g (== 0)", trans) +
             fmt(", plane zero-bin mass %.4f (>= 0.95)", frac);
  return o;
}

// ---------------------------------------------------------------- ranking

Outcome metric_invariance() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Mask> masks;
    std::vector<Image<double>> maps;
    std::vector<std::uint8_t> labels;
    for (int k = 0; k < 8; ++k) {
      const bool anomalous = k % 2;
      masks.push_back(anomalous ? oracle::random_mask(rng, 48, 48, 2, 0.0) : Mask(48, 48, 1, 0));
      maps.push_back(oracle::random_map(rng, masks.back(), trial % 2 ? 16 : 4096, 0.4));
      labels.push_back(anomalous);
    }
    masks[1].at(0, 0) = 1;
    auto all = [&](const std::vector<Image<double>>& m) {
      std::vector<double> img;
      for (const auto& x : m) img.push_back(*std::max_element(x.storage().begin(), x.storage().end()));
      return std::array<double, 3>{roc_auc(img, labels), pixel_roc_auc(m, masks), pro_curve(m, masks).integrated};
    };
    auto apply = [&](auto f) {
      auto out = maps;
      for (auto& m : out)
        for (double& v : m.storage()) v = f(v);
      return out;
    };
    const auto base = all(maps);
    for (const auto& t : {all(apply([](double x) { return 2.0 * x + 1.0; })), all(apply([](double x) { return std::exp(x); }))})
      for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(t[static_cast<std::size_t>(k)] - base[static_cast<std::size_t>(k)]));
  }
  Outcome o;
  o.status = worst <= 1e-12 ? Outcome::kPass : Outcome::kFail;
  o.detail = fmt("20 score sets, max |delta| over I-ROC/P-ROC/PRO %.3g (<= 1e-12)", worst);
  return o;
}

// ---------------------------------------------------------------- end to end

struct Run {
  EvalReport report;
  double seconds = 0.0;
};

Run fit_eval(const fs::path& data, const fs::path& out, Method m, bool preprocess) {
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.dataset_root = data;
  cfg.method = m;
  cfg.output_dir = out;
  cfg.preprocess.enabled = preprocess;
  cfg.heatmaps = false;
  cfg.threads = 1;
  cmd_fit(cfg);
  Run r{cmd_eval(cfg), 0.0};
  r.seconds = seconds_since(t0);
  return r;
}

double metric(const Run& r, MetricValue ClassReport::*f) {
  const auto m = r.report.mean(f);
  return m.value ? *m.value : std::nan("");
}

fs::path synth(const fs::path& root, AnomalyKind kind, WaveMode wave, std::uint64_t seed) {
  SynthSpec sp;  // 50 train / 20 good / 20 anomalous at 224 x 224
  sp.anomaly_kind = kind;
  sp.wave = wave;
  sp.seed = seed;
  fs::remove_all(root);
  generate_dataset(sp, root);
  return root;
}

Outcome end_to_end(const fs::path& work) {
  const auto t0 = Clock::now();
  const fs::path geo = synth(work / "synth_geometric", AnomalyKind::kGeometricDent, WaveMode::kNone, 1);
  const Run a = fit_eval(geo, work / "out_geometric_fpfh", Method::kFpfh, true);
  // colour blotches land on object and background alike: score the whole
  // frame so chance level is the reference
  const fs::path col = synth(work / "synth_color", AnomalyKind::kColorBlotch, WaveMode::kNone, 2);
  const Run bf = fit_eval(col, work / "out_color_fpfh", Method::kFpfh, false);
  const Run br = fit_eval(col, work / "out_color_rgb_raw", Method::kRgbRaw, false);
  const double elapsed = seconds_since(t0);

  const double a_proc = metric(a, &ClassReport::p_roc), a_pro = metric(a, &ClassReport::pro);
  const double b_f = metric(bf, &ClassReport::p_roc), b_r = metric(br, &ClassReport::p_roc);
  const bool ok_a = a_proc >= 0.95 && a_pro >= 0.90;
  const bool ok_b = b_f >= 0.35 && b_f <= 0.65 && b_r >= 0.90;
  Outcome o;
  o.status = ok_a && ok_b && elapsed < 300.0 ? Outcome::kPass : Outcome::kFail;
  o.detail = std::string("(a) fpfh geometric ") + (ok_a ? "ok" : "FAIL") + fmt(": P-ROC %.4f (>= 0.95)", a_proc) +
             fmt(", PRO %.4f (>= 0.90)", a_pro) + fmt(", I-ROC %.4f", metric(a, &ClassReport::i_roc)) +
             fmt(", %.0f s", a.seconds) + "; (b) colour " + (ok_b ? "ok" : "FAIL") +
             fmt(": fpfh P-ROC %.4f (in [0.35, 0.65])", b_f) + fmt(", rgb_raw P-ROC %.4f (>= 0.90)", b_r) +
             fmt(", %.0f s", bf.seconds + br.seconds) + fmt("; total %.0f s single-threaded (< 300 s)", elapsed);
  return o;
}

Outcome preprocessing_ablation(const fs::path& work) {
  const fs::path data = synth(work / "synth_wave", AnomalyKind::kGeometricDent, WaveMode::kAll, 3);
  const Run pre = fit_eval(data, work / "out_wave_hog_pre", Method::kHog, true);
  const Run raw = fit_eval(data, work / "out_wave_hog_raw", Method::kHog, false);
  const double p1 = metric(pre, &ClassReport::p_roc), p0 = metric(raw, &ClassReport::p_roc);
  Outcome o;
  o.status = p1 - p0 >= 0.05 ? Outcome::kPass : Outcome::kFail;
  o.detail = fmt("hog P-ROC with preprocessing %.4f", p1) + fmt(", without %.4f", p0) +
             fmt(", delta %.4f (>= 0.05)", p1 - p0) + fmt("; PRO %.4f", metric(pre, &ClassReport::pro)) +
             fmt(" vs %.4f", metric(raw, &ClassReport::pro));
  return o;
}

Outcome mvtec(const std::string& root, const fs::path& work) {
  Outcome o;
  if (root.empty()) {
    o.status = Outcome::kSkip;
    o.detail = "needs the MVTec 3D-AD dataset on disk (--mvtec_root)";
    return o;
  }
  RunConfig cfg;
  cfg.dataset_root = root;
  cfg.method = Method::kFpfh;
  cfg.output_dir = work / "out_mvtec_fpfh";
  cfg.heatmaps = false;
  cmd_fit(cfg);
  const EvalReport r = cmd_eval(cfg);
  auto m = [&](MetricValue ClassReport::*f) {
    const auto v = r.mean(f);
    return v.value ? *v.value : std::nan("");
  };
  const double pro = m(&ClassReport::pro), proc = m(&ClassReport::p_roc), iroc = m(&ClassReport::i_roc);
  const bool ok = std::abs(pro - 0.924) <= 0.015 && std::abs(proc - 0.978) <= 0.008 && std::abs(iroc - 0.782) <= 0.03;
  o.status = ok ? Outcome::kPass : Outcome::kFail;
  o.detail = fmt("mean PRO %.4f (0.924 +- 0.015)", pro) + fmt(", P-ROC %.4f (0.978 +- 0.008)", proc) +
             fmt(", I-ROC %.4f (0.782 +- 0.03)", iroc);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string workdir = (fs::temp_directory_path() / "ads3d_acceptance").string();
  std::string mvtec_root;
  int only = 0;
  app.add_option("--workdir", workdir, "scratch directory for synthetic data and outputs");
  app.add_option("--only", only, "run a single criterion (1-6)");
  app.add_option("--mvtec_root", mvtec_root, "MVTec 3D-AD root for the optional reproduction");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"fpfh invariance", fpfh_invariance},
      {"metric ranking invariance", metric_invariance},
      {"synthetic end-to-end separation", [&] { return end_to_end(workdir); }},
      {"preprocessing ablation direction", [&] { return preprocessing_ablation(workdir); }},
      {"mvtec fpfh reproduction (optional)", [&] { return mvtec(mvtec_root, workdir); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.status = Outcome::kFail;
      o.detail = std::string("error: ") + e.what();
    }
    const char* tag = o.status == Outcome::kPass ? "PASS" : o.status == Outcome::kSkip ? "SKIP" : "FAIL";
    failures += o.status == Outcome::kFail;
    std::printf("%s [%zu] %s: %s\n", tag, i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}

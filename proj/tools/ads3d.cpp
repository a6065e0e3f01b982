// ads3d: fit / eval / synth / convert.
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 a metric was
// undefined (e.g. a test split with a single class).

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "ads3d/ads3d.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitMetric = 4;

int exit_code_for(ads3d::ErrorCode c) {
  using ads3d::ErrorCode;
  switch (c) {
    case ErrorCode::kInvalidArgument: return kExitConfig;
    case ErrorCode::kUndefinedMetric: return kExitMetric;
    default: return kExitData;
  }
}

std::string fmt_metric(const ads3d::MetricValue& m) {
  if (!m.value) return "  n/a ";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *m.value);
  return buf;
}

void print_warnings(const ads3d::Warnings& w) {
  for (const auto& s : w) std::cerr << "warning: " << s << "\n";
}

int run_convert(const std::string& in, const std::string& out) {
  namespace fs = std::filesystem;
  const auto ext_in = fs::path(in).extension();
  const auto ext_out = fs::path(out).extension();
  if (ext_in == ".png" && ext_out == ".adtn") {
    ads3d::write_tensor(ads3d::to_tensor(ads3d::read_png(in)), out);
  } else if (ext_in == ".adtn" && ext_out == ".png") {
    const ads3d::Tensor t = ads3d::read_tensor(in);
    if (t.holds<std::uint8_t>()) {
      ads3d::write_png(ads3d::image_from_tensor<std::uint8_t>(t), out);
    } else if (t.holds<float>() && t.ndim() == 3 && t.dims()[2] == 3) {
      // organized cloud: min-max rendering of valid depth, invalid black
      const auto cloud = ads3d::cloud_from_tensor(t);
      const auto depth = cloud.depth();
      ads3d::Image<double> m(depth.height(), depth.width(), 1, 0.0);
      double lo = 0.0, hi = 0.0;
      bool any = false;
      for (int i = 0; i < depth.height(); ++i)
        for (int j = 0; j < depth.width(); ++j) {
          if (!cloud.valid(i, j)) continue;
          const double z = depth.at(i, j);
          lo = any ? std::min(lo, z) : z;
          hi = any ? std::max(hi, z) : z;
          any = true;
        }
      ads3d::Image<std::uint8_t> img(depth.height(), depth.width(), 1, 0);
      for (int i = 0; i < depth.height(); ++i)
        for (int j = 0; j < depth.width(); ++j) {
          if (!cloud.valid(i, j) || hi <= lo) continue;
          // near = bright
          img.at(i, j) = static_cast<std::uint8_t>(std::lround(40.0 + 215.0 * (hi - depth.at(i, j)) / (hi - lo)));
        }
      ads3d::write_png(img, out);
    } else {
      ads3d::fail(ads3d::ErrorCode::kUnsupportedDtype, "only u8 images and f32 H x W x 3 clouds convert to PNG");
    }
  } else {
    ads3d::fail(ads3d::ErrorCode::kInvalidArgument, "convert supports .png -> .adtn and .adtn -> .png");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D anomaly detection and segmentation with handcrafted descriptors and kNN memory banks"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command line flags take precedence");
  app.fallthrough();

  ads3d::RunConfig cfg;
  std::string method = "fpfh";
  std::string dataset_root, output_dir = cfg.output_dir.string(), features_root;
  app.add_option("--dataset_root", dataset_root, "dataset in the <class>/{train,test}/... layout");
  app.add_option("--classes", cfg.classes, "classes to process (default: all)")->delimiter(',');
  app.add_option("--method", method, "raw | hog | dsift | fpfh | rgb_deep | rgb_plus_fpfh | rgb_raw")
      ->capture_default_str();
  app.add_option("--k", cfg.k, "nearest neighbours averaged per patch")->capture_default_str();
  app.add_option("--coreset_ratio", cfg.coreset_ratio, "fraction of the bank kept by greedy k-center")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "seed for coreset start, RANSAC and synth")->capture_default_str();
  app.add_option("--output_dir", output_dir, "banks, report and heatmaps")->capture_default_str();
  app.add_option("--eval_resolution", cfg.eval_resolution, "224, or 0 for input resolution")->capture_default_str();
  app.add_option("--sigma", cfg.sigma, "anomaly map blur in pixels, 0 disables")->capture_default_str();
  app.add_option("--fpr_limit", cfg.fpr_limit, "PRO integration limit")->capture_default_str();
  app.add_option("--features_root", features_root, "exported deep RGB features (<class>/<split>/<id>.feat.adtn)");
  app.add_flag("--standardize,!--no-standardize", cfg.standardize, "z-score channels before scoring");
  app.add_flag("--heatmaps,!--no-heatmaps", cfg.heatmaps, "write one heatmap PNG per test sample");
  app.add_flag("--preprocess,!--no-preprocess", cfg.preprocess.enabled, "plane and clutter removal");
  app.add_option("--target_size", cfg.preprocess.target_size)->capture_default_str();
  app.add_option("--boundary_strip", cfg.preprocess.boundary_strip)->capture_default_str();
  app.add_option("--plane_dist", cfg.preprocess.plane_dist)->capture_default_str();
  app.add_option("--dbscan_eps", cfg.preprocess.dbscan_eps)->capture_default_str();
  app.add_option("--dbscan_min_points", cfg.preprocess.dbscan_min_points)->capture_default_str();
  app.add_option("--ransac_iterations", cfg.preprocess.ransac_iterations)->capture_default_str();
  app.add_option("--fpfh_radius", cfg.fpfh.radius)->capture_default_str();
  app.add_option("--fpfh_max_nn", cfg.fpfh.max_nn)->capture_default_str();
  app.add_option("--normal_radius", cfg.fpfh.normals.radius)->capture_default_str();
  app.add_option("--normal_max_nn", cfg.fpfh.normals.max_nn)->capture_default_str();
  app.add_option("--dsift_step", cfg.dsift.step)->capture_default_str();
  app.add_option("--threads", cfg.threads, "worker threads (also capped by ADS3D_THREADS)")->capture_default_str();

  auto* fit = app.add_subcommand("fit", "build one memory bank per class from the train split");
  auto* eval = app.add_subcommand("eval", "score the test split and write report.json, curves.csv, heatmaps");

  ads3d::SynthSpec spec;
  std::string synth_out, anomaly_kind = "geometric_dent", surface_kind = "bumpy_plane", wave = "none";
  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
  synth->add_option("--out", synth_out, "dataset root to create")->required();
  synth->add_option("--n_train", spec.n_train)->capture_default_str();
  synth->add_option("--n_test_good", spec.n_test_good)->capture_default_str();
  synth->add_option("--n_test_anom", spec.n_test_anom)->capture_default_str();
  synth->add_option("--anomaly_kind", anomaly_kind, "geometric_dent | geometric_bump | color_blotch | mixed")
      ->capture_default_str();
  synth->add_option("--surface_kind", surface_kind, "bumpy_plane | hemisphere")->capture_default_str();
  synth->add_option("--size", spec.size, "frame side in pixels")->capture_default_str();
  synth->add_option("--margin", spec.margin, "background ring width in pixels")->capture_default_str();
  synth->add_option("--noise_std", spec.noise_std)->capture_default_str();
  synth->add_option("--class_name", spec.class_name)->capture_default_str();
  synth->add_option("--wave", wave, "background artifact: none | test | all")->capture_default_str();

  std::string conv_in, conv_out;
  auto* convert = app.add_subcommand("convert", "ADTN <-> PNG");
  convert->add_option("input", conv_in)->required();
  convert->add_option("output", conv_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*convert) return run_convert(conv_in, conv_out);

    if (*synth) {
      spec.seed = cfg.seed;
      spec.anomaly_kind = ads3d::parse_anomaly_kind(anomaly_kind);
      spec.surface_kind = ads3d::parse_surface_kind(surface_kind);
      spec.wave = ads3d::parse_wave_mode(wave);
      ads3d::generate_dataset(spec, synth_out);
      std::cout << "wrote " << spec.n_train + spec.n_test_good + spec.n_test_anom << " samples to "
                << synth_out << "/" << spec.class_name << "\n";
      return 0;
    }

    cfg.method = ads3d::parse_method_tag(method);
    cfg.dataset_root = dataset_root;
    cfg.output_dir = output_dir;
    cfg.features_root = features_root;
    cfg.threads = std::min(cfg.threads, ads3d::thread_count());

    if (*fit) {
      for (const auto& s : ads3d::cmd_fit(cfg)) {
        print_warnings(s.warnings);
        std::cout << s.cls << ": " << s.train_samples << " train samples -> bank " << s.bank_rows << " x "
                  << s.dim << "\n";
      }
      return 0;
    }
    if (*eval) {
      ads3d::Warnings w;
      const ads3d::EvalReport r = ads3d::cmd_eval(cfg, &w);
      print_warnings(w);
      std::cout << "class            I-ROC   P-ROC   PRO\n";
      for (const auto& [name, c] : r.per_class) {
        std::printf("%-16s %s  %s  %s\n", name.c_str(), fmt_metric(c.i_roc).c_str(), fmt_metric(c.p_roc).c_str(),
                    fmt_metric(c.pro).c_str());
      }
      std::printf("%-16s %s  %s  %s\n", "mean", fmt_metric(r.mean(&ads3d::ClassReport::i_roc)).c_str(),
                  fmt_metric(r.mean(&ads3d::ClassReport::p_roc)).c_str(),
                  fmt_metric(r.mean(&ads3d::ClassReport::pro)).c_str());
      std::cout << "report: " << (cfg.output_dir / "report.json").string() << "\n";
      return r.any_undefined() ? kExitMetric : 0;
    }
  } catch (const ads3d::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}

#pragma once

// Seeded synthetic scenes in the dataset layout: a raised object on a flat
// plane, seen by a camera at the origin looking down +z.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ads3d/error.hpp"
#include "ads3d/io/dataset.hpp"
#include "ads3d/metrics/report.hpp"

namespace ads3d {

enum class AnomalyKind { kGeometricDent, kGeometricBump, kColorBlotch, kMixed };
enum class SurfaceKind { kBumpyPlane, kHemisphere };
enum class WaveMode { kNone, kTestOnly, kAll };

inline std::string to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::kGeometricDent: return "geometric_dent";
    case AnomalyKind::kGeometricBump: return "geometric_bump";
    case AnomalyKind::kColorBlotch: return "color_blotch";
    case AnomalyKind::kMixed: return "mixed";
  }
  return "?";
}
inline std::string to_string(SurfaceKind k) { return k == SurfaceKind::kBumpyPlane ? "bumpy_plane" : "hemisphere"; }
inline std::string to_string(WaveMode w) {
  return w == WaveMode::kNone ? "none" : w == WaveMode::kTestOnly ? "test" : "all";
}

inline AnomalyKind parse_anomaly_kind(const std::string& s) {
  for (auto k : {AnomalyKind::kGeometricDent, AnomalyKind::kGeometricBump, AnomalyKind::kColorBlotch, AnomalyKind::kMixed})
    if (to_string(k) == s) return k;
  fail(ErrorCode::kInvalidArgument, "unknown anomaly kind '" + s + "'");
}
inline SurfaceKind parse_surface_kind(const std::string& s) {
  for (auto k : {SurfaceKind::kBumpyPlane, SurfaceKind::kHemisphere})
    if (to_string(k) == s) return k;
  fail(ErrorCode::kInvalidArgument, "unknown surface kind '" + s + "'");
}
inline WaveMode parse_wave_mode(const std::string& s) {
  for (auto k : {WaveMode::kNone, WaveMode::kTestOnly, WaveMode::kAll})
    if (to_string(k) == s) return k;
  fail(ErrorCode::kInvalidArgument, "unknown wave mode '" + s + "'");
}

struct SynthSpec {
  int n_train = 50;
  int n_test_good = 20;
  int n_test_anom = 20;
  int size = 224;
  AnomalyKind anomaly_kind = AnomalyKind::kGeometricDent;
  SurfaceKind surface_kind = SurfaceKind::kBumpyPlane;
  float noise_std = 0.0001f;
  std::uint64_t seed = 0;
  std::string class_name = "synthetic";
  float pitch = 0.001f;             // lattice spacing in x and y, meters
  float plane_depth = 0.5f;         // camera-to-plane distance
  float object_height = 0.02f;      // mesa height above the plane
  int margin = 40;                  // background ring width in pixels
  WaveMode wave = WaveMode::kNone;  // tall background bump (sensor artifact)
  float wave_height = 0.02f;

  void validate() const {
    require(n_train >= 1 && n_test_good >= 1 && n_test_anom >= 1, "synth counts must be >= 1");
    require(noise_std >= 0.0f, "noise_std must be >= 0");
    require(size >= 64, "synth size must be >= 64");
    require(margin >= 16 && 2 * margin + 32 <= size, "synth margin does not fit the frame");
    require(pitch > 0.0f && plane_depth > 0.0f && object_height > 0.0f, "synth lengths must be > 0");
  }

  std::string echo() const {
    std::ostringstream os;
    os.precision(9);
    os << "n_train=" << n_train << "\n"
       << "n_test_good=" << n_test_good << "\n"
       << "n_test_anom=" << n_test_anom << "\n"
       << "size=" << size << "\n"
       << "anomaly_kind=" << to_string(anomaly_kind) << "\n"
       << "surface_kind=" << to_string(surface_kind) << "\n"
       << "noise_std=" << noise_std << "\n"
       << "seed=" << seed << "\n"
       << "class_name=" << class_name << "\n"
       << "pitch=" << pitch << "\n"
       << "plane_depth=" << plane_depth << "\n"
       << "object_height=" << object_height << "\n"
       << "margin=" << margin << "\n"
       << "wave=" << to_string(wave) << "\n"
       << "wave_height=" << wave_height << "\n";
    return os.str();
  }
};

namespace detail {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

struct Bump {
  double ci, cj, amp, sigma;
};

struct Wave2 {
  double ki, kj, phase;
};

// Normal scene, before any anomaly: heights above the plane (m) and the
// 0..1 texture value per pixel.
struct Scene {
  Image<double> height;
  Image<double> texture;
  Image<std::uint8_t> object;  // footprint
};

inline double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

inline Scene make_scene(const SynthSpec& sp, Rng& rng) {
  const int n = sp.size;
  Scene sc{Image<double>(n, n, 1, 0.0), Image<double>(n, n, 1, 0.0), Image<std::uint8_t>(n, n, 1, 0)};
  // Rounded-square footprint, jittered a few pixels.
  const double c0 = (n - 1) / 2.0 + uniform(rng, -3.0, 3.0);
  const double c1 = (n - 1) / 2.0 + uniform(rng, -3.0, 3.0);
  const double half = n / 2.0 - sp.margin;
  const double corner = 18.0;
  std::vector<Bump> bumps(static_cast<std::size_t>(std::uniform_int_distribution<int>(3, 5)(rng)));
  for (auto& b : bumps) {
    b.ci = c0 + uniform(rng, -0.7, 0.7) * half;
    b.cj = c1 + uniform(rng, -0.7, 0.7) * half;
    b.amp = uniform(rng, -0.004, 0.006);
    b.sigma = uniform(rng, 18.0, 32.0);
  }
  std::vector<Wave2> tex(6);
  for (auto& w : tex) {
    const double ang = uniform(rng, 0.0, std::numbers::pi);
    const double k = 2.0 * std::numbers::pi / uniform(rng, 20.0, 60.0);
    w.ki = k * std::sin(ang);
    w.kj = k * std::cos(ang);
    w.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }
  const double dome_r = half;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // signed distance to the rounded square (negative inside)
      const double qi = std::abs(i - c0) - (half - corner);
      const double qj = std::abs(j - c1) - (half - corner);
      const double outside = std::hypot(std::max(qi, 0.0), std::max(qj, 0.0));
      const double sd = outside + std::min(std::max(qi, qj), 0.0) - corner;
      const double rim = smoothstep(0.0, -4.0, sd);  // 0 outside, 1 four pixels in
      double h = 0.0;
      if (rim > 0.0) {
        if (sp.surface_kind == SurfaceKind::kHemisphere) {
          const double r = std::hypot(i - c0, j - c1) / dome_r;
          h = sp.object_height * (0.6 + 0.8 * std::sqrt(std::max(0.0, 1.0 - std::min(r, 1.0) * std::min(r, 1.0))));
        } else {
          h = sp.object_height;
          for (const auto& b : bumps) {
            const double r2 = (i - b.ci) * (i - b.ci) + (j - b.cj) * (j - b.cj);
            h += b.amp * std::exp(-r2 / (2.0 * b.sigma * b.sigma));
          }
        }
        h *= rim;
        sc.object.at(i, j) = sd < 0.0 ? 1 : 0;
      }
      sc.height.at(i, j) = h;
      double t = 0.0;
      for (const auto& w : tex) t += std::sin(w.ki * i + w.kj * j + w.phase);
      sc.texture.at(i, j) = 0.5 + 0.5 * std::tanh(t / 2.0);
    }
  }
  return sc;
}

// Compactly supported bump A (1 - r^2/R^2)^2 for r < R.
inline double anomaly_profile(double r2, double radius) {
  const double t = 1.0 - r2 / (radius * radius);
  return t > 0.0 ? t * t : 0.0;
}

inline std::array<double, 3> rgb_to_hsv(std::array<double, 3> c) {
  const double mx = std::max({c[0], c[1], c[2]});
  const double mn = std::min({c[0], c[1], c[2]});
  const double d = mx - mn;
  double h = 0.0;
  if (d > 0.0) {
    if (mx == c[0]) h = std::fmod((c[1] - c[2]) / d, 6.0);
    else if (mx == c[1]) h = (c[2] - c[0]) / d + 2.0;
    else h = (c[0] - c[1]) / d + 4.0;
    h *= 60.0;
    if (h < 0.0) h += 360.0;
  }
  return {h, mx > 0.0 ? d / mx : 0.0, mx};
}

inline std::array<double, 3> hsv_to_rgb(std::array<double, 3> hsv) {
  const double h = std::fmod(hsv[0], 360.0) / 60.0;
  const double c = hsv[2] * hsv[1];
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = hsv[2] - c;
  std::array<double, 3> r{};
  switch (static_cast<int>(h)) {
    case 0: r = {c, x, 0}; break;
    case 1: r = {x, c, 0}; break;
    case 2: r = {0, c, x}; break;
    case 3: r = {0, x, c}; break;
    case 4: r = {x, 0, c}; break;
    default: r = {c, 0, x}; break;
  }
  return {r[0] + m, r[1] + m, r[2] + m};
}

inline std::array<std::uint8_t, 3> shift_hue(const std::uint8_t* px, double degrees) {
  auto hsv = rgb_to_hsv({px[0] / 255.0, px[1] / 255.0, px[2] / 255.0});
  hsv[0] += degrees;
  const auto rgb = hsv_to_rgb(hsv);
  return {static_cast<std::uint8_t>(std::lround(std::clamp(rgb[0], 0.0, 1.0) * 255.0)),
          static_cast<std::uint8_t>(std::lround(std::clamp(rgb[1], 0.0, 1.0) * 255.0)),
          static_cast<std::uint8_t>(std::lround(std::clamp(rgb[2], 0.0, 1.0) * 255.0))};
}

struct Disk {
  double ci, cj, radius;
};

// Disk whose footprint lies inside the object, away from its rim.
inline Disk place_in_object(const Scene& sc, Rng& rng, double radius) {
  const int n = sc.object.height();
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double ci = uniform(rng, radius, n - 1 - radius);
    const double cj = uniform(rng, radius, n - 1 - radius);
    bool ok = true;
    for (int k = 0; k < 16 && ok; ++k) {
      const double a = 2.0 * std::numbers::pi * k / 16;
      const int i = static_cast<int>(std::lround(ci + (radius + 6.0) * std::sin(a)));
      const int j = static_cast<int>(std::lround(cj + (radius + 6.0) * std::cos(a)));
      ok = i >= 0 && j >= 0 && i < n && j < n && sc.object.at(i, j);
    }
    if (ok && sc.object.at(static_cast<int>(ci), static_cast<int>(cj))) return {ci, cj, radius};
  }
  fail(ErrorCode::kInvalidArgument, "could not place an anomaly inside the object");
}

}  // namespace detail

// One sample. `defect` is "good", "dent", "bump" or "color".
inline Sample synth_sample(const SynthSpec& sp, detail::Rng& rng, const std::string& defect,
                           const std::string& stem, bool test_split) {
  using namespace detail;
  const int n = sp.size;
  Scene sc = make_scene(sp, rng);
  Mask gt(n, n, 1, 0);

  if (defect == "dent" || defect == "bump") {
    const double radius = uniform(rng, 12.0, 24.0);
    const double amp = uniform(rng, 0.004, 0.008) * (defect == "dent" ? -1.0 : 1.0);
    const Disk d = place_in_object(sc, rng, radius);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double r2 = (i - d.ci) * (i - d.ci) + (j - d.cj) * (j - d.cj);
        if (r2 < radius * radius) {
          sc.height.at(i, j) += amp * anomaly_profile(r2, radius);
          gt.at(i, j) = 1;
        }
      }
  }

  const bool wave = sp.wave == WaveMode::kAll || (sp.wave == WaveMode::kTestOnly && test_split);
  if (wave) {
    // A narrow tall bump in the background ring, well away from the object.
    const double sigma = 4.0;
    const double off = uniform(rng, 18.0, std::max(18.0, sp.margin - 18.0));
    const double along = uniform(rng, sp.margin, n - 1 - sp.margin);
    const int side = std::uniform_int_distribution<int>(0, 3)(rng);
    const double ci = side == 0 ? off : side == 1 ? n - 1 - off : along;
    const double cj = side == 2 ? off : side == 3 ? n - 1 - off : along;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (sc.object.at(i, j)) continue;
        const double r2 = (i - ci) * (i - ci) + (j - cj) * (j - cj);
        sc.height.at(i, j) += sp.wave_height * std::exp(-r2 / (2.0 * sigma * sigma));
      }
  }

  Sample s;
  s.id = defect + "/" + stem;
  s.cloud = OrganizedPointCloud(n, n);
  s.rgb = RgbImage(n, n, 3, 0);
  std::normal_distribution<double> noise(0.0, sp.noise_std);
  const double bg_clamp = 0.004;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double e = sp.noise_std > 0.0f ? noise(rng) : 0.0;
      if (!sc.object.at(i, j) && sc.height.at(i, j) < 1e-6) e = std::clamp(e, -bg_clamp, bg_clamp);
      const double h = sc.height.at(i, j) + e;
      const double x = (j - (n - 1) / 2.0) * sp.pitch;
      const double y = (i - (n - 1) / 2.0) * sp.pitch;
      s.cloud.set(i, j, static_cast<float>(x), static_cast<float>(y), static_cast<float>(sp.plane_depth - h));
      // two-colour palettes: warm object, teal background
      const double t = sc.texture.at(i, j);
      const bool obj = sc.object.at(i, j);
      const std::array<double, 3> a = obj ? std::array<double, 3>{205, 150, 60} : std::array<double, 3>{60, 140, 150};
      const std::array<double, 3> b = obj ? std::array<double, 3>{150, 80, 35} : std::array<double, 3>{35, 90, 110};
      for (int c = 0; c < 3; ++c) {
        s.rgb.at(i, j, c) = static_cast<std::uint8_t>(std::lround(a[static_cast<std::size_t>(c)] * (1.0 - t) + b[static_cast<std::size_t>(c)] * t));
      }
    }
  }

  if (defect == "color") {
    // Blotches anywhere in the frame; geometry is untouched.
    const int count = std::uniform_int_distribution<int>(2, 3)(rng);
    for (int k = 0; k < count; ++k) {
      const double radius = uniform(rng, 10.0, 18.0);
      const double ci = uniform(rng, radius, n - 1 - radius);
      const double cj = uniform(rng, radius, n - 1 - radius);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if ((i - ci) * (i - ci) + (j - cj) * (j - cj) >= radius * radius) continue;
          const auto px = shift_hue(s.rgb.pixel(i, j), 120.0);
          std::copy(px.begin(), px.end(), s.rgb.pixel(i, j));
          gt.at(i, j) = 1;
        }
    }
  }

  if (test_split) {
    s.label = defect == "good" ? Label::kNormal : Label::kAnomalous;
    s.gt_mask = gt;
  }
  return s;
}

// Writes the whole dataset under <root>/<class_name> and echoes the spec to
// <root>/synth_spec.txt. Deterministic in the spec.
inline void generate_dataset(const SynthSpec& sp, const std::filesystem::path& root) {
  sp.validate();
  detail::Rng rng(sp.seed);
  auto stem = [](int k) {
    std::ostringstream os;
    os.width(3);
    os.fill('0');
    os << k;
    return os.str();
  };
  for (int k = 0; k < sp.n_train; ++k) {
    write_sample(root, sp.class_name, "train", synth_sample(sp, rng, "good", stem(k), false));
  }
  for (int k = 0; k < sp.n_test_good; ++k) {
    write_sample(root, sp.class_name, "test", synth_sample(sp, rng, "good", stem(k), true));
  }
  for (int k = 0; k < sp.n_test_anom; ++k) {
    AnomalyKind kind = sp.anomaly_kind;
    if (kind == AnomalyKind::kMixed) {
      kind = static_cast<AnomalyKind>(std::uniform_int_distribution<int>(0, 2)(rng));
    }
    const std::string defect = kind == AnomalyKind::kGeometricDent ? "dent"
                               : kind == AnomalyKind::kGeometricBump ? "bump"
                                                                     : "color";
    write_sample(root, sp.class_name, "test", synth_sample(sp, rng, defect, stem(k), true));
  }
  write_text(root / "synth_spec.txt", sp.echo());
}

}  // namespace ads3d

#pragma once

// Dataset directory layout:
//
//   <root>/<class>/{train,test}/<defect-or-good>/xyz/<stem>.adtn   (H x W x 3 f32)
//   <root>/<class>/{train,test}/<defect-or-good>/rgb/<stem>.png    (or .adtn, u8)
//   <root>/<class>/test/<defect>/gt/<stem>.png                     (or .adtn, u8)
//
// `train` only contains `good`. A sample id is "<defect-or-good>/<stem>".

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ads3d/error.hpp"
#include "ads3d/io/image.hpp"
#include "ads3d/io/png.hpp"
#include "ads3d/io/tensor.hpp"

namespace ads3d {

namespace fs = std::filesystem;

enum class Label { kNormal, kAnomalous };

struct Sample {
  std::string id;  // "<defect-or-good>/<stem>"
  OrganizedPointCloud cloud;
  RgbImage rgb;
  std::optional<Mask> gt_mask;
  Label label = Label::kNormal;

  int height() const { return cloud.height(); }
  int width() const { return cloud.width(); }
  std::string defect() const { return id.substr(0, id.find('/')); }
  std::string stem() const { return id.substr(id.find('/') + 1); }
};

inline constexpr const char* kGoodDir = "good";

inline fs::path sample_dir(const fs::path& root, const std::string& cls, const std::string& split,
                           const std::string& defect) {
  return root / cls / split / defect;
}

namespace detail {

inline std::pair<std::string, std::string> split_id(const std::string& id) {
  const auto slash = id.find('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == id.size()) {
    fail(ErrorCode::kInvalidArgument, "sample id must look like <defect>/<stem>: " + id);
  }
  return {id.substr(0, slash), id.substr(slash + 1)};
}

// Prefers PNG, falls back to ADTN.
inline std::optional<fs::path> find_raster(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".png", ".adtn"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

inline Image<std::uint8_t> read_raster_u8(const fs::path& p) {
  if (p.extension() == ".png") return read_png(p);
  return image_from_tensor<std::uint8_t>(read_tensor(p));
}

}  // namespace detail

// Sorted sample ids of one split of one class.
inline std::vector<std::string> list_samples(const fs::path& root, const std::string& cls,
                                             const std::string& split) {
  const fs::path base = root / cls / split;
  if (!fs::is_directory(base)) fail(ErrorCode::kMissingFile, base.string());
  std::vector<std::string> ids;
  std::vector<fs::path> defects;
  for (const auto& e : fs::directory_iterator(base))
    if (e.is_directory()) defects.push_back(e.path());
  std::sort(defects.begin(), defects.end());
  for (const auto& d : defects) {
    const fs::path xyz = d / "xyz";
    if (!fs::is_directory(xyz)) continue;
    std::vector<std::string> stems;
    for (const auto& f : fs::directory_iterator(xyz)) {
      if (f.is_regular_file() && f.path().extension() == ".adtn") {
        stems.push_back(f.path().stem().string());
      }
    }
    std::sort(stems.begin(), stems.end());
    for (const auto& s : stems) ids.push_back(d.filename().string() + "/" + s);
  }
  return ids;
}

inline std::vector<std::string> list_classes(const fs::path& root) {
  if (!fs::is_directory(root)) fail(ErrorCode::kMissingFile, root.string());
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::is_directory(e.path() / "train")) out.push_back(e.path().filename());
  std::sort(out.begin(), out.end());
  return out;
}

inline Sample load_sample(const fs::path& root, const std::string& cls, const std::string& split,
                          const std::string& id) {
  const auto [defect, stem] = detail::split_id(id);
  const fs::path dir = sample_dir(root, cls, split, defect);

  Sample s;
  s.id = id;
  s.label = defect == kGoodDir ? Label::kNormal : Label::kAnomalous;
  s.cloud = cloud_from_tensor(read_tensor(dir / "xyz" / (stem + ".adtn")));

  const auto rgb_path = detail::find_raster(dir / "rgb", stem);
  if (!rgb_path) fail(ErrorCode::kMissingFile, (dir / "rgb" / stem).string() + ".{png,adtn}");
  s.rgb = detail::read_raster_u8(*rgb_path);
  if (s.rgb.channels() == 1) {
    RgbImage rgb(s.rgb.height(), s.rgb.width(), 3);
    for (std::size_t k = 0; k < s.rgb.pixel_count(); ++k)
      for (int c = 0; c < 3; ++c) rgb.storage()[3 * k + c] = s.rgb.storage()[k];
    s.rgb = std::move(rgb);
  }
  if (s.rgb.channels() != 3) fail(ErrorCode::kDimensionMismatch, "rgb must have 3 channels");
  if (s.rgb.height() != s.cloud.height() || s.rgb.width() != s.cloud.width()) {
    fail(ErrorCode::kDimensionMismatch,
         id + ": rgb " + std::to_string(s.rgb.height()) + "x" + std::to_string(s.rgb.width()) +
             " vs cloud " + std::to_string(s.cloud.height()) + "x" + std::to_string(s.cloud.width()));
  }

  if (split == "test") {
    const auto gt_path = detail::find_raster(dir / "gt", stem);
    if (gt_path) {
      s.gt_mask = binarize_mask(detail::read_raster_u8(*gt_path));
      if (s.gt_mask->height() != s.height() || s.gt_mask->width() != s.width()) {
        fail(ErrorCode::kDimensionMismatch, id + ": gt mask size differs from cloud");
      }
    } else if (s.label == Label::kNormal) {
      s.gt_mask = Mask(s.height(), s.width(), 1, 0);
    } else {
      fail(ErrorCode::kMissingFile, (dir / "gt" / stem).string() + ".{png,adtn}");
    }
    if (s.label == Label::kAnomalous &&
        std::none_of(s.gt_mask->storage().begin(), s.gt_mask->storage().end(),
                     [](std::uint8_t v) { return v != 0; })) {
      fail(ErrorCode::kInvalidData, id + ": anomalous sample with an empty gt mask");
    }
  }
  return s;
}

// Writes a sample in the layout above: cloud as ADTN, rgb and gt as PNG.
inline void write_sample(const fs::path& root, const std::string& cls, const std::string& split,
                         const Sample& s) {
  const auto [defect, stem] = detail::split_id(s.id);
  const fs::path dir = sample_dir(root, cls, split, defect);
  fs::create_directories(dir / "xyz");
  fs::create_directories(dir / "rgb");
  write_tensor(to_tensor(s.cloud), dir / "xyz" / (stem + ".adtn"));
  write_png(s.rgb, dir / "rgb" / (stem + ".png"));
  if (s.gt_mask && split == "test" && s.label == Label::kAnomalous) {
    fs::create_directories(dir / "gt");
    write_png(mask_to_gray(*s.gt_mask), dir / "gt" / (stem + ".png"));
  }
}

}  // namespace ads3d

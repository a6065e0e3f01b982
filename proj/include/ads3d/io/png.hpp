#pragma once

#include <png.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

#include "ads3d/error.hpp"
#include "ads3d/io/image.hpp"

namespace ads3d {

// Decodes an 8-bit PNG into a 1-channel (gray sources) or 3-channel (color
// sources) image. Alpha is composited away and 16-bit input is reduced.
inline Image<std::uint8_t> read_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kMissingFile, path.string());
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    fail(ErrorCode::kIo, path.string() + ": " + img.message);
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image<std::uint8_t> out(static_cast<int>(img.height), static_cast<int>(img.width), color ? 3 : 1);
  if (!png_image_finish_read(&img, nullptr, out.storage().data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    fail(ErrorCode::kIo, path.string() + ": " + msg);
  }
  return out;
}

inline void write_png(const Image<std::uint8_t>& image, const std::filesystem::path& path) {
  require(image.channels() == 1 || image.channels() == 3, "PNG output needs 1 or 3 channels");
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.storage().data(), 0, nullptr)) {
    fail(ErrorCode::kIo, path.string() + ": " + img.message);
  }
}

// Mask convention: true where the (first channel) pixel value exceeds 127.
inline Mask binarize_mask(const Image<std::uint8_t>& img) {
  Mask m(img.height(), img.width(), 1, 0);
  for (int i = 0; i < img.height(); ++i)
    for (int j = 0; j < img.width(); ++j) m.at(i, j) = img.at(i, j, 0) > 127 ? 1 : 0;
  return m;
}

inline Image<std::uint8_t> mask_to_gray(const Mask& m) {
  Image<std::uint8_t> g(m.height(), m.width(), 1, 0);
  for (std::size_t k = 0; k < m.storage().size(); ++k) g.storage()[k] = m.storage()[k] ? 255 : 0;
  return g;
}

}  // namespace ads3d

#pragma once

// ADTN: a minimal little-endian container for dense row-major arrays.
//
//   offset  size  field
//   0       4     magic "ADTN"
//   4       1     version (1)
//   5       1     dtype code (0=f32, 1=f64, 2=u8, 3=u16)
//   6       1     ndim
//   7       1     reserved (0)
//   8       8*n   dims, u64 little-endian
//   ...           payload, row-major, little-endian scalars

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "ads3d/error.hpp"

namespace ads3d {

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1, kU8 = 2, kU16 = 3 };

template <class T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, float>) return DType::kF32;
  else if constexpr (std::is_same_v<T, double>) return DType::kF64;
  else if constexpr (std::is_same_v<T, std::uint8_t>) return DType::kU8;
  else if constexpr (std::is_same_v<T, std::uint16_t>) return DType::kU16;
  else static_assert(sizeof(T) == 0, "unsupported tensor element type");
}

constexpr std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::kF32: return 4;
    case DType::kF64: return 8;
    case DType::kU8: return 1;
    case DType::kU16: return 2;
  }
  return 0;
}

class Tensor {
 public:
  using Storage = std::variant<std::vector<float>, std::vector<double>, std::vector<std::uint8_t>,
                               std::vector<std::uint16_t>>;

  Tensor() = default;

  // Zero-initialised tensor.
  Tensor(DType dtype, std::vector<std::uint64_t> dims) : dims_(std::move(dims)) {
    const std::size_t n = checked_count(dims_);
    switch (dtype) {
      case DType::kF32: data_ = std::vector<float>(n); break;
      case DType::kF64: data_ = std::vector<double>(n); break;
      case DType::kU8: data_ = std::vector<std::uint8_t>(n); break;
      case DType::kU16: data_ = std::vector<std::uint16_t>(n); break;
    }
  }

  template <class T>
  static Tensor from(std::vector<std::uint64_t> dims, std::vector<T> values) {
    Tensor t;
    const std::size_t n = checked_count(dims);
    if (n != values.size()) {
      fail(ErrorCode::kDimensionMismatch, "tensor dims describe " + std::to_string(n) +
                                              " elements but " + std::to_string(values.size()) +
                                              " were supplied");
    }
    t.dims_ = std::move(dims);
    t.data_ = std::move(values);
    return t;
  }

  DType dtype() const { return static_cast<DType>(data_.index()); }
  const std::vector<std::uint64_t>& dims() const { return dims_; }
  std::size_t ndim() const { return dims_.size(); }
  std::size_t size() const {
    return std::visit([](const auto& v) { return v.size(); }, data_);
  }

  template <class T>
  bool holds() const {
    return std::holds_alternative<std::vector<T>>(data_);
  }

  template <class T>
  std::span<T> values() {
    if (!holds<T>()) fail(ErrorCode::kUnsupportedDtype, "tensor element type mismatch");
    return std::get<std::vector<T>>(data_);
  }
  template <class T>
  std::span<const T> values() const {
    if (!holds<T>()) fail(ErrorCode::kUnsupportedDtype, "tensor element type mismatch");
    return std::get<std::vector<T>>(data_);
  }

  const Storage& storage() const { return data_; }

  bool operator==(const Tensor&) const = default;

  // Validates dims and returns the element count.
  static std::size_t checked_count(const std::vector<std::uint64_t>& dims) {
    if (dims.empty()) fail(ErrorCode::kInvalidArgument, "tensor must have at least one dim");
    if (dims.size() > 255) fail(ErrorCode::kDimOverflow, "more than 255 dims");
    std::uint64_t n = 1;
    for (std::uint64_t d : dims) {
      if (d == 0) fail(ErrorCode::kInvalidArgument, "tensor dims must be >= 1");
      if (n > std::numeric_limits<std::uint64_t>::max() / d) {
        fail(ErrorCode::kDimOverflow, "element count overflows 64 bits");
      }
      n *= d;
    }
    if (n > std::numeric_limits<std::size_t>::max() / 8) {
      fail(ErrorCode::kDimOverflow, "element count exceeds addressable memory");
    }
    return static_cast<std::size_t>(n);
  }

 private:
  std::vector<std::uint64_t> dims_;
  Storage data_{std::vector<float>{}};
};

namespace detail {

inline constexpr std::array<char, 4> kAdtnMagic{'A', 'D', 'T', 'N'};
inline constexpr std::uint8_t kAdtnVersion = 1;
inline constexpr std::size_t kAdtnFixedHeader = 8;

template <class T>
void byteswap_inplace(std::span<T> v) {
  if constexpr (sizeof(T) > 1) {
    for (T& x : v) {
      std::array<unsigned char, sizeof(T)> b;
      std::memcpy(b.data(), &x, sizeof(T));
      std::reverse(b.begin(), b.end());
      std::memcpy(&x, b.data(), sizeof(T));
    }
  }
}

inline void put_u64_le(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

inline std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace detail

// Serialises a tensor to its ADTN byte representation.
inline std::vector<unsigned char> encode_tensor(const Tensor& t) {
  std::vector<unsigned char> out;
  const std::size_t elem = dtype_size(t.dtype());
  out.reserve(detail::kAdtnFixedHeader + 8 * t.ndim() + elem * t.size());
  out.insert(out.end(), detail::kAdtnMagic.begin(), detail::kAdtnMagic.end());
  out.push_back(detail::kAdtnVersion);
  out.push_back(static_cast<unsigned char>(t.dtype()));
  out.push_back(static_cast<unsigned char>(t.ndim()));
  out.push_back(0);
  for (std::uint64_t d : t.dims()) detail::put_u64_le(out, d);
  std::visit(
      [&](const auto& v) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        const std::size_t offset = out.size();
        out.resize(offset + v.size() * sizeof(T));
        if (!v.empty()) std::memcpy(out.data() + offset, v.data(), v.size() * sizeof(T));
        if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
          auto* first = out.data() + offset;
          for (std::size_t i = 0; i < v.size(); ++i) {
            std::reverse(first + i * sizeof(T), first + (i + 1) * sizeof(T));
          }
        }
      },
      t.storage());
  return out;
}

inline Tensor decode_tensor(std::span<const unsigned char> bytes) {
  if (bytes.size() < detail::kAdtnFixedHeader) {
    fail(ErrorCode::kTruncated, "file shorter than the 8-byte ADTN header");
  }
  if (!std::equal(detail::kAdtnMagic.begin(), detail::kAdtnMagic.end(), bytes.begin())) {
    fail(ErrorCode::kBadMagic, "expected \"ADTN\"");
  }
  if (bytes[4] != detail::kAdtnVersion) {
    fail(ErrorCode::kUnsupportedVersion, "ADTN version " + std::to_string(bytes[4]));
  }
  if (bytes[5] > 3) fail(ErrorCode::kUnsupportedDtype, "dtype code " + std::to_string(bytes[5]));
  if (bytes[7] != 0) fail(ErrorCode::kUnsupportedVersion, "non-zero reserved header byte");
  const auto dtype = static_cast<DType>(bytes[5]);
  const std::size_t ndim = bytes[6];
  if (bytes.size() < detail::kAdtnFixedHeader + 8 * ndim) {
    fail(ErrorCode::kTruncated, "dims table cut short");
  }
  std::vector<std::uint64_t> dims(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    dims[i] = detail::get_u64_le(bytes.data() + detail::kAdtnFixedHeader + 8 * i);
  }
  const std::size_t count = Tensor::checked_count(dims);
  const std::size_t elem = dtype_size(dtype);
  if (count > std::numeric_limits<std::size_t>::max() / elem) {
    fail(ErrorCode::kDimOverflow, "payload size overflows");
  }
  const std::size_t payload = count * elem;
  const std::size_t offset = detail::kAdtnFixedHeader + 8 * ndim;
  if (bytes.size() - offset < payload) {
    fail(ErrorCode::kTruncated, "payload has " + std::to_string(bytes.size() - offset) +
                                    " bytes, expected " + std::to_string(payload));
  }
  if (bytes.size() - offset > payload) {
    fail(ErrorCode::kTruncated, "trailing bytes after payload");
  }
  Tensor t(dtype, dims);
  auto fill = [&](auto tag) {
    using T = decltype(tag);
    auto dst = t.values<T>();
    if (payload) std::memcpy(dst.data(), bytes.data() + offset, payload);
    if constexpr (std::endian::native == std::endian::big) detail::byteswap_inplace(dst);
  };
  switch (dtype) {
    case DType::kF32: fill(float{}); break;
    case DType::kF64: fill(double{}); break;
    case DType::kU8: fill(std::uint8_t{}); break;
    case DType::kU16: fill(std::uint16_t{}); break;
  }
  return t;
}

inline void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kMissingFile, path.string());
  in.seekg(0, std::ios::end);
  const auto len = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(len));
  if (len > 0) in.read(reinterpret_cast<char*>(bytes.data()), len);
  if (!in) fail(ErrorCode::kIo, "failed reading " + path.string());
  return bytes;
}

inline Tensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_tensor(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + std::string(e.what()));
  }
}

}  // namespace ads3d

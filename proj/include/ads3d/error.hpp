#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ads3d {

enum class ErrorCode {
  kBadMagic,
  kUnsupportedVersion,
  kUnsupportedDtype,
  kTruncated,
  kDimOverflow,
  kMissingFile,
  kDimensionMismatch,
  kInvalidArgument,
  kInsufficientPoints,
  kUndefinedMetric,
  kInvalidData,
  kIo,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported version";
    case ErrorCode::kUnsupportedDtype: return "unsupported dtype";
    case ErrorCode::kTruncated: return "truncated payload";
    case ErrorCode::kDimOverflow: return "dimension overflow";
    case ErrorCode::kMissingFile: return "missing file";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kInsufficientPoints: return "insufficient points";
    case ErrorCode::kUndefinedMetric: return "undefined metric";
    case ErrorCode::kInvalidData: return "invalid data";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown";
}

// All library failures are reported through this exception type; `code()`
// distinguishes the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::kInvalidArgument, what);
}

}  // namespace ads3d

// Core containers, error types and the row-band executor shared by every module.
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <oneapi/tbb/blocked_range.h>
#include <oneapi/tbb/parallel_for.h>
#include <oneapi/tbb/task_arena.h>

namespace rinv {

enum class ErrorCode {
  kDimensionMismatch,
  kFrameTooSmall,
  kLateralMotion,
  kBehindCamera,
  kInsufficientFlow,
  kDegenerate,
  kInvalidConfig,
  kBadMagic,
  kTruncatedFile,
  kUnsupportedFormat,
  kIoFailure,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kFrameTooSmall: return "FrameTooSmall";
    case ErrorCode::kLateralMotion: return "LateralMotion";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kInsufficientFlow: return "InsufficientFlow";
    case ErrorCode::kDegenerate: return "Degenerate";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kIoFailure: return "IoFailure";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised for configuration problems; `field()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(ErrorCode::kInvalidConfig, field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Dense row-major image. Integer coordinates address pixel centers.
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int width, int height, const T& fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
  const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

template <typename A, typename B>
bool same_dims(const Image<A>& a, const Image<B>& b) {
  return a.width() == b.width() && a.height() == b.height();
}

template <typename A, typename B>
void require_same_dims(const Image<A>& a, const Image<B>& b, const char* what) {
  if (!same_dims(a, b)) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " (" + std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                    std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
  }
}

/// Boolean image stored one byte per pixel (0 or 1).
using Mask = Image<std::uint8_t>;

/// Worker count for pixel-parallel kernels. Results never depend on it.
struct Exec {
  int threads = 1;
};

/// Runs `fn(row_begin, row_end)` over disjoint row bands covering [0, rows).
template <typename Fn>
void for_rows(const Exec& exec, int rows, Fn&& fn) {
  if (rows <= 0) return;
  if (exec.threads <= 1 || rows < 2) {
    fn(0, rows);
    return;
  }
  const int grain = std::max(1, rows / (exec.threads * 4));
  tbb::task_arena arena(exec.threads);
  arena.execute([&] {
    tbb::parallel_for(tbb::blocked_range<int>(0, rows, grain),
                      [&](const tbb::blocked_range<int>& r) { fn(r.begin(), r.end()); });
  });
}

}  // namespace rinv

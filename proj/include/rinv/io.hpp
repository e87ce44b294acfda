// File formats: .flo flow fields, 8-bit grayscale PNG/PGM frames and masks,
// RGB PNG renders.
//
// Flow layout (little-endian): float32 magic 202021.25, int32 width,
// int32 height, then row-major interleaved float32 (u, v). Invalid pixels are
// stored as u = v = NaN.
#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "rinv/core.hpp"
#include "rinv/flow.hpp"
#include "rinv/invariant.hpp"

namespace rinv {

inline constexpr float kFlowMagic = 202021.25f;

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

inline void write_bytes(const std::filesystem::path& path, const unsigned char* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw Error(ErrorCode::kIoFailure, "short write to " + path.string());
}

inline std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace detail

inline std::vector<unsigned char> encode_flow(const FlowField& flow) {
  std::vector<unsigned char> out;
  out.reserve(12 + flow.uv.size() * 8);
  detail::put_u32(out, std::bit_cast<std::uint32_t>(kFlowMagic));
  detail::put_u32(out, static_cast<std::uint32_t>(flow.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(flow.height()));
  const float nan = std::numeric_limits<float>::quiet_NaN();
  for (std::size_t i = 0; i < flow.uv.size(); ++i) {
    const bool ok = flow.valid[i] != 0;
    detail::put_u32(out, std::bit_cast<std::uint32_t>(ok ? static_cast<float>(flow.uv[i].u) : nan));
    detail::put_u32(out, std::bit_cast<std::uint32_t>(ok ? static_cast<float>(flow.uv[i].v) : nan));
  }
  return out;
}

inline FlowField decode_flow(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::kTruncatedFile, "flow file shorter than its magic");
  if (std::bit_cast<float>(detail::get_u32(bytes.data())) != kFlowMagic)
    throw Error(ErrorCode::kBadMagic, "not a .flo file");
  if (bytes.size() < 12) throw Error(ErrorCode::kTruncatedFile, "flow header incomplete");
  const auto w = static_cast<std::int32_t>(detail::get_u32(bytes.data() + 4));
  const auto h = static_cast<std::int32_t>(detail::get_u32(bytes.data() + 8));
  if (w < 0 || h < 0) throw Error(ErrorCode::kBadMagic, "negative flow dimensions");
  const std::uint64_t need = 12 + 8ull * static_cast<std::uint64_t>(w) * static_cast<std::uint64_t>(h);
  if (bytes.size() < need) throw Error(ErrorCode::kTruncatedFile, "flow payload incomplete");
  FlowField flow(w, h);
  const unsigned char* p = bytes.data() + 12;
  for (std::size_t i = 0; i < flow.uv.size(); ++i, p += 8) {
    const float u = std::bit_cast<float>(detail::get_u32(p));
    const float v = std::bit_cast<float>(detail::get_u32(p + 4));
    if (std::isnan(u) || std::isnan(v)) continue;
    flow.uv[i] = FlowVec{u, v};
    flow.valid[i] = 1;
  }
  return flow;
}

inline void write_flow(const std::filesystem::path& path, const FlowField& flow) {
  const auto bytes = encode_flow(flow);
  detail::write_bytes(path, bytes.data(), bytes.size());
}

inline FlowField read_flow(const std::filesystem::path& path) { return decode_flow(detail::read_bytes(path)); }

/// Scalar channel stored as flow with v = 0.
template <typename Tag>
void write_scalar_flow(const std::filesystem::path& path, const ScalarField<Tag>& img) {
  FlowField f(img.width(), img.height());
  for (std::size_t i = 0; i < img.value.size(); ++i)
    if (img.valid[i]) {
      f.uv[i] = FlowVec{img.value[i], 0.0};
      f.valid[i] = 1;
    }
  write_flow(path, f);
}

// ---- 8-bit grayscale images ----

using Gray8 = Image<std::uint8_t>;

namespace detail {

inline Gray8 read_pgm(const std::vector<unsigned char>& bytes, const std::string& name) {
  std::size_t pos = 2;
  auto next_token = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      any = true;
      if (v > (1L << 30)) throw Error(ErrorCode::kUnsupportedFormat, name + ": PGM header value too large");
    }
    if (!any) throw Error(ErrorCode::kUnsupportedFormat, name + ": malformed PGM header");
    return v;
  };
  const long w = next_token(), h = next_token(), maxval = next_token();
  if (maxval != 255) throw Error(ErrorCode::kUnsupportedFormat, name + ": only 8-bit PGM is supported");
  ++pos;  // single whitespace before raster
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < pos + n) throw Error(ErrorCode::kTruncatedFile, name + ": PGM raster incomplete");
  Gray8 img(static_cast<int>(w), static_cast<int>(h));
  std::memcpy(img.data().data(), bytes.data() + pos, n);
  return img;
}

inline Gray8 read_png_gray(const std::vector<unsigned char>& bytes, const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw Error(ErrorCode::kUnsupportedFormat, name + ": " + image.message);
  if (image.format != PNG_FORMAT_GRAY) {
    png_image_free(&image);
    throw Error(ErrorCode::kUnsupportedFormat, name + ": expected 8-bit single-channel PNG");
  }
  Gray8 img(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, img.data().data(), 0, nullptr))
    throw Error(ErrorCode::kUnsupportedFormat, name + ": " + image.message);
  return img;
}

inline void write_png(const std::filesystem::path& path, const void* pixels, int width, int height,
                      png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr))
    throw Error(ErrorCode::kIoFailure, path.string() + ": " + image.message);
  std::vector<unsigned char> buf(size);
  if (!png_image_write_to_memory(&image, buf.data(), &size, 0, pixels, 0, nullptr))
    throw Error(ErrorCode::kIoFailure, path.string() + ": " + image.message);
  write_bytes(path, buf.data(), size);
}

}  // namespace detail

/// Reads an 8-bit single-channel PNG or binary PGM, detected by content.
inline Gray8 read_gray8(const std::filesystem::path& path) {
  const auto bytes = detail::read_bytes(path);
  static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return detail::read_png_gray(bytes, path.string());
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return detail::read_pgm(bytes, path.string());
  throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": not an 8-bit PNG or binary PGM");
}

/// Format chosen by extension: .pgm writes PGM, anything else PNG.
inline void write_gray8(const std::filesystem::path& path, const Gray8& img) {
  if (detail::lower_ext(path) == ".pgm") {
    std::ostringstream header;
    header << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<unsigned char> buf;
    const std::string h = header.str();
    buf.insert(buf.end(), h.begin(), h.end());
    buf.insert(buf.end(), img.data().begin(), img.data().end());
    detail::write_bytes(path, buf.data(), buf.size());
    return;
  }
  detail::write_png(path, img.data().data(), img.width(), img.height(), PNG_FORMAT_GRAY);
}

inline std::uint8_t quantize_intensity(float v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(static_cast<double>(v) * 255.0 + 0.5), 0.0, 255.0));
}

inline Frame read_frame(const std::filesystem::path& path) {
  const Gray8 g = read_gray8(path);
  Frame f(g.width(), g.height());
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = static_cast<float>(g[i] / 255.0);
  return f;
}

inline void write_frame(const std::filesystem::path& path, const Frame& frame) {
  Gray8 g(frame.width(), frame.height());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = quantize_intensity(frame[i]);
  write_gray8(path, g);
}

inline Mask read_mask(const std::filesystem::path& path) {
  const Gray8 g = read_gray8(path);
  Mask m(g.width(), g.height());
  for (std::size_t i = 0; i < g.size(); ++i) m[i] = g[i] >= 128 ? 1 : 0;
  return m;
}

inline void write_mask(const std::filesystem::path& path, const Mask& mask) {
  Gray8 g(mask.width(), mask.height());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = mask[i] ? 255 : 0;
  write_gray8(path, g);
}

inline void write_color_png(const std::filesystem::path& path, const ColorImage& img) {
  static_assert(sizeof(Rgb8) == 3);
  detail::write_png(path, img.data().data(), img.width(), img.height(), PNG_FORMAT_RGB);
}

inline std::string indexed_name(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06d%s", stem, index, ext);
  return buf;
}

}  // namespace rinv

// Test-only helpers and independent oracles.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "rinv/rinv.hpp"

namespace rinv::test {

/// Smooth texture sampled at continuous coordinates, so a translated copy is
/// an exact resampling of the same surface.
inline double texture(double x, double y, std::uint64_t seed = 11) {
  return 0.1 + 0.8 * background_texture(BackgroundSpec{seed, 4}, x / 6.0, y / 6.0);
}

/// Frame whose pixel p shows texture(p - shift), i.e. prev(p) == next(p + shift).
inline Frame shifted_texture(int w, int h, double sx, double sy, std::uint64_t seed = 11) {
  Frame f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f(x, y) = static_cast<float>(texture(x - sx, y - sy, seed));
  return f;
}

struct EpeStats {
  double mean = 0.0;
  std::size_t count = 0;
};

/// Mean endpoint error against a constant flow over pixels at least `margin` from the border.
inline EpeStats interior_epe(const FlowField& flow, double u, double v, int margin) {
  EpeStats s;
  double sum = 0.0;
  for (int y = margin; y < flow.height() - margin; ++y)
    for (int x = margin; x < flow.width() - margin; ++x) {
      if (!flow.valid(x, y)) continue;
      sum += std::hypot(flow.uv(x, y).u - u, flow.uv(x, y).v - v);
      ++s.count;
    }
  s.mean = s.count ? sum / static_cast<double>(s.count) : INFINITY;
  return s;
}

/// sin of the signed angle from a to b, from atan2 of cross and dot.
inline double sin_between(double ax, double ay, double bx, double by) {
  return std::sin(std::atan2(ax * by - ay * bx, ax * bx + ay * by));
}

/// Flood-fill 8-connected labeling: label per pixel (0 = background) and count.
inline std::pair<Image<int>, int> flood_label(const Mask& m) {
  Image<int> label(m.width(), m.height(), 0);
  int next = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y) || label(x, y)) continue;
      ++next;
      std::deque<std::pair<int, int>> q{{x, y}};
      label(x, y) = next;
      while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (!m.contains(nx, ny) || !m(nx, ny) || label(nx, ny)) continue;
            label(nx, ny) = next;
            q.emplace_back(nx, ny);
          }
      }
    }
  return {label, next};
}

/// Per-pixel disk erosion/dilation with out-of-image samples ignored.
inline Mask brute_morph(const Mask& in, int r, bool dilate) {
  Mask out(in.width(), in.height(), 0);
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      bool acc = !dilate;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          if ((dx + 0.0) * dx + dy * dy >= (r + 0.5) * (r + 0.5) || !in.contains(x + dx, y + dy)) continue;
          const bool v = in(x + dx, y + dy) != 0;
          acc = dilate ? (acc || v) : (acc && v);
        }
      out(x, y) = acc ? 1 : 0;
    }
  return out;
}

inline Mask random_mask(int w, int h, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution bit(density);
  Mask m(w, h, 0);
  for (auto& p : m.data()) p = bit(rng) ? 1 : 0;
  return m;
}

inline void fill_rect(Mask& m, int x0, int y0, int x1, int y1) {
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) m(x, y) = 1;
}

inline long popcount(const Mask& m) {
  long n = 0;
  for (auto v : m.data()) n += v;
  return n;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("rinv_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<unsigned char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

/// Stationary radial flow about `foe` with an arbitrary positive per-pixel
/// scale (depth and speed folded together).
inline FlowField radial_flow(int w, int h, const Vec2& foe, std::uint64_t seed, double min_scale = 0.01,
                             double max_scale = 0.2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(min_scale, max_scale);
  FlowField f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double s = scale(rng);
      f.set(x, y, (x - foe.x()) * s, (y - foe.y()) * s);
    }
  return f;
}

/// Locates the common corner of the ratio sign quadrants: the median position
/// of sign flips between consecutive valid, nonzero samples along rows (x)
/// and along columns (y).
inline std::optional<Vec2> quadrant_corner(const Image<double>& value, const Mask& valid) {
  std::vector<double> xs, ys;
  auto scan = [&](int outer_n, int inner_n, bool along_rows, std::vector<double>& out) {
    for (int o = 0; o < outer_n; ++o) {
      int last = -1;
      double last_v = 0.0;
      for (int i = 0; i < inner_n; ++i) {
        const int x = along_rows ? i : o, y = along_rows ? o : i;
        if (!valid(x, y) || value(x, y) == 0.0) continue;
        const double v = value(x, y);
        if (last >= 0 && (v > 0.0) != (last_v > 0.0)) out.push_back(0.5 * (last + i));
        last = i;
        last_v = v;
      }
    }
  };
  scan(value.height(), value.width(), true, xs);
  scan(value.width(), value.height(), false, ys);
  if (xs.empty() || ys.empty()) return std::nullopt;
  std::nth_element(xs.begin(), xs.begin() + xs.size() / 2, xs.end());
  std::nth_element(ys.begin(), ys.begin() + ys.size() / 2, ys.end());
  return Vec2(xs[xs.size() / 2], ys[ys.size() / 2]);
}

/// True when every valid nonzero sample beyond `margin` of the corner has the
/// sign of (x - cx)(y - cy), i.e. the four quadrants are uniformly signed.
inline bool quadrants_consistent(const Image<double>& value, const Mask& valid, const Vec2& corner, double margin) {
  for (int y = 0; y < value.height(); ++y)
    for (int x = 0; x < value.width(); ++x) {
      if (!valid(x, y) || value(x, y) == 0.0) continue;
      const double dx = x - corner.x(), dy = y - corner.y();
      if (std::abs(dx) <= margin || std::abs(dy) <= margin) continue;
      if ((value(x, y) > 0.0) != (dx * dy > 0.0)) return false;
    }
  return true;
}

}  // namespace rinv::test

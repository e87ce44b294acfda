// Dense two-frame optical flow.
//
// Coarse-to-fine iterative Lucas-Kanade over the whole image: each level warps
// the next frame by the current flow and solves one 2x2 system per pixel, with
// the structure tensor accumulated by separable box sums. Pixels whose
// windowed structure tensor is near-singular are reported invalid.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rinv/core.hpp"

namespace rinv {

/// Grayscale frame with intensities in [0, 1].
using Frame = Image<float>;

struct FlowVec {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const FlowVec&, const FlowVec&) = default;
};

/// Per-pixel displacement (px/frame) plus validity.
struct FlowField {
  Image<FlowVec> uv;
  Mask valid;

  FlowField() = default;
  FlowField(int width, int height) : uv(width, height), valid(width, height, 0) {}

  int width() const noexcept { return uv.width(); }
  int height() const noexcept { return uv.height(); }

  void set(int x, int y, double u, double v) {
    uv(x, y) = FlowVec{u, v};
    valid(x, y) = 1;
  }

  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count(valid.data().begin(), valid.data().end(), std::uint8_t{1}));
  }

  /// Returns a copy with every vector multiplied by k.
  FlowField scaled(double k) const {
    FlowField out = *this;
    for (auto& f : out.uv.data()) f = FlowVec{f.u * k, f.v * k};
    return out;
  }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

struct FlowParams {
  int pyramid_levels = 3;
  int window_radius_px = 7;
  int iterations_per_level = 3;
  double downscale_factor = 2.0;
  /// Minimum eigenvalue of the window-averaged structure tensor.
  double min_eigenvalue = 1e-6;

  void validate() const {
    if (pyramid_levels < 1) throw ConfigError("flow.pyramid_levels", "must be >= 1");
    if (window_radius_px < 2) throw ConfigError("flow.window_radius_px", "must be >= 2");
    if (iterations_per_level < 1) throw ConfigError("flow.iterations_per_level", "must be >= 1");
    if (!(downscale_factor > 1.0 && downscale_factor <= 4.0))
      throw ConfigError("flow.downscale_factor", "must lie in (1, 4]");
    if (!(min_eigenvalue > 0.0)) throw ConfigError("flow.min_eigenvalue", "must be > 0");
  }
};

inline void validate_frame(const Frame& f) {
  if (f.width() < 1 || f.height() < 1) throw Error(ErrorCode::kFrameTooSmall, "empty frame");
  for (float p : f.data()) {
    if (!(std::isfinite(p) && p >= 0.0f && p <= 1.0f))
      throw Error(ErrorCode::kInvalidConfig, "frame intensity outside [0, 1]");
  }
}

namespace detail {

inline int next_level_size(int size, double factor) {
  return std::max(1, static_cast<int>(std::lround(size / factor)));
}

inline int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

template <typename T>
inline double bilinear(const Image<T>& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = std::min(static_cast<int>(x), img.width() - 1);
  const int y0 = std::min(static_cast<int>(y), img.height() - 1);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double ax = x - x0;
  const double ay = y - y0;
  const double top = (1.0 - ax) * img(x0, y0) + ax * img(x1, y0);
  const double bot = (1.0 - ax) * img(x0, y1) + ax * img(x1, y1);
  return (1.0 - ay) * top + ay * bot;
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& w : k) w /= sum;
  return k;
}

inline Image<double> blur(const Frame& in, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = in.width(), h = in.height();
  Image<double> tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * in(reflect(x + i, w), y);
      tmp(x, y) = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * tmp(x, reflect(y + i, h));
      out(x, y) = s;
    }
  return out;
}

/// Mean over the (2r+1)^2 window clipped to the image.
inline Image<double> box_mean(const Image<double>& in, int r) {
  const int w = in.width(), h = in.height();
  Image<double> rows(w, h), out(w, h);
  std::vector<double> prefix(static_cast<std::size_t>(std::max(w, h)) + 1);
  for (int y = 0; y < h; ++y) {
    const double* src = in.row(y);
    prefix[0] = 0.0;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + src[x];
    double* dst = rows.row(y);
    for (int x = 0; x < w; ++x) {
      const int a = std::max(0, x - r), b = std::min(w, x + r + 1);
      dst[x] = (prefix[b] - prefix[a]) / (b - a);
    }
  }
  for (int x = 0; x < w; ++x) {
    prefix[0] = 0.0;
    for (int y = 0; y < h; ++y) prefix[y + 1] = prefix[y] + rows(x, y);
    for (int y = 0; y < h; ++y) {
      const int a = std::max(0, y - r), b = std::min(h, y + r + 1);
      out(x, y) = (prefix[b] - prefix[a]) / (b - a);
    }
  }
  return out;
}

inline int feasible_levels(int width, int height, const FlowParams& params) {
  const int min_side = 2 * params.window_radius_px + 1;
  int levels = 0;
  int w = width, h = height;
  while (levels < params.pyramid_levels && w >= min_side && h >= min_side) {
    ++levels;
    w = next_level_size(w, params.downscale_factor);
    h = next_level_size(h, params.downscale_factor);
  }
  return levels;
}

}  // namespace detail

/// Level 0 is the input; each further level is Gaussian low-passed and
/// resampled by 1/downscale_factor.
inline std::vector<Frame> build_pyramid(const Frame& frame, const FlowParams& params) {
  params.validate();
  validate_frame(frame);
  const int min_side = 2 * params.window_radius_px + 1;
  std::vector<Frame> levels{frame};
  int w = frame.width(), h = frame.height();
  if (w < min_side || h < min_side) throw Error(ErrorCode::kFrameTooSmall, "frame smaller than the flow window");
  for (int l = 1; l < params.pyramid_levels; ++l) {
    w = detail::next_level_size(w, params.downscale_factor);
    h = detail::next_level_size(h, params.downscale_factor);
    if (w < min_side || h < min_side)
      throw Error(ErrorCode::kFrameTooSmall, "level " + std::to_string(l) + " is " + std::to_string(w) + "x" +
                                                 std::to_string(h) + ", window needs " + std::to_string(min_side));
  }

  w = frame.width();
  h = frame.height();
  for (int l = 1; l < params.pyramid_levels; ++l) {
    const Frame& prev = levels.back();
    const Image<double> smooth = detail::blur(prev, 0.5 * params.downscale_factor);
    const int nw = detail::next_level_size(prev.width(), params.downscale_factor);
    const int nh = detail::next_level_size(prev.height(), params.downscale_factor);
    const double sx = static_cast<double>(prev.width()) / nw;
    const double sy = static_cast<double>(prev.height()) / nh;
    Frame next(nw, nh);
    for (int y = 0; y < nh; ++y)
      for (int x = 0; x < nw; ++x) {
        const double v = detail::bilinear(smooth, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
        next(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    levels.push_back(std::move(next));
  }
  return levels;
}

inline FlowField estimate_flow(const Frame& prev, const Frame& next, const FlowParams& params = {},
                               const Exec& exec = {}) {
  params.validate();
  require_same_dims(prev, next, "estimate_flow frames");
  const int r = params.window_radius_px;
  if (prev.width() < 2 * r + 1 || prev.height() < 2 * r + 1)
    throw Error(ErrorCode::kFrameTooSmall, "frames smaller than the flow window");
  validate_frame(prev);
  validate_frame(next);

  FlowParams level_params = params;
  level_params.pyramid_levels = detail::feasible_levels(prev.width(), prev.height(), params);
  const auto pyr_prev = build_pyramid(prev, level_params);
  const auto pyr_next = build_pyramid(next, level_params);

  Image<double> du, dv;
  Mask degenerate;
  for (int level = level_params.pyramid_levels - 1; level >= 0; --level) {
    const Frame& img_i = pyr_prev[level];
    const Frame& img_j = pyr_next[level];
    const int w = img_i.width(), h = img_i.height();

    if (du.empty()) {
      du = Image<double>(w, h, 0.0);
      dv = Image<double>(w, h, 0.0);
    } else {
      const double sx = static_cast<double>(w) / du.width();
      const double sy = static_cast<double>(h) / du.height();
      Image<double> nu(w, h), nv(w, h);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double cx = (x + 0.5) / sx - 0.5, cy = (y + 0.5) / sy - 0.5;
          nu(x, y) = detail::bilinear(du, cx, cy) * sx;
          nv(x, y) = detail::bilinear(dv, cx, cy) * sy;
        }
      du = std::move(nu);
      dv = std::move(nv);
    }

    Image<double> ix(w, h), iy(w, h), ixx(w, h), ixy(w, h), iyy(w, h);
    for_rows(exec, h, [&](int y0, int y1) {
      for (int y = y0; y < y1; ++y)
        for (int x = 0; x < w; ++x) {
          const double gx = 0.5 * (img_i(std::min(x + 1, w - 1), y) - img_i(std::max(x - 1, 0), y));
          const double gy = 0.5 * (img_i(x, std::min(y + 1, h - 1)) - img_i(x, std::max(y - 1, 0)));
          ix(x, y) = gx;
          iy(x, y) = gy;
          ixx(x, y) = gx * gx;
          ixy(x, y) = gx * gy;
          iyy(x, y) = gy * gy;
        }
    });
    const Image<double> gxx = detail::box_mean(ixx, r);
    const Image<double> gxy = detail::box_mean(ixy, r);
    const Image<double> gyy = detail::box_mean(iyy, r);

    degenerate = Mask(w, h, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double a = gxx(x, y), b = gxy(x, y), c = gyy(x, y);
        const double min_eig = 0.5 * (a + c - std::sqrt((a - c) * (a - c) + 4.0 * b * b));
        degenerate(x, y) = min_eig < params.min_eigenvalue ? 1 : 0;
      }

    // Each window is warped by its centre's flow, so pixels update independently.
    for (int it = 0; it < params.iterations_per_level; ++it) {
      for_rows(exec, h, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y)
          for (int x = 0; x < w; ++x) {
            if (degenerate(x, y)) continue;
            const double u = du(x, y), v = dv(x, y);
            const int xa = std::max(0, x - r), xb = std::min(w - 1, x + r);
            const int ya = std::max(0, y - r), yb = std::min(h - 1, y + r);
            double bx = 0.0, by = 0.0;
            for (int wy = ya; wy <= yb; ++wy)
              for (int wx = xa; wx <= xb; ++wx) {
                const double diff = detail::bilinear(img_j, wx + u, wy + v) - img_i(wx, wy);
                bx += ix(wx, wy) * diff;
                by += iy(wx, wy) * diff;
              }
            const double n = static_cast<double>((xb - xa + 1) * (yb - ya + 1));
            bx /= n;
            by /= n;
            const double a = gxx(x, y), b = gxy(x, y), c = gyy(x, y);
            const double det = a * c - b * b;
            du(x, y) = u - (c * bx - b * by) / det;
            dv(x, y) = v - (a * by - b * bx) / det;
          }
      });
    }
  }

  const int w = prev.width(), h = prev.height();
  FlowField out(w, h);
  for (int y = r; y < h - r; ++y)
    for (int x = r; x < w - r; ++x) {
      if (degenerate(x, y)) continue;
      const double u = du(x, y), v = dv(x, y);
      if (!std::isfinite(u) || !std::isfinite(v)) continue;
      const double tx = x + u, ty = y + v;
      if (tx < 0.0 || ty < 0.0 || tx > w - 1 || ty > h - 1) continue;
      out.set(x, y, u, v);
    }
  return out;
}

}  // namespace rinv

// Flow-to-invariant transforms: the v/u ratio image, its residual against the
// lookup image, the bounded sine-deviation image, and color rendering.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string_view>

#include "rinv/camera.hpp"
#include "rinv/core.hpp"
#include "rinv/flow.hpp"

namespace rinv {

struct RatioTag {
  static constexpr std::string_view name = "ratio";
};
struct ResidualTag {
  static constexpr std::string_view name = "residual";
};
struct DeviationTag {
  static constexpr std::string_view name = "deviation";
};

/// Scalar per-pixel channel with validity; the tag keeps channels apart.
template <typename Tag>
struct ScalarField {
  static constexpr std::string_view channel = Tag::name;

  Image<double> value;
  Mask valid;

  ScalarField() = default;
  ScalarField(int width, int height) : value(width, height, 0.0), valid(width, height, 0) {}

  int width() const noexcept { return value.width(); }
  int height() const noexcept { return value.height(); }

  friend bool operator==(const ScalarField&, const ScalarField&) = default;
};

using RatioImage = ScalarField<RatioTag>;
using ResidualImage = ScalarField<ResidualTag>;
using DeviationImage = ScalarField<DeviationTag>;

inline constexpr double kDefaultUEpsilon = 1e-6;
inline constexpr double kDefaultMinFlowMag = 0.5;
inline constexpr double kDefaultRatioVmax = 3.0;
inline constexpr double kDefaultDeviationVmax = 1.0;

inline RatioImage ratio_image(const FlowField& flow, double u_epsilon = kDefaultUEpsilon, const Exec& exec = {}) {
  if (!(u_epsilon > 0.0)) throw ConfigError("u_epsilon", "must be > 0");
  RatioImage out(flow.width(), flow.height());
  for_rows(exec, flow.height(), [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < flow.width(); ++x) {
        if (!flow.valid(x, y)) continue;
        const FlowVec f = flow.uv(x, y);
        if (!(std::abs(f.u) > u_epsilon)) continue;
        out.value(x, y) = f.v / f.u;
        out.valid(x, y) = 1;
      }
  });
  return out;
}

/// Measured ratio minus the lookup ratio. Unbounded; meant for display.
inline ResidualImage residual_image(const RatioImage& ratio, const LookupImage& lookup) {
  require_same_dims(ratio.value, lookup.ratio, "residual_image");
  ResidualImage out(ratio.width(), ratio.height());
  for (std::size_t i = 0; i < out.value.size(); ++i) {
    if (!ratio.valid[i] || !lookup.ratio_valid[i]) continue;
    out.value[i] = ratio.value[i] - lookup.ratio[i];
    out.valid[i] = 1;
  }
  return out;
}

/// Sine of the angle between the measured flow and the lookup's radial
/// direction. Radial and anti-radial flow both give 0.
inline DeviationImage deviation_image(const FlowField& flow, const LookupImage& lookup,
                                      double min_flow_mag = kDefaultMinFlowMag, const Exec& exec = {}) {
  require_same_dims(flow.uv, lookup.radial_dir, "deviation_image");
  if (!(min_flow_mag > 0.0)) throw ConfigError("min_flow_mag", "must be > 0");
  DeviationImage out(flow.width(), flow.height());
  const double min_sq = min_flow_mag * min_flow_mag;
  const int w = flow.width();
  for_rows(exec, flow.height(), [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      const FlowVec* f = flow.uv.row(y);
      const std::uint8_t* fv = flow.valid.row(y);
      const Dir2* d = lookup.radial_dir.row(y);
      const std::uint8_t* dv = lookup.dir_valid.row(y);
      double* val = out.value.row(y);
      std::uint8_t* ok = out.valid.row(y);
      // Branch-free so the row vectorizes; rejected pixels get 0 and valid 0.
      for (int x = 0; x < w; ++x) {
        const double mag_sq = f[x].u * f[x].u + f[x].v * f[x].v;
        const bool keep = (fv[x] & dv[x]) && mag_sq >= min_sq;
        const double s = (d[x].x * f[x].v - d[x].y * f[x].u) / std::sqrt(keep ? mag_sq : 1.0);
        val[x] = keep ? std::clamp(s, -1.0, 1.0) : 0.0;
        ok[x] = keep;
      }
    }
  });
  return out;
}

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

using ColorImage = Image<Rgb8>;

inline constexpr Rgb8 kInvalidGray{128, 128, 128};

/// Positive values red, negative blue, brightness min(|v|/vmax, 1); invalid gray.
template <typename Tag>
ColorImage render_invariant(const ScalarField<Tag>& values, double vmax) {
  if (!(vmax > 0.0)) throw ConfigError("vmax", "must be > 0");
  ColorImage out(values.width(), values.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!values.valid[i]) {
      out[i] = kInvalidGray;
      continue;
    }
    const double v = values.value[i];
    const auto level = static_cast<std::uint8_t>(std::lround(255.0 * std::min(std::abs(v) / vmax, 1.0)));
    if (v > 0.0)
      out[i] = Rgb8{level, 0, 0};
    else if (v < 0.0)
      out[i] = Rgb8{0, 0, level};
    else
      out[i] = Rgb8{0, 0, 0};
  }
  return out;
}

}  // namespace rinv

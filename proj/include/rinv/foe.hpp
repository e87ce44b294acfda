// Focus-of-expansion estimation from a flow field.
//
// RANSAC over intersections of flow lines, scored by the sine-deviation of each
// pixel's flow about the hypothesis, then refined by weighted linear least
// squares on the inliers:
//   minimize sum_i w_i * cross(p_i - e, f_i)^2,   f_i the unit flow direction.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rinv/camera.hpp"
#include "rinv/core.hpp"
#include "rinv/flow.hpp"

namespace rinv {

struct FoeEstimate {
  FoePoint foe;
  double inlier_fraction = 0.0;
  double rms_sin_deviation = 0.0;
};

struct FoeParams {
  double min_flow_mag = 0.5;
  int ransac_iters = 200;
  double inlier_sin_tol = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(min_flow_mag > 0.0)) throw ConfigError("foe.min_flow_mag", "must be > 0");
    if (ransac_iters < 1) throw ConfigError("foe.iters", "must be >= 1");
    if (!(inlier_sin_tol > 0.0 && inlier_sin_tol <= 1.0)) throw ConfigError("foe.tol", "must lie in (0, 1]");
  }
};

inline constexpr std::size_t kMinFoeSamples = 100;

namespace detail {

struct FlowSample {
  double px, py;  // pixel
  double fx, fy;  // unit flow direction
  double mag;
};

inline double sin_about(const FlowSample& s, double ex, double ey) {
  const double rx = s.px - ex, ry = s.py - ey;
  const double r = std::hypot(rx, ry);
  if (r == 0.0) return 0.0;
  return (rx * s.fy - ry * s.fx) / r;
}

inline bool refine_foe(const std::vector<FlowSample>& samples, const std::vector<std::size_t>& idx, Vec2& e) {
  Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
  Eigen::Vector2d atb = Eigen::Vector2d::Zero();
  for (std::size_t i : idx) {
    const auto& s = samples[i];
    // cross(p - e, f) = (px fy - py fx) - (ex fy - ey fx)
    const Eigen::Vector2d a(s.fy, -s.fx);
    const double b = s.px * s.fy - s.py * s.fx;
    ata += s.mag * a * a.transpose();
    atb += s.mag * a * b;
  }
  if (std::abs(ata.determinant()) < 1e-12 * (1.0 + ata.squaredNorm())) return false;
  e = ata.ldlt().solve(atb);
  return e.allFinite();
}

}  // namespace detail

inline FoeEstimate estimate_foe(const FlowField& flow, const FoeParams& params) {
  params.validate();
  std::vector<detail::FlowSample> samples;
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      if (!flow.valid(x, y)) continue;
      const FlowVec f = flow.uv(x, y);
      const double mag = std::hypot(f.u, f.v);
      if (!(mag >= params.min_flow_mag)) continue;
      samples.push_back({static_cast<double>(x), static_cast<double>(y), f.u / mag, f.v / mag, mag});
    }
  if (samples.size() < kMinFoeSamples)
    throw Error(ErrorCode::kInsufficientFlow,
                std::to_string(samples.size()) + " usable flow vectors, need " + std::to_string(kMinFoeSamples));

  // Hypotheses farther than this from the image are treated as a FOE at
  // infinity (lateral motion), which the invariant does not support.
  const double extent = std::max(flow.width(), flow.height());
  const Vec2 center((flow.width() - 1) / 2.0, (flow.height() - 1) / 2.0);
  const double max_dist = 50.0 * extent;

  // Hypotheses are scored on a fixed stride subsample; the final count uses all samples.
  const std::size_t stride = std::max<std::size_t>(1, samples.size() / 4000);
  std::vector<std::size_t> scoring;
  for (std::size_t i = 0; i < samples.size(); i += stride) scoring.push_back(i);

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::size_t best_count = 0;
  Vec2 best(0.0, 0.0);
  bool have_best = false;
  for (int it = 0; it < params.ransac_iters; ++it) {
    const auto& a = samples[pick(rng)];
    const auto& b = samples[pick(rng)];
    const double denom = a.fx * b.fy - a.fy * b.fx;
    if (std::abs(denom) < 1e-9) continue;
    // a.p + s a.f = b.p + t b.f
    const double s = ((b.px - a.px) * b.fy - (b.py - a.py) * b.fx) / denom;
    const Vec2 e(a.px + s * a.fx, a.py + s * a.fy);
    if (!e.allFinite() || (e - center).norm() > max_dist) continue;
    std::size_t count = 0;
    for (std::size_t i : scoring)
      if (std::abs(detail::sin_about(samples[i], e.x(), e.y())) <= params.inlier_sin_tol) ++count;
    if (!have_best || count > best_count) {
      best_count = count;
      best = e;
      have_best = true;
    }
  }
  if (!have_best) throw Error(ErrorCode::kDegenerate, "no finite flow-line intersection (parallel flow)");

  auto collect_inliers = [&](const Vec2& e) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (std::abs(detail::sin_about(samples[i], e.x(), e.y())) <= params.inlier_sin_tol) idx.push_back(i);
    return idx;
  };

  Vec2 foe = best;
  std::vector<std::size_t> inliers = collect_inliers(foe);
  for (int round = 0; round < 3 && inliers.size() >= 2; ++round) {
    Vec2 refined = foe;
    if (!detail::refine_foe(samples, inliers, refined)) break;
    if ((refined - center).norm() > max_dist) break;
    auto next = collect_inliers(refined);
    if (next.size() < inliers.size()) break;
    const bool moved = (refined - foe).norm() > 1e-12;
    foe = refined;
    inliers = std::move(next);
    if (!moved) break;
  }

  FoeEstimate out;
  out.foe = FoePoint{foe, FoeSource::kEstimated};
  out.inlier_fraction = static_cast<double>(inliers.size()) / static_cast<double>(samples.size());
  double ss = 0.0;
  for (std::size_t i : inliers) {
    const double s = detail::sin_about(samples[i], foe.x(), foe.y());
    ss += s * s;
  }
  out.rms_sin_deviation = inliers.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(inliers.size()));
  if (out.inlier_fraction < 0.5)
    throw Error(ErrorCode::kDegenerate, "best hypothesis explains only " + std::to_string(out.inlier_fraction) +
                                            " of the flow");
  return out;
}

}  // namespace rinv

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "rinv/invariant.hpp"
#include "rinv/scene.hpp"
#include "support.hpp"

namespace rinv {
namespace {

FlowField single(double u, double v) {
  FlowField f(1, 1);
  f.set(0, 0, u, v);
  return f;
}

// 41x41 camera with the FOE at pixel (10, 10), so pixel (20, 30) sits at offset (10, 20).
LookupImage offset_lookup() {
  const CameraModel cam{100.0, Vec2(10, 10), 41, 41};
  return synthesize_lookup(cam, FoePoint::principal_point(cam), 2.0);
}

FlowField flow_at(int w, int h, int x, int y, double u, double v) {
  FlowField f(w, h);
  f.set(x, y, u, v);
  return f;
}

TEST(RatioImage, Examples) {
  const auto a = ratio_image(single(0.5, 1.0));
  ASSERT_TRUE(a.valid(0, 0));
  EXPECT_EQ(a.value(0, 0), 2.0);
  const auto b = ratio_image(single(2.0, -2.0));
  EXPECT_EQ(b.value(0, 0), -1.0);
  EXPECT_FALSE(ratio_image(single(0.0, 1.0), 1e-6).valid(0, 0));
}

TEST(RatioImage, InvalidFlowStaysInvalid) {
  EXPECT_FALSE(ratio_image(FlowField(3, 3)).valid(1, 1));
  EXPECT_THROW(ratio_image(single(1, 1), 0.0), ConfigError);
}

TEST(ResidualImage, Examples) {
  const LookupImage lk = offset_lookup();
  FlowField f(41, 41);
  f.set(13, 14, 0.3, 0.4);  // offset (3, 4): radial
  f.set(20, 30, 1.0, 2.0);
  f.set(10, 10, 1.0, 1.0);  // at the FOE: lookup invalid
  const auto r = residual_image(ratio_image(f), lk);
  ASSERT_TRUE(r.valid(13, 14));
  EXPECT_NEAR(r.value(13, 14), 0.0, 1e-15);
  EXPECT_NEAR(r.value(20, 30), 0.0, 1e-15);
  EXPECT_FALSE(r.valid(10, 10));

  FlowField g(41, 41);
  g.set(20, 20, 1.0, 2.0);  // lookup ratio 1 on the diagonal
  EXPECT_NEAR(residual_image(ratio_image(g), lk).value(20, 20), 1.0, 1e-15);
}

TEST(ResidualImage, DimensionMismatch) {
  try {
    residual_image(ratio_image(FlowField(4, 4)), offset_lookup());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(DeviationImage, Examples) {
  const LookupImage lk = offset_lookup();
  const auto radial = deviation_image(flow_at(41, 41, 20, 30, 0.5, 1.0), lk);
  ASSERT_TRUE(radial.valid(20, 30));
  EXPECT_NEAR(radial.value(20, 30), 0.0, 1e-15);

  const auto lateral = deviation_image(flow_at(41, 41, 20, 30, 1.0, 0.0), lk);
  const double oracle = test::sin_between(10, 20, 1.0, 0.0);
  EXPECT_NEAR(lateral.value(20, 30), oracle, 1e-12);
  EXPECT_NEAR(lateral.value(20, 30), -0.89443, 1e-5);

  const auto inward = deviation_image(flow_at(41, 41, 20, 30, -0.5, -1.0), lk);
  EXPECT_NEAR(inward.value(20, 30), 0.0, 1e-15);
}

TEST(DeviationImage, ValidityGates) {
  const LookupImage lk = offset_lookup();
  EXPECT_FALSE(deviation_image(flow_at(41, 41, 20, 30, 0.3, 0.1), lk).valid(20, 30));  // below min magnitude
  EXPECT_FALSE(deviation_image(flow_at(41, 41, 11, 10, 5.0, 5.0), lk).valid(11, 10));  // inside exclusion disk
  EXPECT_FALSE(deviation_image(FlowField(41, 41), lk).valid(20, 30));
  EXPECT_THROW(deviation_image(FlowField(41, 41), lk, 0.0), ConfigError);
  EXPECT_THROW(deviation_image(FlowField(40, 41), lk), Error);
}

// Property: |deviation| equals |sin delta| for a flow rotated by delta from radial.
TEST(DeviationImage, MoverSensitivityMatchesTrigOracle) {
  const CameraModel cam = CameraModel::centered(100.0, 64, 48);
  const FoePoint foe{Vec2(20.3, 31.7), FoeSource::kEstimated};
  const LookupImage lk = synthesize_lookup(cam, foe, 3.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> delta(-std::numbers::pi / 2, std::numbers::pi / 2), mag(0.6, 12.0);
  FlowField f(cam.width, cam.height);
  Image<double> expected(cam.width, cam.height, 0.0);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      const double phi = std::atan2(y - foe.position.y(), x - foe.position.x());
      const double d = delta(rng), m = mag(rng);
      f.set(x, y, m * std::cos(phi + d), m * std::sin(phi + d));
      expected(x, y) = std::sin(d);
    }
  const auto dev = deviation_image(f, lk);
  int checked = 0;
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      if (!dev.valid(x, y)) continue;
      ASSERT_NEAR(dev.value(x, y), expected(x, y), 1e-12);
      ++checked;
    }
  EXPECT_GT(checked, 2500);
}

TEST(DeviationImage, BoundedAndScaleInvariant) {
  const CameraModel cam = CameraModel::centered(100.0, 48, 40);
  const LookupImage lk = synthesize_lookup(cam, FoePoint::principal_point(cam), 2.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> comp(-6.0, 6.0);
  FlowField f(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) f.set(x, y, comp(rng), comp(rng));
  const auto base = deviation_image(f, lk, 0.5);
  for (std::size_t i = 0; i < base.value.size(); ++i)
    if (base.valid[i]) {
      EXPECT_LE(std::abs(base.value[i]), 1.0);
    }

  for (double k : {0.9, 2.0, 7.5, 40.0}) {
    const auto scaled = deviation_image(f.scaled(k), lk, 0.5 * k);
    for (std::size_t i = 0; i < base.value.size(); ++i) {
      ASSERT_EQ(scaled.valid[i], base.valid[i]);
      if (base.valid[i]) {
        ASSERT_NEAR(scaled.value[i], base.value[i], 1e-12);
      }
    }
  }
  for (double k : {-1.0, -3.0}) {
    const auto flipped = deviation_image(f.scaled(k), lk, 0.5 * std::abs(k));
    for (std::size_t i = 0; i < base.value.size(); ++i)
      if (base.valid[i]) {
        ASSERT_NEAR(std::abs(flipped.value[i]), std::abs(base.value[i]), 1e-12);
      }
  }
}

// Property: analytic static-scene flow matches the lookup whatever the depths and speed.
TEST(Invariance, RangeAndSpeedIndependence) {
  for (double speed : {0.1, 2.0, 5.0}) {
    SceneConfig cfg;
    cfg.camera = CameraModel::centered(100.0, 96, 72);
    cfg.speed = SpeedProfile::constant(speed);
    cfg.dt = 0.002;
    cfg.static_points = {1500, 2.0, 100.0, 1.5};
    cfg.seed = 21;
    const Scene scene = build_scene(cfg);
    const auto gt = analytic_flow(scene, 0.0);
    const LookupImage lk = synthesize_lookup(cfg.camera, *gt.foe, 2.0);
    const auto ratio = ratio_image(gt.flow);
    const auto dev = deviation_image(gt.flow, lk, 1e-6);
    int checked = 0;
    for (std::size_t i = 0; i < ratio.value.size(); ++i) {
      if (ratio.valid[i] && lk.ratio_valid[i]) {
        ASSERT_LE(std::abs(ratio.value[i] - lk.ratio[i]), 1e-9 * std::max(1.0, std::abs(lk.ratio[i])));
        ++checked;
      }
      if (dev.valid[i]) {
        ASSERT_LE(std::abs(dev.value[i]), 1e-9);
      }
    }
    EXPECT_GT(checked, 1000) << "speed " << speed;
  }
}

TEST(RenderInvariant, Colors) {
  DeviationImage d(5, 1);
  const double vals[] = {0.0, 1.0, -1.0, 0.5, 3.0};
  for (int x = 0; x < 5; ++x) {
    d.value(x, 0) = vals[x];
    d.valid(x, 0) = 1;
  }
  d.valid(4, 0) = 0;
  const ColorImage c = render_invariant(d, 1.0);
  EXPECT_EQ(c(0, 0), (Rgb8{0, 0, 0}));
  EXPECT_EQ(c(1, 0), (Rgb8{255, 0, 0}));
  EXPECT_EQ(c(2, 0), (Rgb8{0, 0, 255}));
  EXPECT_EQ(c(3, 0), (Rgb8{128, 0, 0}));
  EXPECT_EQ(c(4, 0), kInvalidGray);
  EXPECT_THROW(render_invariant(d, 0.0), ConfigError);
}

TEST(RenderInvariant, SaturatesAndIsDeterministic) {
  RatioImage r(2, 1);
  r.value(0, 0) = 10.0;
  r.value(1, 0) = -10.0;
  r.valid(0, 0) = r.valid(1, 0) = 1;
  const ColorImage c = render_invariant(r, kDefaultRatioVmax);
  EXPECT_EQ(c(0, 0), (Rgb8{255, 0, 0}));
  EXPECT_EQ(c(1, 0), (Rgb8{0, 0, 255}));
  EXPECT_TRUE(c == render_invariant(r, kDefaultRatioVmax));
}

TEST(ParallelExecution, MatchesSerial) {
  const CameraModel cam = CameraModel::centered(100.0, 64, 48);
  const LookupImage lk = synthesize_lookup(cam, FoePoint::principal_point(cam));
  const FlowField f = test::radial_flow(64, 48, Vec2(40, 10), 3, 0.02, 0.3);
  EXPECT_TRUE(deviation_image(f, lk) == deviation_image(f, lk, kDefaultMinFlowMag, Exec{4}));
  EXPECT_TRUE(ratio_image(f) == ratio_image(f, kDefaultUEpsilon, Exec{4}));
}

}  // namespace
}  // namespace rinv

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "rinv/foe.hpp"
#include "rinv/scene.hpp"
#include "support.hpp"

namespace rinv {
namespace {

FoeParams seeded(std::uint64_t seed) {
  FoeParams p;
  p.seed = seed;
  return p;
}

TEST(EstimateFoe, TwoLinesThroughOrigin) {
  FlowField f = test::radial_flow(64, 64, Vec2(0, 0), 1, 0.05, 0.1);
  f.set(10, 0, 1.0, 0.0);
  f.set(0, 10, 0.0, 1.0);
  const auto e = estimate_foe(f, seeded(0));
  EXPECT_NEAR(e.foe.position.x(), 0.0, 1e-9);
  EXPECT_NEAR(e.foe.position.y(), 0.0, 1e-9);
  EXPECT_EQ(e.foe.source, FoeSource::kEstimated);
}

TEST(EstimateFoe, CorruptedRadialField) {
  const Vec2 truth(123.4, 87.6);
  FlowField f = test::radial_flow(240, 180, truth, 6, 0.01, 0.08);
  std::mt19937_64 rng(99);
  std::bernoulli_distribution corrupt(0.05);
  std::uniform_real_distribution<double> comp(-5.0, 5.0);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x)
      if (corrupt(rng)) f.set(x, y, comp(rng), comp(rng));
  const auto e = estimate_foe(f, seeded(7));
  EXPECT_LE((e.foe.position - truth).norm(), 1.0);
  EXPECT_GE(e.inlier_fraction, 0.9);
  EXPECT_LE(e.inlier_fraction, 1.0);
  EXPECT_GE(e.rms_sin_deviation, 0.0);
}

TEST(EstimateFoe, NoiseFreeIsExact) {
  for (const Vec2& truth : {Vec2(50.0, 40.0), Vec2(-30.5, 12.25), Vec2(300.0, 220.0)}) {
    const auto e = estimate_foe(test::radial_flow(160, 120, truth, 2, 0.02, 0.1), seeded(3));
    EXPECT_LE((e.foe.position - truth).norm(), 1e-6) << truth.transpose();
    EXPECT_NEAR(e.inlier_fraction, 1.0, 1e-12);
  }
}

TEST(EstimateFoe, ContractingFieldAlsoWorks) {
  const Vec2 truth(70.0, 45.0);
  const FlowField f = test::radial_flow(140, 100, truth, 5, 0.02, 0.1).scaled(-1.0);
  EXPECT_LE((estimate_foe(f, seeded(1)).foe.position - truth).norm(), 1e-6);
}

TEST(EstimateFoe, DeterministicGivenSeed) {
  FlowField f = test::radial_flow(120, 90, Vec2(60.3, 44.1), 8, 0.01, 0.1);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> noise(-0.05, 0.05);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      const FlowVec v = f.uv(x, y);
      f.set(x, y, v.u + noise(rng), v.v + noise(rng));
    }
  const auto a = estimate_foe(f, seeded(11));
  const auto b = estimate_foe(f, seeded(11));
  EXPECT_EQ(a.foe.position, b.foe.position);
  EXPECT_EQ(a.inlier_fraction, b.inlier_fraction);
  EXPECT_EQ(a.rms_sin_deviation, b.rms_sin_deviation);
}

TEST(EstimateFoe, InsufficientFlow) {
  FlowField f(20, 20);
  for (int i = 0; i < 50; ++i) f.set(i % 20, i / 20, 1.0, 1.0);
  try {
    estimate_foe(f, seeded(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientFlow);
  }
  // Enough pixels, all below the magnitude floor.
  const FlowField slow = test::radial_flow(40, 40, Vec2(20, 20), 1, 0.0001, 0.001);
  EXPECT_THROW(estimate_foe(slow, seeded(0)), Error);
}

TEST(EstimateFoe, ParallelFlowIsDegenerate) {
  FlowField f(64, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) f.set(x, y, 2.0, 0.5);
  try {
    estimate_foe(f, seeded(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerate);
  }
}

TEST(EstimateFoe, RandomFlowIsDegenerate) {
  FlowField f(64, 48);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      const double a = angle(rng);
      f.set(x, y, 2.0 * std::cos(a), 2.0 * std::sin(a));
    }
  EXPECT_THROW(estimate_foe(f, seeded(0)), Error);
}

// Property: on slanted simulator scenes with a small moving object the estimate
// stays within 2 px of the FOE implied by the translation direction.
TEST(EstimateFoe, SlantedSceneMatchesTranslation) {
  const double deg = std::numbers::pi / 180.0;
  for (double angle : {10.0, -6.0}) {
    SceneConfig cfg;
    cfg.camera = CameraModel::centered(100.0, 200, 150);
    cfg.t_dir = Vec3(std::sin(angle * deg), 0.0, std::cos(angle * deg));
    cfg.speed = SpeedProfile::constant(2.0);
    cfg.dt = 0.05;
    cfg.static_points = {5000, 5.0, 30.0, 2.0};
    MoverSpec m;
    m.center = Vec3(1.0, 1.0, 10.0);
    m.half_extent = Vec3(0.5, 0.5, 0.2);
    m.world_velocity = Vec3(0.0, 3.0, 0.0);
    m.point_count = 150;
    cfg.movers = {m};
    cfg.seed = 12;
    const Scene scene = build_scene(cfg);
    const auto gt = analytic_flow(scene, 0.0);
    const auto e = estimate_foe(gt.flow, seeded(4));
    EXPECT_LE((e.foe.position - gt.foe->position).norm(), 2.0) << "angle " << angle;
  }
}

TEST(FoeParams, Validation) {
  FoeParams p;
  p.ransac_iters = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.inlier_sin_tol = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

}  // namespace
}  // namespace rinv

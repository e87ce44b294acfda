#include <gtest/gtest.h>

#include "rinv/eval.hpp"
#include "support.hpp"

namespace rinv {
namespace {

using test::fill_rect;

TEST(EvalMasks, IdenticalNonEmpty) {
  Mask m(20, 20, 0);
  fill_rect(m, 3, 3, 8, 9);
  const auto r = eval_masks({m}, {m});
  EXPECT_EQ(r.frames[0].precision, 1.0);
  EXPECT_EQ(r.frames[0].recall, 1.0);
  EXPECT_EQ(r.frames[0].iou, 1.0);
  EXPECT_EQ(r.frames[0].f1, 1.0);
}

TEST(EvalMasks, DisjointIsZero) {
  Mask a(20, 20, 0), b(20, 20, 0);
  fill_rect(a, 0, 0, 4, 4);
  fill_rect(b, 10, 10, 14, 14);
  const auto s = eval_masks({a}, {b}).frames[0];
  EXPECT_EQ(s.precision, 0.0);
  EXPECT_EQ(s.recall, 0.0);
  EXPECT_EQ(s.iou, 0.0);
  EXPECT_EQ(s.f1, 0.0);
}

TEST(EvalMasks, OverlappingBlocksGiveOneThird) {
  Mask pred(20, 12, 0), gt(20, 12, 0);
  fill_rect(pred, 0, 1, 9, 10);
  fill_rect(gt, 5, 1, 14, 10);
  const auto s = eval_masks({pred}, {gt}).frames[0];
  EXPECT_EQ(s.tp, 50);
  EXPECT_EQ(s.fp, 50);
  EXPECT_EQ(s.fn, 50);
  EXPECT_EQ(s.iou, 50.0 / 150.0);
  EXPECT_EQ(s.precision, 0.5);
  EXPECT_EQ(s.recall, 0.5);
  EXPECT_EQ(s.f1, 0.5);
}

TEST(ScoreCounts, EmptyCases) {
  const auto both_empty = score_counts(0, 0, 0);
  EXPECT_EQ(both_empty.precision, 1.0);
  EXPECT_EQ(both_empty.recall, 1.0);
  EXPECT_EQ(both_empty.iou, 1.0);
  EXPECT_EQ(both_empty.f1, 1.0);

  const auto missed = score_counts(0, 0, 10);
  EXPECT_EQ(missed.precision, 0.0);
  EXPECT_EQ(missed.recall, 0.0);
  EXPECT_EQ(missed.f1, 0.0);

  const auto spurious = score_counts(0, 7, 0);
  EXPECT_EQ(spurious.precision, 0.0);
  EXPECT_EQ(spurious.recall, 0.0);
  EXPECT_EQ(spurious.iou, 0.0);
}

TEST(ScoreCounts, MetricsInUnitIntervalAndF1Harmonic) {
  for (long tp = 0; tp < 6; ++tp)
    for (long fp = 0; fp < 6; ++fp)
      for (long fn = 0; fn < 6; ++fn) {
        const auto s = score_counts(tp, fp, fn);
        for (double v : {s.precision, s.recall, s.f1, s.iou}) {
          EXPECT_GE(v, 0.0);
          EXPECT_LE(v, 1.0);
        }
        if (s.precision + s.recall == 0.0) {
          EXPECT_EQ(s.f1, 0.0);
        } else {
          EXPECT_NEAR(s.f1, 2 * s.precision * s.recall / (s.precision + s.recall), 1e-15);
        }
      }
}

TEST(EvalMasks, ExclusionZoneSkipsPixels) {
  Mask pred(21, 21, 0), gt(21, 21, 0);
  fill_rect(pred, 8, 8, 12, 12);  // false positives only near the centre
  fill_rect(gt, 0, 0, 2, 2);
  fill_rect(pred, 0, 0, 2, 2);
  const auto plain = eval_masks({pred}, {gt});
  EXPECT_LT(plain.frames[0].precision, 1.0);
  const ExclusionZone zone{Vec2(10, 10), 4.0};
  const auto excluded = eval_masks({pred}, {gt}, zone);
  EXPECT_EQ(excluded.frames[0].precision, 1.0);
  EXPECT_EQ(excluded.frames[0].recall, 1.0);
  ASSERT_TRUE(excluded.exclusion.has_value());
  EXPECT_EQ(excluded.exclusion->radius_px, 4.0);
}

TEST(EvalMasks, MeansAndCounts) {
  Mask a(10, 10, 0), b(10, 10, 0);
  fill_rect(a, 0, 0, 4, 4);
  const auto r = eval_masks({a, a}, {a, b});
  EXPECT_EQ(r.frames_evaluated, 2);
  EXPECT_EQ(r.mean_precision, 0.5);
  EXPECT_EQ(r.mean_iou, 0.5);
}

TEST(EvalMasks, MismatchErrors) {
  Mask a(10, 10, 0), b(10, 9, 0);
  EXPECT_THROW(eval_masks({a}, {b}), Error);
  EXPECT_THROW(eval_masks({a, a}, {a}), Error);
}

}  // namespace
}  // namespace rinv

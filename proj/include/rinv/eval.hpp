// Pixel-level precision / recall / F1 / IoU of predicted against ground-truth masks.
#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "rinv/camera.hpp"
#include "rinv/core.hpp"

namespace rinv {

struct MaskScores {
  long tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0, iou = 0.0;
};

/// Disk around the FOE whose pixels are left out of the counts.
struct ExclusionZone {
  Vec2 center{0.0, 0.0};
  double radius_px = 0.0;
};

struct EvalReport {
  std::vector<MaskScores> frames;
  double mean_precision = 0.0, mean_recall = 0.0, mean_f1 = 0.0, mean_iou = 0.0;
  int frames_evaluated = 0;
  std::optional<ExclusionZone> exclusion;
};

inline MaskScores score_counts(long tp, long fp, long fn) {
  MaskScores s{tp, fp, fn};
  if (tp + fp == 0)
    s.precision = (tp + fn == 0) ? 1.0 : 0.0;
  else
    s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn == 0)
    s.recall = (tp + fp == 0) ? 1.0 : 0.0;
  else
    s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.f1 = (s.precision + s.recall == 0.0) ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  s.iou = (tp + fp + fn == 0) ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
  return s;
}

inline MaskScores score_masks(const Mask& pred, const Mask& gt, const std::optional<ExclusionZone>& exclusion = {}) {
  require_same_dims(pred, gt, "eval_masks");
  long tp = 0, fp = 0, fn = 0;
  for (int y = 0; y < pred.height(); ++y)
    for (int x = 0; x < pred.width(); ++x) {
      if (exclusion) {
        const double dx = x - exclusion->center.x(), dy = y - exclusion->center.y();
        if (std::hypot(dx, dy) <= exclusion->radius_px) continue;
      }
      const bool p = pred(x, y) != 0, g = gt(x, y) != 0;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
  return score_counts(tp, fp, fn);
}

inline void finalize_means(EvalReport& report) {
  report.frames_evaluated = static_cast<int>(report.frames.size());
  report.mean_precision = report.mean_recall = report.mean_f1 = report.mean_iou = 0.0;
  if (report.frames.empty()) return;
  for (const auto& s : report.frames) {
    report.mean_precision += s.precision;
    report.mean_recall += s.recall;
    report.mean_f1 += s.f1;
    report.mean_iou += s.iou;
  }
  const double n = static_cast<double>(report.frames.size());
  report.mean_precision /= n;
  report.mean_recall /= n;
  report.mean_f1 /= n;
  report.mean_iou /= n;
}

inline EvalReport eval_masks(const std::vector<Mask>& pred, const std::vector<Mask>& gt,
                             const std::optional<ExclusionZone>& exclusion = {}) {
  if (pred.size() != gt.size())
    throw Error(ErrorCode::kDimensionMismatch, "frame counts differ (" + std::to_string(pred.size()) + " vs " +
                                                   std::to_string(gt.size()) + ")");
  EvalReport report;
  report.exclusion = exclusion;
  for (std::size_t i = 0; i < pred.size(); ++i) report.frames.push_back(score_masks(pred[i], gt[i], exclusion));
  finalize_means(report);
  return report;
}

}  // namespace rinv

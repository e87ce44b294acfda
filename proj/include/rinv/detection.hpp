// Deviation thresholding, morphological cleanup and 8-connected labeling.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "rinv/camera.hpp"
#include "rinv/core.hpp"
#include "rinv/flow.hpp"
#include "rinv/invariant.hpp"

namespace rinv {

struct DetectionParams {
  double deviation_threshold = 0.2;
  double min_flow_mag = kDefaultMinFlowMag;
  int open_radius_px = 1;
  int close_radius_px = 2;
  int min_area_px = 25;

  void validate() const {
    if (!(deviation_threshold > 0.0 && deviation_threshold <= 1.0))
      throw ConfigError("detection.deviation_threshold", "must lie in (0, 1]");
    if (!(min_flow_mag > 0.0)) throw ConfigError("detection.min_flow_mag", "must be > 0");
    if (open_radius_px < 0) throw ConfigError("detection.open_radius_px", "must be >= 0");
    if (close_radius_px < 0) throw ConfigError("detection.close_radius_px", "must be >= 0");
    if (min_area_px < 1) throw ConfigError("detection.min_area_px", "must be >= 1");
  }
};

struct BoundingBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Component {
  int id = 0;
  long area_px = 0;
  BoundingBox bbox;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  friend bool operator==(const Component&, const Component&) = default;
};

struct DetectionResult {
  Mask mask;
  std::vector<Component> components;
  int frame_index = 0;
  friend bool operator==(const DetectionResult&, const DetectionResult&) = default;
};

inline Mask threshold_deviation(const DeviationImage& dev, const DetectionParams& params, const Exec& exec = {}) {
  params.validate();
  Mask out(dev.width(), dev.height(), 0);
  const int w = dev.width();
  const double t = params.deviation_threshold;
  for_rows(exec, dev.height(), [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      const double* v = dev.value.row(y);
      const std::uint8_t* ok = dev.valid.row(y);
      std::uint8_t* m = out.row(y);
      for (int x = 0; x < w; ++x) m[x] = static_cast<std::uint8_t>(ok[x] & (std::abs(v[x]) > t ? 1 : 0));
    }
  });
  return out;
}

namespace detail {

struct Offset {
  int dx, dy;
};

// Pixels whose centers lie strictly within radius + 1/2, so radius 1 is the 3x3 square.
inline std::vector<Offset> disk_offsets(int radius) {
  std::vector<Offset> out;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if ((dx * dx + dy * dy) * 4 < (2 * radius + 1) * (2 * radius + 1)) out.push_back({dx, dy});
  return out;
}

template <bool Dilate>
inline void combine_shifted(std::uint8_t* __restrict dst, const std::uint8_t* __restrict src, int w, int shift) {
  const int xa = std::max(0, -shift), xb = std::min(w, w - shift);
  for (int x = xa; x < xb; ++x) {
    if constexpr (Dilate)
      dst[x] |= src[x + shift];
    else
      dst[x] &= src[x + shift];
  }
}

// The disk is a stack of horizontal runs, one per dy. Each distinct run is a
// 1-D pass over the rows, then one vertical pass per dy combines them.
// Out-of-image samples are neutral: ignored by erosion and by dilation, which
// keeps closing extensive and opening anti-extensive at the borders.
template <bool Dilate>
inline Mask morph_spans(const Mask& in, int radius, const Exec& exec) {
  const int w = in.width(), h = in.height();
  std::vector<int> half(static_cast<std::size_t>(2 * radius + 1), 0);
  for (const Offset& o : disk_offsets(radius)) half[o.dy + radius] = std::max(half[o.dy + radius], o.dx);

  std::vector<Mask> spans(static_cast<std::size_t>(radius + 1));
  spans[0] = in;
  const int widest = *std::max_element(half.begin(), half.end());
  for (int a = 1; a <= widest; ++a) {
    spans[a] = spans[a - 1];
    Mask& cur = spans[a];
    for_rows(exec, h, [&](int y0, int y1) {
      for (int y = y0; y < y1; ++y) {
        combine_shifted<Dilate>(cur.row(y), in.row(y), w, -a);
        combine_shifted<Dilate>(cur.row(y), in.row(y), w, a);
      }
    });
  }

  Mask out(w, h, Dilate ? 0 : 1);
  for_rows(exec, h, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y)
      for (int dy = -radius; dy <= radius; ++dy) {
        const int sy = y + dy;
        if (sy < 0 || sy >= h) continue;
        combine_shifted<Dilate>(out.row(y), spans[half[dy + radius]].row(sy), w, 0);
      }
  });
  return out;
}

inline Mask morph(const Mask& in, int radius, bool dilate, const Exec& exec) {
  if (radius <= 0) return in;
  return dilate ? morph_spans<true>(in, radius, exec) : morph_spans<false>(in, radius, exec);
}

struct Run {
  int y, x0, x1;  // [x0, x1)
};

inline int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace detail

inline Mask erode(const Mask& in, int radius, const Exec& exec = {}) { return detail::morph(in, radius, false, exec); }
inline Mask dilate(const Mask& in, int radius, const Exec& exec = {}) { return detail::morph(in, radius, true, exec); }

/// Labels 8-connected regions, keeps those with area >= min_area, and orders
/// them by area descending then (y0, x0) ascending. Ids are 1-based in that order.
inline DetectionResult label_components(const Mask& mask, int min_area, const Exec& exec = {}) {
  const int w = mask.width(), h = mask.height();
  std::vector<std::vector<detail::Run>> row_runs(static_cast<std::size_t>(h));
  for_rows(exec, h, [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      const std::uint8_t* m = mask.row(y);
      auto& runs = row_runs[y];
      int x = 0;
      while (x < w) {
        const auto* hit = std::find(m + x, m + w, std::uint8_t{1});
        if (hit == m + w) break;
        const int start = static_cast<int>(hit - m);
        const auto* end = std::find(hit, m + w, std::uint8_t{0});
        x = static_cast<int>(end - m);
        runs.push_back({y, start, x});
      }
    }
  });

  std::vector<detail::Run> runs;
  std::vector<std::size_t> row_start(static_cast<std::size_t>(h) + 1, 0);
  for (int y = 0; y < h; ++y) {
    row_start[y] = runs.size();
    runs.insert(runs.end(), row_runs[y].begin(), row_runs[y].end());
  }
  row_start[h] = runs.size();

  std::vector<int> parent(runs.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (int y = 1; y < h; ++y) {
    std::size_t j = row_start[y - 1];
    for (std::size_t i = row_start[y]; i < row_start[y + 1]; ++i) {
      const auto& cur = runs[i];
      while (j < row_start[y] && runs[j].x1 < cur.x0) ++j;  // ends before cur.x0 - 1
      for (std::size_t k = j; k < row_start[y] && runs[k].x0 <= cur.x1; ++k) {
        const int a = detail::find_root(parent, static_cast<int>(i));
        const int b = detail::find_root(parent, static_cast<int>(k));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }

  struct Acc {
    long area = 0;
    double sx = 0.0, sy = 0.0;
    BoundingBox box{1 << 30, 1 << 30, -1, -1};
  };
  std::vector<int> slot(runs.size(), -1);
  std::vector<Acc> accs;
  std::vector<int> run_comp(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const int root = detail::find_root(parent, static_cast<int>(i));
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(accs.size());
      accs.emplace_back();
    }
    const int c = slot[root];
    run_comp[i] = c;
    const auto& run = runs[i];
    Acc& a = accs[c];
    const long n = run.x1 - run.x0;
    a.area += n;
    a.sx += 0.5 * static_cast<double>(run.x0 + run.x1 - 1) * n;
    a.sy += static_cast<double>(run.y) * n;
    a.box.x0 = std::min(a.box.x0, run.x0);
    a.box.x1 = std::max(a.box.x1, run.x1 - 1);
    a.box.y0 = std::min(a.box.y0, run.y);
    a.box.y1 = std::max(a.box.y1, run.y);
  }

  std::vector<int> order;
  for (int c = 0; c < static_cast<int>(accs.size()); ++c)
    if (accs[c].area >= min_area) order.push_back(c);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Acc& p = accs[a];
    const Acc& q = accs[b];
    if (p.area != q.area) return p.area > q.area;
    if (p.box.y0 != q.box.y0) return p.box.y0 < q.box.y0;
    return p.box.x0 < q.box.x0;
  });

  DetectionResult out;
  out.mask = Mask(w, h, 0);
  std::vector<char> keep(accs.size(), 0);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Acc& a = accs[order[rank]];
    keep[order[rank]] = 1;
    out.components.push_back(Component{static_cast<int>(rank) + 1, a.area, a.box, a.sx / a.area, a.sy / a.area});
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!keep[run_comp[i]]) continue;
    std::fill(out.mask.row(runs[i].y) + runs[i].x0, out.mask.row(runs[i].y) + runs[i].x1, std::uint8_t{1});
  }
  return out;
}

/// Opening, then closing, then labeling with the area filter.
inline DetectionResult clean_mask(const Mask& raw, const DetectionParams& params, const Exec& exec = {}) {
  params.validate();
  Mask m = dilate(erode(raw, params.open_radius_px, exec), params.open_radius_px, exec);
  m = erode(dilate(m, params.close_radius_px, exec), params.close_radius_px, exec);
  return label_components(m, params.min_area_px, exec);
}

inline DetectionResult detect(const FlowField& flow, const LookupImage& lookup, const DetectionParams& params = {},
                              int frame_index = 0, const Exec& exec = {}) {
  params.validate();
  const DeviationImage dev = deviation_image(flow, lookup, params.min_flow_mag, exec);
  DetectionResult out = clean_mask(threshold_deviation(dev, params, exec), params, exec);
  out.frame_index = frame_index;
  return out;
}

}  // namespace rinv

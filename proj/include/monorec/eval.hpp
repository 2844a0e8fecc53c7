#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "monorec/grid.hpp"
#include "monorec/losses.hpp"
#include "monorec/maskgen.hpp"

namespace monorec {

inline constexpr double kDefaultDepthCap = 80.0;

struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t count = 0;
};

/// Metric depth from inverse depth; non-positive entries map to 0 (invalid).
inline Grid<double> inverse_to_depth(const Grid<double>& inv_depth) {
  Grid<double> out(inv_depth.width(), inv_depth.height(), 1, 0.0);
  for (std::size_t k = 0; k < inv_depth.data().size(); ++k) {
    const double d = inv_depth.data()[k];
    if (d > 0.0 && std::isfinite(d)) out.data()[k] = 1.0 / d;
  }
  return out;
}

/// Standard depth error metrics over pixels where 0 < gt <= cap (and the
/// optional mask is set). `pred_inv_depth` must be positive there.
inline DepthMetrics depth_metrics(const Grid<double>& pred_inv_depth, const Grid<double>& gt_depth,
                                  double cap = kDefaultDepthCap, const Mask* mask = nullptr) {
  require_same_size(pred_inv_depth, gt_depth, "depth_metrics");
  if (mask) require_same_size(*mask, gt_depth, "depth_metrics mask");
  if (!(cap > 0.0)) throw std::invalid_argument("depth_metrics: cap must be positive");
  double abs_rel = 0.0, sq_rel = 0.0, sq = 0.0, sq_log = 0.0;
  std::size_t d1 = 0, d2 = 0, d3 = 0, n = 0;
  for (std::size_t k = 0; k < gt_depth.data().size(); ++k) {
    const double g = gt_depth.data()[k];
    if (!(g > 0.0) || !std::isfinite(g) || g > cap) continue;
    if (mask && !mask->data()[k]) continue;
    const double inv = pred_inv_depth.data()[k];
    if (!(inv > 0.0)) throw std::domain_error("depth_metrics: non-positive predicted inverse depth");
    const double p = 1.0 / inv;
    const double diff = p - g;
    abs_rel += std::abs(diff) / g;
    sq_rel += diff * diff / g;
    sq += diff * diff;
    const double dl = std::log(p) - std::log(g);
    sq_log += dl * dl;
    const double ratio = std::max(p / g, g / p);
    d1 += ratio < 1.25;
    d2 += ratio < 1.25 * 1.25;
    d3 += ratio < 1.25 * 1.25 * 1.25;
    ++n;
  }
  if (n == 0) throw std::domain_error("depth_metrics: no valid ground-truth pixels");
  const double inv_n = 1.0 / static_cast<double>(n);
  return {abs_rel * inv_n, sq_rel * inv_n, std::sqrt(sq * inv_n), std::sqrt(sq_log * inv_n),
          d1 * inv_n, d2 * inv_n, d3 * inv_n, n};
}

inline constexpr double kDefaultTextureStd = 0.01;

/// Interior pixels whose 3x3 gray-level standard deviation reaches min_std.
inline Mask textured_pixels(const Image& image, double min_std = kDefaultTextureStd) {
  const Image g = to_gray(image);
  Mask out(g.width(), g.height(), 1, 0);
  for (int y = 1; y + 1 < g.height(); ++y) {
    for (int x = 1; x + 1 < g.width(); ++x) {
      double s = 0.0, s2 = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const double v = g(x + dx, y + dy);
          s += v;
          s2 += v * v;
        }
      }
      const double mean = s / 9.0;
      out(x, y) = std::sqrt(std::max(0.0, s2 / 9.0 - mean * mean)) >= min_std ? 1 : 0;
    }
  }
  return out;
}

/// Share of masked pixels whose inverse depth lies within `steps` sweep steps of GT.
inline double within_steps_fraction(const Grid<double>& pred_inv_depth, const Grid<double>& gt_inv_depth,
                                    double step_size, const Mask& mask, double steps = 1.0) {
  require_same_size(pred_inv_depth, gt_inv_depth, "within_steps_fraction");
  require_same_size(mask, gt_inv_depth, "within_steps_fraction mask");
  std::size_t n = 0, ok = 0;
  for (std::size_t k = 0; k < mask.data().size(); ++k) {
    if (!mask.data()[k]) continue;
    ++n;
    ok += std::abs(pred_inv_depth.data()[k] - gt_inv_depth.data()[k]) <= steps * step_size;
  }
  if (n == 0) throw std::domain_error("within_steps_fraction: empty mask");
  return static_cast<double>(ok) / static_cast<double>(n);
}

struct MaskPR {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

inline MaskPR mask_pr(const MovingMask& pred, const Mask& gt, double threshold = kMaskBinarizeThreshold) {
  require_same_size(pred, gt, "mask_pr");
  MaskPR r;
  for (std::size_t k = 0; k < gt.data().size(); ++k) {
    const bool p = pred.data()[k] >= threshold;
    const bool g = gt.data()[k] != 0;
    r.tp += p && g;
    r.fp += p && !g;
    r.fn += !p && g;
  }
  r.precision = r.tp + r.fp == 0 ? 1.0 : static_cast<double>(r.tp) / (r.tp + r.fp);
  r.recall = r.tp + r.fn == 0 ? 1.0 : static_cast<double>(r.tp) / (r.tp + r.fn);
  const double sum = r.precision + r.recall;
  r.f1 = sum > 0.0 ? 2.0 * r.precision * r.recall / sum : 0.0;
  return r;
}

inline std::string depth_metrics_csv_header() {
  return "scene,variant,abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3,count";
}

inline std::string depth_metrics_csv_row(const std::string& scene, const std::string& variant,
                                         const DepthMetrics& m) {
  return scene + "," + variant + "," + format_number(m.abs_rel) + "," + format_number(m.sq_rel) + "," +
         format_number(m.rmse) + "," + format_number(m.rmse_log) + "," + format_number(m.delta1) + "," +
         format_number(m.delta2) + "," + format_number(m.delta3) + "," + std::to_string(m.count);
}

inline std::string mask_pr_csv_header() { return "scene,variant,precision,recall,f1,tp,fp,fn"; }

inline std::string mask_pr_csv_row(const std::string& scene, const std::string& variant, const MaskPR& r) {
  return scene + "," + variant + "," + format_number(r.precision) + "," + format_number(r.recall) + "," +
         format_number(r.f1) + "," + std::to_string(r.tp) + "," + std::to_string(r.fp) + "," +
         std::to_string(r.fn);
}

}  // namespace monorec

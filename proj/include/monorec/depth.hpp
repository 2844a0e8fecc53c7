#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "monorec/costvolume.hpp"
#include "monorec/geometry.hpp"
#include "monorec/grid.hpp"

namespace monorec {

struct InverseDepthMap {
  Grid<double> values;
  Grid<double> confidence;
  DepthRange range;
};

struct InterpolationFactorMap {
  Grid<double> factors;
  DepthRange range;
};

inline InverseDepthMap factor_to_inv_depth(const InterpolationFactorMap& f) {
  f.range.validate();
  InverseDepthMap out{Grid<double>(f.factors.width(), f.factors.height()),
                      Grid<double>(f.factors.width(), f.factors.height(), 1, 1.0), f.range};
  const double span = f.range.d_max - f.range.d_min;
  for (std::size_t k = 0; k < f.factors.data().size(); ++k) {
    const double v = f.factors.data()[k];
    if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error("factor_to_inv_depth: factor outside [0, 1]");
    out.values.data()[k] = f.range.d_min + v * span;
  }
  return out;
}

inline InterpolationFactorMap inv_depth_to_factor(const InverseDepthMap& d) {
  d.range.validate();
  InterpolationFactorMap out{Grid<double>(d.values.width(), d.values.height()), d.range};
  const double span = d.range.d_max - d.range.d_min;
  for (std::size_t k = 0; k < d.values.data().size(); ++k) {
    const double v = d.values.data()[k];
    if (!(v >= d.range.d_min && v <= d.range.d_max)) {
      throw std::domain_error("inv_depth_to_factor: inverse depth outside range");
    }
    out.factors.data()[k] = (v - d.range.d_min) / span;
  }
  return out;
}

/// Index of the best valid step per pixel, -1 where no step is valid.
/// Ties resolve to the lowest index.
inline Grid<int> argmax_steps(const CostVolume& volume) {
  Grid<int> out(volume.width(), volume.height(), 1, -1);
  for (int y = 0; y < volume.height(); ++y) {
    for (int x = 0; x < volume.width(); ++x) {
      int best = -1;
      for (int i = 0; i < volume.steps(); ++i) {
        if (volume.count(x, y, i) == 0) continue;
        if (best < 0 || volume.score(x, y, i) > volume.score(x, y, best)) best = i;
      }
      out(x, y) = best;
    }
  }
  return out;
}

/// Winner-take-all with a three-point parabola around the peak.
inline InverseDepthMap wta_depth(const CostVolume& volume) {
  const auto& range = volume.range;
  const std::vector<double> steps = depth_steps(range);
  const double spacing = range.step_size();
  const Grid<int> best = argmax_steps(volume);
  InverseDepthMap out{Grid<double>(volume.width(), volume.height(), 1, range.d_min),
                      Grid<double>(volume.width(), volume.height(), 1, 0.0), range};
  for (int y = 0; y < volume.height(); ++y) {
    for (int x = 0; x < volume.width(); ++x) {
      const int i = best(x, y);
      if (i < 0) continue;
      const double s0 = volume.score(x, y, i);
      double offset = 0.0;
      if (i > 0 && i + 1 < volume.steps() && volume.count(x, y, i - 1) > 0 &&
          volume.count(x, y, i + 1) > 0) {
        const double sm = volume.score(x, y, i - 1);
        const double sp = volume.score(x, y, i + 1);
        const double curvature = sm - 2.0 * s0 + sp;
        if (curvature < 0.0) offset = std::clamp(0.5 * (sm - sp) / curvature, -0.5, 0.5);
      }
      out.values(x, y) = std::clamp(steps[i] + offset * spacing, range.d_min, range.d_max);
      out.confidence(x, y) = (s0 + 1.0) * 0.5;
    }
  }
  return out;
}

struct ColoredPoint {
  Eigen::Vector3d xyz;
  std::array<std::uint8_t, 3> rgb;
};

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

/// World-space points for every pixel with confidence >= min_confidence.
inline std::vector<ColoredPoint> depth_to_pointcloud(const InverseDepthMap& depth, const Frame& key,
                                                     double min_confidence) {
  require_same_size(depth.values, key.image, "depth_to_pointcloud");
  const PoseSE3 cam_to_world = key.pose.inverse();
  std::vector<ColoredPoint> points;
  for (int y = 0; y < key.image.height(); ++y) {
    for (int x = 0; x < key.image.width(); ++x) {
      if (!(depth.confidence(x, y) >= min_confidence) || !(depth.values(x, y) > 0.0)) continue;
      const Eigen::Vector3d p = backproject(key.intrinsics, {x, y}, depth.values(x, y));
      ColoredPoint pt{cam_to_world * p, {}};
      for (int c = 0; c < 3; ++c) {
        pt.rgb[c] = to_byte(key.image(x, y, key.image.channels() == 3 ? c : 0));
      }
      points.push_back(pt);
    }
  }
  return points;
}

}  // namespace monorec

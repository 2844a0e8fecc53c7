#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "monorec/geometry.hpp"
#include "monorec/grid.hpp"
#include "monorec/parallel.hpp"
#include "monorec/photometric.hpp"

namespace monorec {

/// Inverse-depth sweep bounds (1/m) and number of hypotheses.
struct DepthRange {
  double d_min = 0.05;
  double d_max = 0.5;
  int steps = 32;

  void validate() const {
    if (steps < 2) throw std::invalid_argument("depth range: need at least 2 steps");
    if (!(d_min > 0.0 && d_min < d_max)) {
      throw std::invalid_argument("depth range: require 0 < d_min < d_max");
    }
  }

  double step_size() const { return (d_max - d_min) / (steps - 1); }

  bool operator==(const DepthRange&) const = default;
};

/// Linear spacing in inverse depth from d_min to d_max, endpoints exact.
inline std::vector<double> depth_steps(const DepthRange& range) {
  range.validate();
  std::vector<double> out(range.steps);
  const int last = range.steps - 1;
  for (int i = 0; i < range.steps; ++i) {
    out[i] = range.d_min + (static_cast<double>(i) / last) * (range.d_max - range.d_min);
  }
  out.back() = range.d_max;
  return out;
}

enum class VolumeKind { aggregated, per_pair, static_stereo };

inline const char* to_string(VolumeKind kind) {
  switch (kind) {
    case VolumeKind::aggregated: return "aggregated";
    case VolumeKind::per_pair: return "per_pair";
    case VolumeKind::static_stereo: return "static_stereo";
  }
  return "unknown";
}

inline VolumeKind volume_kind_from_string(const std::string& s) {
  if (s == "aggregated") return VolumeKind::aggregated;
  if (s == "per_pair") return VolumeKind::per_pair;
  if (s == "static_stereo") return VolumeKind::static_stereo;
  throw std::invalid_argument("unknown volume kind '" + s + "'");
}

/// H x W x M stack laid out step-major: index (step * H + y) * W + x.
template <typename T>
struct StepStack {
  int width = 0;
  int height = 0;
  int steps = 0;
  std::vector<T> data;

  StepStack() = default;
  StepStack(int w, int h, int m, T fill = T{})
      : width(w), height(h), steps(m), data(static_cast<std::size_t>(w) * h * m, fill) {}

  std::size_t index(int x, int y, int step) const {
    return (static_cast<std::size_t>(step) * height + y) * width + x;
  }
  T& at(int x, int y, int step) { return data[index(x, y, step)]; }
  const T& at(int x, int y, int step) const { return data[index(x, y, step)]; }
};

/// Photometric errors of one non-key frame across the sweep, with validity.
struct PeStack {
  int frame_index = 0;
  StepStack<double> pe;
  StepStack<std::uint8_t> valid;

  int width() const { return pe.width; }
  int height() const { return pe.height; }
  int steps() const { return pe.steps; }
};

/// Consistency scores in [-1, 1] with per-cell counts of contributing frames.
struct CostVolume {
  DepthRange range;
  VolumeKind kind = VolumeKind::aggregated;
  StepStack<double> scores;
  StepStack<std::uint16_t> valid_counts;

  int width() const { return scores.width; }
  int height() const { return scores.height; }
  int steps() const { return scores.steps; }
  double score(int x, int y, int step) const { return scores.at(x, y, step); }
  int count(int x, int y, int step) const { return valid_counts.at(x, y, step); }
};

inline PeStack pair_pe_stack(const Frame& key, const Frame& other, const DepthRange& range,
                             int frame_index = 0) {
  key.validate();
  other.validate();
  if (key.image.channels() != other.image.channels()) {
    throw DimensionError("pair_pe_stack: channel mismatch between frames");
  }
  const std::vector<double> steps = depth_steps(range);
  const int w = key.intrinsics.width;
  const int h = key.intrinsics.height;
  PeStack out{frame_index, StepStack<double>(w, h, range.steps, 1.0),
              StepStack<std::uint8_t>(w, h, range.steps, 0)};
  parallel_for(range.steps, [&](int i) {
    const WarpResult<double> warped = warp_to_keyframe(other, key, steps[i]);
    const ErrorMap<double> pe = pe_map(warped, key.image);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out.pe.at(x, y, i) = pe.values(x, y);
        out.valid.at(x, y, i) = pe.valid(x, y);
      }
    }
  });
  return out;
}

inline constexpr double kDefaultWeightSharpness = 10.0;

/// Per-pixel confidence of one frame: 1 minus the mean of
/// exp(-alpha_w (pe(d) - pe(d*))^2) over the valid non-optimal steps.
inline Grid<double> frame_weight(const PeStack& stack, double alpha_w = kDefaultWeightSharpness) {
  if (stack.steps() < 2) throw std::invalid_argument("frame_weight: need at least 2 steps");
  Grid<double> w(stack.width(), stack.height(), 1, 0.0);
  for (int y = 0; y < stack.height(); ++y) {
    for (int x = 0; x < stack.width(); ++x) {
      int best = -1;
      int n_valid = 0;
      for (int i = 0; i < stack.steps(); ++i) {
        if (!stack.valid.at(x, y, i)) continue;
        ++n_valid;
        if (best < 0 || stack.pe.at(x, y, i) < stack.pe.at(x, y, best)) best = i;
      }
      if (n_valid < 2) continue;
      const double pe_best = stack.pe.at(x, y, best);
      double sum = 0.0;
      for (int i = 0; i < stack.steps(); ++i) {
        if (i == best || !stack.valid.at(x, y, i)) continue;
        const double diff = stack.pe.at(x, y, i) - pe_best;
        sum += std::exp(-alpha_w * diff * diff);
      }
      w(x, y) = std::clamp(1.0 - sum / (n_valid - 1), 0.0, 1.0);
    }
  }
  return w;
}

struct FrameEvidence {
  PeStack stack;
  Grid<double> weight;
};

inline constexpr double kMinWeightSum = 1e-12;

/// Weighted consensus over frames, summed in ascending frame-index order.
inline CostVolume aggregate(std::vector<FrameEvidence> frames, const DepthRange& range) {
  if (frames.empty()) throw std::invalid_argument("aggregate: no non-key frames");
  std::stable_sort(frames.begin(), frames.end(), [](const FrameEvidence& a, const FrameEvidence& b) {
    return a.stack.frame_index < b.stack.frame_index;
  });
  const int w = frames.front().stack.width();
  const int h = frames.front().stack.height();
  const int m = frames.front().stack.steps();
  if (m != range.steps) throw DimensionError("aggregate: stack depth does not match range");
  for (const auto& f : frames) {
    if (f.stack.width() != w || f.stack.height() != h || f.stack.steps() != m ||
        f.weight.width() != w || f.weight.height() != h) {
      throw DimensionError("aggregate: frame evidence shapes differ");
    }
  }
  CostVolume out{range, VolumeKind::aggregated, StepStack<double>(w, h, m, 0.0),
                 StepStack<std::uint16_t>(w, h, m, 0)};
  parallel_for(m, [&](int i) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double weighted = 0.0;
        double weight_sum = 0.0;
        int count = 0;
        for (const auto& f : frames) {
          if (!f.stack.valid.at(x, y, i)) continue;
          weighted += f.stack.pe.at(x, y, i) * f.weight(x, y);
          weight_sum += f.weight(x, y);
          ++count;
        }
        if (count == 0 || weight_sum < kMinWeightSum) continue;
        out.scores.at(x, y, i) = std::clamp(1.0 - 2.0 * weighted / weight_sum, -1.0, 1.0);
        out.valid_counts.at(x, y, i) = static_cast<std::uint16_t>(count);
      }
    }
  });
  return out;
}

/// Single-frame volume C_t'. With one frame the weight cancels, so scores are
/// 1 - 2 pe wherever the warp is valid.
inline CostVolume single_frame_volume(const PeStack& stack, const DepthRange& range,
                                      VolumeKind kind = VolumeKind::per_pair) {
  if (stack.steps() != range.steps) throw DimensionError("single_frame_volume: depth mismatch");
  CostVolume out{range, kind, StepStack<double>(stack.width(), stack.height(), stack.steps(), 0.0),
                 StepStack<std::uint16_t>(stack.width(), stack.height(), stack.steps(), 0)};
  for (std::size_t k = 0; k < stack.pe.data.size(); ++k) {
    if (!stack.valid.data[k]) continue;
    out.scores.data[k] = std::clamp(1.0 - 2.0 * stack.pe.data[k], -1.0, 1.0);
    out.valid_counts.data[k] = 1;
  }
  return out;
}

/// Aggregated volume of `key` against `others`; frame indices follow the
/// order of `others` unless given explicitly.
inline CostVolume build_cost_volume(const Frame& key, const std::vector<Frame>& others,
                                    const DepthRange& range,
                                    double alpha_w = kDefaultWeightSharpness,
                                    std::vector<int> frame_indices = {}) {
  if (others.empty()) throw std::invalid_argument("build_cost_volume: no non-key frames");
  if (frame_indices.empty()) {
    frame_indices.resize(others.size());
    std::iota(frame_indices.begin(), frame_indices.end(), 0);
  }
  if (frame_indices.size() != others.size()) {
    throw std::invalid_argument("build_cost_volume: frame index list size mismatch");
  }
  std::vector<FrameEvidence> evidence;
  evidence.reserve(others.size());
  for (std::size_t k = 0; k < others.size(); ++k) {
    PeStack stack = pair_pe_stack(key, others[k], range, frame_indices[k]);
    Grid<double> weight = frame_weight(stack, alpha_w);
    evidence.push_back({std::move(stack), std::move(weight)});
  }
  return aggregate(std::move(evidence), range);
}

/// Scales every step by (1 - mask); a fully moving pixel ends at the neutral 0.
inline CostVolume apply_mask(CostVolume volume, const Grid<double>& mask) {
  if (mask.width() != volume.width() || mask.height() != volume.height()) {
    throw DimensionError("apply_mask: mask does not match volume size");
  }
  for (int i = 0; i < volume.steps(); ++i) {
    for (int y = 0; y < volume.height(); ++y) {
      for (int x = 0; x < volume.width(); ++x) {
        volume.scores.at(x, y, i) *= 1.0 - mask(x, y);
      }
    }
  }
  return volume;
}

}  // namespace monorec

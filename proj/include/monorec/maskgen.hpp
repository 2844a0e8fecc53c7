#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "monorec/geometry.hpp"
#include "monorec/grid.hpp"
#include "monorec/photometric.hpp"

namespace monorec {

/// Per-pixel moving-object probability in [0, 1].
using MovingMask = Grid<double>;

inline constexpr double kMaskBinarizeThreshold = 0.5;

inline Mask binarize(const MovingMask& mask, double threshold = kMaskBinarizeThreshold) {
  Mask out(mask.width(), mask.height(), 1, 0);
  for (std::size_t k = 0; k < mask.data().size(); ++k) {
    out.data()[k] = mask.data()[k] >= threshold ? 1 : 0;
  }
  return out;
}

inline MovingMask to_probability(const Mask& mask) {
  MovingMask out(mask.width(), mask.height(), 1, 0.0);
  for (std::size_t k = 0; k < mask.data().size(); ++k) out.data()[k] = mask.data()[k] ? 1.0 : 0.0;
  return out;
}

/// One segmented object instance of a movable class.
struct InstanceMask {
  int frame = 0;
  int id = 0;
  std::string label;
  Mask pixels;

  std::size_t area() const {
    return static_cast<std::size_t>(std::count_if(pixels.data().begin(), pixels.data().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
  }
};

/// The three inconsistency cues used to flag a pixel as moving.
struct PixelMetrics {
  Grid<double> stereo_error;    // static-stereo pe under the temporal depth
  Grid<double> temporal_error;  // mean temporal pe under the static-stereo depth
  Grid<double> depth_ratio;     // max(D_t / D_s, D_s / D_t)
  Mask stereo_valid;
  Mask temporal_valid;
  Mask ratio_valid;
};

/// Keyframe bundle as seen by mask generation.
struct MaskGenFrames {
  Frame key;
  std::vector<Frame> temporal;
  std::optional<Frame> stereo;
};

inline PixelMetrics pixel_metrics(const MaskGenFrames& in, const Grid<double>& depth_temporal,
                                  const Grid<double>& depth_stereo) {
  if (!in.stereo) throw std::invalid_argument("pixel_metrics: missing static stereo frame");
  require_same_size(depth_temporal, in.key.image, "pixel_metrics temporal depth");
  require_same_size(depth_stereo, in.key.image, "pixel_metrics stereo depth");
  const int w = in.key.image.width();
  const int h = in.key.image.height();
  PixelMetrics m{Grid<double>(w, h, 1, 1.0), Grid<double>(w, h, 1, 1.0), Grid<double>(w, h, 1, 1.0),
                 Mask(w, h, 1, 0), Mask(w, h, 1, 0), Mask(w, h, 1, 0)};

  const ErrorMap<double> stereo_pe =
      pe_map(warp_to_keyframe(*in.stereo, in.key, depth_temporal), in.key.image);
  m.stereo_error = stereo_pe.values;
  m.stereo_valid = stereo_pe.valid;

  Grid<double> sum(w, h, 1, 0.0);
  Grid<int> n(w, h, 1, 0);
  for (const Frame& f : in.temporal) {
    const ErrorMap<double> pe = pe_map(warp_to_keyframe(f, in.key, depth_stereo), in.key.image);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!pe.valid(x, y)) continue;
        sum(x, y) += pe.values(x, y);
        ++n(x, y);
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (n(x, y) > 0) {
        m.temporal_error(x, y) = sum(x, y) / n(x, y);
        m.temporal_valid(x, y) = 1;
      }
      const double dt = depth_temporal(x, y);
      const double ds = depth_stereo(x, y);
      if (dt > 0.0 && ds > 0.0) {
        m.depth_ratio(x, y) = std::max(dt / ds, ds / dt);
        m.ratio_valid(x, y) = 1;
      }
    }
  }
  return m;
}

struct MovingThresholds {
  double stereo_error = 0.3;
  double temporal_error = 0.25;
  double depth_ratio = 1.5;

  void validate() const {
    if (!(stereo_error > 0.0 && temporal_error > 0.0 && depth_ratio > 0.0)) {
      throw std::invalid_argument("moving thresholds must be positive");
    }
  }
};

/// A pixel moves when at least two of its three cues strictly exceed their
/// thresholds. Invalid cues never count as exceeded.
inline Mask classify_moving_pixels(const PixelMetrics& m, const MovingThresholds& t) {
  t.validate();
  Mask out(m.depth_ratio.width(), m.depth_ratio.height(), 1, 0);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const int votes = (m.stereo_valid(x, y) && m.stereo_error(x, y) > t.stereo_error) +
                        (m.temporal_valid(x, y) && m.temporal_error(x, y) > t.temporal_error) +
                        (m.ratio_valid(x, y) && m.depth_ratio(x, y) > t.depth_ratio);
      out(x, y) = votes >= 2 ? 1 : 0;
    }
  }
  return out;
}

inline double iou(const Mask& a, const Mask& b) {
  require_same_size(a, b, "iou");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t k = 0; k < a.data().size(); ++k) {
    const bool pa = a.data()[k] != 0;
    const bool pb = b.data()[k] != 0;
    inter += pa && pb;
    uni += pa || pb;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline constexpr double kDefaultMatchIou = 0.25;
inline constexpr double kDefaultMovingFraction = 0.40;

/// Instance at frame t with its matches in the previous and next frames.
struct InstanceChain {
  std::size_t current = 0;
  std::optional<std::size_t> previous;
  std::optional<std::size_t> next;

  std::size_t length() const { return 1 + previous.has_value() + next.has_value(); }
};

namespace detail {

/// One-to-one greedy assignment by descending IoU among same-class pairs.
inline std::vector<std::optional<std::size_t>> greedy_match(const std::vector<InstanceMask>& from,
                                                            const std::vector<InstanceMask>& to,
                                                            double min_iou) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i].area() == 0) continue;
    for (std::size_t j = 0; j < to.size(); ++j) {
      if (to[j].area() == 0 || from[i].label != to[j].label) continue;
      const double v = iou(from[i].pixels, to[j].pixels);
      if (v >= min_iou) pairs.emplace_back(v, i, j);
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<std::optional<std::size_t>> match(from.size());
  std::vector<bool> taken(to.size(), false);
  for (const auto& [v, i, j] : pairs) {
    if (match[i] || taken[j]) continue;
    match[i] = j;
    taken[j] = true;
  }
  return match;
}

}  // namespace detail

/// Chains every non-empty instance at t to its best same-class neighbors.
inline std::vector<InstanceChain> match_instances(const std::vector<InstanceMask>& previous,
                                                  const std::vector<InstanceMask>& current,
                                                  const std::vector<InstanceMask>& next,
                                                  double min_iou = kDefaultMatchIou) {
  const auto to_prev = detail::greedy_match(current, previous, min_iou);
  const auto to_next = detail::greedy_match(current, next, min_iou);
  std::vector<InstanceChain> chains;
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (current[i].area() == 0) continue;
    chains.push_back({i, to_prev[i], to_next[i]});
  }
  return chains;
}

/// Share of an instance's pixels flagged in `moving`.
inline double moving_fraction(const InstanceMask& instance, const Mask& moving) {
  require_same_size(instance.pixels, moving, "moving_fraction");
  std::size_t area = 0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < moving.data().size(); ++k) {
    if (!instance.pixels.data()[k]) continue;
    ++area;
    hits += moving.data()[k] != 0;
  }
  return area == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(area);
}

inline bool instance_moving_decision(const std::vector<double>& fractions,
                                     double min_fraction = kDefaultMovingFraction) {
  if (fractions.empty()) return false;
  double sum = 0.0;
  for (double f : fractions) sum += f;
  return sum / static_cast<double>(fractions.size()) > min_fraction;
}

/// Instances and (optional) moving-pixel maps of one frame.
struct FrameInstances {
  std::vector<InstanceMask> instances;
  const Mask* moving = nullptr;
};

struct AuxMaskSettings {
  double min_iou = kDefaultMatchIou;
  double min_fraction = kDefaultMovingFraction;
  std::vector<std::string> movable_classes;  // empty accepts every label
};

/// Union of the instances at t whose chains average more than
/// min_fraction moving pixels. Frames without a moving map are skipped.
inline Mask compose_aux_mask(const FrameInstances& previous, const FrameInstances& current,
                             const FrameInstances& next, const AuxMaskSettings& settings, int width,
                             int height) {
  auto movable = [&](const std::vector<InstanceMask>& list) {
    std::vector<InstanceMask> out;
    for (const auto& inst : list) {
      if (settings.movable_classes.empty() ||
          std::find(settings.movable_classes.begin(), settings.movable_classes.end(), inst.label) !=
              settings.movable_classes.end()) {
        out.push_back(inst);
      }
    }
    return out;
  };
  const auto prev = movable(previous.instances);
  const auto cur = movable(current.instances);
  const auto nxt = movable(next.instances);
  Mask out(width, height, 1, 0);
  for (const InstanceChain& chain : match_instances(prev, cur, nxt, settings.min_iou)) {
    std::vector<double> fractions;
    if (current.moving) fractions.push_back(moving_fraction(cur[chain.current], *current.moving));
    if (chain.previous && previous.moving) {
      fractions.push_back(moving_fraction(prev[*chain.previous], *previous.moving));
    }
    if (chain.next && next.moving) fractions.push_back(moving_fraction(nxt[*chain.next], *next.moving));
    if (!instance_moving_decision(fractions, settings.min_fraction)) continue;
    const Mask& pixels = cur[chain.current].pixels;
    require_same_size(pixels, out, "compose_aux_mask");
    for (std::size_t k = 0; k < out.data().size(); ++k) {
      if (pixels.data()[k]) out.data()[k] = 1;
    }
  }
  return out;
}

}  // namespace monorec

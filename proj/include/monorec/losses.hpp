#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "monorec/branch_trace.hpp"
#include "monorec/dual.hpp"
#include "monorec/geometry.hpp"
#include "monorec/grid.hpp"
#include "monorec/maskgen.hpp"
#include "monorec/photometric.hpp"

namespace monorec {

/// Sparse inverse-depth supervision, e.g. points tracked by a VO front end.
struct SparseDepth {
  struct Sample {
    int u = 0;
    int v = 0;
    double inv_depth = 0.0;
    bool operator==(const Sample&) const = default;
  };
  std::vector<Sample> samples;

  bool empty() const { return samples.empty(); }

  void validate(int width, int height) const {
    for (const auto& s : samples) {
      if (s.u < 0 || s.v < 0 || s.u >= width || s.v >= height) {
        throw std::out_of_range("sparse depth: sample outside image");
      }
      if (!(s.inv_depth > 0.0)) throw std::domain_error("sparse depth: inverse depth must be positive");
    }
  }

  /// Samples merged onto the half-resolution grid; collisions are averaged.
  SparseDepth halved() const {
    std::map<std::pair<int, int>, std::pair<double, int>> cells;
    for (const auto& s : samples) {
      auto& cell = cells[{s.v / 2, s.u / 2}];
      cell.first += s.inv_depth;
      cell.second += 1;
    }
    SparseDepth out;
    for (const auto& [key, acc] : cells) {
      out.samples.push_back({key.second, key.first, acc.first / acc.second});
    }
    return out;
  }
};

struct LossWeights {
  double lambda = 0.85;
  double alpha = 4.0;
  double beta_base = 1e-3;
  double gamma = 4.0;

  double beta(int scale) const { return beta_base * std::ldexp(1.0, -scale); }

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("loss weights: lambda must be in [0, 1]");
    if (!(alpha >= 0.0 && beta_base >= 0.0 && gamma >= 0.0)) {
      throw std::invalid_argument("loss weights: alpha, beta_base and gamma must be >= 0");
    }
  }
};

inline constexpr int kDefaultScales = 4;

/// Everything the losses need at one resolution.
struct LossLevel {
  Frame key;
  std::vector<Frame> temporal;
  std::optional<Frame> stereo;
  SparseDepth sparse;

  LossLevel halved() const {
    LossLevel out{key.halved(), {}, std::nullopt, sparse.halved()};
    for (const auto& f : temporal) out.temporal.push_back(f.halved());
    if (stereo) out.stereo = stereo->halved();
    return out;
  }
};

/// Scale s is 2^s times smaller than the input; images are area-averaged.
inline std::vector<LossLevel> build_pyramid(const LossLevel& full, int scales = kDefaultScales) {
  if (scales < 1) throw std::invalid_argument("build_pyramid: need at least one scale");
  std::vector<LossLevel> levels{full};
  for (int s = 1; s < scales; ++s) {
    if (levels.back().key.image.width() < 2 || levels.back().key.image.height() < 2) {
      throw DimensionError("build_pyramid: image too small for requested scales");
    }
    levels.push_back(levels.back().halved());
  }
  return levels;
}

template <typename T>
std::vector<Grid<T>> depth_pyramid(const Grid<T>& full, int scales = kDefaultScales) {
  std::vector<Grid<T>> out{full};
  for (int s = 1; s < scales; ++s) out.push_back(downsample_area(out.back()));
  return out;
}

template <typename T>
T abs_traced(const T& v) {
  note_branch(v < T(0.0) ? 0 : 1);
  using std::abs;
  return abs(v);
}

/// Per-pixel loss values; pixels without a valid contribution are excluded.
template <typename T>
struct PixelLoss {
  Grid<T> values;
  Mask valid;

  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count(valid.data().begin(), valid.data().end(), 1));
  }
};

/// lambda (1 - SSIM) / 2 + (1 - lambda) |warped - key|, the L1 term averaged
/// over channels, minimized per pixel over the valid sources.
template <typename T>
PixelLoss<T> photometric_min_map(const Frame& key, const std::vector<const Frame*>& sources,
                                 const Grid<T>& inv_depth, double lambda) {
  require_same_size(inv_depth, key.image, "photometric loss depth");
  const int w = key.image.width();
  const int h = key.image.height();
  const int channels = key.image.channels();
  PixelLoss<T> out{Grid<T>(w, h, 1, T(0.0)), Mask(w, h, 1, 0)};
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const WarpResult<T> warped = warp_to_keyframe(*sources[s], key, inv_depth);
    const ErrorMap<T> pe = pe_map(warped, key.image);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!pe.valid(x, y)) continue;
        T l1(0.0);
        for (int c = 0; c < channels; ++c) l1 += abs_traced(warped.image(x, y, c) - key.image(x, y, c));
        l1 /= static_cast<double>(channels);
        const T value = lambda * pe.values(x, y) + (1.0 - lambda) * l1;
        if (!out.valid(x, y) || value < out.values(x, y)) {
          out.values(x, y) = value;
          out.valid(x, y) = 1;
          note_branch(static_cast<std::int64_t>(s));
        }
      }
    }
  }
  return out;
}

template <typename T>
T masked_mean(const PixelLoss<T>& loss) {
  T sum(0.0);
  std::size_t n = 0;
  for (std::size_t k = 0; k < loss.values.data().size(); ++k) {
    if (!loss.valid.data()[k]) continue;
    sum += loss.values.data()[k];
    ++n;
  }
  if (n == 0) throw std::domain_error("photometric loss: no valid pixels");
  return sum / static_cast<double>(n);
}

template <typename T>
struct SelfLoss {
  T value;
  PixelLoss<T> map;
};

inline std::vector<const Frame*> self_sources(const LossLevel& level) {
  std::vector<const Frame*> sources;
  for (const auto& f : level.temporal) sources.push_back(&f);
  if (level.stereo) sources.push_back(&*level.stereo);
  return sources;
}

/// Per-pixel minimum reprojection loss over temporal and static-stereo sources.
template <typename T>
SelfLoss<T> l_self(const LossLevel& level, const Grid<T>& inv_depth, double lambda = 0.85) {
  const auto sources = self_sources(level);
  if (sources.empty()) throw std::invalid_argument("l_self: no reprojection source");
  PixelLoss<T> map = photometric_min_map(level.key, sources, inv_depth, lambda);
  T value = masked_mean(map);
  return {value, std::move(map)};
}

template <typename T>
struct SparseLoss {
  T value;
  bool empty = false;  // no samples: value is 0 and the caller should warn
};

/// Mean absolute inverse-depth error at the sample pixels only.
template <typename T>
SparseLoss<T> l_sparse(const Grid<T>& inv_depth, const SparseDepth& sparse) {
  sparse.validate(inv_depth.width(), inv_depth.height());
  if (sparse.empty()) return {T(0.0), true};
  T sum(0.0);
  for (const auto& s : sparse.samples) sum += abs_traced(inv_depth(s.u, s.v) - s.inv_depth);
  return {sum / static_cast<double>(sparse.samples.size()), false};
}

/// Edge-aware smoothness on mean-normalized inverse depth, forward differences.
template <typename T>
T l_smooth(const Grid<T>& inv_depth, const Image& image) {
  require_same_size(inv_depth, image, "l_smooth");
  const int w = inv_depth.width();
  const int h = inv_depth.height();
  T mean(0.0);
  for (const T& v : inv_depth.data()) mean += v;
  mean /= static_cast<double>(inv_depth.pixel_count());
  if (value_of(mean) == 0.0) throw std::domain_error("l_smooth: mean inverse depth is zero");
  const int channels = image.channels();
  auto edge = [&](int x0, int y0, int x1, int y1) {
    double g = 0.0;
    for (int c = 0; c < channels; ++c) g += std::abs(image(x1, y1, c) - image(x0, y0, c));
    return std::exp(-g / channels);
  };
  T sum_x(0.0);
  T sum_y(0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) sum_x += abs_traced((inv_depth(x + 1, y) - inv_depth(x, y)) / mean) * edge(x, y, x + 1, y);
      if (y + 1 < h) sum_y += abs_traced((inv_depth(x, y + 1) - inv_depth(x, y)) / mean) * edge(x, y, x, y + 1);
    }
  }
  T out(0.0);
  if (w > 1) out += sum_x / static_cast<double>((w - 1) * h);
  if (h > 1) out += sum_y / static_cast<double>(w * (h - 1));
  return out;
}

/// One weighted scalar of a loss. The report total is sum(weight * value).
struct LossTerm {
  std::string name;
  int scale = 0;
  double weight = 1.0;
  double value = 0.0;
};

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct LossReport {
  std::vector<LossTerm> terms;
  double total = 0.0;
  bool sparse_empty = false;
  std::vector<std::pair<std::string, Grid<double>>> maps;  // optional per-pixel maps

  void add(std::string name, int scale, double weight, double value) {
    terms.push_back({std::move(name), scale, weight, value});
    total += weight * value;
  }

  double recomputed_total() const {
    double t = 0.0;
    for (const auto& term : terms) t += term.weight * term.value;
    return t;
  }

  std::optional<double> value(const std::string& name, int scale) const {
    for (const auto& term : terms) {
      if (term.name == name && term.scale == scale) return term.value;
    }
    return std::nullopt;
  }

  /// Weighted sum of all terms at one scale.
  double scale_total(int scale) const {
    double t = 0.0;
    for (const auto& term : terms) {
      if (term.scale == scale) t += term.weight * term.value;
    }
    return t;
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "term,scale,weight,value\n";
    for (const auto& t : terms) {
      os << t.name << ',' << t.scale << ',' << format_number(t.weight) << ',' << format_number(t.value) << '\n';
    }
    os << "total,all,1," << format_number(total) << '\n';
    return os.str();
  }
};

/// Multi-scale semi-supervised depth loss: sum over scales of
/// self + alpha * sparse + beta_s * smooth.
inline LossReport l_depth(const std::vector<LossLevel>& levels, const std::vector<Grid<double>>& depths,
                          const LossWeights& weights) {
  weights.validate();
  if (levels.size() != depths.size()) throw std::invalid_argument("l_depth: one depth map per scale required");
  LossReport report;
  for (std::size_t s = 0; s < levels.size(); ++s) {
    const int scale = static_cast<int>(s);
    const auto self = l_self(levels[s], depths[s], weights.lambda);
    const auto sparse = l_sparse(depths[s], levels[s].sparse);
    report.sparse_empty = report.sparse_empty || sparse.empty;
    report.add("self", scale, 1.0, self.value);
    report.add("sparse", scale, weights.alpha, sparse.value);
    report.add("smooth", scale, weights.beta(scale), l_smooth(depths[s], levels[s].key.image));
  }
  return report;
}

inline constexpr double kMaskProbabilityEpsilon = 1e-7;

/// Inverse class frequency of the positives, clamped to [1, 100].
inline double mask_positive_weight(const Mask& aux) {
  std::size_t pos = 0;
  for (auto v : aux.data()) pos += v != 0;
  const std::size_t neg = aux.data().size() - pos;
  if (pos == 0) return 1.0;
  return std::clamp(static_cast<double>(neg) / static_cast<double>(pos), 1.0, 100.0);
}

/// Weighted binary cross entropy between a predicted probability mask and
/// the binary auxiliary mask.
inline double l_mask(const MovingMask& pred, const Mask& aux, double positive_weight) {
  require_same_size(pred, aux, "l_mask");
  if (pred.pixel_count() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < pred.data().size(); ++k) {
    const double p = std::clamp(pred.data()[k], kMaskProbabilityEpsilon, 1.0 - kMaskProbabilityEpsilon);
    sum += aux.data()[k] ? -positive_weight * std::log(p) : -std::log(1.0 - p);
  }
  return sum / static_cast<double>(pred.pixel_count());
}

inline double l_mask(const MovingMask& pred, const Mask& aux) {
  return l_mask(pred, aux, mask_positive_weight(aux));
}

/// Frozen per-scale photometric maps used by mask refinement: static stereo
/// under D_s and temporal under D_t.
struct RefinementMaps {
  std::vector<PixelLoss<double>> stereo;
  std::vector<PixelLoss<double>> temporal;
};

inline RefinementMaps refinement_maps(const std::vector<LossLevel>& levels,
                                      const std::vector<Grid<double>>& depth_temporal,
                                      const std::vector<Grid<double>>& depth_stereo, double lambda) {
  if (levels.size() != depth_temporal.size() || levels.size() != depth_stereo.size()) {
    throw std::invalid_argument("refinement_maps: one depth map per scale required");
  }
  RefinementMaps maps;
  for (std::size_t s = 0; s < levels.size(); ++s) {
    const auto& level = levels[s];
    if (!level.stereo) throw std::invalid_argument("refinement_maps: missing static stereo frame");
    if (level.temporal.empty()) throw std::invalid_argument("refinement_maps: no temporal frames");
    std::vector<const Frame*> temporal;
    for (const auto& f : level.temporal) temporal.push_back(&f);
    maps.stereo.push_back(photometric_min_map(level.key, {&*level.stereo}, depth_stereo[s], lambda));
    maps.temporal.push_back(photometric_min_map(level.key, temporal, depth_temporal[s], lambda));
  }
  return maps;
}

/// Pixel-wise interpolation between the static-stereo and temporal losses.
inline double mref_pixel_loss(double mask, double stereo_loss, double temporal_loss) {
  return mask * stereo_loss + (1.0 - mask) * temporal_loss;
}

/// Mask refinement objective: sum over scales of the mean interpolated loss
/// (pixels valid in both maps) plus the BCE mask regularizer.
inline LossReport l_m_ref(const MovingMask& mask, const RefinementMaps& maps, const Mask& aux) {
  require_same_size(mask, aux, "l_m_ref");
  if (maps.stereo.size() != maps.temporal.size()) throw std::invalid_argument("l_m_ref: scale mismatch");
  LossReport report;
  MovingMask m = mask;
  for (std::size_t s = 0; s < maps.stereo.size(); ++s) {
    if (s > 0) m = downsample_area(m);
    const auto& ls = maps.stereo[s];
    const auto& lt = maps.temporal[s];
    require_same_size(m, ls.values, "l_m_ref scale");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < m.data().size(); ++k) {
      if (!ls.valid.data()[k] || !lt.valid.data()[k]) continue;
      sum += mref_pixel_loss(m.data()[k], ls.values.data()[k], lt.values.data()[k]);
      ++n;
    }
    report.add("m_ref", static_cast<int>(s), 1.0, n == 0 ? 0.0 : sum / static_cast<double>(n));
  }
  report.add("mask", 0, 1.0, l_mask(mask, aux));
  return report;
}

/// Depth refinement terms at one scale. Each gated term keeps the normalizer
/// of its ungated form, so M == 0 reproduces the bootstrapping loss exactly.
template <typename T>
struct DepthRefinementTerms {
  T self;          // sum (1 - M) L_self / N_self
  T sparse;        // sum over samples (1 - M) |D - D_vo| / N_samples
  T stereo_self;   // sum M L_self^S / N_stereo
  T stereo_prior;  // sum M |D - D_s| / N_pixels
  T smooth;
  bool sparse_empty = false;

  T total(const LossWeights& w, int scale) const {
    return self + w.alpha * sparse + stereo_self + w.gamma * stereo_prior + w.beta(scale) * smooth;
  }
};

template <typename T>
DepthRefinementTerms<T> l_d_ref_scale(const LossLevel& level, const Grid<T>& inv_depth,
                                      const Grid<double>& depth_stereo, const MovingMask& mask,
                                      const LossWeights& weights) {
  require_same_size(inv_depth, depth_stereo, "l_d_ref stereo depth");
  require_same_size(inv_depth, mask, "l_d_ref mask");
  if (!level.stereo) throw std::invalid_argument("l_d_ref: missing static stereo frame");
  DepthRefinementTerms<T> out{T(0.0), T(0.0), T(0.0), T(0.0), T(0.0)};

  const auto self = photometric_min_map(level.key, self_sources(level), inv_depth, weights.lambda);
  const std::size_t n_self = self.valid_count();
  if (n_self == 0) throw std::domain_error("l_d_ref: no valid pixels");
  for (std::size_t k = 0; k < mask.data().size(); ++k) {
    if (self.valid.data()[k]) out.self += (1.0 - mask.data()[k]) * self.values.data()[k];
  }
  out.self /= static_cast<double>(n_self);

  level.sparse.validate(inv_depth.width(), inv_depth.height());
  out.sparse_empty = level.sparse.empty();
  for (const auto& s : level.sparse.samples) {
    out.sparse += (1.0 - mask(s.u, s.v)) * abs_traced(inv_depth(s.u, s.v) - s.inv_depth);
  }
  if (!level.sparse.empty()) out.sparse /= static_cast<double>(level.sparse.samples.size());

  const auto stereo = photometric_min_map(level.key, {&*level.stereo}, inv_depth, weights.lambda);
  const std::size_t n_stereo = stereo.valid_count();
  for (std::size_t k = 0; k < mask.data().size(); ++k) {
    if (stereo.valid.data()[k]) out.stereo_self += mask.data()[k] * stereo.values.data()[k];
  }
  if (n_stereo > 0) out.stereo_self /= static_cast<double>(n_stereo);

  for (std::size_t k = 0; k < mask.data().size(); ++k) {
    if (mask.data()[k] != 0.0) {
      out.stereo_prior += mask.data()[k] * abs_traced(inv_depth.data()[k] - depth_stereo.data()[k]);
    }
  }
  out.stereo_prior /= static_cast<double>(mask.pixel_count());

  out.smooth = l_smooth(inv_depth, level.key.image);
  return out;
}

/// Multi-scale depth refinement loss.
inline LossReport l_d_ref(const std::vector<LossLevel>& levels, const std::vector<Grid<double>>& depths,
                          const std::vector<Grid<double>>& depth_stereo, const MovingMask& mask,
                          const LossWeights& weights) {
  weights.validate();
  if (levels.size() != depths.size() || levels.size() != depth_stereo.size()) {
    throw std::invalid_argument("l_d_ref: one depth map per scale required");
  }
  LossReport report;
  MovingMask m = mask;
  for (std::size_t s = 0; s < levels.size(); ++s) {
    if (s > 0) m = downsample_area(m);
    const int scale = static_cast<int>(s);
    const auto t = l_d_ref_scale(levels[s], depths[s], depth_stereo[s], m, weights);
    report.sparse_empty = report.sparse_empty || t.sparse_empty;
    report.add("self", scale, 1.0, t.self);
    report.add("sparse", scale, weights.alpha, t.sparse);
    report.add("stereo_self", scale, 1.0, t.stereo_self);
    report.add("stereo_prior", scale, weights.gamma, t.stereo_prior);
    report.add("smooth", scale, weights.beta(scale), t.smooth);
  }
  return report;
}

struct PixelIndex {
  int x = 0;
  int y = 0;
};

struct GradCheckResult {
  std::vector<double> steps;
  std::vector<double> max_rel_error;  // one entry per step
  int checked = 0;
  int excluded = 0;

  double worst() const {
    double w = 0.0;
    for (double e : max_rel_error) w = std::max(w, e);
    return w;
  }
};

inline constexpr double kGradCheckFloor = 1e-7;
// Denominator floor relative to the largest checked gradient. Without it a
// point whose gradient crosses zero turns O(h^2) truncation into a large ratio.
inline constexpr double kGradCheckScaleFloor = 1e-4;

/// |a - b| / max(|a|, |b|, floor); the floor keeps vanishing gradients from
/// turning round-off into large relative errors.
inline double relative_error(double a, double b, double floor = kGradCheckFloor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Compares forward-mode derivatives against central differences at each
/// point. A point is skipped when any perturbation changes a discrete branch
/// (bilinear cell, argmin pick, abs sign) relative to the unperturbed input.
/// `functional` must accept Grid<double> and Grid<Dual>.
template <typename Functional>
GradCheckResult grad_check(Functional&& functional, const Grid<double>& inv_depth,
                           const std::vector<PixelIndex>& points,
                           const std::vector<double>& steps = {1e-4, 1e-5}) {
  GradCheckResult result;
  result.steps = steps;
  result.max_rel_error.assign(steps.size(), 0.0);

  auto traced = [&](const Grid<double>& d, BranchTrace& trace) {
    TraceScope scope(trace);
    return value_of(functional(d));
  };

  BranchTrace center;
  traced(inv_depth, center);

  Grid<Dual> dual(inv_depth.width(), inv_depth.height());
  for (std::size_t k = 0; k < dual.data().size(); ++k) dual.data()[k] = Dual(inv_depth.data()[k]);

  std::vector<std::pair<double, std::vector<double>>> checked;
  for (const PixelIndex& p : points) {
    std::vector<double> fd(steps.size());
    bool smooth = true;
    for (std::size_t i = 0; i < steps.size() && smooth; ++i) {
      Grid<double> plus = inv_depth;
      Grid<double> minus = inv_depth;
      plus(p.x, p.y) += steps[i];
      minus(p.x, p.y) -= steps[i];
      BranchTrace tp;
      BranchTrace tm;
      const double fp = traced(plus, tp);
      const double fm = traced(minus, tm);
      smooth = tp == center && tm == center;
      fd[i] = (fp - fm) / (plus(p.x, p.y) - minus(p.x, p.y));
    }
    if (!smooth) {
      ++result.excluded;
      continue;
    }
    dual(p.x, p.y).d = 1.0;
    checked.push_back({functional(dual).d, fd});
    dual(p.x, p.y).d = 0.0;
    ++result.checked;
  }
  double scale = 0.0;
  for (const auto& c : checked) scale = std::max(scale, std::abs(c.first));
  const double floor = std::max(kGradCheckFloor, kGradCheckScaleFloor * scale);
  for (const auto& [analytic, fd] : checked) {
    for (std::size_t i = 0; i < steps.size(); ++i) {
      result.max_rel_error[i] = std::max(result.max_rel_error[i], relative_error(analytic, fd[i], floor));
    }
  }
  return result;
}

}  // namespace monorec

#pragma once

#include "monorec/dual.hpp"
#include "monorec/geometry.hpp"
#include "monorec/grid.hpp"
#include "monorec/parallel.hpp"

namespace monorec {

// Wang et al. stabilizers for unit dynamic range.
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

template <typename T>
T clamp_unit(const T& v) {
  if (v < T(0.0)) return T(0.0);
  if (v > T(1.0)) return T(1.0);
  return v;
}

/// Per-pixel SSIM over a uniform 3x3 window, averaged over channels. The
/// window shrinks to the neighbors that are inside the image and, when
/// `valid` is given, flagged valid. Pixels whose center is invalid get 0.
template <typename T>
Grid<T> ssim_map(const Grid<T>& a, const Image& b, const Mask* valid = nullptr) {
  require_same_shape(a, b, "ssim_map");
  if (valid != nullptr) require_same_size(a, *valid, "ssim_map validity");
  const int w = a.width();
  const int h = a.height();
  const int channels = a.channels();
  Grid<T> out(w, h, 1, T(0.0));
  auto usable = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && (valid == nullptr || (*valid)(x, y) != 0);
  };
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!usable(x, y)) continue;
      T total(0.0);
      for (int c = 0; c < channels; ++c) {
        int n = 0;
        T sum_a(0.0);
        double sum_b = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (!usable(x + dx, y + dy)) continue;
            sum_a += a(x + dx, y + dy, c);
            sum_b += b(x + dx, y + dy, c);
            ++n;
          }
        }
        const T mu_a = sum_a / static_cast<double>(n);
        const double mu_b = sum_b / n;
        T var_a(0.0);
        T cov(0.0);
        double var_b = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (!usable(x + dx, y + dy)) continue;
            const T da = a(x + dx, y + dy, c) - mu_a;
            const double db = b(x + dx, y + dy, c) - mu_b;
            var_a += da * da;
            cov += da * db;
            var_b += db * db;
          }
        }
        var_a /= static_cast<double>(n);
        cov /= static_cast<double>(n);
        var_b /= n;
        const T num = (2.0 * mu_a * mu_b + kSsimC1) * (2.0 * cov + kSsimC2);
        const T den = (mu_a * mu_a + mu_b * mu_b + kSsimC1) * (var_a + var_b + kSsimC2);
        total += num / den;
      }
      out(x, y) = total / static_cast<double>(channels);
    }
  });
  return out;
}

/// Photometric error (1 - SSIM) / 2 clamped to [0, 1]; invalid pixels carry 1.
template <typename T>
struct ErrorMap {
  Grid<T> values;
  Mask valid;
};

template <typename T>
ErrorMap<T> pe_map(const Grid<T>& warped, const Mask& warped_valid, const Image& key) {
  require_same_size(warped, warped_valid, "pe_map");
  const Grid<T> ssim = ssim_map(warped, key, &warped_valid);
  ErrorMap<T> out{Grid<T>(warped.width(), warped.height(), 1, T(1.0)), warped_valid};
  for (int y = 0; y < warped.height(); ++y) {
    for (int x = 0; x < warped.width(); ++x) {
      if (warped_valid(x, y)) out.values(x, y) = clamp_unit((1.0 - ssim(x, y)) * 0.5);
    }
  }
  return out;
}

template <typename T>
ErrorMap<T> pe_map(const WarpResult<T>& warped, const Image& key) {
  return pe_map(warped.image, warped.valid, key);
}

/// Error map for a fully valid pair of images.
inline ErrorMap<double> pe_map(const Image& warped, const Image& key) {
  return pe_map(warped, Mask(warped.width(), warped.height(), 1, 1), key);
}

}  // namespace monorec

#pragma once

// Brightness control: turns an illumination map and a requested ratio into a
// smooth per-pixel boost field, then applies it to the illumination.

#include <algorithm>
#include <cmath>
#include <limits>

#include "lowlight/error.hpp"
#include "lowlight/image.hpp"
#include "lowlight/retinex.hpp"

namespace lowlight {

inline constexpr double kInitialClipLow = 0.05;
inline constexpr double kInitialClipHigh = 0.95;
inline constexpr double kMaxBoost = 4.0;

// Per-pixel multiplicative boost fraction in [0, kMaxBoost]. The direction
// comes from the sign of `ratio`.
struct AdjustmentMap {
  ImageGray map;
  double ratio = 0.0;
};

class EmptyRegionError : public ComputeError {
 public:
  EmptyRegionError() : ComputeError("target region is empty (mask is zero everywhere)") {}
};

// Invert, clip to [0.05, 0.95], subtract the mean, min-max normalize to
// [0,1]. A constant map becomes 0.5 everywhere.
inline ImageGray initial_map(const ImageGray& illum) {
  ImageGray m(illum.width(), illum.height());
  for (std::size_t i = 0; i < m.pixel_count(); ++i) {
    m(i) = std::clamp(1.0 - illum(i), kInitialClipLow, kInitialClipHigh);
  }
  const double mu = mean(m);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double& v : m.data()) {
    v -= mu;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) {
    std::fill(m.data().begin(), m.data().end(), 0.5);
    return m;
  }
  for (double& v : m.data()) v = (v - lo) / (hi - lo);
  return m;
}

// Mask-gated Gaussian smoothing of m_init, rescaled so the mask-weighted mean
// of the weights is 1; the map is |ratio| times those weights on the mask.
inline AdjustmentMap spatial_blend(const ImageGray& m_init, double ratio, const ImageGray& mask,
                                   double sigma_s) {
  require_same_size(m_init, mask, "spatial_blend");
  if (!(std::fabs(ratio) <= kMaxBoost)) throw RangeError("spatial_blend: |ratio| must be <= 4");
  if (sigma_s < 0.0) throw RangeError("spatial_blend: sigma_s must be >= 0");

  double mask_sum = 0.0;
  for (double v : mask.data()) mask_sum += v;
  if (!(mask_sum > 0.0)) throw EmptyRegionError();

  ImageGray gated(m_init.width(), m_init.height());
  for (std::size_t i = 0; i < gated.pixel_count(); ++i) gated(i) = m_init(i) * mask(i);
  ImageGray w = gaussian_blur(gated, sigma_s);

  double weighted = 0.0;
  for (std::size_t i = 0; i < w.pixel_count(); ++i) weighted += mask(i) * w(i);
  const double mean_w = weighted / mask_sum;

  AdjustmentMap adj{ImageGray(m_init.width(), m_init.height()), ratio};
  const double magnitude = std::fabs(ratio);
  for (std::size_t i = 0; i < w.pixel_count(); ++i) {
    // All-zero weights on the support (m_init vanishes there) fall back to a
    // uniform boost.
    const double wi = mean_w > 0.0 ? w(i) / mean_w : 1.0;
    adj.map(i) = std::clamp(magnitude * wi * mask(i), 0.0, kMaxBoost);
  }
  return adj;
}

// Brighten: L * (1 + map). Darken: L / (1 + map). Result clamped to
// [kIlluminationFloor, 1].
inline ImageGray apply_to_illumination(const ImageGray& illum, const AdjustmentMap& adj) {
  require_same_size(illum, adj.map, "apply_to_illumination");
  ImageGray out(illum.width(), illum.height());
  const bool darken = adj.ratio < 0.0;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const double k = 1.0 + adj.map(i);
    const double v = darken ? illum(i) / k : illum(i) * k;
    out(i) = std::clamp(v, kIlluminationFloor, 1.0);
  }
  return out;
}

}  // namespace lowlight

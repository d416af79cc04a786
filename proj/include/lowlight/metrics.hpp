#pragma once

// Full-reference quality metrics and annotation score aggregation.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "lowlight/error.hpp"
#include "lowlight/image.hpp"

namespace lowlight {

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 8;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Peak 1.0; identical images return kPsnrCap.
inline double psnr(const ImageRGB& a, const ImageRGB& b) {
  require_same_size(a, b, "psnr");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sse += d * d;
  }
  if (sse == 0.0) return kPsnrCap;
  const double mse = sse / static_cast<double>(a.data().size());
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace detail {

// Summed-area table with a zero border row/column.
class IntegralImage {
 public:
  IntegralImage(int w, int h) : w_(w), sums_(static_cast<std::size_t>(w + 1) * (h + 1), 0.0) {}

  template <class F>
  static IntegralImage build(int w, int h, F&& value) {
    IntegralImage s(w, h);
    for (int y = 0; y < h; ++y) {
      double row = 0.0;
      for (int x = 0; x < w; ++x) {
        row += value(x, y);
        s.at(x + 1, y + 1) = s.at(x + 1, y) + row;
      }
    }
    return s;
  }

  // Sum over [x0, x0+n) x [y0, y0+n).
  double box(int x0, int y0, int n) const {
    return at(x0 + n, y0 + n) - at(x0, y0 + n) - at(x0 + n, y0) + at(x0, y0);
  }

 private:
  double& at(int x, int y) { return sums_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
  double at(int x, int y) const { return sums_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }

  int w_;
  std::vector<double> sums_;
};

}  // namespace detail

// Single-window SSIM from window statistics (population variances).
inline double ssim_window(double mu_a, double mu_b, double var_a, double var_b, double cov) {
  const double num = (2.0 * mu_a * mu_b + kSsimC1) * (2.0 * cov + kSsimC2);
  const double den = (mu_a * mu_a + mu_b * mu_b + kSsimC1) * (var_a + var_b + kSsimC2);
  return num / den;
}

// SSIM on luma over every 8x8 window position (stride 1), averaged.
inline double ssim(const ImageGray& a, const ImageGray& b) {
  require_same_size(a, b, "ssim");
  if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
    throw ComputeError("ssim: image smaller than the 8x8 window");
  }
  const int w = a.width();
  const int h = a.height();
  using detail::IntegralImage;
  const auto sa = IntegralImage::build(w, h, [&](int x, int y) { return a.at(x, y); });
  const auto sb = IntegralImage::build(w, h, [&](int x, int y) { return b.at(x, y); });
  const auto saa = IntegralImage::build(w, h, [&](int x, int y) { return a.at(x, y) * a.at(x, y); });
  const auto sbb = IntegralImage::build(w, h, [&](int x, int y) { return b.at(x, y) * b.at(x, y); });
  const auto sab = IntegralImage::build(w, h, [&](int x, int y) { return a.at(x, y) * b.at(x, y); });

  const double n = kSsimWindow * kSsimWindow;
  double total = 0.0;
  std::size_t windows = 0;
  for (int y = 0; y + kSsimWindow <= h; ++y) {
    for (int x = 0; x + kSsimWindow <= w; ++x) {
      const double ma = sa.box(x, y, kSsimWindow) / n;
      const double mb = sb.box(x, y, kSsimWindow) / n;
      const double va = saa.box(x, y, kSsimWindow) / n - ma * ma;
      const double vb = sbb.box(x, y, kSsimWindow) / n - mb * mb;
      const double cov = sab.box(x, y, kSsimWindow) / n - ma * mb;
      total += ssim_window(ma, mb, va, vb, cov);
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

inline double ssim(const ImageRGB& a, const ImageRGB& b) {
  require_same_size(a, b, "ssim");
  return ssim(to_luma(a), to_luma(b));
}

// Angle between two RGB vectors; 0 when either has zero norm.
inline double color_angle(const Rgb& a, const Rgb& b) {
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  const double na = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
  const double nb = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double cosine = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return std::acos(cosine);
}

// Sum over pixels of the RGB angle, in radians (resolution dependent).
inline double angular_color_loss(const ImageRGB& a, const ImageRGB& b) {
  require_same_size(a, b, "angular_color_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) sum += color_angle(pixel(a, i), pixel(b, i));
  return sum;
}

inline double angular_color_loss_mean(const ImageRGB& a, const ImageRGB& b) {
  return angular_color_loss(a, b) / static_cast<double>(a.pixel_count());
}

struct DimensionScores {
  double color_quality = 1.0;
  double clarity_detail = 1.0;
  double naturalness_realism = 1.0;
  double aesthetic_appeal = 1.0;
  double overall_rating = 1.0;
  std::optional<std::array<double, 5>> weights;

  std::array<double, 5> values() const {
    return {color_quality, clarity_detail, naturalness_realism, aesthetic_appeal, overall_rating};
  }
};

inline void validate(const DimensionScores& s) {
  for (double v : s.values()) {
    if (!(v >= 1.0 && v <= 5.0)) throw RangeError("dimension score outside [1, 5]");
  }
  if (s.weights) {
    double sum = 0.0;
    for (double w : *s.weights) {
      if (!(w >= 0.0)) throw RangeError("dimension weights must be non-negative");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw RangeError("dimension weights must sum to 1");
  }
}

// Unweighted: sum of the five dimensions / 25, in [0.2, 1]. Weighted: the
// weighted mean, in [1, 5].
inline double total_score(const DimensionScores& s) {
  validate(s);
  const auto v = s.values();
  double total = 0.0;
  if (s.weights) {
    for (int k = 0; k < 5; ++k) total += (*s.weights)[k] * v[k];
    return total;
  }
  for (double x : v) total += x;
  return total / 25.0;
}

}  // namespace lowlight

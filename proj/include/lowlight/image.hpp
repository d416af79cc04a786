#pragma once

// Float rasters, color conversions and the separable Gaussian blur that the
// rest of the library is built on.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lowlight/error.hpp"

namespace lowlight {

// Row-major raster with C interleaved channels. Values are unitless
// intensities; public operations that produce displayable images clamp to
// [0,1], intermediate products (reflectance, adjustment maps) may exceed it.
template <int C>
class Image {
  static_assert(C >= 1, "an image needs at least one channel");

 public:
  static constexpr int channels = C;

  Image() = default;

  Image(int width, int height, double fill = 0.0)
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw ComputeError("image dimensions must be positive, got " +
                         std::to_string(width) + "x" + std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * height * C, fill);
  }

  Image(int width, int height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width <= 0 || height <= 0) {
      throw ComputeError("image dimensions must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(width) * height * C) {
      throw ComputeError("image data length does not match dimensions");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y, int c = 0) noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * C + c];
  }
  double at(int x, int y, int c = 0) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * C + c];
  }

  // Channel c of pixel index i (row-major).
  double& operator()(std::size_t i, int c = 0) noexcept { return data_[i * C + c]; }
  double operator()(std::size_t i, int c = 0) const noexcept {
    return data_[i * C + c];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  template <int D>
  bool same_size(const Image<D>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Image& a, const Image& b) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

using ImageRGB = Image<3>;
using ImageGray = Image<1>;

template <int C, int D>
void require_same_size(const Image<C>& a, const Image<D>& b, const char* what) {
  if (!a.same_size(b)) {
    throw ComputeError(std::string(what) + ": dimension mismatch (" +
                       std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                       " vs " + std::to_string(b.width()) + "x" +
                       std::to_string(b.height()) + ")");
  }
}

inline double clamp01(double v) noexcept { return std::clamp(v, 0.0, 1.0); }

template <int C>
Image<C> clamped(Image<C> img, double lo = 0.0, double hi = 1.0) {
  for (double& v : img.data()) v = std::clamp(v, lo, hi);
  return img;
}

using Rgb = std::array<double, 3>;
using Hsv = std::array<double, 3>;  // hue degrees [0,360), saturation, value

inline Rgb pixel(const ImageRGB& img, std::size_t i) noexcept {
  return {img(i, 0), img(i, 1), img(i, 2)};
}

inline void set_pixel(ImageRGB& img, std::size_t i, const Rgb& c) noexcept {
  img(i, 0) = c[0];
  img(i, 1) = c[1];
  img(i, 2) = c[2];
}

inline Hsv rgb_to_hsv(const Rgb& in) noexcept {
  const double r = clamp01(in[0]), g = clamp01(in[1]), b = clamp01(in[2]);
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r) {
      h = 60.0 * std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      h = 60.0 * ((b - r) / delta + 2.0);
    } else {
      h = 60.0 * ((r - g) / delta + 4.0);
    }
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
  }
  const double s = mx > 0.0 ? delta / mx : 0.0;
  return {h, s, mx};
}

inline Rgb hsv_to_rgb(const Hsv& in) noexcept {
  double h = std::fmod(in[0], 360.0);
  if (h < 0.0) h += 360.0;
  const double s = clamp01(in[1]);
  const double v = clamp01(in[2]);
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  return {clamp01(r + m), clamp01(g + m), clamp01(b + m)};
}

// Rec.601 luma weights.
inline constexpr std::array<double, 3> kLumaWeights{0.299, 0.587, 0.114};

inline double luma(const Rgb& c) noexcept {
  return kLumaWeights[0] * c[0] + kLumaWeights[1] * c[1] + kLumaWeights[2] * c[2];
}

inline ImageGray to_luma(const ImageRGB& img) {
  ImageGray out(img.width(), img.height());
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    out(i) = clamp01(luma(pixel(img, i)));
  }
  return out;
}

template <int C>
double mean(const Image<C>& img, int channel = 0) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) sum += img(i, channel);
  return sum / static_cast<double>(img.pixel_count());
}

inline double mean_luma(const ImageRGB& img) { return mean(to_luma(img)); }

// Normalized Gaussian taps for offsets -r..r, r = ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[i + radius] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

// Separable Gaussian blur with edge-clamp padding, each channel independently.
// sigma <= 0 returns the input unchanged.
template <int C>
Image<C> gaussian_blur(const Image<C>& img, double sigma) {
  if (!(sigma > 0.0)) return img;
  const std::vector<double> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = img.width();
  const int h = img.height();

  Image<C> tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int t = -r; t <= r; ++t) {
          acc += k[t + r] * img.at(std::clamp(x + t, 0, w - 1), y, c);
        }
        tmp.at(x, y, c) = acc;
      }
    }
  }
  Image<C> out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int t = -r; t <= r; ++t) {
          acc += k[t + r] * tmp.at(x, std::clamp(y + t, 0, h - 1), c);
        }
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

inline ImageRGB gray_to_rgb(const ImageGray& g) {
  ImageRGB out(g.width(), g.height());
  for (std::size_t i = 0; i < g.pixel_count(); ++i) {
    out(i, 0) = out(i, 1) = out(i, 2) = g(i);
  }
  return out;
}

}  // namespace lowlight

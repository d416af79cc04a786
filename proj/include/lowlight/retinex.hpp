#pragma once

// Single-scale Retinex: the illumination is the Gaussian-blurred luma, the
// reflectance is what remains after dividing it out.

#include <algorithm>

#include "lowlight/image.hpp"

namespace lowlight {

inline constexpr double kIlluminationFloor = 1e-3;
inline constexpr double kReflectanceMax = 3.0;

struct RetinexPair {
  ImageGray illumination;  // >= kIlluminationFloor everywhere
  ImageRGB reflection;     // each channel in [0, kReflectanceMax]
};

inline ImageGray estimate_illumination(const ImageRGB& img, double sigma) {
  ImageGray illum = gaussian_blur(to_luma(img), sigma);
  for (double& v : illum.data()) v = std::clamp(v, kIlluminationFloor, 1.0);
  return illum;
}

// Reflectance for a given illumination; channels that would exceed
// kReflectanceMax are clamped.
inline ImageRGB reflectance(const ImageRGB& img, const ImageGray& illum) {
  require_same_size(img, illum, "reflectance");
  ImageRGB refl(img.width(), img.height());
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) {
      refl(i, c) = std::clamp(img(i, c) / illum(i), 0.0, kReflectanceMax);
    }
  }
  return refl;
}

inline RetinexPair decompose(const ImageRGB& img, double sigma) {
  if (!(sigma > 0.0)) throw ComputeError("decompose: sigma must be positive");
  RetinexPair pair;
  pair.illumination = estimate_illumination(img, sigma);
  pair.reflection = reflectance(img, pair.illumination);
  return pair;
}

// Per-channel clamp(illumination * reflection, 0, 1).
inline ImageRGB recombine(const ImageGray& illum, const ImageRGB& refl) {
  require_same_size(illum, refl, "reconstruct");
  ImageRGB out(refl.width(), refl.height());
  for (std::size_t i = 0; i < refl.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) out(i, c) = clamp01(illum(i) * refl(i, c));
  }
  return out;
}

inline ImageRGB reconstruct(const RetinexPair& pair) {
  return recombine(pair.illumination, pair.reflection);
}

// True where no channel of the reflectance hit the kReflectanceMax clamp.
inline std::vector<bool> unclamped_pixels(const ImageRGB& img, const RetinexPair& pair) {
  std::vector<bool> ok(img.pixel_count(), true);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) {
      if (img(i, c) / pair.illumination(i) > kReflectanceMax) ok[i] = false;
    }
  }
  return ok;
}

}  // namespace lowlight

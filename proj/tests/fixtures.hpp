#pragma once

// Procedural test images. Every fixture is a pure function of its arguments.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include "lowlight/image.hpp"

namespace lowlight::testing {

inline ImageRGB uniform(int w, int h, double r, double g, double b) {
  ImageRGB img(w, h);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) set_pixel(img, i, {r, g, b});
  return img;
}

// Smooth luminance field with moderate tints and mild texture. Channel values
// stay within 1.8x of the local luma, so reflectance never reaches its clamp.
inline ImageRGB scene(int index, int w = 48, int h = 40) {
  std::mt19937_64 rng(0x5eed0000ULL + static_cast<std::uint64_t>(index));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double base = 0.15 + 0.5 * u(rng);
  const double span = 0.1 + 0.2 * u(rng);
  const double fx = 0.5 + 2.5 * u(rng), fy = 0.5 + 2.5 * u(rng);
  const double phase = 2 * std::numbers::pi * u(rng);
  const double tint[3] = {0.85 + 0.3 * u(rng), 0.85 + 0.3 * u(rng), 0.85 + 0.3 * u(rng)};
  ImageRGB img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = static_cast<double>(x) / w, sy = static_cast<double>(y) / h;
      const double lum = base + span * std::sin(2 * std::numbers::pi * (fx * sx + fy * sy) + phase);
      const double texture = 1.0 + 0.08 * (u(rng) - 0.5);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = clamp01(lum * tint[c] * texture);
    }
  }
  return img;
}

// Uniform noise in [lo, hi] per channel.
inline ImageRGB noise(std::uint64_t seed, int w = 32, int h = 32, double lo = 0.05, double hi = 0.95) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ImageRGB img(w, h);
  for (double& v : img.data()) v = u(rng);
  return img;
}

// Left half dark, right half bright.
inline ImageRGB split(int w = 32, int h = 24, double dark = 0.1, double bright = 0.7) {
  ImageRGB img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = x < w / 2 ? dark : bright;
      img.at(x, y, 0) = v;
      img.at(x, y, 1) = v * 0.9;
      img.at(x, y, 2) = v * 0.8;
    }
  }
  return img;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lowlight_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lowlight::testing

#pragma once

// 8-bit PNG and binary PPM (P6) reading and writing. Quantization to 8 bits
// happens only here.

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lowlight/error.hpp"
#include "lowlight/image.hpp"

namespace lowlight {

namespace detail {

inline std::uint8_t quantize(double v) noexcept {
  return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0));
}

inline std::string lower_ext(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  for (char& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

inline ImageRGB read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  auto next_token = [&]() -> std::string {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(ch));
    }
    return tok;
  };
  auto to_int = [&](const std::string& s) -> long {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw IoError("corrupt PPM header in " + path.string());
    }
    return std::stol(s);
  };

  if (next_token() != "P6") throw IoError("unsupported format (expected P6): " + path.string());
  const long w = to_int(next_token());
  const long h = to_int(next_token());
  const long maxval = to_int(next_token());
  if (w <= 0 || h <= 0) throw IoError("zero-dimension image: " + path.string());
  if (maxval != 255) throw IoError("unsupported PPM maxval (expected 255): " + path.string());

  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw IoError("truncated PPM data in " + path.string());
  }
  ImageRGB img(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < raw.size(); ++i) img.data()[i] = raw[i] / 255.0;
  return img;
}

inline void write_ppm(const ImageRGB& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<unsigned char> raw(img.data().size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(img.data()[i]);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline ImageRGB read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw IoError("zero-dimension image: " + path.string());
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("corrupt PNG data in " + path.string() + ": " + msg);
  }
  ImageRGB img(static_cast<int>(image.width), static_cast<int>(image.height));
  for (std::size_t i = 0; i < raw.size(); ++i) img.data()[i] = raw[i] / 255.0;
  return img;
}

inline void write_png(const ImageRGB& img, const std::filesystem::path& path) {
  std::vector<png_byte> raw(img.data().size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(img.data()[i]);

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, raw.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot write PNG " + path.string() + ": " + msg);
  }
}

}  // namespace detail

// Loads an 8-bit RGB PNG (gray, palette and alpha are converted) or a P6 PPM.
// Channel value v maps to v/255.
inline ImageRGB load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  const std::string ext = detail::lower_ext(path);
  if (ext == ".png") return detail::read_png(path);
  if (ext == ".ppm" || ext == ".pnm") return detail::read_ppm(path);

  // Fall back to sniffing the magic bytes.
  std::ifstream in(path, std::ios::binary);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] == 'P' && magic[1] == '6') return detail::read_ppm(path);
  if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') return detail::read_png(path);
  throw IoError("unsupported image format: " + path.string());
}

// Writes PNG unless the extension is .ppm/.pnm. Values are clamped and rounded
// to the nearest 8-bit level.
inline void save_image(const ImageRGB& img, const std::filesystem::path& path) {
  const std::string ext = detail::lower_ext(path);
  if (ext == ".ppm" || ext == ".pnm") {
    detail::write_ppm(img, path);
  } else {
    detail::write_png(img, path);
  }
}

inline void save_image(const ImageGray& img, const std::filesystem::path& path) {
  save_image(gray_to_rgb(img), path);
}

// Single-channel load: the max over channels, so gray files load verbatim.
inline ImageGray load_gray(const std::filesystem::path& path) {
  const ImageRGB rgb = load_image(path);
  ImageGray out(rgb.width(), rgb.height());
  for (std::size_t i = 0; i < rgb.pixel_count(); ++i) {
    out(i) = std::max({rgb(i, 0), rgb(i, 1), rgb(i, 2)});
  }
  return out;
}

// Rounds every value to the nearest 8-bit level, i.e. what a save/load pair
// would produce.
template <int C>
Image<C> quantize8(Image<C> img) {
  for (double& v : img.data()) v = detail::quantize(v) / 255.0;
  return img;
}

}  // namespace lowlight

#pragma once

// Global color-adjustment operators and their canonical text form
// (`brightness:+0.20|saturation:+0.25`).

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "lowlight/error.hpp"
#include "lowlight/image.hpp"

namespace lowlight {

struct Brightness { double amount = 0.0; };
struct Contrast { double amount = 0.0; };
struct Saturation { double amount = 0.0; };
struct WhiteBalance { double amount = 0.0; };  // + warms (R up, B down)
struct ToneTint { double degrees = 0.0; };
struct Gamma { double gamma = 1.0; };
struct Sharpen { double amount = 0.0; double radius = 1.0; };
struct Smooth { double radius = 1.0; };

using ColorOp = std::variant<Brightness, Contrast, Saturation, WhiteBalance,
                             ToneTint, Gamma, Sharpen, Smooth>;

inline constexpr double kFractionMin = -0.9;
inline constexpr double kFractionMax = 4.0;
inline constexpr double kGammaMin = 0.2;
inline constexpr double kGammaMax = 5.0;
inline constexpr double kRadiusMin = 0.5;
inline constexpr double kRadiusMax = 16.0;
inline constexpr double kHueMax = 180.0;
inline constexpr std::size_t kMaxOpsPerCompose = 8;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline bool operator==(const Brightness& a, const Brightness& b) { return a.amount == b.amount; }
inline bool operator==(const Contrast& a, const Contrast& b) { return a.amount == b.amount; }
inline bool operator==(const Saturation& a, const Saturation& b) { return a.amount == b.amount; }
inline bool operator==(const WhiteBalance& a, const WhiteBalance& b) { return a.amount == b.amount; }
inline bool operator==(const ToneTint& a, const ToneTint& b) { return a.degrees == b.degrees; }
inline bool operator==(const Gamma& a, const Gamma& b) { return a.gamma == b.gamma; }
inline bool operator==(const Sharpen& a, const Sharpen& b) {
  return a.amount == b.amount && a.radius == b.radius;
}
inline bool operator==(const Smooth& a, const Smooth& b) { return a.radius == b.radius; }

namespace detail {

inline void check_range(double v, double lo, double hi, const char* what) {
  if (!std::isfinite(v) || v < lo || v > hi) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s parameter %g outside [%g, %g]", what, v, lo, hi);
    throw RangeError(buf);
  }
}

// Per-pixel RGB map over a copy of the image.
template <class F>
ImageRGB map_pixels(const ImageRGB& img, F&& f) {
  ImageRGB out(img.width(), img.height());
  for (std::size_t i = 0; i < img.pixel_count(); ++i) set_pixel(out, i, f(pixel(img, i)));
  return out;
}

}  // namespace detail

inline const char* op_name(const ColorOp& op) {
  return std::visit(overloaded{
                        [](const Brightness&) { return "brightness"; },
                        [](const Contrast&) { return "contrast"; },
                        [](const Saturation&) { return "saturation"; },
                        [](const WhiteBalance&) { return "white_balance"; },
                        [](const ToneTint&) { return "tone_tint"; },
                        [](const Gamma&) { return "gamma"; },
                        [](const Sharpen&) { return "sharpen"; },
                        [](const Smooth&) { return "smooth"; },
                    },
                    op);
}

inline void validate(const ColorOp& op) {
  std::visit(overloaded{
                 [](const Brightness& o) { detail::check_range(o.amount, kFractionMin, kFractionMax, "brightness"); },
                 [](const Contrast& o) { detail::check_range(o.amount, kFractionMin, kFractionMax, "contrast"); },
                 [](const Saturation& o) { detail::check_range(o.amount, kFractionMin, kFractionMax, "saturation"); },
                 [](const WhiteBalance& o) { detail::check_range(o.amount, kFractionMin, kFractionMax, "white_balance"); },
                 [](const ToneTint& o) { detail::check_range(o.degrees, -kHueMax, kHueMax, "tone_tint"); },
                 [](const Gamma& o) { detail::check_range(o.gamma, kGammaMin, kGammaMax, "gamma"); },
                 [](const Sharpen& o) {
                   detail::check_range(o.amount, kFractionMin, kFractionMax, "sharpen amount");
                   detail::check_range(o.radius, kRadiusMin, kRadiusMax, "sharpen radius");
                 },
                 [](const Smooth& o) { detail::check_range(o.radius, kRadiusMin, kRadiusMax, "smooth radius"); },
             },
             op);
}

inline ImageRGB apply_op(const ColorOp& op, const ImageRGB& img) {
  validate(op);
  return std::visit(
      overloaded{
          [&](const Brightness& o) {
            const double k = 1.0 + o.amount;
            return detail::map_pixels(img, [k](Rgb c) {
              for (double& v : c) v = clamp01(v * k);
              return c;
            });
          },
          [&](const Contrast& o) {
            const double mu = mean_luma(img);
            const double k = 1.0 + o.amount;
            return detail::map_pixels(img, [mu, k](Rgb c) {
              for (double& v : c) v = clamp01(mu + k * (v - mu));
              return c;
            });
          },
          [&](const Saturation& o) {
            if (o.amount == 0.0) return img;
            const double k = 1.0 + o.amount;
            return detail::map_pixels(img, [k](const Rgb& c) {
              Hsv h = rgb_to_hsv(c);
              h[1] = clamp01(h[1] * k);
              return hsv_to_rgb(h);
            });
          },
          [&](const WhiteBalance& o) {
            const double red = 1.0 + o.amount;
            const double blue = 1.0 - o.amount;
            return detail::map_pixels(img, [red, blue](Rgb c) {
              c[0] = clamp01(c[0] * red);
              c[1] = clamp01(c[1]);
              c[2] = clamp01(c[2] * blue);
              return c;
            });
          },
          [&](const ToneTint& o) {
            if (o.degrees == 0.0) return img;
            const double d = o.degrees;
            return detail::map_pixels(img, [d](const Rgb& c) {
              Hsv h = rgb_to_hsv(c);
              h[0] += d;
              return hsv_to_rgb(h);
            });
          },
          [&](const Gamma& o) {
            const double e = 1.0 / o.gamma;
            return detail::map_pixels(img, [e](Rgb c) {
              for (double& v : c) v = clamp01(std::pow(clamp01(v), e));
              return c;
            });
          },
          [&](const Sharpen& o) {
            const ImageRGB blurred = gaussian_blur(img, o.radius);
            ImageRGB out(img.width(), img.height());
            for (std::size_t i = 0; i < out.data().size(); ++i) {
              const double v = img.data()[i];
              out.data()[i] = clamp01(v + o.amount * (v - blurred.data()[i]));
            }
            return out;
          },
          [&](const Smooth& o) { return clamped(gaussian_blur(img, o.radius)); },
      },
      op);
}

// Left-to-right application; an empty list is the identity.
inline ImageRGB compose(const std::vector<ColorOp>& ops, const ImageRGB& img) {
  if (ops.size() > kMaxOpsPerCompose) {
    throw RangeError("compose: at most " + std::to_string(kMaxOpsPerCompose) + " ops");
  }
  for (const ColorOp& op : ops) validate(op);
  ImageRGB cur = img;
  for (const ColorOp& op : ops) cur = apply_op(op, cur);
  return cur;
}

namespace detail {

// Two decimals when that is exact, otherwise the shortest round-trip form.
inline std::string format_number(double v, bool sign) {
  char buf[64];
  std::snprintf(buf, sizeof buf, sign ? "%+.2f" : "%.2f", v);
  if (std::strtod(buf, nullptr) == v) return buf;
  char* p = buf;
  if (sign && v >= 0) *p++ = '+';
  auto res = std::to_chars(p, buf + sizeof buf - 1, v);
  *res.ptr = '\0';
  return buf;
}

inline double parse_number(std::string_view s, std::string_view context) {
  std::string str(s);
  if (!str.empty() && str[0] == '+') str.erase(0, 1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(str.data(), str.data() + str.size(), v);
  if (ec != std::errc() || ptr != str.data() + str.size() || str.empty()) {
    throw ParseError("bad number '" + std::string(s) + "' in op '" + std::string(context) + "'",
                     TokenSpan{0, context.size()});
  }
  return v;
}

}  // namespace detail

inline std::string to_string(const ColorOp& op) {
  using detail::format_number;
  const std::string name = op_name(op);
  return std::visit(
      overloaded{
          [&](const Brightness& o) { return name + ":" + format_number(o.amount, true); },
          [&](const Contrast& o) { return name + ":" + format_number(o.amount, true); },
          [&](const Saturation& o) { return name + ":" + format_number(o.amount, true); },
          [&](const WhiteBalance& o) { return name + ":" + format_number(o.amount, true); },
          [&](const ToneTint& o) { return name + ":" + format_number(o.degrees, true); },
          [&](const Gamma& o) { return name + ":" + format_number(o.gamma, false); },
          [&](const Sharpen& o) {
            return name + ":" + format_number(o.amount, true) + "@" + format_number(o.radius, false);
          },
          [&](const Smooth& o) { return name + ":" + format_number(o.radius, false); },
      },
      op);
}

inline std::string to_string(const std::vector<ColorOp>& ops) {
  std::string out;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (i) out += '|';
    out += to_string(ops[i]);
  }
  return out;
}

inline ColorOp parse_op(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ParseError("missing ':' in op '" + std::string(text) + "'", TokenSpan{0, text.size()});
  }
  const std::string_view name = text.substr(0, colon);
  const std::string_view arg = text.substr(colon + 1);
  auto num = [&](std::string_view s) { return detail::parse_number(s, text); };

  ColorOp op;
  if (name == "brightness") {
    op = Brightness{num(arg)};
  } else if (name == "contrast") {
    op = Contrast{num(arg)};
  } else if (name == "saturation") {
    op = Saturation{num(arg)};
  } else if (name == "white_balance") {
    op = WhiteBalance{num(arg)};
  } else if (name == "tone_tint") {
    op = ToneTint{num(arg)};
  } else if (name == "gamma") {
    op = Gamma{num(arg)};
  } else if (name == "sharpen") {
    const auto at = arg.find('@');
    op = at == std::string_view::npos ? Sharpen{num(arg), 1.0}
                                      : Sharpen{num(arg.substr(0, at)), num(arg.substr(at + 1))};
  } else if (name == "smooth") {
    op = Smooth{num(arg)};
  } else {
    throw ParseError("unknown op '" + std::string(name) + "'", TokenSpan{0, name.size()});
  }
  validate(op);
  return op;
}

inline std::vector<ColorOp> parse_ops(std::string_view text) {
  std::vector<ColorOp> ops;
  if (text.empty()) return ops;
  std::size_t start = 0;
  while (true) {
    const auto bar = text.find('|', start);
    ops.push_back(parse_op(text.substr(start, bar == std::string_view::npos ? bar : bar - start)));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return ops;
}

}  // namespace lowlight

#pragma once

// Recursive-descent compiler from constrained English instructions to an
// AdjustmentPlan. README.md has the adverb table and worked examples.
//
//   command  = clause { ( "and" | "," [ "and" ] ) clause } [ "." ]
//   clause   = light | attr | tone | detail | raw
//   light    = ( "brighten" | "darken" ) [ target ] [ amount ]
//   attr     = ( "increase" | "decrease" ) attribute [ "of" target ] [ amount ]
//   tone     = ( "warm" | "cool" ) [ target ] [ amount ]
//   detail   = ( "sharpen" | "smooth" ) [ target ] [ amount ]
//   raw      = "apply" op-text
//   target   = "it" | "image" | "the" phrase | "region" quoted
//   amount   = adverb | "by" number ( "%" | "percent" )

#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lowlight/error.hpp"
#include "lowlight/toolset.hpp"

namespace lowlight {

inline constexpr double kRatioMin = -0.9;
inline constexpr double kRatioMax = 4.0;
inline constexpr std::size_t kMaxPromptLength = 1024;

struct WholeImage {
  friend bool operator==(const WholeImage&, const WholeImage&) = default;
};
struct NamedRegion {
  std::string phrase;
  friend bool operator==(const NamedRegion&, const NamedRegion&) = default;
};
using TargetSpec = std::variant<WholeImage, NamedRegion>;

struct AdjustmentPlan {
  TargetSpec target = WholeImage{};
  double brightness_ratio = 0.0;  // +0.10 brightens by 10%
  std::vector<ColorOp> color_ops;
  std::string raw_prompt;
};

// A prompt value outside its allowed range. Reported as a parse failure.
class PromptRangeError : public ParseError {
 public:
  using ParseError::ParseError;
};

struct Adverb {
  std::string_view words;
  double intensity;
};

// The one table mapping vague intensity words to quantities.
inline constexpr Adverb kAdverbs[] = {
    {"a little", 0.10},   {"slightly", 0.10}, {"moderately", 0.30}, {"somewhat", 0.30},
    {"a lot", 1.00},      {"strongly", 1.00}, {"dramatically", 1.50},
};
inline constexpr double kDefaultIntensity = 0.30;  // "moderately", used when no amount is given

inline std::optional<double> adverb_intensity(std::string_view words) {
  for (const Adverb& a : kAdverbs) {
    if (a.words == words) return a.intensity;
  }
  return std::nullopt;
}

// Reduction that exactly undoes an increase by r: (1 + r)(1 - r/(1+r)) = 1.
inline double inverse_fraction(double r) { return -r / (1.0 + r); }

namespace detail {

enum class TokKind { Word, Number, Percent, Comma, Period, Quoted, End };

struct Token {
  TokKind kind;
  std::string text;  // lowercased for words
  TokenSpan span;
};

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const unsigned char ch = static_cast<unsigned char>(src[i]);
    if (std::isspace(ch)) {
      ++i;
    } else if (std::isalpha(ch) || ch >= 0x80) {
      std::size_t j = i;
      while (j < src.size()) {
        const unsigned char c = static_cast<unsigned char>(src[j]);
        if (std::isalnum(c) || c >= 0x80 || c == '-' || c == '\'' || c == '_' ||
            c == ':' || c == '@' || c == '+' ||
            (c == '.' && j + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[j + 1])))) {
          ++j;
        } else {
          break;
        }
      }
      std::string text(src.substr(i, j - i));
      for (char& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back({TokKind::Word, std::move(text), {i, j}});
      i = j;
    } else if (std::isdigit(ch) || ((ch == '+' || ch == '-') && i + 1 < src.size() &&
                                    std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i + 1;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      // A trailing '.' ends the sentence, not the number.
      if (src[j - 1] == '.') --j;
      out.push_back({TokKind::Number, std::string(src.substr(i, j - i)), {i, j}});
      i = j;
    } else if (ch == '%') {
      out.push_back({TokKind::Percent, "%", {i, i + 1}});
      ++i;
    } else if (ch == ',') {
      out.push_back({TokKind::Comma, ",", {i, i + 1}});
      ++i;
    } else if (ch == '.' || ch == '!') {
      out.push_back({TokKind::Period, ".", {i, i + 1}});
      ++i;
    } else if (ch == '\'' || ch == '"') {
      const std::size_t close = src.find(static_cast<char>(ch), i + 1);
      if (close == std::string_view::npos) {
        throw ParseError("unterminated quote", TokenSpan{i, src.size()});
      }
      out.push_back({TokKind::Quoted, std::string(src.substr(i + 1, close - i - 1)), {i, close + 1}});
      i = close + 1;
    } else {
      throw ParseError(std::string("unexpected character '") + static_cast<char>(ch) + "'",
                       TokenSpan{i, i + 1});
    }
  }
  out.push_back({TokKind::End, "", {src.size(), src.size()}});
  return out;
}

inline bool is_whole_image_phrase(std::string_view p) {
  return p == "image" || p == "photo" || p == "picture" || p == "scene" ||
         p == "whole image" || p == "entire image" || p == "whole picture" ||
         p == "entire photo" || p == "whole photo";
}

enum class Attribute { Brightness, Saturation, Contrast, Warmth };

// How an amount was written; decides between direct and inverse reduction.
struct Amount {
  double value;
  bool from_adverb;
  TokenSpan span;
};

class PromptParser {
 public:
  explicit PromptParser(std::string_view src) : src_(src), toks_(tokenize(src)) {}

  AdjustmentPlan parse() {
    AdjustmentPlan plan;
    plan.raw_prompt = std::string(src_);
    if (peek().kind == TokKind::End) throw ParseError("empty prompt", peek().span);
    clause(plan);
    while (true) {
      if (peek().kind == TokKind::Comma) {
        take();
        if (is_word("and")) take();
        clause(plan);
      } else if (is_word("and")) {
        take();
        clause(plan);
      } else {
        break;
      }
    }
    if (peek().kind == TokKind::Period) take();
    if (peek().kind != TokKind::End) {
      throw ParseError("unexpected '" + describe(peek()) + "' after clause", peek().span);
    }
    if (plan.color_ops.size() > kMaxOpsPerCompose) {
      throw PromptRangeError("too many color adjustments", TokenSpan{0, src_.size()});
    }
    return plan;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  bool is_word(std::string_view w, std::size_t ahead = 0) const {
    return peek(ahead).kind == TokKind::Word && peek(ahead).text == w;
  }
  static std::string describe(const Token& t) {
    return t.kind == TokKind::End ? std::string("end of input") : t.text;
  }

  void clause(AdjustmentPlan& plan) {
    const Token& verb = peek();
    if (verb.kind != TokKind::Word) {
      throw ParseError("expected a verb, found '" + describe(verb) + "'", verb.span);
    }
    const std::string v = verb.text;
    const TokenSpan vspan = verb.span;
    if (v == "brighten" || v == "darken") {
      take();
      light_clause(plan, v == "brighten", vspan);
    } else if (v == "increase" || v == "decrease") {
      take();
      attr_clause(plan, v == "increase");
    } else if (v == "warm" || v == "cool") {
      take();
      global_target();
      const double r = amount_or_default();
      double f = last_amount_.from_adverb ? r / (1.0 + r) : r;
      add_op(plan, WhiteBalance{v == "warm" ? f : -f}, vspan);
    } else if (v == "sharpen") {
      take();
      global_target();
      add_op(plan, Sharpen{amount_or_default(), 1.0}, vspan);
    } else if (v == "smooth") {
      take();
      global_target();
      add_op(plan, Smooth{1.0 + 2.0 * amount_or_default()}, vspan);
    } else if (v == "apply") {
      take();
      const Token& t = take();
      if (t.kind != TokKind::Word) throw ParseError("expected an op after 'apply'", t.span);
      ColorOp op;
      try {
        op = parse_op(t.text);
      } catch (const RangeError& e) {
        throw PromptRangeError(e.what(), t.span);
      } catch (const ParseError&) {
        throw ParseError("malformed op '" + t.text + "'", t.span);
      }
      add_op(plan, op, t.span);
    } else {
      throw ParseError("unrecognized verb '" + v + "'", vspan);
    }
  }

  void light_clause(AdjustmentPlan& plan, bool brighten, TokenSpan vspan) {
    std::optional<TargetSpec> target = optional_target();
    const double r = amount_or_default();
    set_brightness(plan, brighten ? r : (last_amount_.from_adverb ? inverse_fraction(r) : -r),
                   target.value_or(WholeImage{}), vspan);
  }

  void attr_clause(AdjustmentPlan& plan, bool increase) {
    const Token& a = peek();
    Attribute attr;
    if (is_word("brightness")) {
      attr = Attribute::Brightness;
    } else if (is_word("saturation")) {
      attr = Attribute::Saturation;
    } else if (is_word("contrast")) {
      attr = Attribute::Contrast;
    } else if (is_word("warmth")) {
      attr = Attribute::Warmth;
    } else {
      throw ParseError("expected brightness, saturation, contrast or warmth, found '" +
                           describe(a) + "'",
                       a.span);
    }
    const TokenSpan aspan = take().span;
    std::optional<TargetSpec> target;
    if (is_word("of")) {
      take();
      target = optional_target();
      if (!target) throw ParseError("expected a target after 'of'", peek().span);
    }
    const double r = amount_or_default();
    const double down = last_amount_.from_adverb ? inverse_fraction(r) : -r;
    const double signed_amount = increase ? r : down;

    if (attr == Attribute::Brightness) {
      set_brightness(plan, signed_amount, target.value_or(WholeImage{}), aspan);
      return;
    }
    if (target && std::holds_alternative<NamedRegion>(*target)) {
      throw ParseError("color adjustments apply to the whole image", aspan);
    }
    switch (attr) {
      case Attribute::Saturation: add_op(plan, Saturation{signed_amount}, aspan); break;
      case Attribute::Contrast: add_op(plan, Contrast{signed_amount}, aspan); break;
      default: {
        const double f = last_amount_.from_adverb ? r / (1.0 + r) : r;
        add_op(plan, WhiteBalance{increase ? f : -f}, aspan);
      }
    }
  }

  void set_brightness(AdjustmentPlan& plan, double ratio, TargetSpec target, TokenSpan span) {
    if (brightness_set_) throw ParseError("brightness is specified more than once", span);
    brightness_set_ = true;
    if (ratio < kRatioMin - 1e-12 || ratio > kRatioMax + 1e-12) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "brightness change %g%% outside [-90%%, +400%%]", ratio * 100.0);
      throw PromptRangeError(buf, last_amount_.span);
    }
    plan.brightness_ratio = ratio;
    plan.target = std::move(target);
  }

  void add_op(AdjustmentPlan& plan, ColorOp op, TokenSpan span) {
    try {
      validate(op);
    } catch (const RangeError& e) {
      throw PromptRangeError(e.what(), span);
    }
    plan.color_ops.push_back(op);
  }

  // Color and detail verbs only accept whole-image targets.
  void global_target() {
    const std::size_t start = pos_;
    std::optional<TargetSpec> t = optional_target();
    if (t && std::holds_alternative<NamedRegion>(*t)) {
      throw ParseError("color adjustments apply to the whole image",
                       TokenSpan{toks_[start].span.begin, peek().span.begin});
    }
  }

  std::optional<TargetSpec> optional_target() {
    if (is_word("it") || is_word("image") || is_word("everything")) {
      take();
      return WholeImage{};
    }
    if (is_word("region")) {
      const TokenSpan rs = take().span;
      const Token& q = take();
      if (q.kind != TokKind::Quoted || q.text.empty()) {
        throw ParseError("expected a quoted region name after 'region'", TokenSpan{rs.begin, q.span.end});
      }
      return NamedRegion{q.text};
    }
    if (is_word("the")) {
      const TokenSpan the = take().span;
      std::string phrase;
      while (peek().kind == TokKind::Word && !starts_amount() && !is_word("and")) {
        if (!phrase.empty()) phrase += ' ';
        phrase += take().text;
      }
      if (phrase.empty()) throw ParseError("expected a phrase after 'the'", TokenSpan{the.begin, peek().span.end});
      if (is_whole_image_phrase(phrase)) return WholeImage{};
      return NamedRegion{phrase};
    }
    return std::nullopt;
  }

  bool starts_amount() const {
    if (is_word("by")) return true;
    if (is_word("a") && (is_word("little", 1) || is_word("lot", 1))) return true;
    return peek().kind == TokKind::Word && adverb_intensity(peek().text).has_value();
  }

  double amount_or_default() {
    const Token& t = peek();
    if (is_word("by")) {
      take();
      const Token& n = take();
      if (n.kind != TokKind::Number) {
        throw ParseError("expected a number after 'by', found '" + describe(n) + "'", n.span);
      }
      const Token& pct = peek();
      if (pct.kind == TokKind::Percent || (pct.kind == TokKind::Word && pct.text == "percent")) {
        take();
      } else {
        throw ParseError("expected '%' after the number", pct.span);
      }
      char* end = nullptr;
      const double v = std::strtod(n.text.c_str(), &end);
      if (end != n.text.c_str() + n.text.size() || !std::isfinite(v)) {
        throw ParseError("malformed number '" + n.text + "'", n.span);
      }
      last_amount_ = {v / 100.0, false, TokenSpan{t.span.begin, pct.span.end}};
      return last_amount_.value;
    }
    if (is_word("a") && (is_word("little", 1) || is_word("lot", 1))) {
      const TokenSpan s{t.span.begin, peek(1).span.end};
      const std::string words = "a " + peek(1).text;
      take();
      take();
      last_amount_ = {*adverb_intensity(words), true, s};
      return last_amount_.value;
    }
    if (t.kind == TokKind::Word) {
      if (auto v = adverb_intensity(t.text)) {
        take();
        last_amount_ = {*v, true, t.span};
        return *v;
      }
    }
    last_amount_ = {kDefaultIntensity, true, t.span};
    return kDefaultIntensity;
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  bool brightness_set_ = false;
  Amount last_amount_{0.0, true, {0, 0}};
};

inline std::string percent(double fraction) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g%%", std::fabs(fraction) * 100.0);
  return buf;
}

}  // namespace detail

inline AdjustmentPlan parse(std::string_view prompt) {
  if (prompt.size() > kMaxPromptLength) {
    throw ParseError("prompt longer than 1024 bytes", TokenSpan{kMaxPromptLength, prompt.size()});
  }
  return detail::PromptParser(prompt).parse();
}

// Canonical rendering. parse(explain(p)) reproduces p up to the six
// significant digits used for percentages.
inline std::string explain(const AdjustmentPlan& plan) {
  using detail::percent;
  std::vector<std::string> clauses;
  const bool region = std::holds_alternative<NamedRegion>(plan.target);
  if (plan.brightness_ratio != 0.0 || region || plan.color_ops.empty()) {
    std::string c = plan.brightness_ratio < 0.0 ? "darken " : "brighten ";
    if (region) {
      const std::string& phrase = std::get<NamedRegion>(plan.target).phrase;
      const char q = phrase.find('\'') == std::string::npos ? '\'' : '"';
      c += "region " + std::string(1, q) + phrase + q;
    } else {
      c += "image";
    }
    c += " by " + percent(plan.brightness_ratio);
    clauses.push_back(std::move(c));
  }
  for (const ColorOp& op : plan.color_ops) {
    auto signed_attr = [&](const char* attr, double f) {
      return std::string(f < 0.0 ? "decrease " : "increase ") + attr + " by " + percent(f);
    };
    clauses.push_back(std::visit(
        overloaded{
            [&](const Saturation& o) { return signed_attr("saturation", o.amount); },
            [&](const Contrast& o) { return signed_attr("contrast", o.amount); },
            [&](const WhiteBalance& o) {
              return std::string(o.amount < 0.0 ? "cool" : "warm") + " by " + percent(o.amount);
            },
            [&](const Sharpen& o) {
              if (o.radius == 1.0 && o.amount >= 0.0) return "sharpen by " + percent(o.amount);
              return "apply " + to_string(ColorOp{o});
            },
            [&](const Smooth& o) {
              if (o.radius >= 1.0) return "smooth by " + percent((o.radius - 1.0) / 2.0);
              return "apply " + to_string(ColorOp{o});
            },
            [&](const auto& o) { return "apply " + to_string(ColorOp{o}); },
        },
        op));
  }
  std::string out;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (i) out += " and ";
    out += clauses[i];
  }
  return out;
}

// Equality up to a relative tolerance on every number; raw_prompt is ignored.
inline bool equivalent(const AdjustmentPlan& a, const AdjustmentPlan& b, double tol = 1e-6) {
  auto close = [tol](double x, double y) { return std::fabs(x - y) <= tol * std::max(1.0, std::fabs(x)); };
  if (a.target != b.target || !close(a.brightness_ratio, b.brightness_ratio)) return false;
  if (a.color_ops.size() != b.color_ops.size()) return false;
  for (std::size_t i = 0; i < a.color_ops.size(); ++i) {
    const ColorOp& x = a.color_ops[i];
    const ColorOp& y = b.color_ops[i];
    if (x.index() != y.index()) return false;
    const bool same = std::visit(
        overloaded{
            [&](const Brightness& o) { return close(o.amount, std::get<Brightness>(y).amount); },
            [&](const Contrast& o) { return close(o.amount, std::get<Contrast>(y).amount); },
            [&](const Saturation& o) { return close(o.amount, std::get<Saturation>(y).amount); },
            [&](const WhiteBalance& o) { return close(o.amount, std::get<WhiteBalance>(y).amount); },
            [&](const ToneTint& o) { return close(o.degrees, std::get<ToneTint>(y).degrees); },
            [&](const Gamma& o) { return close(o.gamma, std::get<Gamma>(y).gamma); },
            [&](const Sharpen& o) {
              return close(o.amount, std::get<Sharpen>(y).amount) &&
                     close(o.radius, std::get<Sharpen>(y).radius);
            },
            [&](const Smooth& o) { return close(o.radius, std::get<Smooth>(y).radius); },
        },
        x);
    if (!same) return false;
  }
  return true;
}

}  // namespace lowlight

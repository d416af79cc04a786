#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lowlight/toolset.hpp"
#include "lowlight/io.hpp"

namespace ll = lowlight;

TEST(Toolset, BrightnessScalesAndClamps) {
  const auto img = ll::testing::uniform(2, 2, 0.2, 0.5, 0.9);
  const auto out = ll::apply_op(ll::Brightness{0.2}, img);
  EXPECT_DOUBLE_EQ(out(0, 0), 0.24);
  EXPECT_DOUBLE_EQ(out(0, 1), 0.6);
  EXPECT_EQ(out(0, 2), 1.0);
}

// Two gray pixels 0.2 and 0.6: mean luma 0.4, so +50% contrast maps them to
// 0.4 -/+ 1.5 * 0.2.
TEST(Toolset, ContrastPivotsOnMeanLuma) {
  ll::ImageRGB img(2, 1);
  ll::set_pixel(img, 0, {0.2, 0.2, 0.2});
  ll::set_pixel(img, 1, {0.6, 0.6, 0.6});
  const auto out = ll::apply_op(ll::Contrast{0.5}, img);
  EXPECT_NEAR(out(0, 0), 0.1, 1e-15);
  EXPECT_NEAR(out(1, 2), 0.7, 1e-15);
}

TEST(Toolset, SaturationScalesHsvSaturation) {
  const auto img = ll::testing::uniform(1, 1, 0.8, 0.4, 0.4);
  const auto out = ll::apply_op(ll::Saturation{0.25}, img);
  const auto hsv = ll::rgb_to_hsv(ll::pixel(out, 0));
  EXPECT_NEAR(hsv[1], 0.5 * 1.25, 1e-12);
  EXPECT_NEAR(hsv[2], 0.8, 1e-12);
  EXPECT_NEAR(hsv[0], 0.0, 1e-9);
}

TEST(Toolset, WhiteBalanceWarmsRedAndCoolsBlue) {
  const auto img = ll::testing::uniform(1, 1, 0.5, 0.5, 0.5);
  const auto out = ll::apply_op(ll::WhiteBalance{0.1}, img);
  EXPECT_DOUBLE_EQ(out(0, 0), 0.55);
  EXPECT_DOUBLE_EQ(out(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(out(0, 2), 0.45);
}

TEST(Toolset, ToneTintRotatesHue) {
  const auto img = ll::testing::uniform(1, 1, 1.0, 0.0, 0.0);
  const auto out = ll::apply_op(ll::ToneTint{120.0}, img);
  EXPECT_NEAR(out(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(out(0, 1), 1.0, 1e-12);
}

TEST(Toolset, GammaUsesInverseExponent) {
  const auto img = ll::testing::uniform(1, 1, 0.25, 0.25, 0.25);
  EXPECT_DOUBLE_EQ(ll::apply_op(ll::Gamma{2.0}, img)(0, 0), 0.5);
}

TEST(Toolset, SharpenIsUnsharpMask) {
  const auto img = ll::testing::noise(5, 12, 12, 0.3, 0.7);
  const auto blurred = ll::gaussian_blur(img, 1.0);
  const auto out = ll::apply_op(ll::Sharpen{0.5, 1.0}, img);
  for (std::size_t k = 0; k < img.data().size(); ++k) {
    const double v = img.data()[k];
    EXPECT_NEAR(out.data()[k], ll::clamp01(v + 0.5 * (v - blurred.data()[k])), 1e-15);
  }
}

TEST(Toolset, SmoothIsGaussianBlur) {
  const auto img = ll::testing::noise(6, 12, 12);
  EXPECT_EQ(ll::apply_op(ll::Smooth{2.0}, img), ll::gaussian_blur(img, 2.0));
}

TEST(Toolset, NeutralOpsAreIdentity) {
  const auto img = ll::quantize8(ll::testing::noise(8, 10, 10));
  for (const ll::ColorOp& op : {ll::ColorOp(ll::Brightness{0}), ll::ColorOp(ll::Contrast{0}),
                                ll::ColorOp(ll::Saturation{0}), ll::ColorOp(ll::WhiteBalance{0}),
                                ll::ColorOp(ll::ToneTint{0}), ll::ColorOp(ll::Gamma{1}),
                                ll::ColorOp(ll::Sharpen{0, 1})}) {
    const auto out = ll::apply_op(op, img);
    for (std::size_t k = 0; k < img.data().size(); ++k) EXPECT_NEAR(out.data()[k], img.data()[k], 1e-15);
  }
}

TEST(Toolset, RangesAreEnforced) {
  EXPECT_THROW(ll::validate(ll::Brightness{-0.95}), ll::RangeError);
  EXPECT_THROW(ll::validate(ll::Saturation{4.5}), ll::RangeError);
  EXPECT_THROW(ll::validate(ll::Gamma{0.1}), ll::RangeError);
  EXPECT_THROW(ll::validate(ll::Smooth{20}), ll::RangeError);
  EXPECT_THROW(ll::validate(ll::ToneTint{181}), ll::RangeError);
  EXPECT_THROW(ll::validate(ll::Sharpen{0.5, 0.1}), ll::RangeError);
  EXPECT_NO_THROW(ll::validate(ll::Brightness{4.0}));
}

TEST(Toolset, ComposeAppliesLeftToRightAndCapsLength) {
  const auto img = ll::testing::uniform(1, 1, 0.4, 0.4, 0.4);
  const auto out = ll::compose({ll::Brightness{0.5}, ll::Gamma{2.0}}, img);
  EXPECT_NEAR(out(0, 0), std::sqrt(0.6), 1e-15);
  EXPECT_EQ(ll::compose({}, img), img);
  std::vector<ll::ColorOp> nine(9, ll::Brightness{0.0});
  EXPECT_THROW(ll::compose(nine, img), ll::RangeError);
}

TEST(Toolset, CanonicalTextRoundTrip) {
  EXPECT_EQ(ll::to_string(std::vector<ll::ColorOp>{ll::Brightness{0.2}, ll::Saturation{0.25}}),
            "brightness:+0.20|saturation:+0.25");
  EXPECT_EQ(ll::to_string(ll::Sharpen{0.5, 1.0}), "sharpen:+0.50@1.00");
  EXPECT_EQ(ll::to_string(ll::Gamma{1.0 / 3.0}), "gamma:0.3333333333333333");
  const std::vector<ll::ColorOp> ops{ll::Contrast{-0.125}, ll::WhiteBalance{0.05},  ll::ToneTint{-12.5},
                                     ll::Gamma{1.0 / 3.0}, ll::Sharpen{1.25, 2.5}, ll::Smooth{0.75}};
  EXPECT_EQ(ll::parse_ops(ll::to_string(ops)), ops);
}

TEST(Toolset, ParseOpErrors) {
  EXPECT_THROW(ll::parse_op("brightness"), ll::ParseError);
  EXPECT_THROW(ll::parse_op("fizz:+0.1"), ll::ParseError);
  EXPECT_THROW(ll::parse_op("gamma:abc"), ll::ParseError);
  EXPECT_THROW(ll::parse_op("gamma:9"), ll::RangeError);
}

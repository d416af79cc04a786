#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "lowlight/image.hpp"

namespace ll = lowlight;

TEST(Image, RejectsNonPositiveDimensions) {
  EXPECT_THROW(ll::ImageRGB(0, 4), ll::ComputeError);
  EXPECT_THROW(ll::ImageGray(3, -1), ll::ComputeError);
  EXPECT_THROW(ll::ImageRGB(2, 2, std::vector<double>(5)), ll::ComputeError);
}

TEST(Image, RowMajorInterleavedLayout) {
  ll::ImageRGB img(3, 2);
  img.at(2, 1, 1) = 0.25;
  EXPECT_EQ(img.data()[(1 * 3 + 2) * 3 + 1], 0.25);
  EXPECT_EQ(img(5, 1), 0.25);
}

TEST(Image, SizeMismatchIsReported) {
  EXPECT_THROW(ll::require_same_size(ll::ImageRGB(2, 2), ll::ImageGray(2, 3), "x"), ll::ComputeError);
  EXPECT_NO_THROW(ll::require_same_size(ll::ImageRGB(2, 3), ll::ImageGray(2, 3), "x"));
}

TEST(Hsv, RoundTripWithinTolerance) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const ll::Rgb c{u(rng), u(rng), u(rng)};
    const ll::Rgb back = ll::hsv_to_rgb(ll::rgb_to_hsv(c));
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::fabs(back[k] - c[k]));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Hsv, KnownColors) {
  const auto red = ll::rgb_to_hsv({1, 0, 0});
  EXPECT_DOUBLE_EQ(red[0], 0.0);
  EXPECT_DOUBLE_EQ(red[1], 1.0);
  EXPECT_DOUBLE_EQ(red[2], 1.0);
  EXPECT_DOUBLE_EQ(ll::rgb_to_hsv({0, 1, 0})[0], 120.0);
  EXPECT_DOUBLE_EQ(ll::rgb_to_hsv({0, 0, 1})[0], 240.0);
  const auto gray = ll::rgb_to_hsv({0.4, 0.4, 0.4});
  EXPECT_EQ(gray[0], 0.0);
  EXPECT_EQ(gray[1], 0.0);
}

TEST(Luma, Rec601Weights) {
  EXPECT_NEAR(ll::luma({1, 1, 1}), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(ll::luma({1, 0, 0}), 0.299);
  EXPECT_DOUBLE_EQ(ll::luma({0, 1, 0}), 0.587);
  EXPECT_DOUBLE_EQ(ll::luma({0, 0, 1}), 0.114);
}

TEST(Blur, KernelIsNormalizedAndTruncatedAtThreeSigma) {
  const auto k = ll::gaussian_kernel(1.5);
  EXPECT_EQ(k.size(), 2u * 5 + 1);
  double sum = 0.0;
  for (double w : k) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(Blur, NonPositiveSigmaIsIdentity) {
  const auto img = ll::testing::noise(1, 9, 7);
  EXPECT_EQ(ll::gaussian_blur(img, 0.0), img);
  EXPECT_EQ(ll::gaussian_blur(img, -2.0), img);
}

TEST(Blur, PreservesConstantImage) {
  const auto img = ll::testing::uniform(11, 6, 0.3, 0.5, 0.7);
  const auto out = ll::gaussian_blur(img, 2.0);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    EXPECT_NEAR(out(i, 0), 0.3, 1e-14);
    EXPECT_NEAR(out(i, 2), 0.7, 1e-14);
  }
}

// Direct 2-D convolution with the outer-product kernel and edge clamp.
TEST(Blur, MatchesBruteForceTwoDimensionalConvolution) {
  const auto img = ll::testing::noise(3, 13, 10);
  const double sigma = 1.3;
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k1(2 * r + 1);
  double s = 0.0;
  for (int i = -r; i <= r; ++i) s += k1[i + r] = std::exp(-i * i / (2 * sigma * sigma));
  for (double& v : k1) v /= s;

  const auto fast = ll::gaussian_blur(img, sigma);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            const int xx = std::clamp(x + dx, 0, img.width() - 1);
            const int yy = std::clamp(y + dy, 0, img.height() - 1);
            acc += k1[dx + r] * k1[dy + r] * img.at(xx, yy, c);
          }
        }
        EXPECT_NEAR(fast.at(x, y, c), acc, 1e-13);
      }
    }
  }
}

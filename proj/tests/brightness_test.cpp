#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lowlight/brightness.hpp"

namespace ll = lowlight;

// Two pixels at 0.2 and 0.6: inverted 0.8 and 0.4, mean 0.6, centered +0.2 and
// -0.2, normalized to 1 and 0.
TEST(InitialMap, TwoPixelOracle) {
  ll::ImageGray illum(2, 1, std::vector<double>{0.2, 0.6});
  const auto m = ll::initial_map(illum);
  EXPECT_NEAR(m(0), 1.0, 1e-15);
  EXPECT_NEAR(m(1), 0.0, 1e-15);
}

TEST(InitialMap, ClipsBeforeNormalizing) {
  // 0.0 inverts to 1.0 and clips to 0.95; 0.01 inverts to 0.99 and clips to
  // 0.95 too, so the two darkest pixels tie.
  ll::ImageGray illum(3, 1, std::vector<double>{0.0, 0.01, 0.5});
  const auto m = ll::initial_map(illum);
  EXPECT_EQ(m(0), m(1));
  EXPECT_NEAR(m(0), 1.0, 1e-15);
  EXPECT_NEAR(m(2), 0.0, 1e-15);
}

TEST(InitialMap, ConstantIlluminationGivesHalf) {
  const auto m = ll::initial_map(ll::ImageGray(5, 4, 0.3));
  for (double v : m.data()) EXPECT_EQ(v, 0.5);
}

TEST(SpatialBlend, UniformInitGivesExactRatio) {
  const ll::ImageGray m(16, 12, 0.5);
  const ll::ImageGray mask(16, 12, 1.0);
  for (double r : {0.1, 0.3, 1.0, 1.5, -0.4}) {
    const auto adj = ll::spatial_blend(m, r, mask, 4.0);
    EXPECT_NEAR(ll::mean(adj.map), std::fabs(r), 1e-12);
    EXPECT_EQ(adj.ratio, r);
  }
}

TEST(SpatialBlend, MaskWeightedMeanEqualsRatio) {
  const auto img = ll::testing::scene(5, 32, 32);
  const auto m = ll::initial_map(ll::estimate_illumination(img, 4.0));
  ll::ImageGray mask(32, 32, 0.0);
  for (int y = 4; y < 20; ++y)
    for (int x = 6; x < 28; ++x) mask.at(x, y) = 1.0;
  const auto adj = ll::spatial_blend(m, 0.3, mask, 2.0);
  double in = 0.0, count = 0.0;
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    if (mask(i) == 1.0) {
      in += adj.map(i);
      count += 1.0;
    } else {
      EXPECT_EQ(adj.map(i), 0.0);
    }
  }
  EXPECT_NEAR(in / count, 0.3, 1e-12);
}

TEST(SpatialBlend, ErrorsOnEmptyMaskAndBadArguments) {
  const ll::ImageGray m(4, 4, 0.5);
  EXPECT_THROW(ll::spatial_blend(m, 0.3, ll::ImageGray(4, 4, 0.0), 1.0), ll::EmptyRegionError);
  EXPECT_THROW(ll::spatial_blend(m, 4.5, ll::ImageGray(4, 4, 1.0), 1.0), ll::RangeError);
  EXPECT_THROW(ll::spatial_blend(m, 0.3, ll::ImageGray(4, 4, 1.0), -1.0), ll::RangeError);
  EXPECT_THROW(ll::spatial_blend(m, 0.3, ll::ImageGray(4, 5, 1.0), 1.0), ll::ComputeError);
}

TEST(ApplyToIllumination, BrightenAndDarken) {
  ll::ImageGray illum(2, 1, std::vector<double>{0.2, 0.8});
  ll::AdjustmentMap up{ll::ImageGray(2, 1, 0.5), 0.5};
  const auto b = ll::apply_to_illumination(illum, up);
  EXPECT_DOUBLE_EQ(b(0), 0.3);
  EXPECT_EQ(b(1), 1.0);  // clamped
  ll::AdjustmentMap down{ll::ImageGray(2, 1, 1.0), -0.5};
  const auto d = ll::apply_to_illumination(illum, down);
  EXPECT_DOUBLE_EQ(d(0), 0.1);
  EXPECT_DOUBLE_EQ(d(1), 0.4);
}

TEST(ApplyToIllumination, MeanBoostMatchesRatioWhenUnclamped) {
  const ll::ImageGray illum(10, 10, 0.2);
  const auto adj = ll::spatial_blend(ll::initial_map(illum), 0.3, ll::ImageGray(10, 10, 1.0), 3.0);
  const auto out = ll::apply_to_illumination(illum, adj);
  double boost = 0.0;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) boost += out(i) / illum(i) - 1.0;
  EXPECT_NEAR(boost / 100.0, 0.3, 1e-12);
}

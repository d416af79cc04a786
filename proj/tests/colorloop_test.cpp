#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lowlight/colorloop.hpp"
#include "lowlight/reward.hpp"

namespace ll = lowlight;

namespace {

// Prefers mean luma near 0.5.
struct LumaTarget {
  double operator()(const ll::ImageRGB& img) const { return -std::fabs(ll::mean_luma(img) - 0.5); }
};

struct Constant {
  double operator()(const ll::ImageRGB&) const { return 1.0; }
};

}  // namespace

static_assert(ll::ImageScorer<LumaTarget>);
static_assert(ll::ImageScorer<ll::RewardModel>);

TEST(ColorLoop, ReplayOfRecordedScores) {
  const auto flags = ll::replay_acceptance({-2.82, -1.34, -0.93, -1.12, 0.22}, 1e-4);
  EXPECT_EQ(flags, (std::vector<bool>{true, true, false, true}));
}

TEST(ColorLoop, AcceptanceNeedsMarginAboveEpsilon) {
  EXPECT_FALSE(ll::accepts(1.0, 1.0, 0.0));
  EXPECT_FALSE(ll::accepts(1.0, 1.00005, 1e-4));
  EXPECT_TRUE(ll::accepts(1.0, 1.001, 1e-4));
}

TEST(ColorLoop, ImprovesDarkImageAndRecordsTrace) {
  const auto img = ll::testing::uniform(8, 8, 0.2, 0.2, 0.2);
  const auto r = ll::autopolish(img, LumaTarget{});
  ASSERT_FALSE(r.trace.empty());
  EXPECT_GT(r.final_score, r.initial_score);
  EXPECT_EQ(r.final_score, LumaTarget{}(r.image));
  double last = r.initial_score;
  for (const auto& s : r.trace) {
    EXPECT_EQ(s.reward_before, last);
    if (s.accepted) {
      EXPECT_GT(s.reward_after, last);
      last = s.reward_after;
    }
  }
  EXPECT_LE(r.trace.size(), 10u);
}

TEST(ColorLoop, FlatScorerStopsAfterOneRejectedRound) {
  const auto r = ll::autopolish(ll::testing::scene(2), Constant{});
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_FALSE(r.trace[0].accepted);
  EXPECT_EQ(r.image, ll::testing::scene(2));
  // Ties go to the first candidate.
  EXPECT_EQ(r.trace[0].op, ll::default_candidates()[0]);
}

TEST(ColorLoop, MaxItersBoundsRounds) {
  ll::LoopConfig cfg;
  cfg.max_iters = 2;
  cfg.candidates = {ll::Brightness{0.1}};
  const auto r = ll::autopolish(ll::testing::uniform(4, 4, 0.1, 0.1, 0.1), LumaTarget{}, cfg);
  EXPECT_EQ(r.trace.size(), 2u);
  EXPECT_TRUE(r.trace[1].accepted);
}

TEST(ColorLoop, SuggestReturnsBestImprovingOp) {
  ll::LoopConfig cfg;
  cfg.candidates = {ll::Brightness{-0.1}, ll::Brightness{0.5}, ll::Brightness{0.1}};
  const auto s = ll::suggest(ll::testing::uniform(4, 4, 0.2, 0.2, 0.2), LumaTarget{}, cfg);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->op, ll::ColorOp(ll::Brightness{0.5}));
  EXPECT_NEAR(s->delta, 0.1, 1e-12);
  EXPECT_FALSE(ll::suggest(ll::testing::uniform(4, 4, 0.5, 0.5, 0.5), LumaTarget{}, cfg));
}

TEST(ColorLoop, TraceJsonSchema) {
  const auto r = ll::autopolish(ll::testing::uniform(4, 4, 0.2, 0.2, 0.2), LumaTarget{});
  const auto j = ll::trace_to_json(r.trace);
  ASSERT_TRUE(j.is_array());
  for (const auto& step : j) {
    EXPECT_TRUE(step.at("op").is_string());
    EXPECT_TRUE(step.at("reward_before").is_number());
    EXPECT_TRUE(step.at("reward_after").is_number());
    EXPECT_TRUE(step.at("accepted").is_boolean());
  }
}

TEST(ColorLoop, ConfigValidation) {
  ll::LoopConfig cfg;
  cfg.max_iters = 0;
  EXPECT_THROW(cfg.validate(), ll::RangeError);
  cfg.max_iters = 1;
  cfg.candidates.clear();
  EXPECT_THROW(cfg.validate(), ll::RangeError);
}

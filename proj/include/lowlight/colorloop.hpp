#pragma once

// Reward-guided greedy color polishing: each round scores every candidate op
// on the current image and keeps the best one only if it beats the current
// score by more than the acceptance margin.

#include <concepts>
#include <optional>
#include <vector>

#include "json.hpp"
#include "lowlight/image.hpp"
#include "lowlight/toolset.hpp"

namespace lowlight {

template <class S>
concept ImageScorer = requires(const S& s, const ImageRGB& img) {
  { s(img) } -> std::convertible_to<double>;
};

struct AdjustmentStep {
  ColorOp op;
  double reward_before = 0.0;
  double reward_after = 0.0;
  bool accepted = false;
};

inline std::vector<ColorOp> default_candidates() {
  return {
      Brightness{0.10},  Brightness{-0.10}, Brightness{0.20},    Brightness{-0.20},
      Brightness{0.50},  Saturation{0.10},  Saturation{-0.10},   Saturation{0.25},
      Contrast{0.10},    Contrast{-0.10},   ToneTint{10.0},      ToneTint{-10.0},
      WhiteBalance{0.05}, WhiteBalance{-0.05}, Gamma{0.9},       Gamma{1.1},
  };
}

struct LoopConfig {
  std::size_t max_iters = 10;
  double accept_epsilon = 1e-4;
  std::vector<ColorOp> candidates = default_candidates();

  void validate() const {
    if (max_iters < 1) throw RangeError("loop config: max_iters must be >= 1");
    if (candidates.empty()) throw RangeError("loop config: candidate set is empty");
    for (const auto& op : candidates) lowlight::validate(op);
  }
};

inline bool accepts(double reward_before, double reward_after, double epsilon) {
  return reward_after > reward_before + epsilon;
}

// Applies the acceptance rule to a recorded score sequence: the first entry
// is the starting score, each later entry a proposal measured against the
// last accepted score.
inline std::vector<bool> replay_acceptance(const std::vector<double>& scores, double epsilon) {
  std::vector<bool> flags;
  if (scores.empty()) return flags;
  double current = scores.front();
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const bool ok = accepts(current, scores[i], epsilon);
    flags.push_back(ok);
    if (ok) current = scores[i];
  }
  return flags;
}

struct Suggestion {
  ColorOp op;
  double delta = 0.0;  // score(apply_op(op, img)) - score(img)
};

struct PolishResult {
  ImageRGB image;
  std::vector<AdjustmentStep> trace;
  double initial_score = 0.0;
  double final_score = 0.0;
  bool reached_positive = false;
};

namespace detail {

struct BestCandidate {
  std::size_t index = 0;
  ImageRGB image;
  double score = 0.0;
};

// Ties go to the lower candidate index.
template <ImageScorer S>
BestCandidate best_candidate(const ImageRGB& img, const S& scorer, const std::vector<ColorOp>& ops) {
  BestCandidate best;
  bool have = false;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    ImageRGB out = apply_op(ops[i], img);
    const double s = scorer(out);
    if (!have || s > best.score) {
      best = {i, std::move(out), s};
      have = true;
    }
  }
  return best;
}

}  // namespace detail

template <ImageScorer S>
std::optional<Suggestion> suggest(const ImageRGB& img, const S& scorer, const LoopConfig& cfg = {}) {
  cfg.validate();
  const double now = scorer(img);
  auto best = detail::best_candidate(img, scorer, cfg.candidates);
  if (!accepts(now, best.score, cfg.accept_epsilon)) return std::nullopt;
  return Suggestion{cfg.candidates[best.index], best.score - now};
}

// Stops at the first round whose best candidate is rejected (recorded in the
// trace) or after max_iters rounds.
template <ImageScorer S>
PolishResult autopolish(const ImageRGB& img, const S& scorer, const LoopConfig& cfg = {}) {
  cfg.validate();
  PolishResult r;
  r.image = img;
  r.initial_score = scorer(img);
  double current = r.initial_score;
  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    auto best = detail::best_candidate(r.image, scorer, cfg.candidates);
    const bool ok = accepts(current, best.score, cfg.accept_epsilon);
    r.trace.push_back({cfg.candidates[best.index], current, best.score, ok});
    if (!ok) break;
    r.image = std::move(best.image);
    current = best.score;
  }
  r.final_score = current;
  r.reached_positive = current > 0.0;
  return r;
}

inline nlohmann::json trace_to_json(const std::vector<AdjustmentStep>& trace) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : trace) {
    j.push_back({{"op", to_string(s.op)},
                 {"reward_before", s.reward_before},
                 {"reward_after", s.reward_after},
                 {"accepted", s.accepted}});
  }
  return j;
}

}  // namespace lowlight

#pragma once

// Aesthetic reward evaluator: ten closed-form image statistics, a linear
// scoring head over standardized features, and pairwise ranking-loss training
// on best-first rankings.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lowlight/error.hpp"
#include "lowlight/image.hpp"

namespace lowlight {

inline constexpr std::size_t kFeatureCount = 10;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "mean_luma",     "std_luma",        "clip_low_fraction", "clip_high_fraction",
    "rms_contrast",  "mean_saturation", "colorfulness",      "sharpness",
    "entropy",       "hue_dispersion",
};

enum Feature : std::size_t {
  kMeanLuma, kStdLuma, kClipLow, kClipHigh, kRmsContrast,
  kMeanSaturation, kColorfulness, kSharpness, kEntropy, kHueDispersion,
};

inline constexpr double kClipLowLuma = 0.02;
inline constexpr double kClipHighLuma = 0.98;
inline constexpr int kEntropyBins = 64;

using FeatureVector = std::array<double, kFeatureCount>;

// Each statistic:
//   mean_luma, std_luma     mean / population std of Rec.601 luma
//   clip_low/high_fraction  share of pixels with luma < 0.02 / > 0.98
//   rms_contrast            sqrt(mean over pixels and channels of (v - channel mean)^2)
//   mean_saturation         mean HSV saturation
//   colorfulness            Hasler-Suesstrunk: std(rg,yb) + 0.3 * |mean(rg,yb)|
//   sharpness               variance of the 4-neighbour luma Laplacian (edge clamp)
//   entropy                 Shannon entropy in bits of a 64-bin luma histogram
//   hue_dispersion          circular std of hue (radians), weighted by saturation
inline FeatureVector extract_features(const ImageRGB& img) {
  const std::size_t n = img.pixel_count();
  const double inv_n = 1.0 / static_cast<double>(n);
  const ImageGray y = to_luma(img);
  FeatureVector f{};

  double sum = 0.0;
  std::size_t low = 0, high = 0;
  std::array<std::size_t, kEntropyBins> hist{};
  for (double v : y.data()) {
    sum += v;
    low += v < kClipLowLuma;
    high += v > kClipHighLuma;
    hist[std::min(kEntropyBins - 1, static_cast<int>(v * kEntropyBins))]++;
  }
  const double mu = sum * inv_n;
  f[kMeanLuma] = mu;
  double ss = 0.0;
  for (double v : y.data()) ss += (v - mu) * (v - mu);
  f[kStdLuma] = std::sqrt(ss * inv_n);
  f[kClipLow] = low * inv_n;
  f[kClipHigh] = high * inv_n;

  std::array<double, 3> ch_mean{};
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) ch_mean[c] += img(i, c);
  }
  for (double& m : ch_mean) m *= inv_n;
  double dev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) dev += (img(i, c) - ch_mean[c]) * (img(i, c) - ch_mean[c]);
  }
  f[kRmsContrast] = std::sqrt(dev * inv_n / 3.0);

  double sat = 0.0, rg_sum = 0.0, rg_sq = 0.0, yb_sum = 0.0, yb_sq = 0.0;
  double hx = 0.0, hy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Rgb p = pixel(img, i);
    const Hsv h = rgb_to_hsv(p);
    sat += h[1];
    const double theta = h[0] * std::numbers::pi / 180.0;
    hx += h[1] * std::cos(theta);
    hy += h[1] * std::sin(theta);
    const double rg = p[0] - p[1];
    const double yb = 0.5 * (p[0] + p[1]) - p[2];
    rg_sum += rg;
    rg_sq += rg * rg;
    yb_sum += yb;
    yb_sq += yb * yb;
  }
  f[kMeanSaturation] = sat * inv_n;
  const double rg_mu = rg_sum * inv_n, yb_mu = yb_sum * inv_n;
  const double rg_var = std::max(0.0, rg_sq * inv_n - rg_mu * rg_mu);
  const double yb_var = std::max(0.0, yb_sq * inv_n - yb_mu * yb_mu);
  f[kColorfulness] = std::sqrt(rg_var + yb_var) + 0.3 * std::sqrt(rg_mu * rg_mu + yb_mu * yb_mu);

  const int w = img.width(), h = img.height();
  double lap_sum = 0.0, lap_sq = 0.0;
  for (int yy = 0; yy < h; ++yy) {
    for (int xx = 0; xx < w; ++xx) {
      const double lap = y.at(std::max(xx - 1, 0), yy) + y.at(std::min(xx + 1, w - 1), yy) +
                         y.at(xx, std::max(yy - 1, 0)) + y.at(xx, std::min(yy + 1, h - 1)) -
                         4.0 * y.at(xx, yy);
      lap_sum += lap;
      lap_sq += lap * lap;
    }
  }
  const double lap_mu = lap_sum * inv_n;
  f[kSharpness] = std::max(0.0, lap_sq * inv_n - lap_mu * lap_mu);

  double entropy = 0.0;
  for (std::size_t count : hist) {
    if (count == 0) continue;
    const double p = count * inv_n;
    entropy -= p * std::log2(p);
  }
  f[kEntropy] = std::max(0.0, entropy);

  if (sat > 0.0) {
    const double r = std::clamp(std::hypot(hx, hy) / sat, 1e-12, 1.0);
    f[kHueDispersion] = std::sqrt(-2.0 * std::log(r));
  }
  return f;
}

struct FeatureNorms {
  FeatureVector mean{};
  FeatureVector stddev{};  // all > 0
};

inline constexpr int kRewardFormatVersion = 1;

struct RewardModel {
  FeatureVector weights{};
  double bias = 0.0;
  std::optional<FeatureNorms> norms;  // unset = uninitialized
  std::string version = "linear-features-v1";

  bool initialized() const noexcept { return norms.has_value(); }

  FeatureVector normalize(const FeatureVector& f) const {
    if (!norms) throw ComputeError("reward model is not initialized (no feature norms)");
    FeatureVector z{};
    for (std::size_t k = 0; k < kFeatureCount; ++k) z[k] = (f[k] - norms->mean[k]) / norms->stddev[k];
    return z;
  }

  double score_features(const FeatureVector& f) const {
    const FeatureVector z = normalize(f);
    double s = bias;
    for (std::size_t k = 0; k < kFeatureCount; ++k) s += weights[k] * z[k];
    return s;
  }

  double operator()(const ImageRGB& img) const { return score_features(extract_features(img)); }
};

inline double score(const RewardModel& model, const ImageRGB& img) { return model(img); }

// Identity norms: normalized features equal raw features.
inline FeatureNorms identity_norms() {
  FeatureNorms n;
  n.stddev.fill(1.0);
  return n;
}

inline FeatureNorms fit_norms(std::span<const FeatureVector> samples) {
  FeatureNorms n = identity_norms();
  if (samples.empty()) return n;
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) {
    for (std::size_t k = 0; k < kFeatureCount; ++k) n.mean[k] += s[k] * inv;
  }
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    double var = 0.0;
    for (const auto& s : samples) var += (s[k] - n.mean[k]) * (s[k] - n.mean[k]) * inv;
    const double sd = std::sqrt(var);
    n.stddev[k] = sd > 1e-12 ? sd : 1.0;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const RewardModel& m) {
  if (!m.norms) throw ComputeError("cannot serialize an uninitialized reward model");
  nlohmann::json j;
  j["format_version"] = kRewardFormatVersion;
  j["version"] = m.version;
  j["bias"] = m.bias;
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    const std::string name(kFeatureNames[k]);
    j["weights"][name] = m.weights[k];
    j["feature_norms"][name] = {{"mean", m.norms->mean[k]}, {"std", m.norms->stddev[k]}};
  }
  return j;
}

inline RewardModel reward_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kRewardFormatVersion) {
      throw IoError("unsupported reward model format_version");
    }
    RewardModel m;
    m.version = j.at("version").get<std::string>();
    m.bias = j.at("bias").get<double>();
    FeatureNorms norms;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      const std::string name(kFeatureNames[k]);
      m.weights[k] = j.at("weights").at(name).get<double>();
      norms.mean[k] = j.at("feature_norms").at(name).at("mean").get<double>();
      norms.stddev[k] = j.at("feature_norms").at(name).at("std").get<double>();
      if (!(norms.stddev[k] > 0.0)) throw IoError("feature std must be positive: " + name);
    }
    m.norms = norms;
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed reward model: ") + e.what());
  }
}

inline void save_model(const RewardModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(m).dump(2) << '\n';
}

inline RewardModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed reward model " + path.string() + ": " + e.what());
  }
  return reward_model_from_json(j);
}

// ---------------------------------------------------------------------------
// Rankings and pairs

struct ComparisonPair {
  std::string prompt;
  std::string better;
  std::string worse;
};

inline constexpr std::size_t kMinRanked = 2;
inline constexpr std::size_t kMaxRanked = 9;

// All (i, j), i < j, of a best-first list. Entries with equal tie keys (the
// annotated scores or ranks) produce no pair. Empty keys = no ties.
inline std::vector<ComparisonPair> pairs_from_ranking(const std::string& prompt,
                                                      std::span<const std::string> ranked,
                                                      std::span<const double> tie_keys = {}) {
  if (ranked.size() < kMinRanked) throw ComputeError("a ranking needs at least 2 images");
  if (ranked.size() > kMaxRanked) throw RangeError("a ranking holds at most 9 images");
  if (!tie_keys.empty() && tie_keys.size() != ranked.size()) {
    throw ComputeError("ranking scores and images differ in length");
  }
  std::vector<ComparisonPair> pairs;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    for (std::size_t j = i + 1; j < ranked.size(); ++j) {
      if (!tie_keys.empty() && tie_keys[i] == tie_keys[j]) continue;
      if (ranked[i] == ranked[j]) throw ComputeError("a ranking lists the same image twice: " + ranked[i]);
      pairs.push_back({prompt, ranked[i], ranked[j]});
    }
  }
  return pairs;
}

// One prompt group of a ranking file: images best-first with their scores.
struct RankingGroup {
  std::string prompt;
  std::vector<std::string> images;
  std::vector<double> scores;

  std::vector<ComparisonPair> pairs() const { return pairs_from_ranking(prompt, images, scores); }
};

using RankingDataset = std::vector<RankingGroup>;

inline nlohmann::json to_json(const RankingGroup& g) {
  return {{"prompt", g.prompt}, {"images", g.images}, {"scores", g.scores}};
}

inline RankingDataset load_ranking(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  RankingDataset groups;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RankingGroup g;
      g.prompt = j.value("prompt", std::string());
      g.images = j.at("images").get<std::vector<std::string>>();
      if (j.contains("scores")) g.scores = j.at("scores").get<std::vector<double>>();
      groups.push_back(std::move(g));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return groups;
}

inline void save_ranking(const RankingDataset& groups, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& g : groups) out << to_json(g).dump() << '\n';
}

// Image id -> raw feature vector.
using FeatureStore = std::map<std::string, FeatureVector>;

inline double log_sigmoid(double x) {
  // log(sigma(x)) without overflow for large |x|.
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline const FeatureVector& lookup(const FeatureStore& store, const std::string& id) {
  const auto it = store.find(id);
  if (it == store.end()) throw ComputeError("no features for image '" + id + "'");
  return it->second;
}

// Mean over pairs of -log sigma(f(better) - f(worse)).
inline double ranking_loss(const RewardModel& model, std::span<const ComparisonPair> pairs,
                           const FeatureStore& store) {
  if (pairs.empty()) throw ComputeError("ranking_loss: empty pair list");
  double total = 0.0;
  for (const auto& p : pairs) {
    const double diff = model.score_features(lookup(store, p.better)) -
                        model.score_features(lookup(store, p.worse));
    total -= log_sigmoid(diff);
  }
  return total / static_cast<double>(pairs.size());
}

// Normalized-feature differences phi(better) - phi(worse), one per pair.
using PairDeltas = std::vector<FeatureVector>;

inline PairDeltas pair_deltas(const RewardModel& model, std::span<const ComparisonPair> pairs,
                              const FeatureStore& store) {
  PairDeltas d;
  d.reserve(pairs.size());
  for (const auto& p : pairs) {
    const FeatureVector a = model.normalize(lookup(store, p.better));
    const FeatureVector b = model.normalize(lookup(store, p.worse));
    FeatureVector diff{};
    for (std::size_t k = 0; k < kFeatureCount; ++k) diff[k] = a[k] - b[k];
    d.push_back(diff);
  }
  return d;
}

struct LossGradient {
  double loss = 0.0;
  FeatureVector grad{};
};

// Loss and d loss / d weights over the selected deltas:
//   grad = -mean[(1 - sigma(w . d)) d]
inline LossGradient loss_and_gradient(const FeatureVector& weights, const PairDeltas& deltas,
                                      std::span<const std::size_t> subset = {}) {
  LossGradient out;
  const std::size_t count = subset.empty() ? deltas.size() : subset.size();
  if (count == 0) throw ComputeError("loss_and_gradient: no pairs");
  for (std::size_t s = 0; s < count; ++s) {
    const FeatureVector& d = deltas[subset.empty() ? s : subset[s]];
    double margin = 0.0;
    for (std::size_t k = 0; k < kFeatureCount; ++k) margin += weights[k] * d[k];
    out.loss -= log_sigmoid(margin);
    const double g = 1.0 - sigmoid(margin);
    for (std::size_t k = 0; k < kFeatureCount; ++k) out.grad[k] -= g * d[k];
  }
  const double inv = 1.0 / static_cast<double>(count);
  out.loss *= inv;
  for (double& g : out.grad) g *= inv;
  return out;
}

struct TrainConfig {
  double lr = 1e-5;
  std::size_t batch = 64;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
};

struct TrainResult {
  RewardModel model;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;  // full-data loss after each epoch
};

// Mini-batch gradient descent on the pairwise ranking loss, starting from zero
// weights. Feature norms are fitted on every image the dataset references.
// Batch order comes from a generator seeded with cfg.seed.
inline TrainResult train(const RankingDataset& dataset, const FeatureStore& store,
                         const TrainConfig& cfg = {}) {
  if (!(cfg.lr > 0.0)) throw RangeError("train: learning rate must be positive");
  if (cfg.batch == 0) throw RangeError("train: batch size must be positive");

  std::vector<ComparisonPair> pairs;
  std::vector<FeatureVector> seen;
  std::map<std::string, bool> listed;
  for (const auto& g : dataset) {
    for (const auto& p : g.pairs()) pairs.push_back(p);
    for (const auto& id : g.images) {
      if (!listed[id]) {
        listed[id] = true;
        seen.push_back(lookup(store, id));
      }
    }
  }
  if (pairs.empty()) throw ComputeError("train: dataset has no untied comparison pairs");

  TrainResult result;
  result.model.norms = fit_norms(seen);
  const PairDeltas deltas = pair_deltas(result.model, pairs, store);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(deltas.size());
  std::iota(order.begin(), order.end(), 0);
  FeatureVector& w = result.model.weights;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with raw generator output keeps the order identical across
    // standard library implementations.
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      const auto step = loss_and_gradient(w, deltas, std::span(order).subspan(start, end - start));
      for (std::size_t k = 0; k < kFeatureCount; ++k) w[k] -= cfg.lr * step.grad[k];
    }
    result.epoch_losses.push_back(loss_and_gradient(w, deltas).loss);
  }
  result.final_loss = loss_and_gradient(w, deltas).loss;
  return result;
}

// Share of pairs the model orders correctly (ties count as wrong).
inline double pairwise_accuracy(const RewardModel& model, std::span<const ComparisonPair> pairs,
                                const FeatureStore& store) {
  if (pairs.empty()) return 0.0;
  std::size_t right = 0;
  for (const auto& p : pairs) {
    right += model.score_features(lookup(store, p.better)) > model.score_features(lookup(store, p.worse));
  }
  return static_cast<double>(right) / static_cast<double>(pairs.size());
}

}  // namespace lowlight

#pragma once

// Vector-scale diffusion math: linear noise schedules, the x_t -> x_0
// shortcut, the DDIM update, a zero-initialized control branch, and the
// composite auxiliary loss.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "lowlight/error.hpp"
#include "lowlight/image.hpp"
#include "lowlight/metrics.hpp"
#include "lowlight/reward.hpp"

namespace lowlight {

using Vec = std::vector<double>;

// Steps are 1-based: beta(t), alpha_bar(t) for t = 1..T, alpha_bar(0) = 1.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.empty()) throw RangeError("noise schedule needs at least one step");
    alpha_bar_.reserve(betas_.size());
    double prod = 1.0;
    for (double b : betas_) {
      if (!(b > 0.0 && b < 1.0)) throw RangeError("beta must lie in (0, 1)");
      prod *= 1.0 - b;
      alpha_bar_.push_back(prod);
    }
  }

  int steps() const noexcept { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_.at(check(t) - 1); }
  double alpha_bar(int t) const {
    if (t == 0) return 1.0;
    return alpha_bar_.at(check(t) - 1);
  }
  std::span<const double> betas() const noexcept { return betas_; }
  std::span<const double> alpha_bars() const noexcept { return alpha_bar_; }

 private:
  int check(int t) const {
    if (t < 1 || t > steps()) throw RangeError("timestep " + std::to_string(t) + " outside [1, T]");
    return t;
  }

  std::vector<double> betas_;
  std::vector<double> alpha_bar_;
};

inline NoiseSchedule linear_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 1) throw RangeError("linear_schedule: T must be >= 1");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)) {
    throw RangeError("linear_schedule: need 0 < beta_min <= beta_max < 1");
  }
  std::vector<double> betas(steps);
  for (int t = 0; t < steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t) / (steps - 1);
    betas[t] = beta_min + (beta_max - beta_min) * frac;
  }
  return NoiseSchedule(std::move(betas));
}

// `steps` evenly spaced timesteps of `base` (the last one is T) as a schedule
// of its own: beta'_k = 1 - abar(tau_k) / abar(tau_{k-1}).
inline NoiseSchedule strided_schedule(const NoiseSchedule& base, int steps) {
  if (steps < 1 || steps > base.steps()) throw RangeError("strided_schedule: steps must be in [1, T]");
  std::vector<double> betas(steps);
  int prev = 0;
  for (int k = 1; k <= steps; ++k) {
    const int tau = static_cast<int>((static_cast<long long>(k) * base.steps()) / steps);
    betas[k - 1] = 1.0 - base.alpha_bar(tau) / base.alpha_bar(prev);
    prev = tau;
  }
  return NoiseSchedule(std::move(betas));
}

// eps_theta(y_t, t): same shape as y_t.
using Denoiser = std::function<Vec(const Vec&, int)>;

inline void require_same_length(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) throw ComputeError(std::string(what) + ": length mismatch");
}

// x0' = (y_t - sqrt(1 - abar_t) eps) / sqrt(abar_t)
inline Vec predict_x0(const Vec& y_t, int t, const Vec& eps, const NoiseSchedule& sched) {
  require_same_length(y_t, eps, "predict_x0");
  const double ab = sched.alpha_bar(t);
  const double noise_scale = std::sqrt(1.0 - ab);
  const double inv_signal = 1.0 / std::sqrt(ab);
  Vec x0(y_t.size());
  for (std::size_t i = 0; i < y_t.size(); ++i) x0[i] = (y_t[i] - noise_scale * eps[i]) * inv_signal;
  return x0;
}

// y_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
inline Vec forward_noise(const Vec& x0, int t, const Vec& eps, const NoiseSchedule& sched) {
  require_same_length(x0, eps, "forward_noise");
  const double ab = sched.alpha_bar(t);
  Vec y(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) y[i] = std::sqrt(ab) * x0[i] + std::sqrt(1.0 - ab) * eps[i];
  return y;
}

struct DdimStep {
  Vec y_prev;
  bool clamped = false;  // 1 - abar_{t-1} - sigma_t^2 was negative and set to 0
};

// One DDIM update with sigma_t^2 = eta * beta_t:
//   y_{t-1} = sqrt(abar_{t-1}) x0' + sqrt(1 - abar_{t-1} - sigma_t^2) eps + sigma_t noise
inline DdimStep ddim_step(const Vec& y_t, int t, const Denoiser& denoiser, const NoiseSchedule& sched,
                          double eta, const Vec& noise) {
  if (eta < 0.0) throw RangeError("ddim_step: eta must be >= 0");
  const Vec eps = denoiser(y_t, t);
  require_same_length(y_t, eps, "ddim_step denoiser output");
  const double sigma_sq = eta * sched.beta(t);
  if (sigma_sq > 0.0) require_same_length(y_t, noise, "ddim_step noise");
  const Vec x0 = predict_x0(y_t, t, eps, sched);
  const double ab_prev = sched.alpha_bar(t - 1);
  double dir_sq = 1.0 - ab_prev - sigma_sq;
  DdimStep out;
  if (dir_sq < 0.0) {
    dir_sq = 0.0;
    out.clamped = true;
  }
  const double signal = std::sqrt(ab_prev);
  const double dir = std::sqrt(dir_sq);
  const double sigma = std::sqrt(sigma_sq);
  out.y_prev.resize(y_t.size());
  for (std::size_t i = 0; i < y_t.size(); ++i) {
    out.y_prev[i] = signal * x0[i] + dir * eps[i] + (sigma > 0.0 ? sigma * noise[i] : 0.0);
  }
  return out;
}

// Posterior-mean noise predictor for 1-D data x0 ~ N(mean, var), applied
// elementwise:
//   eps*(y, t) = sqrt(1 - abar) (y - sqrt(abar) mean) / (abar var + 1 - abar)
inline Denoiser gaussian_optimal_denoiser(const NoiseSchedule& sched, double mean = 0.0,
                                          double var = 1.0) {
  return [sched, mean, var](const Vec& y, int t) {
    const double ab = sched.alpha_bar(t);
    const double k = std::sqrt(1.0 - ab) / (ab * var + (1.0 - ab));
    const double shift = std::sqrt(ab) * mean;
    Vec eps(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) eps[i] = k * (y[i] - shift);
    return eps;
  };
}

// Deterministic standard-normal stream per (seed, trajectory).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct SampleRun {
  Vec samples;              // y_0 per trajectory
  std::size_t clamp_events = 0;
};

inline constexpr std::size_t kSampleChunk = 4096;

// Runs `trajectories` independent 1-D chains from y_T ~ N(0, 1) down to y_0.
// Each chain draws from its own generator, so results do not depend on the
// chunking.
inline SampleRun ddim_sample(const NoiseSchedule& sched, const Denoiser& denoiser, double eta,
                             std::size_t trajectories, std::uint64_t seed) {
  SampleRun run;
  run.samples.reserve(trajectories);
  const int T = sched.steps();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t first = 0; first < trajectories; first += kSampleChunk) {
    const std::size_t n = std::min(kSampleChunk, trajectories - first);
    std::vector<std::mt19937_64> streams;
    streams.reserve(n);
    for (std::size_t i = 0; i < n; ++i) streams.emplace_back(mix_seed(seed, first + i));
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) {
      normal.reset();
      y[i] = normal(streams[i]);
    }
    Vec noise(n, 0.0);
    for (int t = T; t >= 1; --t) {
      if (eta > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
          normal.reset();
          noise[i] = normal(streams[i]);
        }
      }
      DdimStep step = ddim_step(y, t, denoiser, sched, eta, noise);
      run.clamp_events += step.clamped;
      y = std::move(step.y_prev);
    }
    run.samples.insert(run.samples.end(), y.begin(), y.end());
  }
  return run;
}

// ---------------------------------------------------------------------------
// Control branch

// Affine projection z(v) = A v + b, A is rows x cols.
struct Affine {
  std::size_t rows = 0, cols = 0;
  Vec weight;  // row-major
  Vec bias;

  static Affine zeros(std::size_t rows, std::size_t cols) {
    return {rows, cols, Vec(rows * cols, 0.0), Vec(rows, 0.0)};
  }

  Vec operator()(const Vec& v) const {
    if (v.size() != cols) throw ComputeError("affine: input length mismatch");
    Vec out(bias);
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c) acc += weight[r * cols + c] * v[c];
      out[r] += acc;
    }
    return out;
  }
};

// Two affine layers with tanh in between.
struct TinyMlp {
  Affine in, out;

  Vec operator()(const Vec& x) const {
    Vec h = in(x);
    for (double& v : h) v = std::tanh(v);
    return out(h);
  }
};

inline Affine random_affine(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Affine a = Affine::zeros(rows, cols);
  for (double& w : a.weight) w = u(rng);
  for (double& b : a.bias) b = u(rng);
  return a;
}

inline TinyMlp random_mlp(std::size_t dim, std::size_t hidden, std::mt19937_64& rng) {
  return {random_affine(hidden, dim, rng), random_affine(dim, hidden, rng)};
}

inline constexpr std::size_t kMaxControlDim = 64;

// base(x) + zero_out(control(x + zero_in(c))). The two projections start at
// exactly zero, so a fresh model reproduces the base network.
struct ControlledDenoiser {
  TinyMlp base;
  TinyMlp control;
  Affine zero_in;   // condition -> input space
  Affine zero_out;  // control output -> output space

  static ControlledDenoiser init(std::size_t dim, std::size_t cond_dim, std::size_t hidden,
                                 std::uint64_t seed) {
    if (dim == 0 || dim > kMaxControlDim || cond_dim == 0 || cond_dim > kMaxControlDim) {
      throw RangeError("controlled denoiser dimensions must be in [1, 64]");
    }
    std::mt19937_64 rng(seed);
    ControlledDenoiser m;
    m.base = random_mlp(dim, hidden, rng);
    // The control branch starts as a copy of the base network.
    m.control = m.base;
    m.zero_in = Affine::zeros(dim, cond_dim);
    m.zero_out = Affine::zeros(dim, dim);
    return m;
  }
};

inline Vec controlnet_forward(const Vec& x, const Vec& c, const ControlledDenoiser& m) {
  if (x.size() != m.base.in.cols || c.size() != m.zero_in.cols) {
    throw ComputeError("controlnet_forward: shape mismatch");
  }
  const Vec injected = m.zero_in(c);
  Vec shifted(x);
  for (std::size_t i = 0; i < x.size(); ++i) shifted[i] += injected[i];
  const Vec residual = m.zero_out(m.control(shifted));
  Vec out = m.base(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += residual[i];
  return out;
}

// ---------------------------------------------------------------------------
// Auxiliary loss

struct AuxWeights {
  double color = 0.0;
  double ssim = 0.0;
  double reward = 0.0;
};

struct AuxTerms {
  double base = 0.0;
  double color = 0.0;   // angular color loss (sum over pixels)
  double ssim = 0.0;    // 1 - SSIM
  double reward = 0.0;  // -score
  double total = 0.0;
};

// total = base + W_col * L_col + W_ssim * (1 - SSIM) + W_reward * (-score).
// Zero-weight terms are not evaluated.
inline AuxTerms aux_loss_terms(const ImageRGB& pred, const ImageRGB& target, const AuxWeights& w,
                               double base_loss, const RewardModel* reward_model = nullptr) {
  if (w.color < 0.0 || w.ssim < 0.0 || w.reward < 0.0) throw RangeError("aux_loss: weights must be >= 0");
  require_same_size(pred, target, "aux_loss");
  AuxTerms t;
  t.base = base_loss;
  t.total = base_loss;
  if (w.color > 0.0) {
    t.color = angular_color_loss(pred, target);
    t.total += w.color * t.color;
  }
  if (w.ssim > 0.0) {
    t.ssim = 1.0 - ssim(pred, target);
    t.total += w.ssim * t.ssim;
  }
  if (w.reward > 0.0) {
    if (!reward_model) throw ComputeError("aux_loss: reward term requested without a reward model");
    t.reward = -score(*reward_model, pred);
    t.total += w.reward * t.reward;
  }
  return t;
}

inline double aux_loss(const ImageRGB& pred, const ImageRGB& target, const AuxWeights& w,
                       double base_loss, const RewardModel* reward_model = nullptr) {
  return aux_loss_terms(pred, target, w, base_loss, reward_model).total;
}

namespace detail {

// d angle(p, q) / d p for one RGB pair; zero where the angle is pinned.
inline Rgb color_angle_gradient(const Rgb& p, const Rgb& q) {
  const double dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
  const double np2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
  const double nq2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
  if (np2 == 0.0 || nq2 == 0.0) return {0, 0, 0};
  const double np = std::sqrt(np2), nq = std::sqrt(nq2);
  const double cosine = dot / (np * nq);
  if (cosine >= 1.0 || cosine <= -1.0) return {0, 0, 0};
  const double dacos = -1.0 / std::sqrt(1.0 - cosine * cosine);
  Rgb g{};
  for (int c = 0; c < 3; ++c) {
    const double dcos = q[c] / (np * nq) - dot * p[c] / (np2 * np * nq);
    g[c] = dacos * dcos;
  }
  return g;
}

// d mean-window-SSIM(target, pred) / d pred, chained through Rec.601 luma.
inline ImageRGB ssim_gradient(const ImageRGB& pred, const ImageRGB& target) {
  const ImageGray yp = to_luma(pred);
  const ImageGray yt = to_luma(target);
  const int w = pred.width(), h = pred.height();
  const double n = kSsimWindow * kSsimWindow;
  ImageGray g(w, h);
  std::size_t windows = 0;
  for (int y0 = 0; y0 + kSsimWindow <= h; ++y0) {
    for (int x0 = 0; x0 + kSsimWindow <= w; ++x0) {
      ++windows;
      double mp = 0, mt = 0;
      for (int y = y0; y < y0 + kSsimWindow; ++y)
        for (int x = x0; x < x0 + kSsimWindow; ++x) {
          mp += yp.at(x, y);
          mt += yt.at(x, y);
        }
      mp /= n;
      mt /= n;
      double vp = 0, vt = 0, cov = 0;
      for (int y = y0; y < y0 + kSsimWindow; ++y)
        for (int x = x0; x < x0 + kSsimWindow; ++x) {
          const double dp = yp.at(x, y) - mp, dt = yt.at(x, y) - mt;
          vp += dp * dp;
          vt += dt * dt;
          cov += dp * dt;
        }
      vp /= n;
      vt /= n;
      cov /= n;
      const double a1 = 2 * mp * mt + kSsimC1, a2 = 2 * cov + kSsimC2;
      const double b1 = mp * mp + mt * mt + kSsimC1, b2 = vp + vt + kSsimC2;
      for (int y = y0; y < y0 + kSsimWindow; ++y)
        for (int x = x0; x < x0 + kSsimWindow; ++x) {
          const double dmu = 1.0 / n;
          const double dvar = 2.0 * (yp.at(x, y) - mp) / n;
          const double dcov = (yt.at(x, y) - mt) / n;
          const double da1 = 2 * mt * dmu, da2 = 2 * dcov;
          const double db1 = 2 * mp * dmu, db2 = dvar;
          const double num = a1 * a2, den = b1 * b2;
          g.at(x, y) += ((da1 * a2 + a1 * da2) * den - num * (db1 * b2 + b1 * db2)) / (den * den);
        }
    }
  }
  ImageRGB out(w, h);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) out(i, c) = g(i) / static_cast<double>(windows) * kLumaWeights[c];
  }
  return out;
}

}  // namespace detail

// Gradient of aux_loss with respect to pred: analytic for the color and SSIM
// terms, central differences (step h) for the reward term. Assumes pred lies
// inside (0,1) so luma is not clamped.
inline ImageRGB aux_loss_gradient(const ImageRGB& pred, const ImageRGB& target, const AuxWeights& w,
                                  const RewardModel* reward_model = nullptr, double h = 1e-5) {
  require_same_size(pred, target, "aux_loss_gradient");
  ImageRGB grad(pred.width(), pred.height());
  if (w.color > 0.0) {
    for (std::size_t i = 0; i < pred.pixel_count(); ++i) {
      const Rgb g = detail::color_angle_gradient(pixel(pred, i), pixel(target, i));
      for (int c = 0; c < 3; ++c) grad(i, c) += w.color * g[c];
    }
  }
  if (w.ssim > 0.0) {
    const ImageRGB g = detail::ssim_gradient(pred, target);
    for (std::size_t k = 0; k < grad.data().size(); ++k) grad.data()[k] -= w.ssim * g.data()[k];
  }
  if (w.reward > 0.0) {
    if (!reward_model) throw ComputeError("aux_loss_gradient: reward term requested without a reward model");
    ImageRGB probe = pred;
    for (std::size_t k = 0; k < grad.data().size(); ++k) {
      const double v = probe.data()[k];
      probe.data()[k] = v + h;
      const double up = -score(*reward_model, probe);
      probe.data()[k] = v - h;
      const double down = -score(*reward_model, probe);
      probe.data()[k] = v;
      grad.data()[k] += w.reward * (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace lowlight

#pragma once

// Region resolution and composition of the relit image with the original.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <vector>

#include "lowlight/brightness.hpp"
#include "lowlight/io.hpp"
#include "lowlight/prompt.hpp"
#include "lowlight/retinex.hpp"
#include "lowlight/toolset.hpp"

namespace lowlight {

enum class MaskSource { File, ThresholdHeuristic, WholeImage };

struct RegionMask {
  ImageGray mask;  // 1 = enhance
  MaskSource source = MaskSource::WholeImage;
};

inline constexpr double kDefaultDarkQuantile = 0.3;
inline constexpr double kDefaultFeatherSigma = 3.0;

class UnresolvedTargetError : public Error {
 public:
  explicit UnresolvedTargetError(const std::string& phrase)
      : Error(ErrorKind::Usage, "cannot locate region '" + phrase +
                                    "': supply a mask file or enable the threshold heuristic") {}
};

struct TargetOptions {
  std::optional<std::filesystem::path> mask_path;
  bool threshold_heuristic = false;
  double dark_quantile = kDefaultDarkQuantile;
};

// Nearest-rank quantile: the smallest value v with at least q*N samples <= v.
inline double nearest_rank_quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  std::size_t rank = static_cast<std::size_t>(std::ceil(std::clamp(q, 0.0, 1.0) * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

// Labeled fallback for named regions: the pixels strictly darker than the
// q-quantile of luma. It makes no claim of semantic grounding.
inline ImageGray dark_region_mask(const ImageRGB& img, double q) {
  const ImageGray y = to_luma(img);
  const double threshold = nearest_rank_quantile({y.data().begin(), y.data().end()}, q);
  ImageGray mask(img.width(), img.height());
  for (std::size_t i = 0; i < y.pixel_count(); ++i) mask(i) = y(i) < threshold ? 1.0 : 0.0;
  return mask;
}

inline RegionMask resolve_target(const TargetSpec& target, const ImageRGB& img,
                                 const TargetOptions& opts = {}) {
  if (std::holds_alternative<WholeImage>(target) && !opts.mask_path) {
    return {ImageGray(img.width(), img.height(), 1.0), MaskSource::WholeImage};
  }
  if (opts.mask_path) {
    ImageGray mask = load_gray(*opts.mask_path);
    require_same_size(mask, img, "mask file");
    return {std::move(mask), MaskSource::File};
  }
  if (opts.threshold_heuristic) {
    return {dark_region_mask(img, opts.dark_quantile), MaskSource::ThresholdHeuristic};
  }
  throw UnresolvedTargetError(std::get<NamedRegion>(target).phrase);
}

// out = a * relit + (1 - a) * original with a = blur(mask, feather_sigma).
// Pixels with a == 0 are copied from the original bit for bit.
inline ImageRGB composite(const ImageRGB& relit, const RegionMask& mask, const ImageRGB& original,
                          double feather_sigma) {
  require_same_size(relit, original, "composite");
  require_same_size(mask.mask, original, "composite");
  const ImageGray alpha = gaussian_blur(mask.mask, feather_sigma);
  ImageRGB out(original.width(), original.height());
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const double a = std::clamp(alpha(i), 0.0, 1.0);
    for (int c = 0; c < 3; ++c) {
      out(i, c) = a == 0.0 ? original(i, c) : clamp01(a * relit(i, c) + (1.0 - a) * original(i, c));
    }
  }
  return out;
}

inline ImageRGB fuse(const ImageGray& illum_adj, const RetinexPair& pair, const RegionMask& mask,
                     const ImageRGB& original, double feather_sigma = kDefaultFeatherSigma) {
  require_same_size(illum_adj, pair.reflection, "fuse");
  return composite(recombine(illum_adj, pair.reflection), mask, original, feather_sigma);
}

struct EnhanceOptions {
  double retinex_sigma = 8.0;
  double blend_sigma = 4.0;
  double feather_sigma = kDefaultFeatherSigma;
  TargetOptions target;
};

struct EnhanceResult {
  ImageRGB image;
  AdjustmentMap adjustment;
  RegionMask mask;
  RetinexPair pair;
};

// Prompt plan -> Retinex split -> boost map -> adjusted illumination ->
// recombination -> color ops, all confined to the target region.
inline EnhanceResult enhance(const ImageRGB& img, const AdjustmentPlan& plan,
                             const EnhanceOptions& opts = {}) {
  EnhanceResult r;
  r.mask = resolve_target(plan.target, img, opts.target);
  r.pair = decompose(img, opts.retinex_sigma);
  const ImageGray m_init = initial_map(r.pair.illumination);
  r.adjustment = spatial_blend(m_init, plan.brightness_ratio, r.mask.mask, opts.blend_sigma);
  const ImageGray illum_adj = apply_to_illumination(r.pair.illumination, r.adjustment);
  ImageRGB relit = recombine(illum_adj, r.pair.reflection);
  if (!plan.color_ops.empty()) relit = compose(plan.color_ops, relit);
  r.image = composite(relit, r.mask, img, opts.feather_sigma);
  return r;
}

}  // namespace lowlight

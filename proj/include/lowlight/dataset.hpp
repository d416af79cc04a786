#pragma once

// Preference-dataset construction: brightness-level expansion of source
// images, seeded random transform recipes, annotation bookkeeping and export
// of best-first ranking groups.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "lowlight/diffusion.hpp"
#include "lowlight/io.hpp"
#include "lowlight/metrics.hpp"
#include "lowlight/reward.hpp"
#include "lowlight/toolset.hpp"

namespace lowlight {

// Multipliers for the 10%, 30%, 100% and 150% brightness increases.
inline const std::vector<double> kDefaultBrightnessLevels{1.10, 1.30, 2.00, 2.50};
inline constexpr std::size_t kDefaultTransformsPerLevel = 8;
inline constexpr std::size_t kMaxRecipeOps = 4;

inline constexpr std::uint64_t variant_count(std::uint64_t sources, std::uint64_t levels,
                                             std::uint64_t transforms_per_level) {
  return sources * levels * transforms_per_level;
}

struct SourceImage {
  std::string id;
  std::filesystem::path path;
};

struct VariantRecord {
  std::string source_id;
  std::size_t level_index = 0;
  std::size_t transform_index = 0;
  double brightness_level = 1.0;
  std::vector<ColorOp> recipe;
  std::uint64_t seed = 0;
  std::filesystem::path path;

  friend bool operator==(const VariantRecord&, const VariantRecord&) = default;
};

// FNV-1a over the source id, folded with the indices through splitmix64.
inline std::uint64_t record_seed(std::uint64_t master, const std::string& source_id,
                                 std::size_t level_index, std::size_t transform_index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : source_id) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t s = mix_seed(master, h);
  s = mix_seed(s, level_index);
  return mix_seed(s, transform_index);
}

namespace detail {

// Uniform integer in [lo, hi] from raw generator output.
inline int draw(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// Parameters sit on fixed grids (hundredths, whole degrees, half pixels) so
// the canonical text form reproduces them exactly.
inline ColorOp draw_op(int kind, std::mt19937_64& rng) {
  switch (kind) {
    case 0: return Contrast{draw(rng, -30, 50) / 100.0};
    case 1: return WhiteBalance{draw(rng, -15, 15) / 100.0};
    case 2: return Sharpen{draw(rng, 10, 150) / 100.0, draw(rng, 1, 6) / 2.0};
    case 3: return Smooth{draw(rng, 1, 4) / 2.0};
    case 4: return ToneTint{static_cast<double>(draw(rng, -20, 20))};
    case 5: return Saturation{draw(rng, -50, 50) / 100.0};
    default: return Gamma{draw(rng, 70, 150) / 100.0};
  }
}

inline constexpr int kOpKinds = 7;

}  // namespace detail

// 1 to 4 ops of distinct kinds: contrast, white balance, sharpen, smooth,
// tone tint, saturation, gamma.
inline std::vector<ColorOp> draw_recipe(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> kinds(detail::kOpKinds);
  for (int k = 0; k < detail::kOpKinds; ++k) kinds[k] = k;
  for (std::size_t i = kinds.size(); i > 1; --i) std::swap(kinds[i - 1], kinds[rng() % i]);
  const int count = detail::draw(rng, 1, static_cast<int>(kMaxRecipeOps));
  std::vector<ColorOp> recipe;
  for (int i = 0; i < count; ++i) recipe.push_back(detail::draw_op(kinds[i], rng));
  return recipe;
}

// Brightness level first (as a Brightness op), then the recipe.
inline ImageRGB render_variant(const ImageRGB& source, double level, const std::vector<ColorOp>& recipe) {
  ImageRGB out = apply_op(Brightness{level - 1.0}, source);
  return compose(recipe, out);
}

inline std::string variant_filename(const VariantRecord& r) {
  return r.source_id + "_L" + std::to_string(r.level_index) + "_T" + std::to_string(r.transform_index) + ".png";
}

// Record list only, in (source, level, transform) order.
inline std::vector<VariantRecord> plan_variants(const std::vector<SourceImage>& sources,
                                                const std::vector<double>& levels,
                                                std::size_t transforms_per_level, std::uint64_t seed) {
  if (sources.empty()) throw ComputeError("build_variants: no source images");
  if (levels.empty()) throw ComputeError("build_variants: no brightness levels");
  if (transforms_per_level < 1) throw RangeError("build_variants: transforms_per_level must be >= 1");
  for (double l : levels) {
    if (!(l > 0.0 && l - 1.0 <= kFractionMax)) throw RangeError("brightness level outside (0, 5]");
  }
  std::vector<VariantRecord> records;
  records.reserve(variant_count(sources.size(), levels.size(), transforms_per_level));
  for (const auto& src : sources) {
    for (std::size_t li = 0; li < levels.size(); ++li) {
      for (std::size_t ti = 0; ti < transforms_per_level; ++ti) {
        VariantRecord r;
        r.source_id = src.id;
        r.level_index = li;
        r.transform_index = ti;
        r.brightness_level = levels[li];
        r.seed = record_seed(seed, src.id, li, ti);
        r.recipe = draw_recipe(r.seed);
        r.path = variant_filename(r);
        records.push_back(std::move(r));
      }
    }
  }
  return records;
}

// Plans every record and, when out_dir is set, renders each variant to
// out_dir / record.path (record paths stay relative).
// Work is split across `threads` workers; every record depends only on its
// own seed, so the output does not depend on the thread count.
inline std::vector<VariantRecord> build_variants(const std::vector<SourceImage>& sources,
                                                 const std::vector<double>& levels,
                                                 std::size_t transforms_per_level, std::uint64_t seed,
                                                 const std::filesystem::path& out_dir = {},
                                                 unsigned threads = 1) {
  std::vector<VariantRecord> records = plan_variants(sources, levels, transforms_per_level, seed);
  if (out_dir.empty()) return records;
  std::filesystem::create_directories(out_dir);

  std::vector<ImageRGB> images;
  images.reserve(sources.size());
  std::map<std::string, std::size_t> index;
  for (const auto& src : sources) {
    index[src.id] = images.size();
    images.push_back(load_image(src.path));
  }

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(records.size())));
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < records.size(); i += workers) {
        const VariantRecord& r = records[i];
        save_image(render_variant(images[index.at(r.source_id)], r.brightness_level, r.recipe), out_dir / r.path);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return records;
}

// Sorted *.png / *.ppm files of a directory; the id is the file stem.
inline std::vector<SourceImage> list_sources(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<SourceImage> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = detail::lower_ext(entry.path());
    if (ext == ".png" || ext == ".ppm") out.push_back({entry.path().stem().string(), entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  if (out.empty()) throw IoError("no .png or .ppm images in " + dir.string());
  return out;
}

inline nlohmann::json to_json(const VariantRecord& r) {
  return {{"source_id", r.source_id},         {"level_index", r.level_index},
          {"transform_index", r.transform_index}, {"brightness_level", r.brightness_level},
          {"recipe", to_string(r.recipe)},    {"seed", r.seed},
          {"path", r.path.generic_string()}};
}

inline VariantRecord variant_from_json(const nlohmann::json& j) {
  VariantRecord r;
  r.source_id = j.at("source_id").get<std::string>();
  r.level_index = j.at("level_index").get<std::size_t>();
  r.transform_index = j.at("transform_index").get<std::size_t>();
  r.brightness_level = j.at("brightness_level").get<double>();
  r.recipe = parse_ops(j.at("recipe").get<std::string>());
  r.seed = j.at("seed").get<std::uint64_t>();
  r.path = j.at("path").get<std::string>();
  return r;
}

template <class T, class ToJson>
void write_jsonl(const std::vector<T>& items, const std::filesystem::path& path, ToJson&& to_json_fn) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& it : items) out << to_json_fn(it).dump() << '\n';
}

inline void save_manifest(const std::vector<VariantRecord>& records, const std::filesystem::path& path) {
  write_jsonl(records, path, [](const VariantRecord& r) { return to_json(r); });
}

inline std::vector<VariantRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<VariantRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(variant_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed manifest line in " + path.string() + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Annotations and rankings

struct AnnotationRecord {
  std::string variant;    // image path or id
  std::string source_id;
  std::string prompt;
  DimensionScores scores;
  double total = 0.0;
  std::string annotator;
};

inline AnnotationRecord annotate(std::string variant, std::string source_id, std::string prompt,
                                 const DimensionScores& scores, std::string annotator) {
  return {std::move(variant), std::move(source_id), std::move(prompt), scores, total_score(scores),
          std::move(annotator)};
}

inline void check_total(const AnnotationRecord& a) {
  if (std::fabs(total_score(a.scores) - a.total) > 1e-9) {
    throw ComputeError("annotation total for '" + a.variant + "' does not match its dimension scores");
  }
}

inline nlohmann::json to_json(const AnnotationRecord& a) {
  nlohmann::json j{{"variant", a.variant},
                   {"source_id", a.source_id},
                   {"prompt", a.prompt},
                   {"scores",
                    {{"color_quality", a.scores.color_quality},
                     {"clarity_detail", a.scores.clarity_detail},
                     {"naturalness_realism", a.scores.naturalness_realism},
                     {"aesthetic_appeal", a.scores.aesthetic_appeal},
                     {"overall_rating", a.scores.overall_rating}}},
                   {"total", a.total},
                   {"annotator", a.annotator}};
  if (a.scores.weights) j["weights"] = *a.scores.weights;
  return j;
}

inline AnnotationRecord annotation_from_json(const nlohmann::json& j) {
  AnnotationRecord a;
  a.variant = j.at("variant").get<std::string>();
  a.source_id = j.value("source_id", std::string());
  a.prompt = j.value("prompt", std::string());
  const auto& s = j.at("scores");
  a.scores.color_quality = s.at("color_quality").get<double>();
  a.scores.clarity_detail = s.at("clarity_detail").get<double>();
  a.scores.naturalness_realism = s.at("naturalness_realism").get<double>();
  a.scores.aesthetic_appeal = s.at("aesthetic_appeal").get<double>();
  a.scores.overall_rating = s.at("overall_rating").get<double>();
  if (j.contains("weights")) a.scores.weights = j.at("weights").get<std::array<double, 5>>();
  a.total = j.at("total").get<double>();
  a.annotator = j.value("annotator", std::string());
  check_total(a);
  return a;
}

enum class GroupBy { Prompt, Source };

// One group per prompt (or source id), images best-first by total score.
// Equal totals keep their record order and stay tied in the output.
inline RankingDataset export_ranking(const std::vector<AnnotationRecord>& records, GroupBy group_by) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    check_total(records[i]);
    const std::string& key = group_by == GroupBy::Prompt ? records[i].prompt : records[i].source_id;
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(i);
  }
  RankingDataset out;
  for (const auto& key : order) {
    std::vector<std::size_t> idx = groups[key];
    if (idx.size() < kMinRanked) throw ComputeError("ranking group '" + key + "' has fewer than 2 images");
    if (idx.size() > kMaxRanked) throw RangeError("ranking group '" + key + "' has more than 9 images");
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].total > records[b].total; });
    RankingGroup g;
    g.prompt = group_by == GroupBy::Prompt ? key : "enhance " + key;
    for (std::size_t i : idx) {
      g.images.push_back(records[i].variant);
      g.scores.push_back(records[i].total);
    }
    out.push_back(std::move(g));
  }
  return out;
}

struct ScoredRecord {
  VariantRecord record;
  double score = 0.0;
};

// Scores each record's image, resolved against base_dir.
inline std::vector<ScoredRecord> auto_prescore(const std::vector<VariantRecord>& records,
                                               const RewardModel& model,
                                               const std::filesystem::path& base_dir = {}) {
  if (!model.initialized()) throw ComputeError("auto_prescore: reward model is not initialized");
  std::vector<ScoredRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r, score(model, load_image(base_dir / r.path))});
  return out;
}

}  // namespace lowlight

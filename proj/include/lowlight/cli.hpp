#pragma once

// Command-line front end. `run` takes the argument list without the program
// name and writes to the given streams, so tests can drive it in-process.
//
// Exit codes: 0 success, 1 usage, 2 I/O, 3 parse, 4 compute.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lowlight/colorloop.hpp"
#include "lowlight/dataset.hpp"
#include "lowlight/diffusion.hpp"
#include "lowlight/io.hpp"
#include "lowlight/metrics.hpp"
#include "lowlight/prompt.hpp"
#include "lowlight/relight.hpp"
#include "lowlight/retinex.hpp"
#include "lowlight/reward.hpp"

namespace lowlight::cli {

inline constexpr const char* kVersion = "lowlight 0.1.0";

namespace detail {

namespace fs = std::filesystem;

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

inline void require_flag(bool present, const char* flag) {
  if (!present) throw UsageError(std::string(flag) + " is required");
}

inline void require_input(const fs::path& p, const char* flag) {
  if (!fs::is_regular_file(p)) throw IoError(std::string(flag) + ": no such file: " + p.string());
}

// The parent directory of an output file must already exist.
inline void require_output(const fs::path& p, const char* flag) {
  const fs::path parent = p.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw IoError(std::string(flag) + ": directory does not exist: " + parent.string());
  }
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  f << text;
  if (!f) throw IoError("write failed: " + p.string());
}

// Adjustment map scaled from [0, kMaxBoost] to [0, 1] for viewing.
inline ImageGray heat_map(const AdjustmentMap& adj) {
  ImageGray out = adj.map;
  for (double& v : out.data()) v /= kMaxBoost;
  return out;
}

inline const char* mask_source_name(MaskSource s) {
  switch (s) {
    case MaskSource::File: return "file";
    case MaskSource::ThresholdHeuristic: return "threshold_heuristic";
    case MaskSource::WholeImage: return "whole_image";
  }
  return "unknown";
}

inline std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("--levels: not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--levels: empty list");
  return out;
}

struct Global {
  std::uint64_t seed = 0;
  bool quiet = false;
};

struct EnhanceArgs {
  std::string image, prompt, mask, out, adjust_map_out;
  double feather = kDefaultFeatherSigma;
  double retinex_sigma = 8.0;
  double blend_sigma = 4.0;
  double dark_quantile = kDefaultDarkQuantile;
  bool heuristic_mask = false;
};

inline EnhanceOptions enhance_options(const EnhanceArgs& a) {
  EnhanceOptions o;
  o.retinex_sigma = a.retinex_sigma;
  o.blend_sigma = a.blend_sigma;
  o.feather_sigma = a.feather;
  o.target.threshold_heuristic = a.heuristic_mask;
  o.target.dark_quantile = a.dark_quantile;
  if (!a.mask.empty()) o.target.mask_path = a.mask;
  return o;
}

inline int cmd_enhance(const EnhanceArgs& a, const Global& g, std::ostream& out) {
  // The prompt is checked first so a bad prompt is reported as such even when
  // other flags are missing.
  require_flag(!a.prompt.empty(), "--prompt");
  const AdjustmentPlan plan = parse(a.prompt);
  require_flag(!a.image.empty(), "--image");
  require_flag(!a.out.empty(), "--out");
  require_input(a.image, "--image");
  if (!a.mask.empty()) require_input(a.mask, "--mask");
  require_output(a.out, "--out");
  if (!a.adjust_map_out.empty()) require_output(a.adjust_map_out, "--adjust-map-out");

  const ImageRGB img = load_image(a.image);
  const EnhanceResult r = enhance(img, plan, enhance_options(a));
  save_image(r.image, a.out);
  if (!a.adjust_map_out.empty()) save_image(heat_map(r.adjustment), a.adjust_map_out);
  if (!g.quiet) {
    nlohmann::json j{{"plan", explain(plan)},
                     {"mask_source", mask_source_name(r.mask.source)},
                     {"mean_luma_in", mean_luma(img)},
                     {"mean_luma_out", mean_luma(r.image)},
                     {"psnr", psnr(img, r.image)},
                     {"angular_color", angular_color_loss_mean(img, r.image)}};
    if (img.width() >= kSsimWindow && img.height() >= kSsimWindow) j["ssim"] = ssim(img, r.image);
    out << j.dump() << '\n';
  }
  return 0;
}

inline int cmd_decompose(const std::string& image, double sigma, const std::string& out_dir,
                         const Global& g, std::ostream& out) {
  require_flag(!image.empty(), "--image");
  require_input(image, "--image");
  if (!fs::is_directory(out_dir)) throw IoError("--out-dir: directory does not exist: " + out_dir);
  const RetinexPair pair = decompose(load_image(image), sigma);
  const std::string stem = fs::path(image).stem().string();
  const fs::path illum = fs::path(out_dir) / (stem + "_illum.png");
  const fs::path refl = fs::path(out_dir) / (stem + "_refl.png");
  save_image(pair.illumination, illum);
  // Reflectance above 1 saturates in the 8-bit file.
  save_image(pair.reflection, refl);
  if (!g.quiet) {
    out << nlohmann::json{{"illumination", illum.generic_string()}, {"reflection", refl.generic_string()}}.dump()
        << '\n';
  }
  return 0;
}

struct PolishArgs {
  EnhanceArgs enhance;
  std::string model, trace_out;
  std::size_t max_iters = 10;
  double epsilon = 1e-4;
};

inline int cmd_autopolish(const PolishArgs& a, const Global& g, std::ostream& out) {
  std::optional<AdjustmentPlan> plan;
  if (!a.enhance.prompt.empty()) plan = parse(a.enhance.prompt);
  require_flag(!a.enhance.image.empty(), "--image");
  require_flag(!a.model.empty(), "--model");
  require_flag(!a.enhance.out.empty(), "--out");
  require_input(a.enhance.image, "--image");
  require_input(a.model, "--model");
  if (!a.enhance.mask.empty()) require_input(a.enhance.mask, "--mask");
  require_output(a.enhance.out, "--out");
  if (!a.trace_out.empty()) require_output(a.trace_out, "--trace-out");

  const RewardModel model = load_model(a.model);
  ImageRGB img = load_image(a.enhance.image);
  if (plan) img = enhance(img, *plan, enhance_options(a.enhance)).image;

  LoopConfig cfg;
  cfg.max_iters = a.max_iters;
  cfg.accept_epsilon = a.epsilon;
  const PolishResult r = autopolish(img, model, cfg);
  save_image(r.image, a.enhance.out);
  const nlohmann::json trace = trace_to_json(r.trace);
  if (!a.trace_out.empty()) write_text(a.trace_out, trace.dump(2) + "\n");
  if (!g.quiet) {
    std::size_t accepted = 0;
    for (const auto& s : r.trace) accepted += s.accepted;
    out << nlohmann::json{{"initial_score", r.initial_score},
                          {"final_score", r.final_score},
                          {"accepted_steps", accepted},
                          {"reached_positive", r.reached_positive}}
               .dump()
        << '\n';
  }
  return 0;
}

struct DatasetArgs {
  std::string sources_dir, out_dir, levels = "1.10,1.30,2.00,2.50", model;
  std::size_t per_level = kDefaultTransformsPerLevel;
  unsigned threads = 1;
};

inline int cmd_build_dataset(const DatasetArgs& a, const Global& g, std::ostream& out) {
  require_flag(!a.sources_dir.empty(), "--sources-dir");
  require_flag(!a.out_dir.empty(), "--out-dir");
  const std::vector<double> levels = parse_levels(a.levels);
  if (!a.model.empty()) require_input(a.model, "--model");
  const auto sources = list_sources(a.sources_dir);
  std::optional<RewardModel> model;
  if (!a.model.empty()) model = load_model(a.model);

  const fs::path dir(a.out_dir);
  const auto records = build_variants(sources, levels, a.per_level, g.seed, dir, a.threads);
  save_manifest(records, dir / "manifest.jsonl");
  if (model) {
    std::string text;
    for (const auto& s : auto_prescore(records, *model, dir)) {
      text += nlohmann::json{{"path", s.record.path.generic_string()}, {"score", s.score}}.dump() + "\n";
    }
    write_text(dir / "prescores.jsonl", text);
  }
  if (!g.quiet) {
    out << nlohmann::json{{"records", records.size()},
                          {"sources", sources.size()},
                          {"levels", levels.size()},
                          {"manifest", (dir / "manifest.jsonl").generic_string()}}
               .dump()
        << '\n';
  }
  return 0;
}

struct TrainArgs {
  std::string ranking, out;
  TrainConfig cfg;
};

inline int cmd_train_reward(TrainArgs a, const Global& g, std::ostream& out) {
  require_flag(!a.ranking.empty(), "--ranking");
  require_flag(!a.out.empty(), "--out");
  require_input(a.ranking, "--ranking");
  require_output(a.out, "--out");
  a.cfg.seed = g.seed;

  const RankingDataset data = load_ranking(a.ranking);
  const fs::path base = fs::path(a.ranking).parent_path();
  FeatureStore store;
  for (const auto& group : data) {
    for (const auto& id : group.images) {
      if (store.count(id)) continue;
      const fs::path p = fs::path(id).is_absolute() ? fs::path(id) : base / id;
      require_input(p, "--ranking image");
      store[id] = extract_features(load_image(p));
    }
  }
  const TrainResult r = train(data, store, a.cfg);
  save_model(r.model, a.out);
  if (!g.quiet) {
    std::vector<ComparisonPair> pairs;
    for (const auto& group : data) {
      for (const auto& p : group.pairs()) pairs.push_back(p);
    }
    out << nlohmann::json{{"pairs", pairs.size()},
                          {"final_loss", r.final_loss},
                          {"train_accuracy", pairwise_accuracy(r.model, pairs, store)}}
               .dump()
        << '\n';
  }
  return 0;
}

inline int cmd_score(const std::string& model, const std::string& image, std::ostream& out) {
  require_flag(!model.empty(), "--model");
  require_flag(!image.empty(), "--image");
  require_input(model, "--model");
  require_input(image, "--image");
  out << fmt(score(load_model(model), load_image(image))) << '\n';
  return 0;
}

inline int cmd_eval(const std::string& ref, const std::string& test, std::ostream& out) {
  require_flag(!ref.empty(), "--ref");
  require_flag(!test.empty(), "--test");
  require_input(ref, "--ref");
  require_input(test, "--test");
  const ImageRGB a = load_image(ref);
  const ImageRGB b = load_image(test);
  out << nlohmann::json{{"psnr", psnr(a, b)}, {"ssim", ssim(a, b)}, {"angular_color", angular_color_loss_mean(a, b)}}
             .dump()
      << '\n';
  return 0;
}

struct DdimArgs {
  int steps = 50;
  double eta = 0.0;
  std::size_t trajectories = 10000;
  double beta_min = 1e-4, beta_max = 0.02;
  double data_mean = 0.0, data_var = 1.0;
  std::string out;
};

inline int cmd_ddim_demo(const DdimArgs& a, const Global& g, std::ostream& out) {
  if (!a.out.empty()) require_output(a.out, "--out");
  if (a.trajectories == 0) throw UsageError("--trajectories must be positive");
  if (!(a.data_var > 0.0)) throw UsageError("--data-var must be positive");
  const NoiseSchedule sched = linear_schedule(a.steps, a.beta_min, a.beta_max);
  const SampleRun run =
      ddim_sample(sched, gaussian_optimal_denoiser(sched, a.data_mean, a.data_var), a.eta, a.trajectories, g.seed);

  double mean = 0.0;
  for (double y : run.samples) mean += y;
  mean /= static_cast<double>(run.samples.size());
  double var = 0.0;
  for (double y : run.samples) var += (y - mean) * (y - mean);
  var /= static_cast<double>(run.samples.size());

  std::string csv = "trajectory,y0\n";
  for (std::size_t i = 0; i < run.samples.size(); ++i) csv += std::to_string(i) + "," + fmt(run.samples[i]) + "\n";
  csv += "# mean=" + fmt(mean) + "\n# variance=" + fmt(var) + "\n";
  const nlohmann::json summary{{"mean", mean},
                               {"variance", var},
                               {"target_mean", a.data_mean},
                               {"target_variance", a.data_var},
                               {"clamp_events", run.clamp_events}};
  if (a.out.empty()) {
    out << csv;
  } else {
    write_text(a.out, csv);
    if (!g.quiet) out << summary.dump() << '\n';
  }
  return 0;
}

}  // namespace detail

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  using namespace detail;
  CLI::App app{"Prompt-driven low-light enhancement toolkit", "lowlight"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  Global g;
  app.add_option("--seed", g.seed, "Seed for every randomized step")->default_val(0);
  app.add_flag("--quiet", g.quiet, "Suppress summary output");

  EnhanceArgs en;
  auto add_target_flags = [](CLI::App* sub, EnhanceArgs& e, bool prompt_help_optional) {
    sub->add_option("--image", e.image, "Input image (PNG or PPM)");
    sub->add_option("--prompt", e.prompt,
                    prompt_help_optional ? "Instruction applied before polishing" : "Enhancement instruction");
    sub->add_option("--mask", e.mask, "Region mask image; nonzero = enhance");
    sub->add_option("--out", e.out, "Output image");
    sub->add_option("--feather", e.feather, "Mask feather sigma in pixels")->capture_default_str();
    sub->add_flag("--heuristic-mask", e.heuristic_mask, "Resolve named regions to the darkest pixels");
    sub->add_option("--dark-quantile", e.dark_quantile, "Luma quantile for --heuristic-mask")
        ->capture_default_str();
    sub->add_option("--retinex-sigma", e.retinex_sigma, "Illumination blur sigma")->capture_default_str();
    sub->add_option("--blend-sigma", e.blend_sigma, "Adjustment map smoothing sigma")->capture_default_str();
  };

  auto* enhance_cmd = app.add_subcommand("enhance", "Relight an image from a text instruction");
  add_target_flags(enhance_cmd, en, false);
  enhance_cmd->add_option("--adjust-map-out", en.adjust_map_out, "Write the adjustment map as a heat map PNG");

  std::string dec_image, dec_out_dir = ".";
  double dec_sigma = 8.0;
  auto* decompose_cmd = app.add_subcommand("decompose", "Write illumination and reflectance images");
  decompose_cmd->add_option("--image", dec_image, "Input image");
  decompose_cmd->add_option("--sigma", dec_sigma, "Illumination blur sigma")->capture_default_str();
  decompose_cmd->add_option("--out-dir", dec_out_dir, "Output directory")->capture_default_str();

  PolishArgs po;
  auto* polish_cmd = app.add_subcommand("autopolish", "Greedy reward-guided color adjustment");
  add_target_flags(polish_cmd, po.enhance, true);
  polish_cmd->add_option("--model", po.model, "Reward model JSON");
  polish_cmd->add_option("--trace-out", po.trace_out, "Write the step trace as JSON");
  polish_cmd->add_option("--max-iters", po.max_iters, "Maximum rounds")->capture_default_str();
  polish_cmd->add_option("--epsilon", po.epsilon, "Minimum accepted score gain")->capture_default_str();

  DatasetArgs ds;
  auto* dataset_cmd = app.add_subcommand("build-dataset", "Render brightness/transform variants and a manifest");
  dataset_cmd->add_option("--sources-dir", ds.sources_dir, "Directory of source images");
  dataset_cmd->add_option("--out-dir", ds.out_dir, "Output directory");
  dataset_cmd->add_option("--levels", ds.levels, "Comma-separated brightness multipliers")->capture_default_str();
  dataset_cmd->add_option("--per-level", ds.per_level, "Transforms per level")->capture_default_str();
  dataset_cmd->add_option("--threads", ds.threads, "Worker threads")->capture_default_str();
  dataset_cmd->add_option("--model", ds.model, "Reward model for pre-scoring (optional)");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train-reward", "Fit the linear reward model on ranked groups");
  train_cmd->add_option("--ranking", tr.ranking, "Ranking JSONL");
  train_cmd->add_option("--out", tr.out, "Model JSON to write");
  train_cmd->add_option("--lr", tr.cfg.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--batch", tr.cfg.batch, "Mini-batch size")->capture_default_str();
  train_cmd->add_option("--epochs", tr.cfg.epochs, "Epochs")->capture_default_str();

  std::string sc_model, sc_image;
  auto* score_cmd = app.add_subcommand("score", "Print the reward score of an image");
  score_cmd->add_option("--model", sc_model, "Reward model JSON");
  score_cmd->add_option("--image", sc_image, "Image to score");

  std::string ev_ref, ev_test;
  auto* eval_cmd = app.add_subcommand("eval", "Print PSNR, SSIM and mean angular color error");
  eval_cmd->add_option("--ref", ev_ref, "Reference image");
  eval_cmd->add_option("--test", ev_test, "Test image");

  DdimArgs dd;
  auto* ddim_cmd = app.add_subcommand("ddim-demo", "Sample a 1-D Gaussian with DDIM");
  ddim_cmd->add_option("--steps", dd.steps, "Diffusion steps T")->capture_default_str();
  ddim_cmd->add_option("--eta", dd.eta, "Stochasticity; 0 is deterministic")->capture_default_str();
  ddim_cmd->add_option("--trajectories", dd.trajectories, "Number of chains")->capture_default_str();
  ddim_cmd->add_option("--beta-min", dd.beta_min, "First beta")->capture_default_str();
  ddim_cmd->add_option("--beta-max", dd.beta_max, "Last beta")->capture_default_str();
  ddim_cmd->add_option("--data-mean", dd.data_mean, "Data mean")->capture_default_str();
  ddim_cmd->add_option("--data-var", dd.data_var, "Data variance")->capture_default_str();
  ddim_cmd->add_option("--out", dd.out, "CSV path; stdout when omitted");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Usage);
  }

  try {
    if (*enhance_cmd) return cmd_enhance(en, g, out);
    if (*decompose_cmd) return cmd_decompose(dec_image, dec_sigma, dec_out_dir, g, out);
    if (*polish_cmd) return cmd_autopolish(po, g, out);
    if (*dataset_cmd) return cmd_build_dataset(ds, g, out);
    if (*train_cmd) return cmd_train_reward(tr, g, out);
    if (*score_cmd) return cmd_score(sc_model, sc_image, out);
    if (*eval_cmd) return cmd_eval(ev_ref, ev_test, out);
    if (*ddim_cmd) return cmd_ddim_demo(dd, g, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Parse);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Io);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Compute);
  }
  err << "error: no subcommand\n";
  return static_cast<int>(ErrorKind::Usage);
}

}  // namespace lowlight::cli

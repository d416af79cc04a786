#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "lowlight/cli.hpp"
#include "synthetic.hpp"

namespace ll = lowlight;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = ll::cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ll::RewardModel luma_model() {
  ll::RewardModel m;
  m.weights[ll::kMeanLuma] = 1.0;
  m.norms = ll::identity_norms();
  return m;
}

}  // namespace

TEST(Cli, HelpListsEveryFlag) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* flag :
       {"--seed", "--quiet", "--version", "--image", "--prompt", "--mask", "--out", "--feather", "--heuristic-mask",
        "--adjust-map-out", "--model", "--trace-out", "--sources-dir", "--out-dir", "--levels", "--per-level",
        "--ref", "--test", "--steps", "--eta", "--trajectories", "enhance", "decompose", "autopolish",
        "build-dataset", "train-reward", "score", "eval", "ddim-demo"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
}

TEST(Cli, VersionAndUsageErrors) {
  EXPECT_EQ(run({"--version"}).code, 0);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"nonsense"}).code, 1);
  EXPECT_EQ(run({"score", "--bogus", "1"}).code, 1);
  EXPECT_EQ(run({"score", "--image", "x.png"}).code, 1);
}

TEST(Cli, BadPromptIsParseErrorWithSpan) {
  const auto r = run({"enhance", "--prompt", "frobnicate"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("[0, 10)"), std::string::npos) << r.err;
}

TEST(Cli, EnhanceBrightens) {
  const auto dir = ll::testing::temp_dir("cli_enhance");
  ll::save_image(ll::testing::scene(2, 32, 24), dir / "in.png");
  const auto r = run({"enhance", "--image", (dir / "in.png").string(), "--prompt", "brighten the image by 30%",
                      "--out", (dir / "out.png").string(), "--adjust-map-out", (dir / "map.png").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GT(ll::mean_luma(ll::load_image(dir / "out.png")), ll::mean_luma(ll::load_image(dir / "in.png")));
  EXPECT_TRUE(std::filesystem::exists(dir / "map.png"));
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GT(j.at("mean_luma_out").get<double>(), j.at("mean_luma_in").get<double>());
}

TEST(Cli, EnhanceErrorClasses) {
  const auto dir = ll::testing::temp_dir("cli_enhance_err");
  ll::save_image(ll::testing::scene(2, 16, 16), dir / "in.png");
  const std::string in = (dir / "in.png").string();
  EXPECT_EQ(run({"enhance", "--image", (dir / "missing.png").string(), "--prompt", "brighten it", "--out",
                 (dir / "o.png").string()})
                .code,
            2);
  EXPECT_EQ(run({"enhance", "--image", in, "--prompt", "brighten the lamp", "--out", (dir / "o.png").string()}).code,
            1);
  EXPECT_EQ(run({"enhance", "--image", in, "--prompt", "brighten the lamp", "--heuristic-mask", "--out",
                 (dir / "o.png").string()})
                .code,
            0);
  EXPECT_EQ(run({"enhance", "--image", in, "--prompt", "brighten it", "--out", "/nonexistent_dir/o.png"}).code, 2);
}

TEST(Cli, DecomposeWritesBothLayers) {
  const auto dir = ll::testing::temp_dir("cli_decompose");
  ll::save_image(ll::testing::scene(1, 16, 16), dir / "photo.png");
  const auto r = run({"decompose", "--image", (dir / "photo.png").string(), "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "photo_illum.png"));
  EXPECT_TRUE(std::filesystem::exists(dir / "photo_refl.png"));
}

TEST(Cli, ScorePrintsModelScore) {
  const auto dir = ll::testing::temp_dir("cli_score");
  ll::save_image(ll::testing::scene(3, 16, 16), dir / "x.png");
  ll::save_model(luma_model(), dir / "m.json");
  const auto r = run({"score", "--model", (dir / "m.json").string(), "--image", (dir / "x.png").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::stod(r.out), ll::score(luma_model(), ll::load_image(dir / "x.png")));
}

TEST(Cli, MalformedModelIsReported) {
  const auto dir = ll::testing::temp_dir("cli_bad_model");
  ll::save_image(ll::testing::scene(3, 8, 8), dir / "x.png");
  std::ofstream(dir / "m.json") << "{ not json";
  EXPECT_EQ(run({"score", "--model", (dir / "m.json").string(), "--image", (dir / "x.png").string()}).code, 2);
}

TEST(Cli, EvalPrintsJson) {
  const auto dir = ll::testing::temp_dir("cli_eval");
  ll::save_image(ll::testing::uniform(16, 16, 0.5, 0.5, 0.5), dir / "a.png");
  ll::save_image(ll::testing::uniform(16, 16, 0.6, 0.6, 0.6), dir / "b.png");
  const auto r = run({"eval", "--ref", (dir / "a.png").string(), "--test", (dir / "b.png").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j.at("psnr").get<double>(), ll::psnr(ll::load_image(dir / "a.png"), ll::load_image(dir / "b.png")),
              1e-12);
  EXPECT_TRUE(j.contains("ssim"));
  EXPECT_TRUE(j.contains("angular_color"));
}

TEST(Cli, AutopolishWritesTrace) {
  const auto dir = ll::testing::temp_dir("cli_polish");
  ll::save_image(ll::testing::scene(0, 16, 16), dir / "in.png");
  ll::save_model(luma_model(), dir / "m.json");
  const auto r = run({"autopolish", "--image", (dir / "in.png").string(), "--model", (dir / "m.json").string(),
                      "--out", (dir / "out.png").string(), "--trace-out", (dir / "trace.json").string(),
                      "--max-iters", "3", "--prompt", "increase contrast a little"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto trace = nlohmann::json::parse(slurp(dir / "trace.json"));
  ASSERT_TRUE(trace.is_array());
  EXPECT_LE(trace.size(), 3u);
  EXPECT_TRUE(trace[0].contains("reward_before"));
}

TEST(Cli, DdimDemoIsReproducible) {
  const auto dir = ll::testing::temp_dir("cli_ddim");
  const auto a = run({"ddim-demo", "--steps", "20", "--trajectories", "200", "--seed", "5", "--eta", "0.5", "--out",
                      (dir / "a.csv").string()});
  const auto b = run({"ddim-demo", "--steps", "20", "--trajectories", "200", "--eta", "0.5", "--out",
                      (dir / "b.csv").string(), "--seed", "5"});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_EQ(slurp(dir / "a.csv").rfind("trajectory,y0\n", 0), 0u);
  EXPECT_TRUE(nlohmann::json::parse(a.out).contains("variance"));
}

TEST(Cli, BuildDatasetAndTrainReward) {
  const auto dir = ll::testing::temp_dir("cli_dataset");
  std::filesystem::create_directories(dir / "src");
  for (int i = 0; i < 2; ++i) ll::save_image(ll::testing::scene(i, 16, 12), dir / "src" / ("s" + std::to_string(i) + ".png"));
  ll::save_model(luma_model(), dir / "m.json");
  for (const char* sub : {"a", "b"}) {
    const auto r = run({"build-dataset", "--sources-dir", (dir / "src").string(), "--out-dir", (dir / sub).string(),
                        "--levels", "1.1,2.0", "--per-level", "2", "--seed", "9", "--model",
                        (dir / "m.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(dir / "a" / "manifest.jsonl"), slurp(dir / "b" / "manifest.jsonl"));
  EXPECT_EQ(slurp(dir / "a" / "prescores.jsonl"), slurp(dir / "b" / "prescores.jsonl"));
  EXPECT_EQ(ll::load_manifest(dir / "a" / "manifest.jsonl").size(), 8u);
  EXPECT_EQ(run({"build-dataset", "--sources-dir", (dir / "src").string(), "--out-dir", (dir / "c").string(),
                 "--levels", "1.1,abc"})
                .code,
            1);

  // Rank the variants of each source by the luma model and train on them.
  ll::RankingDataset data;
  const auto records = ll::load_manifest(dir / "a" / "manifest.jsonl");
  for (const auto& src : {"s0", "s1"}) {
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& r : records) {
      if (r.source_id == src) scored.emplace_back(ll::score(luma_model(), ll::load_image(dir / "a" / r.path)), r.path.string());
    }
    std::sort(scored.rbegin(), scored.rend());
    ll::RankingGroup g{src, {}, {}};
    for (const auto& [s, p] : scored) {
      g.images.push_back(p);
      g.scores.push_back(s);
    }
    data.push_back(g);
  }
  ll::save_ranking(data, dir / "a" / "ranking.jsonl");
  const auto t = run({"train-reward", "--ranking", (dir / "a" / "ranking.jsonl").string(), "--out",
                      (dir / "trained.json").string(), "--epochs", "5"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(ll::load_model(dir / "trained.json").initialized());
}

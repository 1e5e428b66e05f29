#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "discourse/config.hpp"
#include "discourse/pipeline.hpp"

using namespace discourse;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("discourse_test_config_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Settings small_run(const fs::path& out) {
  Settings s;
  s.set("output", out.string());
  s.set("seed", "7");
  s.set("synth.groups", "6");
  s.set("eval.k_folds", "3");
  s.set("lda.burn_in", "20");
  s.set("lda.iterations", "60");
  return s;
}

nlohmann::json manifest_json(const fs::path& dir) {
  return nlohmann::json::parse(util::read_file((dir / "manifest.json").string()));
}

}  // namespace

TEST(Settings, DefaultsAndAliases) {
  Settings s;
  EXPECT_EQ(s.get("seed"), "42");
  EXPECT_EQ(s.get("lda.k"), "3");
  EXPECT_EQ(s.get("burn-in"), "1000");
  EXPECT_EQ(canonical_key("k-folds"), "eval.k_folds");
  EXPECT_EQ(canonical_key("max-passes"), "svm.max_passes");
  EXPECT_EQ(s.number<double>("svm.tol"), 0.001);
}

TEST(Settings, UnknownKeyRejected) {
  Settings s;
  try {
    s.set("lda.gamma", "1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    EXPECT_EQ(e.subject(), "lda.gamma");
  }
  try {
    s.merge_file_text("seed = 1\n[svm]\nkernel = rbf\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Settings, FileSyntax) {
  Settings s;
  s.merge_file_text(
      "# experiment\n"
      "seed = 9   # trailing comment\n"
      "[lda]\n"
      "k_list = 3,4,5,6\n"
      "alpha = \"0.5\"\n"
      "[svm]\n"
      "c = 2\n"
      "[synth]\n"
      "noise = \"0.1 # kept\"\n");
  EXPECT_EQ(s.seed(), 9u);
  EXPECT_EQ(s.number_list("lda.k_list"), (std::vector<std::size_t>{3, 4, 5, 6}));
  EXPECT_EQ(s.get("lda.alpha"), "0.5");
  EXPECT_EQ(s.get("svm.c"), "2");
  EXPECT_EQ(s.get("synth.noise"), "0.1 # kept");
  EXPECT_THROW(s.merge_file_text("[lda\n"), Error);
  EXPECT_THROW(s.merge_file_text("novalue\n"), Error);
  EXPECT_THROW(s.number<double>("synth.noise"), Error);
}

TEST(Settings, PrecedenceDefaultsFileEnvironmentFlags) {
  Settings s;
  s.merge_file_text("seed = 5\n[lda]\nburn_in = 10\nchains = 2\n");
  ::setenv("DISCOURSE_LDA_BURN_IN", "20", 1);
  ::setenv("DISCOURSE_SEED", "6", 1);
  s.merge_environment();
  ::unsetenv("DISCOURSE_LDA_BURN_IN");
  ::unsetenv("DISCOURSE_SEED");
  s.set("seed", "7");
  EXPECT_EQ(s.get("seed"), "7");            // flag over environment
  EXPECT_EQ(s.get("lda.burn_in"), "20");    // environment over file
  EXPECT_EQ(s.get("lda.chains"), "2");      // file over default
  EXPECT_EQ(s.get("lda.iterations"), "5000");
}

TEST(Settings, CanonicalTextRoundTrips) {
  Settings s;
  s.set("seed", "11");
  s.set("lda.k_list", "3,4");
  s.set("svm.c", "0.5");
  Settings t;
  t.merge_file_text(s.canonical_text());
  EXPECT_EQ(t.values(), s.values());
  EXPECT_EQ(t.hash(), s.hash());
  t.set("svm.c", "0.25");
  EXPECT_NE(t.hash(), s.hash());
}

TEST(Settings, StageSeedsDiffer) {
  Settings s;
  EXPECT_NE(s.gibbs("lda-k3").seed, s.gibbs("lda-k4").seed);
  EXPECT_EQ(s.gibbs("lda-k3").seed, s.gibbs("lda-k3").seed);
  EXPECT_NE(s.svm("train").seed, s.svm("evaluate-svm").seed);
}

TEST(Pipeline, PredictWithoutModelNamesTheField) {
  auto dir = scratch("predict");
  auto s = small_run(dir);
  pipeline::execute("datagen", s);
  s.set("input", (dir / "corpus.jsonl").string());
  try {
    pipeline::execute("predict", s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    EXPECT_EQ(e.subject(), "model");
  }
}

TEST(Pipeline, UnknownCommand) { EXPECT_THROW(pipeline::execute("plot", Settings{}), Error); }

TEST(Pipeline, RunsAreByteIdenticalAndReplayable) {
  auto run_all = [](const fs::path& dir) {
    auto s = small_run(dir);
    pipeline::execute("datagen", s);
    auto corpus = (dir / "corpus.jsonl").string();
    s.set("input", corpus);
    s.set("output", (dir / "tokens").string());
    pipeline::execute("preprocess", s);
    s.set("input", (dir / "tokens" / "tokens.jsonl").string());
    s.set("output", (dir / "eval").string());
    pipeline::execute("evaluate", s);
  };
  auto a = scratch("run_a"), b = scratch("run_b");
  run_all(a);
  run_all(b);
  for (const char* f : {"corpus.jsonl", "groups.jsonl", "annotations.csv", "tokens/tokens.jsonl",
                        "eval/report.csv", "eval/report.txt", "eval/folds.csv", "eval/cv_predictions.csv"})
    EXPECT_EQ(util::read_file((a / f).string()), util::read_file((b / f).string())) << f;

  auto m = manifest_json(a / "eval");
  EXPECT_EQ(m["command"], "evaluate");
  EXPECT_EQ(m["seed"], 7);
  EXPECT_FALSE(m.contains("timestamp"));

  auto [command, settings] = settings_from_manifest((a / "eval" / "manifest.json").string());
  auto replay = scratch("replay");
  settings.set("output", replay.string());
  pipeline::execute(command, settings);
  EXPECT_EQ(util::read_file((replay / "report.csv").string()), util::read_file((a / "eval" / "report.csv").string()));
  EXPECT_EQ(manifest_json(replay)["outputs"], m["outputs"]);
}

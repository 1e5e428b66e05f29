#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "discourse.hpp"

namespace {

using discourse::Settings;

struct Flag {
  std::string name;  // without dashes
  std::string key;   // settings key
  std::string help;
};

const std::vector<Flag>& common_flags() {
  static const std::vector<Flag> f{
      {"seed", "seed", "root seed; every stage derives its own"},
      {"jobs", "jobs", "worker threads for chains, folds and class pairs"},
      {"input", "input", "corpus (.jsonl/.csv) or token file"},
      {"output", "output", "output directory"},
      {"metadata", "metadata", "group metadata (.jsonl)"},
      {"annotations", "annotations", "judge labels CSV"},
      {"predictions", "predictions", "predicted labels CSV (id,label)"},
      {"model", "model", "trained model JSON"},
      {"topic-class-map", "topic_class_map", "CSV topic_index,class"},
      {"lexicon", "lexicon", "lemma lexicon TSV"},
      {"stopwords", "stopwords", "stopword list"},
      {"emoticons", "emoticons", "emoticon list"},
      {"k-list", "lda.k_list", "comma-separated topic counts"},
      {"alpha", "lda.alpha", "Dirichlet prior on theta (0 = 50/K)"},
      {"beta", "lda.beta", "Dirichlet prior on phi"},
      {"burn-in", "lda.burn_in", "sweeps discarded before estimates"},
      {"iterations", "lda.iterations", "total Gibbs sweeps"},
      {"chains", "lda.chains", "independent chains per K"},
      {"top-n", "lda.top_n", "words per topic in the top-word CSV"},
      {"c", "svm.c", "SVM box constraint"},
      {"tol", "svm.tol", "KKT tolerance"},
      {"max-passes", "svm.max_passes", "idle SMO passes before stopping"},
      {"k-folds", "eval.k_folds", "cross-validation folds"},
      {"groups", "synth.groups", "synthetic groups"},
      {"noise", "synth.noise", "synthetic token noise rate"},
      {"judge-accuracy", "synth.judge_accuracy", "simulated judge accuracy"},
  };
  return f;
}

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d{
      {"datagen", "generate a synthetic labelled corpus, group metadata and judge labels"},
      {"ingest", "validate a corpus, normalise it to JSONL and summarise it"},
      {"preprocess", "tokenize, lemmatize and filter every message"},
      {"lda", "fit topic models for one or more K"},
      {"train", "train the one-vs-one SVM on the whole labelled input"},
      {"predict", "label messages with an SVM or topic model"},
      {"evaluate", "stratified k-fold comparison of SVM and LDA classifiers"},
      {"analyze", "group features, correlation matrix, PCA and biplot data"},
      {"report", "inter-annotator agreement and adjudicated labels"},
  };
  return d;
}

struct Parsed {
  std::string config_file;
  std::map<std::string, std::string> values;  // flag name -> value
};

int fail(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discourse-function classification and group analytics for classroom microblogs"};
  app.require_subcommand(1);

  std::map<std::string, Parsed> parsed;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, desc] : descriptions()) {
    auto* sub = app.add_subcommand(name, desc);
    subs[name] = sub;
    auto& p = parsed[name];
    sub->add_option("--config", p.config_file, "config file (key = value, [sections])");
    for (const auto& f : common_flags()) sub->add_option("--" + f.name, p.values[f.name], f.help);
    // "--k" is the fold count for evaluate and the topic count elsewhere.
    sub->add_option("--k", p.values["k"], name == "evaluate" ? "cross-validation folds" : "topic count");
  }

  std::string manifest_path;
  std::string replay_output;
  auto* replay = app.add_subcommand("replay", "re-run a stage from its manifest.json");
  replay->add_option("manifest", manifest_path, "manifest written by an earlier run")->required();
  replay->add_option("--output", replay_output, "write to this directory instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    std::string command;
    Settings settings;
    if (replay->parsed()) {
      auto [cmd, s] = discourse::settings_from_manifest(manifest_path);
      command = cmd;
      settings = std::move(s);
      if (!replay_output.empty()) settings.set("output", replay_output);
    } else {
      for (const auto& [name, sub] : subs) {
        if (!sub->parsed()) continue;
        command = name;
        const auto& p = parsed[name];
        std::string file = p.config_file;
        if (file.empty())
          if (const char* e = std::getenv("DISCOURSE_CONFIG")) file = e;
        if (!file.empty()) settings.merge_file(file);
        settings.merge_environment();
        for (const auto& f : common_flags())
          if (sub->count("--" + f.name)) settings.set(f.key, p.values.at(f.name));
        if (sub->count("--k")) settings.set(name == "evaluate" ? "eval.k_folds" : "lda.k", p.values.at("k"));
      }
    }
    auto manifest = discourse::pipeline::execute(command, settings);
    std::cout << command << ": wrote " << manifest.outputs.size() << " file(s) to " << settings.get("output")
              << " (config " << settings.hash() << ", seed " << settings.seed() << ")\n";
    for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
  } catch (const discourse::Error& e) {
    return fail(e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(std::string("MalformedRecord: ") + e.what());
  } catch (const std::exception& e) {
    return fail(std::string("Internal: ") + e.what());
  }
}

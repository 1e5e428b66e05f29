#pragma once

#include <exception>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "evaluation.hpp"
#include "features.hpp"
#include "lda.hpp"
#include "lda_classifier.hpp"
#include "svm.hpp"
#include "types.hpp"
#include "util.hpp"

namespace discourse {

struct LabeledDoc {
  std::string id;
  TokenStream tokens;
  DiscourseClass label = DiscourseClass::Phatic;
};

using Predictor = std::function<DiscourseClass(const TokenStream&)>;
// Builds a predictor from one fold's training split. The fold index lets
// stochastic trainers derive a per-fold seed.
using Trainer = std::function<Predictor(std::span<const LabeledDoc> train, std::size_t fold)>;

struct NamedTrainer {
  std::string name;
  Trainer train;
};

// Binary bag-of-words + one-vs-one SMO. The feature space is rebuilt from the
// training split only.
inline Trainer svm_trainer(SvmConfig cfg) {
  return [cfg](std::span<const LabeledDoc> train, std::size_t fold) -> Predictor {
    std::vector<TokenStream> docs;
    std::vector<DiscourseClass> labels;
    for (const auto& d : train) {
      docs.push_back(d.tokens);
      labels.push_back(d.label);
    }
    auto fs = FeatureSpace::build(docs);
    std::vector<BinaryVector> X;
    for (const auto& d : docs) X.push_back(vectorize(d, fs));
    SvmConfig fold_cfg = cfg;
    fold_cfg.seed = stage_seed(cfg.seed, "fold-" + std::to_string(fold));
    auto model = std::make_shared<SvmMulticlassModel>(train_multiclass(X, labels, std::move(fs), fold_cfg));
    return [model](const TokenStream& t) { return predict_svm(*model, t).label; };
  };
}

// Unsupervised LDA with K = number of training classes, topics aligned to
// classes by the training labels, then word-likelihood classification.
inline Trainer lda_trainer(GibbsConfig cfg) {
  return [cfg](std::span<const LabeledDoc> train, std::size_t fold) -> Predictor {
    std::vector<TokenStream> docs;
    std::vector<DiscourseClass> labels;
    std::vector<DiscourseClass> classes;
    for (const auto& d : train) {
      docs.push_back(d.tokens);
      labels.push_back(d.label);
      if (std::find(classes.begin(), classes.end(), d.label) == classes.end()) classes.push_back(d.label);
    }
    GibbsConfig fold_cfg = cfg;
    fold_cfg.topics = classes.size();
    fold_cfg.seed = stage_seed(cfg.seed, "fold-" + std::to_string(fold));
    auto model = run_chains(docs, fold_cfg);
    auto map = align_topics_to_labels(model, labels, classes);
    auto clf = std::make_shared<LdaClassifier>(std::move(model), std::move(map));
    return [clf](const TokenStream& t) { return classify_lda(t, *clf).label; };
  };
}

struct ClassifierResult {
  std::string name;
  ConfusionMatrix confusion;
  ClassMetrics metrics;
  std::vector<DiscourseClass> predictions;  // aligned with the evaluated corpus
};

struct EvaluationReport {
  FoldPlan plan;
  std::vector<ClassifierResult> results;
};

// k-fold cross-validation of every trainer on the same stratified plan.
// Folds are independent; jobs > 1 evaluates them on separate threads and the
// aggregated report is identical to the sequential one.
inline EvaluationReport cross_validate(std::span<const LabeledDoc> corpus, std::span<const NamedTrainer> trainers,
                                       std::size_t k, std::uint64_t seed, std::size_t jobs = 1) {
  std::vector<DiscourseClass> labels;
  for (const auto& d : corpus) labels.push_back(d.label);
  EvaluationReport report;
  report.plan = stratified_kfold(labels, k, seed);
  const auto fold_of = report.plan.assignment(corpus.size());

  for (const auto& trainer : trainers) {
    ClassifierResult result;
    result.name = trainer.name;
    result.predictions.resize(corpus.size());
    std::vector<std::exception_ptr> errors(k);
    auto run_fold = [&](std::size_t f) {
      try {
        std::vector<LabeledDoc> train;
        for (std::size_t i = 0; i < corpus.size(); ++i)
          if (fold_of[i] != f) train.push_back(corpus[i]);
        auto predict = trainer.train(train, f);
        for (auto i : report.plan.folds[f]) result.predictions[i] = predict(corpus[i].tokens);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    };
    if (jobs <= 1) {
      for (std::size_t f = 0; f < k; ++f) run_fold(f);
    } else {
      for (std::size_t start = 0; start < k; start += jobs) {
        std::vector<std::thread> pool;
        for (std::size_t f = start; f < std::min(k, start + jobs); ++f) pool.emplace_back(run_fold, f);
        for (auto& t : pool) t.join();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (std::size_t i = 0; i < corpus.size(); ++i) result.confusion.add(corpus[i].label, result.predictions[i]);
    result.metrics = class_metrics(result.confusion);
    report.results.push_back(std::move(result));
  }
  return report;
}

// Rows: classes then Total; columns: <classifier>_{P,R,F1} as fractions.
inline std::string report_csv(const EvaluationReport& r) {
  std::string out = "class";
  for (const auto& res : r.results) out += "," + res.name + "_P," + res.name + "_R," + res.name + "_F1";
  out += "\n";
  for (auto c : kAllClasses) {
    out += std::string(to_string(c));
    for (const auto& res : r.results) {
      const auto& s = res.metrics[c];
      out += "," + util::fixed(s.precision, 4) + "," + util::fixed(s.recall, 4) + "," + util::fixed(s.f1, 4);
    }
    out += "\n";
  }
  out += "Total";
  for (const auto& res : r.results)
    out += "," + util::fixed(res.metrics.total_precision, 4) + "," + util::fixed(res.metrics.total_recall, 4) +
           "," + util::fixed(res.metrics.total_f1, 4);
  out += "\n";
  return out;
}

inline std::string report_text(const EvaluationReport& r) {
  auto pct = [](double v, bool undefined) { return util::fixed(100.0 * v, 1) + (undefined ? "%*" : "% "); };
  std::string out = std::to_string(r.plan.k) + "-fold stratified cross-validation (seed " +
                    std::to_string(r.plan.seed) + ")\n\n";
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  out += pad("", 12);
  for (const auto& res : r.results) out += " | " + pad(res.name, 8) + pad("", 17);
  out += "\n" + pad("Class", 12);
  for (std::size_t i = 0; i < r.results.size(); ++i) out += " | " + pad("P", 8) + pad("R", 8) + pad("F1", 9);
  out += "\n";
  bool footnote = false;
  for (auto c : kAllClasses) {
    out += pad(std::string(to_string(c)), 12);
    for (const auto& res : r.results) {
      const auto& s = res.metrics[c];
      footnote = footnote || s.precision_undefined || s.recall_undefined;
      out += " | " + pad(pct(s.precision, s.precision_undefined), 8) + pad(pct(s.recall, s.recall_undefined), 8) +
             pad(pct(s.f1, false), 9);
    }
    out += "\n";
  }
  out += pad("Total", 12);
  for (const auto& res : r.results)
    out += " | " + pad(pct(res.metrics.total_precision, false), 8) + pad(pct(res.metrics.total_recall, false), 8) +
           pad(pct(res.metrics.total_f1, false), 9);
  out += "\n\nTotal = support-weighted average of the class rows.\n";
  if (footnote) out += "* 0/0 cell, reported as 0.\n";
  for (const auto& w : r.plan.warnings) out += "warning: " + w + "\n";
  return out;
}

}  // namespace discourse

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "analytics.hpp"
#include "config.hpp"
#include "corpus.hpp"
#include "cross_validation.hpp"
#include "evaluation.hpp"
#include "features.hpp"
#include "lda.hpp"
#include "lda_classifier.hpp"
#include "pca.hpp"
#include "preprocess.hpp"
#include "svm.hpp"
#include "synthetic.hpp"

namespace discourse::pipeline {

struct Doc {
  std::string id;
  TokenStream tokens;
  std::optional<DiscourseClass> gold;
};

// Collects the artifacts of one stage and writes them with run.conf and
// manifest.json into the output directory.
class Run {
 public:
  Run(std::string command, const Settings& settings) : settings_(settings) {
    manifest_.command = std::move(command);
    manifest_.settings = settings_;
    dir_ = settings_.get("output");
    if (dir_.empty()) throw Error(ErrorKind::ConfigError, "missing required setting", std::nullopt, "output");
  }

  const Settings& settings() const noexcept { return settings_; }

  std::string input(std::string_view key) {
    auto path = settings_.require(key);
    note_input(path);
    return path;
  }

  std::optional<std::string> optional_input(std::string_view key) {
    const auto& path = settings_.get(key);
    if (path.empty()) return std::nullopt;
    note_input(path);
    return path;
  }

  void output(const std::string& name, const std::string& content) {
    files_.emplace_back(name, content);
    manifest_.outputs.emplace_back(name, content_hash(content));
  }

  void warn(std::string w) { manifest_.warnings.push_back(std::move(w)); }

  const Manifest& manifest() const noexcept { return manifest_; }

  void commit() {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create directory: " + ec.message(), std::nullopt, dir_);
    for (const auto& [name, content] : files_) util::write_file(dir_ + "/" + name, content);
    util::write_file(dir_ + "/run.conf", "# command = " + manifest_.command + "\n" + settings_.canonical_text());
    util::write_file(dir_ + "/manifest.json", manifest_.dump());
  }

  Resources resources() {
    return Resources::load(input("lexicon"), input("stopwords"), input("emoticons"));
  }

 private:
  void note_input(const std::string& path) {
    manifest_.inputs.emplace_back(path, content_hash(util::read_file(path)));
  }

  Settings settings_;
  Manifest manifest_;
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

// --- document I/O ------------------------------------------------------------------

inline bool is_tokens_file(const std::string& body) {
  for (const auto& line : util::split(body, '\n')) {
    auto t = util::trim(line);
    if (t.empty()) continue;
    if (t.front() != '{') return false;
    try {
      auto j = nlohmann::json::parse(t);
      return j.is_object() && j.contains("tokens");
    } catch (const nlohmann::json::exception&) {
      return false;
    }
  }
  return false;
}

inline std::string tokens_jsonl(const std::vector<Doc>& docs) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::ordered_json j;
    j["id"] = d.id;
    j["tokens"] = d.tokens;
    if (d.gold) j["gold_label"] = std::string(to_string(*d.gold));
    out += j.dump() + "\n";
  }
  return out;
}

inline std::vector<Doc> parse_tokens_jsonl(std::string_view body) {
  std::vector<Doc> out;
  std::size_t line_no = 0;
  for (const auto& line : util::split(body, '\n')) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Doc d;
      d.id = j.at("id").get<std::string>();
      d.tokens = j.at("tokens").get<TokenStream>();
      if (j.contains("gold_label") && !j["gold_label"].is_null()) {
        d.gold = parse_class(j["gold_label"].get<std::string>());
        if (!d.gold) throw Error(ErrorKind::MalformedRecord, "unknown class", line_no, d.id);
      }
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::MalformedRecord, e.what(), line_no);
    }
  }
  return out;
}

inline std::vector<Doc> documents_from_corpus(const Corpus& c, const Resources& res) {
  std::vector<Doc> out;
  for (const auto& m : c) out.push_back({m.id, preprocess(m.text, res), m.gold_label});
  return out;
}

// A preprocessed token file or a raw corpus (tokenized here).
inline std::vector<Doc> load_documents(Run& run) {
  auto path = run.input("input");
  auto body = util::read_file(path);
  if (is_tokens_file(body)) return parse_tokens_jsonl(body);
  return documents_from_corpus(load_corpus(path), run.resources());
}

inline std::vector<LabeledDoc> labeled(const std::vector<Doc>& docs) {
  std::vector<LabeledDoc> out;
  for (const auto& d : docs) {
    if (!d.gold) throw Error(ErrorKind::UnlabeledMessage, "training data needs gold labels", std::nullopt, d.id);
    out.push_back({d.id, d.tokens, *d.gold});
  }
  return out;
}

inline std::unordered_map<std::string, DiscourseClass> parse_predictions_csv(std::string_view body) {
  std::unordered_map<std::string, DiscourseClass> out;
  std::size_t line_no = 0;
  for (const auto& line : util::split(body, '\n')) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    auto f = util::split_csv_line(line);
    if (!f || f->size() < 2) throw Error(ErrorKind::MalformedRecord, "expected id,label", line_no);
    auto c = parse_class(util::trim((*f)[1]));
    if (!c) {
      if (line_no == 1) continue;
      throw Error(ErrorKind::MalformedRecord, "unknown class", line_no, (*f)[0]);
    }
    out[(*f)[0]] = *c;
  }
  return out;
}

// --- stages ------------------------------------------------------------------------

inline void datagen(Run& run) {
  const auto& s = run.settings();
  auto spec = default_synth_spec();
  spec.n_groups = s.number<std::size_t>("synth.groups");
  spec.noise_rate = s.number<double>("synth.noise");
  auto data = generate_synthetic(spec, stage_seed(s.seed(), "datagen"));
  run.output("corpus.jsonl", serialize_corpus_jsonl(data.corpus));
  run.output("groups.jsonl", serialize_group_metadata_jsonl(data.groups));

  // Three simulated judges: each agrees with the generating class with the
  // configured probability, otherwise picks one of the other two classes.
  const double acc = s.number<double>("synth.judge_accuracy");
  if (!(acc >= 0 && acc <= 1)) throw Error(ErrorKind::ConfigError, "must lie in [0, 1]", std::nullopt, "synth.judge_accuracy");
  Rng rng(stage_seed(s.seed(), "annotations"));
  std::string ann = "message_id,judge1,judge2,judge3\n";
  for (const auto& m : data.corpus) {
    ann += util::csv_escape(m.id);
    for (int j = 0; j < 3; ++j) {
      auto c = *m.gold_label;
      if (!rng.bernoulli(acc)) c = kAllClasses[(index_of(c) + 1 + rng.index(2)) % kNumClasses];
      ann += "," + std::string(to_string(c));
    }
    ann += "\n";
  }
  run.output("annotations.csv", ann);
}

inline void ingest(Run& run) {
  auto corpus = load_corpus(run.input("input"));
  run.output("corpus.jsonl", serialize_corpus_jsonl(corpus));
  run.output("summary.txt", render_summary(corpus_summary(corpus)));
}

inline void preprocess_stage(Run& run) {
  auto corpus = load_corpus(run.input("input"));
  auto docs = documents_from_corpus(corpus, run.resources());
  std::size_t empty = 0;
  for (const auto& d : docs) empty += d.tokens.empty();
  if (empty) run.warn(std::to_string(empty) + " messages have no tokens after preprocessing");
  run.output("tokens.jsonl", tokens_jsonl(docs));
}

inline void lda(Run& run) {
  const auto& s = run.settings();
  auto docs = load_documents(run);
  std::vector<TokenStream> streams;
  for (const auto& d : docs) streams.push_back(d.tokens);
  auto ks = s.number_list("lda.k_list");
  if (ks.empty()) ks.push_back(s.number<std::size_t>("lda.k"));
  const auto top_n = s.number<std::size_t>("lda.top_n");
  std::string chains = "k,chain,log_likelihood,selected\n";
  for (auto k : ks) {
    auto cfg = s.gibbs("lda-k" + std::to_string(k));
    cfg.topics = k;
    auto model = run_chains(streams, cfg, s.jobs());
    const auto tag = std::to_string(k);
    run.output("lda_k" + tag + ".json", to_json(model).dump() + "\n");
    run.output("top_words_k" + tag + ".csv", top_words_csv(model, top_n));
    for (std::size_t c = 0; c < model.chain_log_likelihoods.size(); ++c)
      chains += tag + "," + std::to_string(c) + "," + util::fixed(model.chain_log_likelihoods[c], 6) + "," +
                (c == model.selected_chain ? "1" : "0") + "\n";
    if (model.skipped_documents)
      run.warn("K=" + tag + ": " + std::to_string(model.skipped_documents) + " empty documents");
  }
  run.output("chains.csv", chains);
}

inline void train(Run& run) {
  const auto& s = run.settings();
  auto docs = labeled(load_documents(run));
  std::vector<TokenStream> streams;
  std::vector<DiscourseClass> labels;
  for (const auto& d : docs) {
    streams.push_back(d.tokens);
    labels.push_back(d.label);
  }
  auto fs = FeatureSpace::build(streams);
  std::vector<BinaryVector> X;
  for (const auto& t : streams) X.push_back(vectorize(t, fs));
  auto model = train_multiclass(X, labels, std::move(fs), s.svm("train"), s.jobs());
  for (const auto& p : model.pairs)
    if (!p.model.converged)
      run.warn(std::string(to_string(p.positive)) + "/" + std::string(to_string(p.negative)) +
               " stopped at the iteration limit");
  run.output("svm_model.json", to_json(model).dump() + "\n");
}

inline void predict(Run& run) {
  auto model_path = run.input("model");
  auto j = nlohmann::json::parse(util::read_file(model_path));
  auto docs = load_documents(run);
  const std::string format = j.value("format", "");
  std::string out;
  if (format == "discourse.svm_model") {
    auto model = svm_model_from_json(j);
    out = "id,label\n";
    for (const auto& d : docs) out += util::csv_escape(d.id) + "," + std::string(to_string(predict_svm(model, d.tokens).label)) + "\n";
  } else if (format == "discourse.topic_model") {
    auto model = topic_model_from_json(j);
    auto map = parse_topic_class_map(util::read_file(run.input("topic_class_map")), model.topics());
    LdaClassifier clf(std::move(model), std::move(map));
    out = "id,label,abstain\n";
    std::size_t abstained = 0;
    for (const auto& d : docs) {
      auto p = classify_lda(d.tokens, clf);
      abstained += p.abstain;
      out += util::csv_escape(d.id) + "," + std::string(to_string(p.label)) + "," + (p.abstain ? "1" : "0") + "\n";
    }
    if (abstained) run.warn(std::to_string(abstained) + " messages had no in-vocabulary word");
  } else {
    throw Error(ErrorKind::ConfigError, "unrecognised model format '" + format + "'", std::nullopt, "model");
  }
  run.output("predictions.csv", out);
}

inline void evaluate(Run& run) {
  const auto& s = run.settings();
  auto docs = labeled(load_documents(run));
  auto gibbs = s.gibbs("evaluate-lda");
  std::vector<NamedTrainer> trainers{{"SVM", svm_trainer(s.svm("evaluate-svm"))}, {"LDA", lda_trainer(gibbs)}};
  auto report = cross_validate(docs, trainers, s.number<std::size_t>("eval.k_folds"), stage_seed(s.seed(), "folds"),
                               s.jobs());
  for (const auto& w : report.plan.warnings) run.warn(w);
  std::vector<std::string> ids;
  for (const auto& d : docs) ids.push_back(d.id);
  run.output("report.csv", report_csv(report));
  run.output("report.txt", report_text(report));
  run.output("folds.csv", fold_plan_csv(report.plan, ids));
  std::string preds = "id,gold";
  for (const auto& r : report.results) preds += "," + r.name;
  preds += "\n";
  for (std::size_t i = 0; i < docs.size(); ++i) {
    preds += util::csv_escape(docs[i].id) + "," + std::string(to_string(docs[i].label));
    for (const auto& r : report.results) preds += "," + std::string(to_string(r.predictions[i]));
    preds += "\n";
  }
  run.output("cv_predictions.csv", preds);
}

inline void analyze(Run& run) {
  auto corpus = load_corpus(run.input("input"));
  auto groups = load_group_metadata(run.input("metadata"));
  std::vector<GroupFeatureRow> rows;
  if (auto p = run.optional_input("predictions"))
    rows = group_features(corpus, groups, parse_predictions_csv(util::read_file(*p)));
  else
    rows = group_features(corpus, groups);
  run.output("features.csv", features_csv(rows));
  auto corr = pearson_matrix(rows);
  run.output("correlation.csv", correlation_csv(corr));
  auto p = pca(rows);
  for (const auto& w : p.warnings) run.warn(w);
  run.output("eigen.csv", eigen_summary_csv(p));
  auto bi = export_biplot(p, rows);
  run.output("biplot_arrows.csv", bi.arrows);
  run.output("biplot_scores.csv", bi.scores);
}

inline void report(Run& run) {
  auto set = parse_annotations_csv(util::read_file(run.input("annotations")));
  const double kappa = fleiss_kappa(set);
  std::string gold = "message_id,label\n";
  std::size_t adjudicated = 0, unresolved = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    AnnotationSet one;
    one.add(set.ids[i], set.judgments[i]);
    try {
      auto g = adjudicate(one);
      gold += util::csv_escape(g[0].first) + "," + std::string(to_string(g[0].second)) + "\n";
      ++adjudicated;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoMajority) throw;
      ++unresolved;
    }
  }
  std::string text = "items: " + std::to_string(set.size()) + "\njudges: " + std::to_string(set.judges()) +
                     "\nfleiss_kappa: " + util::fixed(kappa, 6) + "\nadjudicated: " + std::to_string(adjudicated) +
                     "\nno_majority: " + std::to_string(unresolved) + "\n";
  if (unresolved) run.warn(std::to_string(unresolved) + " items without a majority label");
  run.output("agreement.txt", text);
  run.output("gold.csv", gold);
}

inline const std::map<std::string, std::function<void(Run&)>>& stages() {
  static const std::map<std::string, std::function<void(Run&)>> s{
      {"datagen", datagen}, {"ingest", ingest},     {"preprocess", preprocess_stage},
      {"lda", lda},         {"train", train},       {"predict", predict},
      {"evaluate", evaluate}, {"analyze", analyze}, {"report", report},
  };
  return s;
}

// Runs one stage and writes its artifacts. Returns the manifest.
inline Manifest execute(const std::string& command, const Settings& settings) {
  auto it = stages().find(command);
  if (it == stages().end()) throw Error(ErrorKind::ConfigError, "unknown command", std::nullopt, command);
  Run run(command, settings);
  it->second(run);
  run.commit();
  return run.manifest();
}

}  // namespace discourse::pipeline

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "matrix.hpp"
#include "random.hpp"
#include "types.hpp"
#include "util.hpp"

namespace discourse {

struct GibbsConfig {
  std::size_t topics = 3;
  // Non-positive alpha means "use 50 / topics".
  double alpha = 0.0;
  double beta = 0.1;
  std::size_t burn_in = 1000;
  // Total sweeps, burn-in included.
  std::size_t iterations = 5000;
  std::size_t chains = 1;
  std::uint64_t seed = 0;

  double effective_alpha() const { return alpha > 0 ? alpha : 50.0 / static_cast<double>(topics); }

  void validate() const {
    if (topics < 1) throw Error(ErrorKind::InvalidConfig, "topic count must be >= 1");
    if (!(beta > 0) || !std::isfinite(beta)) throw Error(ErrorKind::InvalidConfig, "beta must be > 0");
    if (!std::isfinite(alpha)) throw Error(ErrorKind::InvalidConfig, "alpha must be finite");
    if (burn_in > iterations) throw Error(ErrorKind::InvalidConfig, "burn_in exceeds iterations");
    if (chains < 1) throw Error(ErrorKind::InvalidConfig, "chains must be >= 1");
  }

  bool operator==(const GibbsConfig&) const = default;
};

// Joint log p(words, assignments | alpha, beta) of a collapsed LDA state:
//   K [lnG(V b) - V lnG(b)] + sum_k [sum_w lnG(n_kw + b) - lnG(n_k + V b)]
// + D [lnG(K a) - K lnG(a)] + sum_d [sum_k lnG(n_dk + a) - lnG(n_d + K a)]
// Empty documents contribute exactly zero.
inline double joint_log_likelihood(const std::vector<std::vector<std::uint32_t>>& docs,
                                   const std::vector<std::vector<std::uint32_t>>& assignments,
                                   std::size_t topics, std::size_t vocab_size, double alpha, double beta) {
  const double K = static_cast<double>(topics), V = static_cast<double>(vocab_size);
  std::vector<std::size_t> topic_word(topics * vocab_size, 0);
  std::vector<std::size_t> topic_total(topics, 0);
  std::vector<std::size_t> doc_topic(topics);
  double ll = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::fill(doc_topic.begin(), doc_topic.end(), 0);
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      auto k = assignments[d][i];
      ++doc_topic[k];
      ++topic_word[k * vocab_size + docs[d][i]];
      ++topic_total[k];
    }
    ll += std::lgamma(K * alpha) - K * std::lgamma(alpha);
    for (auto n : doc_topic) ll += std::lgamma(static_cast<double>(n) + alpha);
    ll -= std::lgamma(static_cast<double>(docs[d].size()) + K * alpha);
  }
  for (std::size_t k = 0; k < topics; ++k) {
    ll += std::lgamma(V * beta) - V * std::lgamma(beta);
    for (std::size_t w = 0; w < vocab_size; ++w)
      ll += std::lgamma(static_cast<double>(topic_word[k * vocab_size + w]) + beta);
    ll -= std::lgamma(static_cast<double>(topic_total[k]) + V * beta);
  }
  return ll;
}

// Collapsed Gibbs state over integer-coded documents. One sweep resamples
// every token once, in document order.
class GibbsSampler {
 public:
  GibbsSampler(std::vector<std::vector<std::uint32_t>> docs, std::size_t vocab_size, std::size_t topics,
               double alpha, double beta, std::uint64_t seed)
      : docs_(std::move(docs)),
        vocab_size_(vocab_size),
        topics_(topics),
        alpha_(alpha),
        beta_(beta),
        rng_(seed),
        topic_word_(topics, vocab_size, 0.0),
        topic_total_(topics, 0),
        doc_topic_(docs_.size(), std::vector<std::size_t>(topics, 0)),
        weights_(topics) {
    assignments_.resize(docs_.size());
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      assignments_[d].resize(docs_[d].size());
      for (std::size_t i = 0; i < docs_[d].size(); ++i) {
        auto k = static_cast<std::uint32_t>(rng_.index(topics_));
        assignments_[d][i] = k;
        add(d, docs_[d][i], k);
      }
    }
  }

  void sweep() {
    const double vbeta = static_cast<double>(vocab_size_) * beta_;
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      auto& z = assignments_[d];
      for (std::size_t i = 0; i < docs_[d].size(); ++i) {
        const auto w = docs_[d][i];
        remove(d, w, z[i]);
        double total = 0;
        for (std::size_t k = 0; k < topics_; ++k) {
          total += (static_cast<double>(doc_topic_[d][k]) + alpha_) * (topic_word_(k, w) + beta_) /
                   (static_cast<double>(topic_total_[k]) + vbeta);
          weights_[k] = total;
        }
        const double u = rng_.uniform() * total;
        std::size_t k = 0;
        while (k + 1 < topics_ && weights_[k] <= u) ++k;
        z[i] = static_cast<std::uint32_t>(k);
        add(d, w, z[i]);
      }
    }
  }

  double log_likelihood() const {
    return joint_log_likelihood(docs_, assignments_, topics_, vocab_size_, alpha_, beta_);
  }

  const std::vector<std::vector<std::uint32_t>>& documents() const noexcept { return docs_; }
  const std::vector<std::vector<std::uint32_t>>& assignments() const noexcept { return assignments_; }
  std::size_t topic_word(std::size_t k, std::size_t w) const {
    return static_cast<std::size_t>(topic_word_(k, w));
  }
  std::size_t topic_total(std::size_t k) const { return topic_total_[k]; }
  std::size_t doc_topic(std::size_t d, std::size_t k) const { return doc_topic_[d][k]; }
  std::size_t topics() const noexcept { return topics_; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }

  // Posterior-mean estimates from the current state.
  Matrix phi() const {
    Matrix out(topics_, vocab_size_);
    const double vbeta = static_cast<double>(vocab_size_) * beta_;
    for (std::size_t k = 0; k < topics_; ++k)
      for (std::size_t w = 0; w < vocab_size_; ++w)
        out(k, w) = (topic_word_(k, w) + beta_) / (static_cast<double>(topic_total_[k]) + vbeta);
    return out;
  }

  Matrix theta() const {
    Matrix out(docs_.size(), topics_);
    const double kalpha = static_cast<double>(topics_) * alpha_;
    for (std::size_t d = 0; d < docs_.size(); ++d)
      for (std::size_t k = 0; k < topics_; ++k)
        out(d, k) = (static_cast<double>(doc_topic_[d][k]) + alpha_) /
                    (static_cast<double>(docs_[d].size()) + kalpha);
    return out;
  }

 private:
  void add(std::size_t d, std::uint32_t w, std::uint32_t k) {
    topic_word_(k, w) += 1.0;
    ++topic_total_[k];
    ++doc_topic_[d][k];
  }
  void remove(std::size_t d, std::uint32_t w, std::uint32_t k) {
    topic_word_(k, w) -= 1.0;
    --topic_total_[k];
    --doc_topic_[d][k];
  }

  std::vector<std::vector<std::uint32_t>> docs_;
  std::size_t vocab_size_;
  std::size_t topics_;
  double alpha_;
  double beta_;
  Rng rng_;
  std::vector<std::vector<std::uint32_t>> assignments_;
  Matrix topic_word_;  // counts stored as doubles; exact below 2^53
  std::vector<std::size_t> topic_total_;
  std::vector<std::vector<std::size_t>> doc_topic_;
  std::vector<double> weights_;
};

struct TopicModel {
  GibbsConfig config;
  std::vector<std::string> vocabulary;
  Matrix phi;    // topics x vocabulary
  Matrix theta;  // documents x topics, aligned with the input documents
  std::vector<std::vector<std::uint32_t>> documents;
  std::vector<std::vector<std::uint32_t>> assignments;
  double log_likelihood = 0;
  std::size_t skipped_documents = 0;  // emptied by preprocessing
  std::size_t selected_chain = 0;
  std::vector<double> chain_log_likelihoods;

  std::size_t topics() const noexcept { return phi.rows(); }

  std::optional<std::size_t> word_index(std::string_view word) const {
    auto it = std::find(vocabulary.begin(), vocabulary.end(), word);
    if (it == vocabulary.end()) return std::nullopt;
    return static_cast<std::size_t>(it - vocabulary.begin());
  }
};

struct VocabularyIndex {
  std::vector<std::string> words;
  std::unordered_map<std::string, std::uint32_t> ids;

  std::uint32_t intern(const std::string& w) {
    auto [it, inserted] = ids.emplace(w, static_cast<std::uint32_t>(words.size()));
    if (inserted) words.push_back(w);
    return it->second;
  }
};

// Observer hook for tests and progress reporting; called after every sweep.
using SweepObserver = std::function<void(std::size_t sweep, const GibbsSampler&)>;

inline TopicModel fit_lda(std::span<const TokenStream> docs, const GibbsConfig& cfg,
                          const SweepObserver& observer = {}) {
  cfg.validate();
  VocabularyIndex vocab;
  std::vector<std::vector<std::uint32_t>> coded(docs.size());
  std::size_t skipped = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (docs[d].empty()) ++skipped;
    for (const auto& w : docs[d]) coded[d].push_back(vocab.intern(w));
  }
  if (vocab.words.empty()) throw Error(ErrorKind::EmptyCorpus, "no tokens to model");

  GibbsSampler sampler(std::move(coded), vocab.words.size(), cfg.topics, cfg.effective_alpha(), cfg.beta,
                       cfg.seed);
  for (std::size_t s = 0; s < cfg.iterations; ++s) {
    sampler.sweep();
    if (observer) observer(s, sampler);
  }

  TopicModel m;
  m.config = cfg;
  m.vocabulary = std::move(vocab.words);
  m.phi = sampler.phi();
  m.theta = sampler.theta();
  m.documents = sampler.documents();
  m.assignments = sampler.assignments();
  m.log_likelihood = sampler.log_likelihood();
  m.skipped_documents = skipped;
  m.chain_log_likelihoods = {m.log_likelihood};
  return m;
}

inline double log_likelihood(const TopicModel& m) {
  return joint_log_likelihood(m.documents, m.assignments, m.topics(), m.vocabulary.size(),
                              m.config.effective_alpha(), m.config.beta);
}

// Runs cfg.chains independent chains seeded seed, seed+1, ... and keeps the
// one with the largest log-likelihood (lowest chain index on ties). With
// jobs > 1 chains run on separate threads; the result does not depend on it.
inline TopicModel run_chains(std::span<const TokenStream> docs, const GibbsConfig& cfg, std::size_t jobs = 1) {
  cfg.validate();
  std::vector<std::optional<TopicModel>> results(cfg.chains);
  std::vector<std::exception_ptr> errors(cfg.chains);
  auto run_one = [&](std::size_t c) {
    try {
      GibbsConfig one = cfg;
      one.seed = cfg.seed + c;
      one.chains = 1;
      results[c] = fit_lda(docs, one);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (jobs <= 1 || cfg.chains == 1) {
    for (std::size_t c = 0; c < cfg.chains; ++c) run_one(c);
  } else {
    for (std::size_t start = 0; start < cfg.chains; start += jobs) {
      std::vector<std::thread> pool;
      for (std::size_t c = start; c < std::min(cfg.chains, start + jobs); ++c) pool.emplace_back(run_one, c);
      for (auto& t : pool) t.join();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::size_t best = 0;
  std::vector<double> lls;
  for (std::size_t c = 0; c < cfg.chains; ++c) {
    lls.push_back(results[c]->log_likelihood);
    if (results[c]->log_likelihood > results[best]->log_likelihood) best = c;
  }
  TopicModel out = std::move(*results[best]);
  out.config = cfg;
  out.selected_chain = best;
  out.chain_log_likelihoods = std::move(lls);
  return out;
}

inline void check_topic(const TopicModel& m, std::size_t topic) {
  if (topic >= m.topics())
    throw Error(ErrorKind::TopicOutOfRange,
                "topic " + std::to_string(topic) + " >= " + std::to_string(m.topics()));
}

// Most probable words of a topic; ties ordered lexicographically.
inline std::vector<std::pair<std::string, double>> top_words(const TopicModel& m, std::size_t topic,
                                                             std::size_t n) {
  check_topic(m, topic);
  std::vector<std::size_t> order(m.vocabulary.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto row = m.phi.row(topic);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return m.vocabulary[a] < m.vocabulary[b];
  });
  order.resize(std::min(n, order.size()));
  std::vector<std::pair<std::string, double>> out;
  for (auto i : order) out.emplace_back(m.vocabulary[i], row[i]);
  return out;
}

inline double topic_mass(const TopicModel& m, std::size_t topic, std::size_t n) {
  double mass = 0;
  for (const auto& [w, p] : top_words(m, topic, n)) mass += p;
  return std::min(1.0, mass);
}

inline std::string top_words_csv(const TopicModel& m, std::size_t n) {
  std::string out = "topic,rank,word,probability\n";
  for (std::size_t k = 0; k < m.topics(); ++k) {
    std::size_t rank = 1;
    for (const auto& [w, p] : top_words(m, k, n))
      out += std::to_string(k) + "," + std::to_string(rank++) + "," + util::csv_escape(w) + "," +
             util::fixed(p, 6) + "\n";
  }
  return out;
}

// --- serialization -------------------------------------------------------------

inline constexpr int kTopicModelFormatVersion = 1;

inline nlohmann::ordered_json to_json(const GibbsConfig& c) {
  nlohmann::ordered_json j;
  j["topics"] = c.topics;
  j["alpha"] = c.effective_alpha();
  j["beta"] = c.beta;
  j["burn_in"] = c.burn_in;
  j["iterations"] = c.iterations;
  j["chains"] = c.chains;
  j["seed"] = c.seed;
  return j;
}

inline GibbsConfig gibbs_config_from_json(const nlohmann::json& j) {
  GibbsConfig c;
  c.topics = j.at("topics").get<std::size_t>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.burn_in = j.at("burn_in").get<std::size_t>();
  c.iterations = j.at("iterations").get<std::size_t>();
  c.chains = j.at("chains").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

inline nlohmann::ordered_json matrix_to_json(const Matrix& m) {
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, std::size_t cols_if_empty = 0) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : cols_if_empty;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw Error(ErrorKind::MalformedRecord, "ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline nlohmann::ordered_json to_json(const TopicModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "discourse.topic_model";
  j["version"] = kTopicModelFormatVersion;
  j["config"] = to_json(m.config);
  j["log_likelihood"] = m.log_likelihood;
  j["selected_chain"] = m.selected_chain;
  j["chain_log_likelihoods"] = m.chain_log_likelihoods;
  j["skipped_documents"] = m.skipped_documents;
  j["vocabulary"] = m.vocabulary;
  j["phi"] = matrix_to_json(m.phi);
  j["theta"] = matrix_to_json(m.theta);
  j["documents"] = m.documents;
  j["assignments"] = m.assignments;
  return j;
}

inline TopicModel topic_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "discourse.topic_model")
      throw Error(ErrorKind::MalformedRecord, "not a topic model file");
    if (j.at("version").get<int>() != kTopicModelFormatVersion)
      throw Error(ErrorKind::MalformedRecord, "unsupported topic model version");
    TopicModel m;
    m.config = gibbs_config_from_json(j.at("config"));
    m.log_likelihood = j.at("log_likelihood").get<double>();
    m.selected_chain = j.at("selected_chain").get<std::size_t>();
    m.chain_log_likelihoods = j.at("chain_log_likelihoods").get<std::vector<double>>();
    m.skipped_documents = j.at("skipped_documents").get<std::size_t>();
    m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    m.phi = matrix_from_json(j.at("phi"));
    m.theta = matrix_from_json(j.at("theta"), m.phi.rows());
    m.documents = j.at("documents").get<std::vector<std::vector<std::uint32_t>>>();
    m.assignments = j.at("assignments").get<std::vector<std::vector<std::uint32_t>>>();
    if (m.phi.cols() != m.vocabulary.size())
      throw Error(ErrorKind::MalformedRecord, "phi width differs from vocabulary size");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, e.what());
  }
}

}  // namespace discourse

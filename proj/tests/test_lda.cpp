#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "discourse/lda.hpp"
#include "discourse/preprocess.hpp"
#include "discourse/random.hpp"
#include "discourse/synthetic.hpp"

using namespace discourse;
using Coded = std::vector<std::vector<std::uint32_t>>;

namespace {

// Exact posterior over every assignment of a tiny coded corpus.
struct Enumerated {
  std::vector<Coded> states;
  std::vector<double> prob;
};

Enumerated enumerate_posterior(const Coded& docs, std::size_t K, std::size_t V, double alpha, double beta) {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= K;
  Enumerated e;
  std::vector<double> logp;
  for (std::size_t code = 0; code < total; ++code) {
    Coded z(docs.size());
    std::size_t c = code;
    for (std::size_t d = 0; d < docs.size(); ++d)
      for (std::size_t i = 0; i < docs[d].size(); ++i) {
        z[d].push_back(static_cast<std::uint32_t>(c % K));
        c /= K;
      }
    logp.push_back(joint_log_likelihood(docs, z, K, V, alpha, beta));
    e.states.push_back(std::move(z));
  }
  double mx = *std::max_element(logp.begin(), logp.end()), sum = 0;
  for (double l : logp) sum += std::exp(l - mx);
  for (double l : logp) e.prob.push_back(std::exp(l - mx) / sum);
  return e;
}

// Pólya-urn sequential evaluation of log p(w, z): each token contributes its
// predictive topic and word probabilities given the tokens before it.
double sequential_log_joint(const Coded& docs, const Coded& z, std::size_t K, std::size_t V, double a, double b) {
  std::vector<std::vector<double>> nkw(K, std::vector<double>(V, 0));
  std::vector<double> nk(K, 0);
  double lp = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::vector<double> ndk(K, 0);
    double nd = 0;
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      auto k = z[d][i];
      auto w = docs[d][i];
      lp += std::log((ndk[k] + a) / (nd + static_cast<double>(K) * a));
      lp += std::log((nkw[k][w] + b) / (nk[k] + static_cast<double>(V) * b));
      ++ndk[k];
      ++nd;
      ++nkw[k][w];
      ++nk[k];
    }
  }
  return lp;
}

// "Each topic's single top word is distinct and has probability > 0.9."
bool separated(const Matrix& phi) {
  if (phi.rows() != 2 || phi.cols() != 2) return false;
  auto top = [&](std::size_t k) { return phi(k, 0) >= phi(k, 1) ? 0u : 1u; };
  return top(0) != top(1) && phi(0, top(0)) > 0.9 && phi(1, top(1)) > 0.9;
}

Matrix phi_of(const Coded& docs, const Coded& z, std::size_t K, std::size_t V, double beta) {
  Matrix counts(K, V);
  std::vector<double> tot(K, 0);
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      counts(z[d][i], docs[d][i]) += 1;
      tot[z[d][i]] += 1;
    }
  Matrix phi(K, V);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t w = 0; w < V; ++w) phi(k, w) = (counts(k, w) + beta) / (tot[k] + static_cast<double>(V) * beta);
  return phi;
}

const std::vector<TokenStream> kTwoDocs{{"x", "x", "x"}, {"y", "y", "y"}};

}  // namespace

TEST(FitLda, TwoDocFixtureMatchesEnumeratedMode) {
  const double alpha = 0.1, beta = 0.1;
  const Coded coded{{0, 0, 0}, {1, 1, 1}};
  auto post = enumerate_posterior(coded, 2, 2, alpha, beta);
  double mass = 0;
  for (std::size_t s = 0; s < post.states.size(); ++s)
    if (separated(phi_of(coded, post.states[s], 2, 2, beta))) mass += post.prob[s];
  // The separated states are the posterior mode and hold most of its mass.
  ASSERT_GT(mass, 0.95);

  std::size_t hits = 0;
  const std::size_t runs = 20;
  for (std::uint64_t seed = 0; seed < runs; ++seed) {
    GibbsConfig cfg;
    cfg.topics = 2;
    cfg.alpha = alpha;
    cfg.beta = beta;
    cfg.burn_in = 100;
    cfg.iterations = 200;
    cfg.seed = seed;
    hits += separated(fit_lda(kTwoDocs, cfg).phi);
  }
  // Expected about mass * runs; 17 of 20 sits well below that.
  EXPECT_GE(hits, 17u);
}

TEST(FitLda, StationaryDistributionMatchesEnumeration) {
  // docs "a b", "a": three tokens, K = 2, eight states.
  const std::vector<TokenStream> docs{{"a", "b"}, {"a"}};
  const Coded coded{{0, 1}, {0}};
  const double alpha = 0.5, beta = 0.3;
  auto post = enumerate_posterior(coded, 2, 2, alpha, beta);
  GibbsSampler s(coded, 2, 2, alpha, beta, 99);
  std::map<Coded, double> freq;
  const std::size_t sweeps = 40000;
  for (std::size_t i = 0; i < sweeps; ++i) {
    s.sweep();
    freq[s.assignments()] += 1.0 / static_cast<double>(sweeps);
  }
  for (std::size_t k = 0; k < post.states.size(); ++k)
    EXPECT_NEAR(freq[post.states[k]], post.prob[k], 0.015) << "state " << k;
}

TEST(FitLda, SingleTopicClosedForm) {
  const std::vector<TokenStream> docs{{"a", "b", "a"}, {"c", "a"}, {"b"}};
  GibbsConfig cfg;
  cfg.topics = 1;
  cfg.beta = 0.1;
  cfg.burn_in = 0;
  cfg.iterations = 5;
  auto m = fit_lda(docs, cfg);
  const double total = 6, V = 3;
  std::map<std::string, double> count{{"a", 3}, {"b", 2}, {"c", 1}};
  for (std::size_t w = 0; w < m.vocabulary.size(); ++w)
    EXPECT_DOUBLE_EQ(m.phi(0, w), (count[m.vocabulary[w]] + 0.1) / (total + V * 0.1));
}

TEST(FitLda, InvalidConfigAndEmptyCorpus) {
  GibbsConfig cfg;
  cfg.topics = 0;
  try {
    fit_lda(kTwoDocs, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
  }
  GibbsConfig ok;
  ok.iterations = 10;
  ok.burn_in = 5;
  const std::vector<TokenStream> empty{{}, {}};
  try {
    fit_lda(empty, ok);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyCorpus);
  }
  GibbsConfig bad = ok;
  bad.burn_in = 20;
  EXPECT_THROW(fit_lda(kTwoDocs, bad), Error);
  bad = ok;
  bad.beta = 0;
  EXPECT_THROW(fit_lda(kTwoDocs, bad), Error);
}

TEST(LogLikelihood, SingleTokenClosedForm) {
  // K = 1, V = 1, one token: every ratio of gamma functions cancels, so
  // log p = [lnG(1+b) - lnG(b)] - [lnG(1+b) - lnG(b)] + (same for alpha) = 0.
  GibbsConfig cfg;
  cfg.topics = 1;
  cfg.alpha = 0.7;
  cfg.iterations = 3;
  cfg.burn_in = 0;
  auto m = fit_lda(std::vector<TokenStream>{{"x"}}, cfg);
  EXPECT_NEAR(log_likelihood(m), 0.0, 1e-12);
  EXPECT_NEAR(m.log_likelihood, 0.0, 1e-12);
}

TEST(LogLikelihood, MatchesSequentialUrnOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t K = 1 + rng.index(4), V = 1 + rng.index(5);
    Coded docs(1 + rng.index(4)), z(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
      const std::size_t n = rng.index(6);
      for (std::size_t i = 0; i < n; ++i) {
        docs[d].push_back(static_cast<std::uint32_t>(rng.index(V)));
        z[d].push_back(static_cast<std::uint32_t>(rng.index(K)));
      }
    }
    const double a = 0.05 + rng.uniform(), b = 0.01 + rng.uniform();
    EXPECT_NEAR(joint_log_likelihood(docs, z, K, V, a, b), sequential_log_joint(docs, z, K, V, a, b), 1e-9);
  }
}

TEST(TopicModel, DistributionsNormalizedAndPositive) {
  const std::vector<TokenStream> docs{{"a", "b", "c"}, {"c", "d"}, {}, {"a", "a", "e"}};
  GibbsConfig cfg;
  cfg.topics = 3;
  cfg.iterations = 50;
  cfg.burn_in = 10;
  cfg.seed = 3;
  auto m = fit_lda(docs, cfg);
  EXPECT_EQ(m.theta.rows(), docs.size());
  EXPECT_EQ(m.skipped_documents, 1u);
  for (std::size_t k = 0; k < m.topics(); ++k) {
    double s = 0;
    for (double p : m.phi.row(k)) {
      EXPECT_GT(p, 0.0);
      s += p;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  for (std::size_t d = 0; d < m.theta.rows(); ++d) {
    double s = 0;
    for (double p : m.theta.row(d)) s += p;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_TRUE(std::isfinite(m.log_likelihood));
  EXPECT_DOUBLE_EQ(m.log_likelihood, log_likelihood(m));
}

TEST(RunChains, SelectsMaximumAndIgnoresThreadCount) {
  const std::vector<TokenStream> docs{{"a", "b", "a"}, {"c", "d", "c"}, {"a", "c"}, {"b", "d", "b"}};
  GibbsConfig cfg;
  cfg.topics = 2;
  cfg.chains = 4;
  cfg.iterations = 60;
  cfg.burn_in = 20;
  cfg.seed = 17;
  auto serial = run_chains(docs, cfg, 1);
  auto threaded = run_chains(docs, cfg, 3);
  EXPECT_EQ(serial.assignments, threaded.assignments);
  EXPECT_EQ(serial.chain_log_likelihoods, threaded.chain_log_likelihoods);
  ASSERT_EQ(serial.chain_log_likelihoods.size(), 4u);
  for (double ll : serial.chain_log_likelihoods) EXPECT_LE(ll, serial.log_likelihood);
  EXPECT_EQ(serial.chain_log_likelihoods[serial.selected_chain], serial.log_likelihood);

  GibbsConfig one = cfg;
  one.chains = 1;
  one.seed = cfg.seed + serial.selected_chain;
  EXPECT_EQ(fit_lda(docs, one).assignments, serial.assignments);
}

TEST(Inspection, TopWordsAndMass) {
  const std::vector<TokenStream> docs{{"b", "a", "a", "c"}};
  GibbsConfig cfg;
  cfg.topics = 1;
  cfg.iterations = 2;
  cfg.burn_in = 0;
  auto m = fit_lda(docs, cfg);
  auto top = top_words(m, 0, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].first, "a");
  EXPECT_EQ(top[1].first, "b");  // tie with c broken lexicographically
  EXPECT_EQ(top[2].first, "c");
  EXPECT_NEAR(topic_mass(m, 0, 3), 1.0, 1e-12);
  try {
    top_words(m, 1, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TopicOutOfRange);
  }
}

TEST(Serialization, TopicModelRoundTrip) {
  GibbsConfig cfg;
  cfg.topics = 2;
  cfg.iterations = 20;
  cfg.burn_in = 5;
  auto m = fit_lda(kTwoDocs, cfg);
  auto text = to_json(m).dump();
  auto back = topic_model_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.vocabulary, m.vocabulary);
  EXPECT_EQ(back.assignments, m.assignments);
  EXPECT_EQ(back.phi, m.phi);
  EXPECT_EQ(back.theta, m.theta);
  EXPECT_EQ(to_json(back).dump(), text);
}

// Disjoint-vocabulary recovery with an explicit sparse document prior. The
// default 50/K prior is exercised by the acceptance suite.
TEST(Recovery, DisjointVocabulariesWithSparsePrior) {
  static const Resources res = Resources::load(DISCOURSE_RESOURCE_DIR);
  auto spec = default_synth_spec();
  std::map<std::string, std::size_t> source;
  for (std::size_t c = 0; c < spec.classes.size(); ++c)
    for (const auto& w : spec.classes[c].vocabulary)
      for (const auto& lemma : preprocess(w, res)) source[lemma] = c;
  auto data = generate_synthetic(spec, 17);
  std::vector<TokenStream> docs;
  for (const auto& m : data.corpus) docs.push_back(preprocess(m.text, res));
  GibbsConfig cfg;
  cfg.topics = 3;
  cfg.alpha = 0.1;
  cfg.burn_in = 500;
  cfg.iterations = 1500;
  cfg.chains = 3;
  cfg.seed = 5;
  auto m = run_chains(docs, cfg);
  std::set<std::size_t> covered;
  for (std::size_t k = 0; k < 3; ++k) {
    std::set<std::size_t> classes;
    for (const auto& [w, p] : top_words(m, k, 5)) classes.insert(source.count(w) ? source.at(w) : 99);
    ASSERT_EQ(classes.size(), 1u) << "topic " << k;
    covered.insert(*classes.begin());
  }
  EXPECT_EQ(covered, (std::set<std::size_t>{0, 1, 2}));
}

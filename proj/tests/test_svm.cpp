#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "discourse/features.hpp"
#include "discourse/preprocess.hpp"
#include "discourse/svm.hpp"
#include "discourse/synthetic.hpp"
#include "oracles.hpp"

using namespace discourse;

TEST(Smo, AnalyticOneDimensionalPair) {
  // x = +1 (y = +1), x = -1 (y = -1): the dual gives a1 = a2 = 1/2,
  // w = 1/2 + 1/2 = 1 and the margin conditions give b = 0.
  std::vector<SparseVector> X{SparseVector({0}, {1.0}), SparseVector({0}, {-1.0})};
  std::vector<int> y{1, -1};
  SvmConfig cfg;
  auto m = smo_train(X, y, 1, cfg);
  EXPECT_NEAR(m.w[0], 1.0, 1e-6);
  EXPECT_NEAR(m.b, 0.0, 1e-6);
  EXPECT_NEAR(m.alphas[0], 0.5, 1e-6);
  EXPECT_NEAR(m.alphas[1], 0.5, 1e-6);
  EXPECT_TRUE(m.converged);
}

TEST(Smo, BruteForceOracleSolvesKnownProblem) {
  std::vector<SparseVector> X{SparseVector({0}, {1.0}), SparseVector({0}, {-1.0})};
  EXPECT_NEAR(oracle::brute_force_dual(X, {1, -1}, 1.0), 0.5, 1e-12);
  // Same point with both labels: the box binds, a = (C, C), objective 2C - 0.
  std::vector<SparseVector> same{SparseVector({0}, {1.0}), SparseVector({0}, {1.0})};
  EXPECT_NEAR(oracle::brute_force_dual(same, {1, -1}, 0.75), 1.5, 1e-12);
}

class SmoExhaustive : public ::testing::TestWithParam<double> {};

TEST_P(SmoExhaustive, CubeSubsetsMatchOracle) {
  const double C = GetParam();
  SvmConfig cfg;
  cfg.C = C;
  auto instances = oracle::cube_instances();
  ASSERT_EQ(instances.size(), 4788u);
  std::size_t failures = 0;
  for (std::size_t t = 0; t < instances.size(); ++t) {
    const auto& inst = instances[t];
    cfg.seed = t;
    auto m = smo_train(inst.X, inst.y, 3, cfg);
    const double got = dual_objective(inst.X, inst.y, m.alphas, 3);
    const double want = oracle::brute_force_dual(inst.X, inst.y, C);
    double ysum = 0;
    for (std::size_t i = 0; i < inst.y.size(); ++i) {
      ysum += inst.y[i] * m.alphas[i];
      EXPECT_GE(m.alphas[i], 0.0);
      EXPECT_LE(m.alphas[i], C);
    }
    EXPECT_NEAR(ysum, 0.0, 1e-9);
    if (std::abs(got - want) > 1e-6 || oracle::kkt_violation(m, inst.X, inst.y, C) > cfg.tol) {
      if (++failures <= 5)
        ADD_FAILURE() << "instance " << t << ": dual " << got << " vs " << want << ", kkt "
                      << oracle::kkt_violation(m, inst.X, inst.y, C);
    }
  }
  EXPECT_EQ(failures, 0u);
}

INSTANTIATE_TEST_SUITE_P(BoxConstraints, SmoExhaustive, ::testing::Values(0.5, 1.0, 4.0));

TEST(Smo, InputErrors) {
  std::vector<SparseVector> X{SparseVector({0}, {1.0}), SparseVector({0}, {2.0})};
  try {
    smo_train(X, std::vector<int>{1, 1}, 1, SvmConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingleClassInput);
  }
  try {
    smo_train(X, std::vector<int>{1}, 1, SvmConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
  try {
    smo_train(X, std::vector<int>{1, -1}, 0, SvmConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
  SvmConfig bad;
  bad.C = 0;
  EXPECT_THROW(smo_train(X, std::vector<int>{1, -1}, 1, bad), Error);
}

namespace {

struct Encoded {
  FeatureSpace fs;
  std::vector<BinaryVector> X;
  std::vector<DiscourseClass> labels;
  std::vector<TokenStream> docs;
};

Encoded encode_synthetic(double noise, std::uint64_t seed) {
  auto spec = default_synth_spec();
  spec.noise_rate = noise;
  auto data = generate_synthetic(spec, seed);
  static const Resources res = Resources::load(DISCOURSE_RESOURCE_DIR);
  Encoded e;
  for (const auto& m : data.corpus) {
    e.docs.push_back(preprocess(m.text, res));
    e.labels.push_back(*m.gold_label);
  }
  e.fs = FeatureSpace::build(e.docs);
  for (const auto& d : e.docs) e.X.push_back(vectorize(d, e.fs));
  return e;
}

}  // namespace

TEST(Multiclass, NoiseFreeCorpusIsLearnedExactly) {
  auto e = encode_synthetic(0.0, 21);
  SvmConfig cfg;
  auto model = train_multiclass(e.X, e.labels, e.fs, cfg);
  EXPECT_EQ(model.pairs.size(), 3u);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < e.X.size(); ++i) correct += predict_svm(model, e.X[i]).label == e.labels[i];
  EXPECT_EQ(correct, e.X.size());
}

TEST(Multiclass, ThreadCountDoesNotChangeModel) {
  auto e = encode_synthetic(0.2, 4);
  SvmConfig cfg;
  cfg.seed = 8;
  auto a = train_multiclass(e.X, e.labels, e.fs, cfg, 1);
  auto b = train_multiclass(e.X, e.labels, e.fs, cfg, 3);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Multiclass, VotesAndCanonicalTieBreak) {
  // A vector with no active features is scored by the biases alone. With all
  // three pairwise votes split one each, the canonical order decides.
  SvmMulticlassModel m;
  m.classes = {DiscourseClass::Phatic, DiscourseClass::Emotive, DiscourseClass::Referential};
  m.features = FeatureSpace::from_names({"a"});
  auto pair = [](DiscourseClass p, DiscourseClass n, double b) {
    PairModel pm{p, n, {}};
    pm.model.w = {0.0};
    pm.model.b = b;
    return pm;
  };
  using enum DiscourseClass;
  m.pairs = {pair(Phatic, Emotive, -1), pair(Phatic, Referential, 1), pair(Emotive, Referential, -1)};
  auto p = predict_svm(m, BinaryVector{});
  EXPECT_EQ(p.votes, (std::array<std::size_t, 3>{1, 1, 1}));
  EXPECT_EQ(p.label, Phatic);
  m.pairs[1].model.b = -1;  // Referential now wins two pairs
  EXPECT_EQ(predict_svm(m, BinaryVector{}).label, Referential);
  m.pairs[1].model.b = 0;  // zero decision value goes to the positive class
  EXPECT_EQ(predict_svm(m, BinaryVector{}).label, Phatic);
}

TEST(Multiclass, JsonRoundTrip) {
  auto e = encode_synthetic(0.2, 6);
  auto m = train_multiclass(e.X, e.labels, e.fs, SvmConfig{});
  auto text = to_json(m).dump();
  auto back = svm_model_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(to_json(back).dump(), text);
  for (std::size_t i = 0; i < e.docs.size(); i += 7)
    EXPECT_EQ(predict_svm(back, e.docs[i]).label, predict_svm(m, e.docs[i]).label);
}

TEST(Features, BinaryBagOfWords) {
  const std::vector<TokenStream> docs{{"no", "entender", ":-("}, {"no", "no", "hola"}};
  auto fs = FeatureSpace::build(docs);
  EXPECT_EQ(fs.size(), 4u);
  auto v = vectorize({"no", "no", "zzz", "hola"}, fs);
  EXPECT_EQ(v.count(), 2u);
  EXPECT_THROW(FeatureSpace::build(std::vector<TokenStream>{{}, {}}), Error);
}

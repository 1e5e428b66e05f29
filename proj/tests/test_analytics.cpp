#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "discourse/analytics.hpp"
#include "discourse/pca.hpp"
#include "discourse/random.hpp"
#include "discourse/synthetic.hpp"

using namespace discourse;
using enum DiscourseClass;

namespace {

Message msg(std::string id, std::string group, Role role, DiscourseClass label) {
  Message m;
  m.id = std::move(id);
  m.group_id = std::move(group);
  m.dd_id = "dd-" + m.group_id;
  m.role = role;
  m.text = "x";
  m.gold_label = label;
  return m;
}

Date day(int n) { return Date{std::chrono::year{2013} / std::chrono::March / 1} + std::chrono::days{n}; }

// One group: 10 student messages (4 P, 3 E, 3 R) and 2 teacher messages.
Corpus single_group() {
  std::vector<Message> ms;
  int i = 0;
  auto add = [&](Role r, DiscourseClass c, int n) {
    for (int k = 0; k < n; ++k) ms.push_back(msg("m" + std::to_string(i++), "g1", r, c));
  };
  add(Role::Student, Phatic, 4);
  add(Role::Student, Emotive, 3);
  add(Role::Student, Referential, 3);
  add(Role::Teacher, Referential, 1);
  add(Role::Teacher, Phatic, 1);
  return Corpus(std::move(ms), "fixture");
}

GroupMetadata meta(std::string gid, std::vector<Date> dates, std::size_t total = 6, std::size_t students = 4) {
  return GroupMetadata{std::move(gid), students, total, std::move(dates)};
}

DataTable random_table(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  DataTable t;
  t.data = Matrix(rows, cols);
  for (std::size_t c = 0; c < cols; ++c) t.columns.push_back("v" + std::to_string(c));
  for (std::size_t r = 0; r < rows; ++r) {
    t.row_ids.push_back("r" + std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c) t.data(r, c) = rng.uniform() * 10 - 3;
  }
  return t;
}

double direct_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= n, mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb) / n;
    va += (a[i] - ma) * (a[i] - ma) / n;
    vb += (b[i] - mb) * (b[i] - mb) / n;
  }
  return cov / (std::sqrt(va) * std::sqrt(vb));
}

}  // namespace

TEST(GroupFeatures, ProportionsParticipationAndGaps) {
  auto corpus = single_group();
  std::vector<GroupMetadata> md{meta("g1", {day(0), day(7), day(14)})};
  auto rows = group_features(corpus, md);
  ASSERT_EQ(rows.size(), 1u);
  const auto& r = rows[0];
  EXPECT_DOUBLE_EQ(r.phatic_s, 0.4);
  EXPECT_DOUBLE_EQ(r.emotive_s, 0.3);
  EXPECT_DOUBLE_EQ(r.referential_s, 0.3);
  EXPECT_DOUBLE_EQ(r.phatic_t, 0.5);
  EXPECT_DOUBLE_EQ(r.emotive_t, 0.0);
  EXPECT_EQ(util::fixed(r.teacher_participation, 4), "0.1667");
  EXPECT_DOUBLE_EQ(r.mean_gap, 7.0);
  EXPECT_DOUBLE_EQ(r.var_gap, 0.0);
  EXPECT_DOUBLE_EQ(r.progress, 0.5);
  EXPECT_DOUBLE_EQ(r.students, 4.0);
  EXPECT_FALSE(r.gaps_undefined);
  EXPECT_EQ(r.dd_id, "dd-g1");
}

TEST(GroupFeatures, FlagsForMissingRolesAndShortSchedules) {
  std::vector<Message> ms{msg("a", "g1", Role::Student, Phatic), msg("b", "g2", Role::Teacher, Emotive)};
  std::vector<GroupMetadata> md{meta("g2", {}), meta("g1", {day(3)})};
  auto rows = group_features(Corpus(ms, "x"), md);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].group_id, "g1");
  EXPECT_TRUE(rows[0].no_teacher_messages);
  EXPECT_TRUE(rows[0].gaps_undefined);
  EXPECT_EQ(rows[0].mean_gap, 0.0);
  EXPECT_TRUE(rows[1].no_student_messages);
  EXPECT_EQ(rows[1].phatic_s, 0.0);
  EXPECT_EQ(rows[1].teacher_participation, 1.0);
}

TEST(GroupFeatures, UnevenGapsUsePopulationVariance) {
  std::vector<Message> ms{msg("a", "g1", Role::Student, Phatic)};
  std::vector<GroupMetadata> md{meta("g1", {day(0), day(2), day(10)})};
  auto r = group_features(Corpus(ms, "x"), md)[0];
  EXPECT_DOUBLE_EQ(r.mean_gap, 5.0);
  EXPECT_DOUBLE_EQ(r.var_gap, 9.0);
}

TEST(GroupFeatures, Errors) {
  std::vector<Message> ms{msg("a", "g1", Role::Student, Phatic), msg("b", "g9", Role::Student, Phatic)};
  std::vector<GroupMetadata> md{meta("g1", {})};
  try {
    group_features(Corpus(ms, "x"), md);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingMetadata);
    EXPECT_EQ(e.subject(), "g9");
  }
  ms[1].group_id = "g1";
  ms[1].gold_label.reset();
  try {
    group_features(Corpus(ms, "x"), md);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnlabeledMessage);
    EXPECT_EQ(e.subject(), "b");
  }
  std::unordered_map<std::string, DiscourseClass> predicted{{"b", Emotive}};
  auto rows = group_features(Corpus(ms, "x"), md, predicted);
  EXPECT_DOUBLE_EQ(rows[0].emotive_s, 0.5);
}

TEST(GroupFeatures, PredictionsOverrideGold) {
  auto corpus = single_group();
  std::vector<GroupMetadata> md{meta("g1", {})};
  std::unordered_map<std::string, DiscourseClass> predicted;
  for (const auto& m : corpus)
    if (m.role == Role::Student) predicted[m.id] = Emotive;
  auto r = group_features(corpus, md, predicted)[0];
  EXPECT_DOUBLE_EQ(r.emotive_s, 1.0);
  EXPECT_DOUBLE_EQ(r.phatic_t, 0.5);
}

TEST(Pearson, MatchesDirectFormula) {
  auto t = random_table(10, 5, 77);
  auto m = pearson_matrix(t);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b) {
      const double want = a == b ? 1.0 : direct_pearson(t.data.column(a), t.data.column(b));
      EXPECT_NEAR(m.r(a, b), want, 1e-12);
      EXPECT_EQ(m.r(a, b), m.r(b, a));
    }
}

TEST(Pearson, SelfAndNegation) {
  auto t = random_table(8, 1, 3);
  DataTable u;
  u.columns = {"v", "v2", "neg"};
  u.data = Matrix(8, 3);
  for (std::size_t r = 0; r < 8; ++r) {
    u.data(r, 0) = t.data(r, 0);
    u.data(r, 1) = t.data(r, 0);
    u.data(r, 2) = -t.data(r, 0);
  }
  auto m = pearson_matrix(u);
  EXPECT_NEAR(m.r(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(m.r(0, 2), -1.0, 1e-15);
  EXPECT_LE(std::abs(m.r(0, 2)), 1.0);
}

TEST(Pearson, PositiveAffineInvariance) {
  auto t = random_table(12, 4, 19);
  auto before = pearson_matrix(t);
  for (std::size_t r = 0; r < 12; ++r) t.data(r, 2) = 3.5 * t.data(r, 2) + 100.0;
  auto after = pearson_matrix(t);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) EXPECT_NEAR(before.r(a, b), after.r(a, b), 1e-12);
}

TEST(Pearson, ZeroVarianceFlaggedAndTooFewRows) {
  auto t = random_table(6, 3, 5);
  for (std::size_t r = 0; r < 6; ++r) t.data(r, 1) = 0.1;
  auto m = pearson_matrix(t);
  EXPECT_TRUE(m.undefined[1]);
  EXPECT_FALSE(m.undefined[0]);
  EXPECT_EQ(m.r(0, 1), 0.0);
  EXPECT_EQ(m.r(1, 1), 1.0);
  auto csv = correlation_csv(m);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "variable,v0,v1,v2,undefined");
  EXPECT_NE(csv.find("\nv0,-,,,0\n"), std::string::npos);
  EXPECT_NE(csv.find("\nv1,0.0000,-,,1\n"), std::string::npos);
  try {
    pearson_matrix(random_table(2, 3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewRows);
  }
}

TEST(Jacobi, DiagonalizesAndSorts) {
  Matrix a(3, 3);
  a(0, 0) = 2, a(0, 1) = 1, a(1, 0) = 1, a(1, 1) = 2, a(2, 2) = 5;
  auto e = jacobi_eigen(a);
  EXPECT_NEAR(e.values[0], 5, 1e-12);
  EXPECT_NEAR(e.values[1], 3, 1e-12);
  EXPECT_NEAR(e.values[2], 1, 1e-12);
  EXPECT_LT(e.off_norm, 1e-10);
  for (std::size_t k = 0; k < 3; ++k) {
    std::size_t big = 0;
    for (std::size_t i = 1; i < 3; ++i)
      if (std::abs(e.vectors(i, k)) > std::abs(e.vectors(big, k))) big = i;
    EXPECT_GT(e.vectors(big, k), 0.0);
  }
}

TEST(Pca, PerfectlyCorrelatedPair) {
  DataTable t;
  t.columns = {"a", "b"};
  t.data = Matrix(5, 2);
  for (std::size_t r = 0; r < 5; ++r) {
    t.row_ids.push_back("g" + std::to_string(r));
    t.data(r, 0) = static_cast<double>(r * r);
    t.data(r, 1) = 2.0 * static_cast<double>(r * r) - 1.0;
  }
  auto p = pca(t);
  EXPECT_NEAR(p.eigenvalues[0], 2.0, 1e-9);
  EXPECT_NEAR(p.eigenvalues[1], 0.0, 1e-9);
  EXPECT_NEAR(p.explained[0], 1.0, 1e-9);
  auto [x0, y0] = biplot_arrow(p, 0);
  auto [x1, y1] = biplot_arrow(p, 1);
  const double angle = std::abs(std::atan2(x0 * y1 - y0 * x1, x0 * x1 + y0 * y1));
  EXPECT_LT(angle, 1e-6);
}

TEST(Pca, UncorrelatedVariablesGiveUnitEigenvalues) {
  // Orthogonal centered columns over four rows.
  DataTable t;
  t.columns = {"a", "b", "c"};
  t.data = Matrix(4, 3);
  const double cols[3][4] = {{1, -1, 1, -1}, {1, 1, -1, -1}, {1, -1, -1, 1}};
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c) t.data(r, c) = cols[c][r] * static_cast<double>(c + 1) + 7;
  auto p = pca(t);
  for (double l : p.eigenvalues) EXPECT_NEAR(l, 1.0, 1e-12);
}

namespace {

std::vector<GroupFeatureRow> synthetic_rows(std::uint64_t seed) {
  auto spec = default_synth_spec();
  spec.noise_rate = 0.2;
  auto data = generate_synthetic(spec, seed);
  return group_features(data.corpus, data.groups);
}

}  // namespace

TEST(Pca, ElevenVariableOracles) {
  auto rows = synthetic_rows(42);
  auto p = pca(rows);
  const std::size_t k = p.components();
  ASSERT_EQ(k + p.dropped.size(), kNumGroupVariables);
  double sum = 0;
  for (std::size_t j = 0; j < k; ++j) {
    sum += p.eigenvalues[j];
    EXPECT_GE(p.eigenvalues[j], -1e-9);
    if (j > 0) {
      EXPECT_GE(p.eigenvalues[j - 1], p.eigenvalues[j]);
    }
  }
  EXPECT_NEAR(sum, static_cast<double>(k), 1e-6);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      double recon = 0, dotp = 0;
      for (std::size_t j = 0; j < k; ++j) {
        recon += p.loadings(a, j) * p.eigenvalues[j] * p.loadings(b, j);
        dotp += p.loadings(j, a) * p.loadings(j, b);
      }
      EXPECT_NEAR(recon, p.correlation(a, b), 1e-8);
      EXPECT_NEAR(dotp, a == b ? 1.0 : 0.0, 1e-8);
    }
  for (std::size_t j = 0; j < k; ++j) {
    double mean = 0;
    for (std::size_t r = 0; r < p.scores.rows(); ++r) mean += p.scores(r, j);
    EXPECT_NEAR(mean / static_cast<double>(p.scores.rows()), 0.0, 1e-9);
  }
}

TEST(Pca, ZeroVarianceColumnDroppedWithWarning) {
  auto rows = synthetic_rows(42);
  const auto baseline = pca(rows).dropped;
  ASSERT_EQ(std::count(baseline.begin(), baseline.end(), "Students"), 0);
  for (auto& r : rows) r.students = 5;
  auto p = pca(rows);
  ASSERT_EQ(p.dropped.size(), baseline.size() + 1);
  EXPECT_EQ(std::count(p.dropped.begin(), p.dropped.end(), "Students"), 1);
  ASSERT_EQ(p.warnings.size(), p.dropped.size());
  for (const auto& w : p.warnings) EXPECT_NE(w.find("ZeroVarianceColumn"), std::string::npos);
  EXPECT_EQ(p.components(), kNumGroupVariables - p.dropped.size());
  EXPECT_THROW(pca(std::span(rows).first(2)), Error);
}

TEST(Biplot, Shape) {
  auto rows = synthetic_rows(7);
  auto p = pca(rows);
  auto csv = export_biplot(p, rows);
  auto count_lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  EXPECT_EQ(count_lines(csv.arrows), static_cast<long>(2 + p.variables.size()));
  EXPECT_EQ(count_lines(csv.scores), static_cast<long>(2 + rows.size()));
  const std::string header = csv.arrows.substr(0, csv.arrows.find('\n'));
  EXPECT_NE(header.find("PC1+PC2=" + util::fixed(p.explained[0] + p.explained[1], 6)), std::string::npos);
  EXPECT_NE(csv.scores.find("," + rows[0].dd_id + ","), std::string::npos);
}

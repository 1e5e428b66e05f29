#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "random.hpp"
#include "types.hpp"
#include "util.hpp"

namespace discourse {

// --- annotations -----------------------------------------------------------------

struct AnnotationSet {
  std::vector<std::string> ids;
  std::vector<std::vector<DiscourseClass>> judgments;  // one row per message

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t judges() const noexcept { return judgments.empty() ? 0 : judgments.front().size(); }

  void add(std::string id, std::vector<DiscourseClass> labels) {
    if (!judgments.empty() && labels.size() != judges())
      throw Error(ErrorKind::MalformedRecord, "judge count differs between messages", std::nullopt, id);
    ids.push_back(std::move(id));
    judgments.push_back(std::move(labels));
  }
};

// CSV: message_id,judge1,judge2,judge3 (header optional, detected by the
// first row's labels not parsing as classes).
inline AnnotationSet parse_annotations_csv(std::string_view body) {
  AnnotationSet set;
  std::size_t line_no = 0, start = 0;
  while (start < body.size()) {
    auto nl = body.find('\n', start);
    if (nl == std::string_view::npos) nl = body.size();
    auto raw = body.substr(start, nl - start);
    ++line_no;
    start = nl + 1;
    if (util::trim(raw).empty()) continue;
    auto fields = util::split_csv_line(raw);
    if (!fields || fields->size() < 2) throw Error(ErrorKind::MalformedRecord, "expected id and judge labels", line_no);
    std::vector<DiscourseClass> labels;
    bool ok = true;
    for (std::size_t i = 1; i < fields->size(); ++i) {
      auto c = parse_class(util::trim((*fields)[i]));
      if (!c) {
        ok = false;
        break;
      }
      labels.push_back(*c);
    }
    if (!ok) {
      if (set.size() == 0 && line_no == 1) continue;
      throw Error(ErrorKind::MalformedRecord, "unknown class label", line_no, (*fields)[0]);
    }
    try {
      set.add(std::string(util::trim((*fields)[0])), std::move(labels));
    } catch (const Error& e) {
      throw Error(e.kind(), e.detail(), line_no, e.subject());
    }
  }
  return set;
}

using GoldLabels = std::vector<std::pair<std::string, DiscourseClass>>;

// Label chosen by a strict majority of judges (at least two of three).
inline GoldLabels adjudicate(const AnnotationSet& a) {
  GoldLabels out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::array<std::size_t, kNumClasses> counts{};
    for (auto c : a.judgments[i]) ++counts[index_of(c)];
    auto best = std::max_element(counts.begin(), counts.end());
    if (2 * *best <= a.judgments[i].size())
      throw Error(ErrorKind::NoMajority, "judges disagree", std::nullopt, a.ids[i]);
    out.emplace_back(a.ids[i], kAllClasses[static_cast<std::size_t>(best - counts.begin())]);
  }
  return out;
}

// Fleiss' kappa over the three discourse classes:
//   P_i = sum_j n_ij (n_ij - 1) / (n (n - 1)),  p_j = sum_i n_ij / (N n)
//   kappa = (mean P_i - sum p_j^2) / (1 - sum p_j^2)
// Perfect agreement on a single category (both terms 1) gives 1.
inline double fleiss_kappa(const AnnotationSet& a) {
  const std::size_t N = a.size();
  const std::size_t n = a.judges();
  if (N < 2) throw Error(ErrorKind::DegenerateInput, "need at least two items");
  if (n < 2) throw Error(ErrorKind::DegenerateInput, "need at least two judges");
  std::array<double, kNumClasses> column{};
  double p_bar = 0;
  for (const auto& row : a.judgments) {
    std::array<std::size_t, kNumClasses> counts{};
    for (auto c : row) ++counts[index_of(c)];
    double agree = 0;
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      const double nij = static_cast<double>(counts[j]);
      agree += nij * (nij - 1.0);
      column[j] += static_cast<double>(counts[j]);
    }
    p_bar += agree / (static_cast<double>(n) * static_cast<double>(n - 1));
  }
  p_bar /= static_cast<double>(N);
  double p_e = 0;
  for (double c : column) {
    const double p = c / (static_cast<double>(N) * static_cast<double>(n));
    p_e += p * p;
  }
  if (p_e >= 1.0) return 1.0;  // every judgment in one category, so P_bar is 1 as well
  return (p_bar - p_e) / (1.0 - p_e);
}

// --- confusion matrix and metrics ------------------------------------------------

struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};  // [truth][predicted]

  void add(DiscourseClass truth, DiscourseClass predicted) { ++counts[index_of(truth)][index_of(predicted)]; }

  std::size_t tp(DiscourseClass c) const { return counts[index_of(c)][index_of(c)]; }
  std::size_t fp(DiscourseClass c) const {
    std::size_t s = 0;
    for (auto t : kAllClasses)
      if (t != c) s += counts[index_of(t)][index_of(c)];
    return s;
  }
  std::size_t fn(DiscourseClass c) const {
    std::size_t s = 0;
    for (auto p : kAllClasses)
      if (p != c) s += counts[index_of(c)][index_of(p)];
    return s;
  }
  std::size_t support(DiscourseClass c) const { return tp(c) + fn(c); }
  std::size_t total() const {
    std::size_t s = 0;
    for (const auto& row : counts)
      for (auto v : row) s += v;
    return s;
  }
  double accuracy() const {
    std::size_t correct = 0;
    for (auto c : kAllClasses) correct += tp(c);
    return total() ? static_cast<double>(correct) / static_cast<double>(total()) : 0.0;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    for (std::size_t t = 0; t < kNumClasses; ++t)
      for (std::size_t p = 0; p < kNumClasses; ++p) counts[t][p] += o.counts[t][p];
    return *this;
  }

  bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
  bool precision_undefined = false;  // tp + fp == 0, reported as 0
  bool recall_undefined = false;     // tp + fn == 0, reported as 0
};

struct ClassMetrics {
  std::array<ClassScore, kNumClasses> per_class{};
  // Support-weighted averages over classes.
  double total_precision = 0;
  double total_recall = 0;
  double total_f1 = 0;

  const ClassScore& operator[](DiscourseClass c) const { return per_class[index_of(c)]; }
  bool any_undefined() const {
    for (const auto& s : per_class)
      if (s.precision_undefined || s.recall_undefined) return true;
    return false;
  }
};

inline double f1_score(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

// sum(support_i * value_i) / sum(support_i); 0 when all supports are 0.
inline double weighted_average(std::span<const double> values, std::span<const std::size_t> supports) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += static_cast<double>(supports[i]) * values[i];
    den += static_cast<double>(supports[i]);
  }
  return den > 0 ? num / den : 0.0;
}

inline ClassMetrics class_metrics(const ConfusionMatrix& cm) {
  ClassMetrics m;
  std::array<double, kNumClasses> p{}, r{}, f{};
  std::array<std::size_t, kNumClasses> s{};
  for (auto c : kAllClasses) {
    auto& sc = m.per_class[index_of(c)];
    const auto tp = cm.tp(c), fp = cm.fp(c), fn = cm.fn(c);
    sc.support = tp + fn;
    sc.precision_undefined = tp + fp == 0;
    sc.recall_undefined = tp + fn == 0;
    sc.precision = sc.precision_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    sc.recall = sc.recall_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    sc.f1 = f1_score(sc.precision, sc.recall);
    p[index_of(c)] = sc.precision;
    r[index_of(c)] = sc.recall;
    f[index_of(c)] = sc.f1;
    s[index_of(c)] = sc.support;
  }
  m.total_precision = weighted_average(p, s);
  m.total_recall = weighted_average(r, s);
  m.total_f1 = weighted_average(f, s);
  return m;
}

// --- stratified folds ------------------------------------------------------------

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> folds;  // indices into the labeled input
  std::vector<std::string> warnings;

  // Fold of every input index.
  std::vector<std::size_t> assignment(std::size_t n) const {
    std::vector<std::size_t> out(n);
    for (std::size_t f = 0; f < folds.size(); ++f)
      for (auto i : folds[f]) out[i] = f;
    return out;
  }

  bool operator==(const FoldPlan&) const = default;
};

// Shuffles each class's members (seeded) and deals them round-robin into k
// folds. The dealing position carries over from one class to the next, so
// fold sizes differ by at most one overall as well as per class.
inline FoldPlan stratified_kfold(std::span<const DiscourseClass> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::TooFewItems, "k must be >= 2");
  if (labels.size() < k)
    throw Error(ErrorKind::TooFewItems,
                std::to_string(labels.size()) + " items cannot fill " + std::to_string(k) + " folds");
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.resize(k);
  Rng rng(seed);
  std::size_t next = 0;
  for (auto c : kAllClasses) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) members.push_back(i);
    if (members.empty()) continue;
    if (members.size() < k)
      plan.warnings.push_back("class " + std::string(to_string(c)) + " has " + std::to_string(members.size()) +
                              " members, fewer than " + std::to_string(k) + " folds");
    rng.shuffle(std::span<std::size_t>(members));
    for (auto i : members) {
      plan.folds[next].push_back(i);
      next = (next + 1) % k;
    }
  }
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

inline std::string fold_plan_csv(const FoldPlan& plan, std::span<const std::string> ids) {
  std::string out = "id,fold\n";
  auto a = plan.assignment(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out += util::csv_escape(ids[i]) + "," + std::to_string(a[i]) + "\n";
  return out;
}

}  // namespace discourse

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "matrix.hpp"
#include "types.hpp"
#include "util.hpp"

namespace discourse {

inline constexpr std::size_t kNumGroupVariables = 11;

// Column order of the feature table, correlation matrix and biplot.
inline constexpr std::array<std::string_view, kNumGroupVariables> kGroupVariableNames{
    "Referential_S", "Phatic_S", "Emotive_S", "Referential_T", "Phatic_T", "Emotive_T",
    "Progress",      "Students", "Mean",      "Var",           "Teacher_Participation"};

struct GroupFeatureRow {
  std::string group_id;
  std::string dd_id;
  double referential_s = 0, phatic_s = 0, emotive_s = 0;
  double referential_t = 0, phatic_t = 0, emotive_t = 0;
  double progress = 0;
  double students = 0;
  double mean_gap = 0;  // days
  double var_gap = 0;   // days^2, population variance
  double teacher_participation = 0;
  // Fractions are 0 when the group has no messages of that role.
  bool no_student_messages = false;
  bool no_teacher_messages = false;
  bool gaps_undefined = false;  // fewer than two completed activities

  std::array<double, kNumGroupVariables> values() const {
    return {referential_s, phatic_s, emotive_s, referential_t, phatic_t, emotive_t,
            progress,      students, mean_gap,  var_gap,       teacher_participation};
  }
};

using LabelLookup = std::function<std::optional<DiscourseClass>(const Message&)>;

// Builds one row per group, sorted by group id.
inline std::vector<GroupFeatureRow> group_features(const Corpus& corpus, std::span<const GroupMetadata> metadata,
                                                   const LabelLookup& label_of) {
  std::unordered_map<std::string, const GroupMetadata*> meta;
  for (const auto& g : metadata) meta.emplace(g.group_id, &g);

  struct Tally {
    std::string dd_id;
    std::array<std::size_t, kNumClasses> student{}, teacher{};
    std::size_t students = 0, teachers = 0;
  };
  std::map<std::string, Tally> tallies;
  for (const auto& m : corpus) {
    auto label = label_of(m);
    if (!label) throw Error(ErrorKind::UnlabeledMessage, "message has neither prediction nor gold label", std::nullopt, m.id);
    if (!meta.count(m.group_id)) throw Error(ErrorKind::MissingMetadata, "group has no metadata", std::nullopt, m.group_id);
    auto& t = tallies[m.group_id];
    if (t.dd_id.empty() || m.dd_id < t.dd_id) t.dd_id = m.dd_id;
    if (m.role == Role::Student) {
      ++t.student[index_of(*label)];
      ++t.students;
    } else {
      ++t.teacher[index_of(*label)];
      ++t.teachers;
    }
  }

  std::vector<GroupFeatureRow> rows;
  for (const auto& [gid, t] : tallies) {
    const auto& g = *meta.at(gid);
    GroupFeatureRow r;
    r.group_id = gid;
    r.dd_id = t.dd_id;
    auto frac = [](std::size_t n, std::size_t total) {
      return total ? static_cast<double>(n) / static_cast<double>(total) : 0.0;
    };
    using enum DiscourseClass;
    r.referential_s = frac(t.student[index_of(Referential)], t.students);
    r.phatic_s = frac(t.student[index_of(Phatic)], t.students);
    r.emotive_s = frac(t.student[index_of(Emotive)], t.students);
    r.referential_t = frac(t.teacher[index_of(Referential)], t.teachers);
    r.phatic_t = frac(t.teacher[index_of(Phatic)], t.teachers);
    r.emotive_t = frac(t.teacher[index_of(Emotive)], t.teachers);
    r.no_student_messages = t.students == 0;
    r.no_teacher_messages = t.teachers == 0;
    r.teacher_participation = frac(t.teachers, t.students + t.teachers);
    r.progress = frac(g.completed_activity_dates.size(), g.total_activities);
    r.students = static_cast<double>(g.n_students);
    const auto& dates = g.completed_activity_dates;
    if (dates.size() < 2) {
      r.gaps_undefined = true;
    } else {
      std::vector<double> gaps;
      for (std::size_t i = 1; i < dates.size(); ++i)
        gaps.push_back(static_cast<double>((dates[i] - dates[i - 1]).count()));
      double sum = 0;
      for (double x : gaps) sum += x;
      r.mean_gap = sum / static_cast<double>(gaps.size());
      double ss = 0;
      for (double x : gaps) ss += (x - r.mean_gap) * (x - r.mean_gap);
      r.var_gap = ss / static_cast<double>(gaps.size());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// Gold labels only.
inline std::vector<GroupFeatureRow> group_features(const Corpus& corpus, std::span<const GroupMetadata> metadata) {
  return group_features(corpus, metadata, [](const Message& m) { return m.gold_label; });
}

// Predicted labels by message id, falling back to gold.
inline std::vector<GroupFeatureRow> group_features(const Corpus& corpus, std::span<const GroupMetadata> metadata,
                                                   const std::unordered_map<std::string, DiscourseClass>& predicted) {
  return group_features(corpus, metadata, [&](const Message& m) -> std::optional<DiscourseClass> {
    auto it = predicted.find(m.id);
    if (it != predicted.end()) return it->second;
    return m.gold_label;
  });
}

// Named numeric columns over observations.
struct DataTable {
  std::vector<std::string> columns;
  std::vector<std::string> row_ids;
  Matrix data;  // rows x columns
};

inline DataTable to_table(std::span<const GroupFeatureRow> rows) {
  DataTable t;
  t.columns.assign(kGroupVariableNames.begin(), kGroupVariableNames.end());
  t.data = Matrix(rows.size(), kNumGroupVariables);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    t.row_ids.push_back(rows[r].group_id);
    auto v = rows[r].values();
    for (std::size_t c = 0; c < kNumGroupVariables; ++c) t.data(r, c) = v[c];
  }
  return t;
}

inline std::string features_csv(std::span<const GroupFeatureRow> rows) {
  std::string out = "group_id,dd_id";
  for (auto n : kGroupVariableNames) out += "," + std::string(n);
  out += ",no_student_messages,no_teacher_messages,gaps_undefined\n";
  for (const auto& r : rows) {
    out += util::csv_escape(r.group_id) + "," + util::csv_escape(r.dd_id);
    for (double v : r.values()) out += "," + util::fixed(v, 6);
    out += std::string(",") + (r.no_student_messages ? "1" : "0") + "," + (r.no_teacher_messages ? "1" : "0") + "," +
           (r.gaps_undefined ? "1" : "0") + "\n";
  }
  return out;
}

// --- Pearson ------------------------------------------------------------------------

struct CorrelationMatrix {
  std::vector<std::string> names;
  Matrix r;
  std::vector<bool> undefined;  // zero-variance variables; their off-diagonal entries are 0
};

// Pearson product-moment coefficients from centered sums:
//   r_ab = sum (a - mean a)(b - mean b) / sqrt(sum (a - mean a)^2 sum (b - mean b)^2)
inline CorrelationMatrix pearson_matrix(const DataTable& t) {
  const std::size_t n = t.data.rows(), p = t.data.cols();
  if (n < 3) throw Error(ErrorKind::TooFewRows, "need at least 3 rows, got " + std::to_string(n));
  Matrix centered(n, p);
  std::vector<double> ss(p, 0.0);
  for (std::size_t c = 0; c < p; ++c) {
    double mean = 0;
    for (std::size_t r = 0; r < n; ++r) mean += t.data(r, c);
    mean /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      centered(r, c) = t.data(r, c) - mean;
      ss[c] += centered(r, c) * centered(r, c);
    }
  }
  CorrelationMatrix out;
  out.names = t.columns;
  out.r = Matrix::identity(p);
  out.undefined.assign(p, false);
  for (std::size_t c = 0; c < p; ++c) {
    // exact zero, or round-off residue of a constant column
    double scale = 0;
    for (std::size_t r = 0; r < n; ++r) scale = std::max(scale, std::abs(t.data(r, c)));
    out.undefined[c] = ss[c] <= 1e-24 * std::max(1.0, scale * scale) * static_cast<double>(n);
  }
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b) {
      double v = 0;
      if (!out.undefined[a] && !out.undefined[b]) {
        double cross = 0;
        for (std::size_t r = 0; r < n; ++r) cross += centered(r, a) * centered(r, b);
        v = std::clamp(cross / std::sqrt(ss[a] * ss[b]), -1.0, 1.0);
      }
      out.r(a, b) = v;
      out.r(b, a) = v;
    }
  return out;
}

inline CorrelationMatrix pearson_matrix(std::span<const GroupFeatureRow> rows) { return pearson_matrix(to_table(rows)); }

// Lower-triangle layout: diagonal '-', upper triangle empty; last column
// flags variables whose correlations are undefined (zero variance).
inline std::string correlation_csv(const CorrelationMatrix& m) {
  std::string out = "variable";
  for (const auto& n : m.names) out += "," + n;
  out += ",undefined\n";
  for (std::size_t a = 0; a < m.names.size(); ++a) {
    out += m.names[a];
    for (std::size_t b = 0; b < m.names.size(); ++b) {
      out += ",";
      if (b < a)
        out += util::fixed(m.r(a, b), 4);
      else if (b == a)
        out += "-";
    }
    out += m.undefined[a] ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace discourse

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "types.hpp"
#include "util.hpp"

namespace discourse {

struct Message {
  std::string id;
  std::string group_id;
  std::string dd_id;
  Role role = Role::Student;
  Subject subject = Subject::Language;
  Level level = Level::Middle;
  Timestamp timestamp{};
  std::string text;
  std::optional<DiscourseClass> gold_label;

  // Blank text is accepted but marked; it is never serialized.
  bool degenerate() const { return util::trim(text).empty(); }

  bool operator==(const Message&) const = default;
};

// Immutable, file-ordered message collection with unique ids.
class Corpus {
 public:
  Corpus() = default;

  explicit Corpus(std::vector<Message> messages, std::string source_path = {})
      : messages_(std::move(messages)), source_path_(std::move(source_path)) {
    index_.reserve(messages_.size());
    for (std::size_t i = 0; i < messages_.size(); ++i) {
      if (!index_.emplace(messages_[i].id, i).second)
        throw Error(ErrorKind::DuplicateId, "id repeated", i + 1, messages_[i].id);
    }
  }

  const std::vector<Message>& messages() const noexcept { return messages_; }
  const std::string& source_path() const noexcept { return source_path_; }
  std::size_t size() const noexcept { return messages_.size(); }
  bool empty() const noexcept { return messages_.empty(); }
  auto begin() const noexcept { return messages_.begin(); }
  auto end() const noexcept { return messages_.end(); }
  const Message& operator[](std::size_t i) const { return messages_[i]; }

  const Message* find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &messages_[it->second];
  }

  bool operator==(const Corpus& other) const { return messages_ == other.messages_; }

 private:
  std::vector<Message> messages_;
  std::string source_path_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct GroupMetadata {
  std::string group_id;
  std::size_t n_students = 1;
  std::size_t total_activities = 0;
  std::vector<Date> completed_activity_dates;

  bool operator==(const GroupMetadata&) const = default;
};

enum class CorpusFormat { Jsonl, Csv };

inline std::optional<CorpusFormat> format_from_path(std::string_view path) {
  auto ends_with = [&](std::string_view suf) {
    return path.size() >= suf.size() && path.substr(path.size() - suf.size()) == suf;
  };
  if (ends_with(".jsonl") || ends_with(".json")) return CorpusFormat::Jsonl;
  if (ends_with(".csv")) return CorpusFormat::Csv;
  return std::nullopt;
}

namespace corpus_detail {

// Field lookup shared by the JSONL and CSV readers. Returns nullopt when the
// field is absent (or JSON null).
using FieldGetter = std::function<std::optional<std::string>(std::string_view)>;

inline Message build_message(const FieldGetter& get, std::size_t line) {
  auto require = [&](std::string_view name) {
    auto v = get(name);
    if (!v) throw Error(ErrorKind::MalformedRecord, "missing field '" + std::string(name) + "'", line);
    return *v;
  };
  Message m;
  m.id = require("id");
  if (m.id.empty()) throw Error(ErrorKind::MalformedRecord, "empty id", line);
  m.group_id = require("group_id");
  m.dd_id = require("dd_id");
  auto role = require("role");
  auto parsed_role = parse_role(role);
  if (!parsed_role) throw Error(ErrorKind::BadRole, "unknown role '" + role + "'", line, m.id);
  m.role = *parsed_role;
  auto subject = require("subject");
  auto parsed_subject = parse_subject(subject);
  if (!parsed_subject)
    throw Error(ErrorKind::MalformedRecord, "unknown subject '" + subject + "'", line, m.id);
  m.subject = *parsed_subject;
  auto level = require("level");
  auto parsed_level = parse_level(level);
  if (!parsed_level)
    throw Error(ErrorKind::MalformedRecord, "unknown level '" + level + "'", line, m.id);
  m.level = *parsed_level;
  auto ts = require("timestamp");
  auto parsed_ts = util::parse_timestamp(ts);
  if (!parsed_ts) throw Error(ErrorKind::BadTimestamp, "cannot parse '" + ts + "'", line, m.id);
  m.timestamp = *parsed_ts;
  m.text = require("text");
  if (auto gold = get("gold_label"); gold && !gold->empty()) {
    auto parsed = parse_class(*gold);
    if (!parsed)
      throw Error(ErrorKind::MalformedRecord, "unknown gold_label '" + *gold + "'", line, m.id);
    m.gold_label = *parsed;
  }
  return m;
}

inline void append_checked(std::vector<Message>& out,
                           std::unordered_map<std::string, std::size_t>& seen, Message m,
                           std::size_t line) {
  if (!seen.emplace(m.id, line).second)
    throw Error(ErrorKind::DuplicateId, "id repeated", line, m.id);
  out.push_back(std::move(m));
}

}  // namespace corpus_detail

inline Corpus parse_corpus_jsonl(std::string_view text, std::string source_path = {}) {
  using nlohmann::json;
  std::vector<Message> messages;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = util::trim(text.substr(start, nl - start));
    ++line_no;
    start = nl + 1;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error&) {
      throw Error(ErrorKind::MalformedRecord, "invalid JSON", line_no);
    }
    if (!record.is_object()) throw Error(ErrorKind::MalformedRecord, "record is not an object", line_no);
    corpus_detail::FieldGetter get = [&](std::string_view name) -> std::optional<std::string> {
      auto it = record.find(std::string(name));
      if (it == record.end() || it->is_null()) return std::nullopt;
      if (!it->is_string())
        throw Error(ErrorKind::MalformedRecord, "field '" + std::string(name) + "' is not a string",
                    line_no);
      return it->get<std::string>();
    };
    corpus_detail::append_checked(messages, seen, corpus_detail::build_message(get, line_no), line_no);
  }
  return Corpus(std::move(messages), std::move(source_path));
}

inline Corpus parse_corpus_csv(std::string_view text, std::string source_path = {}) {
  std::vector<Message> messages;
  std::unordered_map<std::string, std::size_t> seen;
  std::map<std::string, std::size_t, std::less<>> columns;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool have_header = false;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto raw = text.substr(start, nl - start);
    ++line_no;
    start = nl + 1;
    if (util::trim(raw).empty()) continue;
    auto fields = util::split_csv_line(raw);
    if (!fields) throw Error(ErrorKind::MalformedRecord, "bad CSV quoting", line_no);
    if (!have_header) {
      for (std::size_t i = 0; i < fields->size(); ++i) columns[std::string(util::trim((*fields)[i]))] = i;
      have_header = true;
      continue;
    }
    corpus_detail::FieldGetter get = [&](std::string_view name) -> std::optional<std::string> {
      auto it = columns.find(name);
      if (it == columns.end()) return std::nullopt;
      if (it->second >= fields->size())
        throw Error(ErrorKind::MalformedRecord, "too few columns", line_no);
      return (*fields)[it->second];
    };
    if (fields->size() != columns.size())
      throw Error(ErrorKind::MalformedRecord, "column count differs from header", line_no);
    corpus_detail::append_checked(messages, seen, corpus_detail::build_message(get, line_no), line_no);
  }
  return Corpus(std::move(messages), std::move(source_path));
}

inline Corpus load_corpus(const std::string& path, CorpusFormat format) {
  std::string text = util::read_file(path);
  return format == CorpusFormat::Jsonl ? parse_corpus_jsonl(text, path) : parse_corpus_csv(text, path);
}

inline Corpus load_corpus(const std::string& path) {
  auto fmt = format_from_path(path);
  if (!fmt) throw Error(ErrorKind::ConfigError, "cannot infer corpus format from extension", std::nullopt, path);
  return load_corpus(path, *fmt);
}

inline nlohmann::ordered_json to_json(const Message& m) {
  nlohmann::ordered_json j;
  j["id"] = m.id;
  j["group_id"] = m.group_id;
  j["dd_id"] = m.dd_id;
  j["role"] = std::string(to_string(m.role));
  j["subject"] = std::string(to_string(m.subject));
  j["level"] = std::string(to_string(m.level));
  j["timestamp"] = util::format_timestamp(m.timestamp);
  j["text"] = m.text;
  if (m.gold_label) j["gold_label"] = std::string(to_string(*m.gold_label));
  return j;
}

inline std::string serialize_corpus_jsonl(const Corpus& c) {
  std::string out;
  for (const auto& m : c) {
    out += to_json(m).dump();
    out += '\n';
  }
  return out;
}

// --- group metadata --------------------------------------------------------

inline std::vector<GroupMetadata> parse_group_metadata_jsonl(std::string_view text) {
  using nlohmann::json;
  std::vector<GroupMetadata> out;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = util::trim(text.substr(start, nl - start));
    ++line_no;
    start = nl + 1;
    if (line.empty()) continue;
    GroupMetadata g;
    try {
      auto j = json::parse(line);
      g.group_id = j.at("group_id").get<std::string>();
      auto n = j.at("n_students").get<long long>();
      auto total = j.at("total_activities").get<long long>();
      if (n < 1) throw Error(ErrorKind::MalformedRecord, "n_students must be >= 1", line_no, g.group_id);
      if (total < 0) throw Error(ErrorKind::MalformedRecord, "total_activities < 0", line_no, g.group_id);
      g.n_students = static_cast<std::size_t>(n);
      g.total_activities = static_cast<std::size_t>(total);
      for (const auto& d : j.at("completed_activity_dates")) {
        auto s = d.get<std::string>();
        auto ts = util::parse_timestamp(s);
        if (!ts) throw Error(ErrorKind::BadTimestamp, "cannot parse '" + s + "'", line_no, g.group_id);
        g.completed_activity_dates.push_back(std::chrono::floor<std::chrono::days>(*ts));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::MalformedRecord, e.what(), line_no);
    }
    if (!std::is_sorted(g.completed_activity_dates.begin(), g.completed_activity_dates.end()))
      throw Error(ErrorKind::MalformedRecord, "completed_activity_dates must be non-decreasing", line_no,
                  g.group_id);
    if (g.completed_activity_dates.size() > g.total_activities)
      throw Error(ErrorKind::MalformedRecord, "more completed activities than total", line_no, g.group_id);
    if (!seen.emplace(g.group_id, line_no).second)
      throw Error(ErrorKind::DuplicateId, "group repeated", line_no, g.group_id);
    out.push_back(std::move(g));
  }
  return out;
}

inline std::vector<GroupMetadata> load_group_metadata(const std::string& path) {
  return parse_group_metadata_jsonl(util::read_file(path));
}

inline std::string serialize_group_metadata_jsonl(const std::vector<GroupMetadata>& groups) {
  std::string out;
  for (const auto& g : groups) {
    nlohmann::ordered_json j;
    j["group_id"] = g.group_id;
    j["n_students"] = g.n_students;
    j["total_activities"] = g.total_activities;
    auto dates = nlohmann::ordered_json::array();
    for (auto d : g.completed_activity_dates) dates.push_back(util::format_date(d));
    j["completed_activity_dates"] = std::move(dates);
    out += j.dump();
    out += '\n';
  }
  return out;
}

// --- summary ---------------------------------------------------------------

struct Distribution {
  std::size_t groups = 0;
  double median = 0;
  double mean = 0;
  double stddev = 0;  // population (divide by N)
  std::size_t max = 0;
};

struct SummaryStats {
  std::size_t total = 0;
  std::size_t students = 0;
  std::size_t teachers = 0;
  std::size_t middle = 0;
  std::size_t high = 0;
  std::size_t language = 0;
  std::size_t history = 0;
  std::size_t technology = 0;
  // Per-group message counts; only groups with at least one message of the
  // role take part. Absent when no such group exists.
  std::optional<Distribution> student_per_group;
  std::optional<Distribution> teacher_per_group;
};

inline std::optional<Distribution> describe(std::vector<std::size_t> counts) {
  if (counts.empty()) return std::nullopt;
  std::sort(counts.begin(), counts.end());
  Distribution d;
  d.groups = counts.size();
  const std::size_t n = counts.size();
  d.median = n % 2 ? static_cast<double>(counts[n / 2])
                   : 0.5 * (static_cast<double>(counts[n / 2 - 1]) + static_cast<double>(counts[n / 2]));
  double sum = 0;
  for (auto c : counts) sum += static_cast<double>(c);
  d.mean = sum / static_cast<double>(n);
  double ss = 0;
  for (auto c : counts) ss += (static_cast<double>(c) - d.mean) * (static_cast<double>(c) - d.mean);
  d.stddev = std::sqrt(ss / static_cast<double>(n));
  d.max = counts.back();
  return d;
}

inline SummaryStats corpus_summary(const Corpus& c) {
  SummaryStats s;
  std::map<std::string, std::size_t> student_counts, teacher_counts;
  for (const auto& m : c) {
    ++s.total;
    if (m.role == Role::Student) {
      ++s.students;
      ++student_counts[m.group_id];
    } else {
      ++s.teachers;
      ++teacher_counts[m.group_id];
    }
    (m.level == Level::Middle ? s.middle : s.high)++;
    switch (m.subject) {
      case Subject::Language: ++s.language; break;
      case Subject::History: ++s.history; break;
      case Subject::Technology: ++s.technology; break;
    }
  }
  auto values = [](const std::map<std::string, std::size_t>& m) {
    std::vector<std::size_t> v;
    for (const auto& [k, n] : m) v.push_back(n);
    return v;
  };
  s.student_per_group = describe(values(student_counts));
  s.teacher_per_group = describe(values(teacher_counts));
  return s;
}

inline std::string render_summary(const SummaryStats& s) {
  std::string out;
  auto line = [&](std::string_view k, std::size_t v) {
    out += std::string(k) + ": " + std::to_string(v) + "\n";
  };
  line("messages", s.total);
  line("student_messages", s.students);
  line("teacher_messages", s.teachers);
  line("level_middle", s.middle);
  line("level_high", s.high);
  line("subject_language", s.language);
  line("subject_history", s.history);
  line("subject_technology", s.technology);
  auto dist = [&](std::string_view role, const std::optional<Distribution>& d) {
    std::string p = std::string(role) + "_per_group";
    if (!d) {
      out += p + ": none\n";
      return;
    }
    out += p + ".groups: " + std::to_string(d->groups) + "\n";
    out += p + ".median: " + util::fixed(d->median, 2) + "\n";
    out += p + ".mean: " + util::fixed(d->mean, 2) + "\n";
    out += p + ".stddev_population: " + util::fixed(d->stddev, 2) + "\n";
    out += p + ".max: " + std::to_string(d->max) + "\n";
  };
  dist("student", s.student_per_group);
  dist("teacher", s.teacher_per_group);
  return out;
}

}  // namespace discourse

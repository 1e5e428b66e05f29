#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace discourse {

enum class DiscourseClass { Phatic = 0, Emotive = 1, Referential = 2 };
enum class Role { Student, Teacher };
enum class Subject { Language, History, Technology };
enum class Level { Middle, High };

inline constexpr std::size_t kNumClasses = 3;

// Canonical class order. Ties in voting and argmax resolve toward the front.
inline constexpr std::array<DiscourseClass, kNumClasses> kAllClasses{
    DiscourseClass::Phatic, DiscourseClass::Emotive, DiscourseClass::Referential};

inline constexpr std::size_t index_of(DiscourseClass c) { return static_cast<std::size_t>(c); }

inline std::string_view to_string(DiscourseClass c) {
  switch (c) {
    case DiscourseClass::Phatic: return "Phatic";
    case DiscourseClass::Emotive: return "Emotive";
    case DiscourseClass::Referential: return "Referential";
  }
  return "?";
}

inline std::string_view to_string(Role r) { return r == Role::Student ? "Student" : "Teacher"; }

inline std::string_view to_string(Subject s) {
  switch (s) {
    case Subject::Language: return "Language";
    case Subject::History: return "History";
    case Subject::Technology: return "Technology";
  }
  return "?";
}

inline std::string_view to_string(Level l) { return l == Level::Middle ? "Middle" : "High"; }

namespace detail {

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char x = a[i], y = b[i];
    if (x >= 'A' && x <= 'Z') x = static_cast<char>(x - 'A' + 'a');
    if (y >= 'A' && y <= 'Z') y = static_cast<char>(y - 'A' + 'a');
    if (x != y) return false;
  }
  return true;
}

}  // namespace detail

// Enum parsers are case-insensitive and return nullopt on unknown names.
inline std::optional<DiscourseClass> parse_class(std::string_view s) {
  for (auto c : kAllClasses)
    if (detail::iequals(s, to_string(c))) return c;
  return std::nullopt;
}

inline std::optional<Role> parse_role(std::string_view s) {
  if (detail::iequals(s, "student")) return Role::Student;
  if (detail::iequals(s, "teacher")) return Role::Teacher;
  return std::nullopt;
}

inline std::optional<Subject> parse_subject(std::string_view s) {
  for (auto v : {Subject::Language, Subject::History, Subject::Technology})
    if (detail::iequals(s, to_string(v))) return v;
  return std::nullopt;
}

inline std::optional<Level> parse_level(std::string_view s) {
  if (detail::iequals(s, "middle")) return Level::Middle;
  if (detail::iequals(s, "high")) return Level::High;
  return std::nullopt;
}

// Ordered lemma sequence produced by the preprocessing pipeline.
using TokenStream = std::vector<std::string>;

}  // namespace discourse

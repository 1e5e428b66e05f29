#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace discourse {

enum class ErrorKind {
  DuplicateId,
  BadRole,
  BadTimestamp,
  MalformedRecord,
  EmptySpec,
  EmptyCorpus,
  InvalidConfig,
  TopicOutOfRange,
  EmptyVocabulary,
  SingleClassInput,
  DimensionMismatch,
  NoMajority,
  DegenerateInput,
  TooFewItems,
  MissingMetadata,
  UnlabeledMessage,
  TooFewRows,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::BadRole: return "BadRole";
    case ErrorKind::BadTimestamp: return "BadTimestamp";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::EmptySpec: return "EmptySpec";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::TopicOutOfRange: return "TopicOutOfRange";
    case ErrorKind::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorKind::SingleClassInput: return "SingleClassInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NoMajority: return "NoMajority";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::TooFewItems: return "TooFewItems";
    case ErrorKind::MissingMetadata: return "MissingMetadata";
    case ErrorKind::UnlabeledMessage: return "UnlabeledMessage";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

// Every failure in the library surfaces as this exception. `line()` is set for
// record-level parse errors (1-based), `subject()` names the offending id,
// group, column or config key when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string detail, std::optional<std::size_t> line = std::nullopt,
        std::string subject = {})
      : std::runtime_error(compose(kind, detail, line, subject)),
        kind_(kind),
        detail_(std::move(detail)),
        line_(line),
        subject_(std::move(subject)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  static std::string compose(ErrorKind kind, const std::string& detail,
                             std::optional<std::size_t> line, const std::string& subject) {
    std::string out(to_string(kind));
    if (line) out += " (line " + std::to_string(*line) + ")";
    if (!subject.empty()) out += " [" + subject + "]";
    if (!detail.empty()) out += ": " + detail;
    return out;
  }

  ErrorKind kind_;
  std::string detail_;
  std::optional<std::size_t> line_;
  std::string subject_;
};

}  // namespace discourse

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "lda.hpp"
#include "random.hpp"
#include "svm.hpp"
#include "util.hpp"

#ifndef DISCOURSE_RESOURCE_DIR
#define DISCOURSE_RESOURCE_DIR "resources"
#endif

namespace discourse {

// Every recognised key with its default. Flags, environment variables and
// config files all address these names.
inline const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> d{
      {"seed", "42"},
      {"jobs", "1"},
      {"input", ""},
      {"output", "out"},
      {"metadata", ""},
      {"annotations", ""},
      {"predictions", ""},
      {"model", ""},
      {"topic_class_map", ""},
      {"lexicon", std::string(DISCOURSE_RESOURCE_DIR) + "/lexicon.tsv"},
      {"stopwords", std::string(DISCOURSE_RESOURCE_DIR) + "/stopwords.txt"},
      {"emoticons", std::string(DISCOURSE_RESOURCE_DIR) + "/emoticons.txt"},
      {"lda.k", "3"},
      {"lda.k_list", ""},
      {"lda.alpha", "0"},
      {"lda.beta", "0.1"},
      {"lda.burn_in", "1000"},
      {"lda.iterations", "5000"},
      {"lda.chains", "1"},
      {"lda.top_n", "10"},
      {"svm.c", "1"},
      {"svm.tol", "0.001"},
      {"svm.max_passes", "5"},
      {"eval.k_folds", "10"},
      {"synth.groups", "12"},
      {"synth.noise", "0.2"},
      {"synth.judge_accuracy", "0.9"},
  };
  return d;
}

// Flag and key spellings: "--burn-in", "burn-in" and "lda.burn_in" all name
// the same entry.
inline std::string canonical_key(std::string_view raw) {
  std::string k;
  for (char ch : raw) k += ch == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  static const std::map<std::string, std::string> aliases{
      {"k", "lda.k"},           {"k_list", "lda.k_list"},   {"alpha", "lda.alpha"},
      {"beta", "lda.beta"},     {"burn_in", "lda.burn_in"}, {"iterations", "lda.iterations"},
      {"chains", "lda.chains"}, {"top_n", "lda.top_n"},     {"c", "svm.c"},
      {"tol", "svm.tol"},       {"max_passes", "svm.max_passes"}, {"k_folds", "eval.k_folds"},
      {"groups", "synth.groups"}, {"noise", "synth.noise"}, {"judge_accuracy", "synth.judge_accuracy"},
  };
  if (auto it = aliases.find(k); it != aliases.end()) return it->second;
  return k;
}

class Settings {
 public:
  Settings() : values_(config_defaults()) {}

  void set(std::string_view key, std::string value) {
    auto k = canonical_key(key);
    if (!values_.count(k)) throw Error(ErrorKind::ConfigError, "unknown key", std::nullopt, std::string(key));
    values_[k] = std::move(value);
  }

  // key = value lines; "[section]" prefixes following keys with "section.";
  // '#' starts a comment; values may be double-quoted.
  void merge_file_text(std::string_view body) {
    std::string section;
    std::size_t line_no = 0, start = 0;
    while (start < body.size()) {
      auto nl = body.find('\n', start);
      if (nl == std::string_view::npos) nl = body.size();
      auto line = body.substr(start, nl - start);
      start = nl + 1;
      ++line_no;
      line = util::trim(line);
      if (!line.empty() && line.front() == '#') continue;
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw Error(ErrorKind::ConfigError, "unterminated section header", line_no);
        section = std::string(util::trim(line.substr(1, line.size() - 2)));
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string_view::npos) throw Error(ErrorKind::ConfigError, "expected key = value", line_no);
      auto key = std::string(util::trim(line.substr(0, eq)));
      auto value = util::trim(line.substr(eq + 1));
      if (!value.empty() && value.front() == '"') {
        auto close = value.find('"', 1);
        if (close == std::string_view::npos) throw Error(ErrorKind::ConfigError, "unterminated quote", line_no);
        value = value.substr(1, close - 1);
      } else if (auto hash = value.find('#'); hash != std::string_view::npos) {
        value = util::trim(value.substr(0, hash));
      }
      if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
      try {
        set(key, std::string(value));
      } catch (const Error& e) {
        throw Error(e.kind(), e.detail(), line_no, e.subject());
      }
    }
  }

  void merge_file(const std::string& path) { merge_file_text(util::read_file(path)); }

  // DISCOURSE_<KEY>, with '.' written as '_' (DISCOURSE_LDA_BURN_IN).
  void merge_environment() {
    for (auto& [k, v] : values_) {
      std::string name = "DISCOURSE_";
      for (char ch : k) name += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      if (const char* e = std::getenv(name.c_str())) v = e;
    }
  }

  const std::string& get(std::string_view key) const {
    auto it = values_.find(canonical_key(key));
    if (it == values_.end()) throw Error(ErrorKind::ConfigError, "unknown key", std::nullopt, std::string(key));
    return it->second;
  }

  std::string require(std::string_view key) const {
    const auto& v = get(key);
    if (v.empty()) throw Error(ErrorKind::ConfigError, "missing required setting", std::nullopt, canonical_key(key));
    return v;
  }

  template <class T>
  T number(std::string_view key) const {
    const auto& v = get(key);
    if constexpr (std::is_floating_point_v<T>) {
      if (auto d = util::parse_double(v)) return static_cast<T>(*d);
    } else {
      if (auto i = util::parse_int<T>(v)) return *i;
    }
    throw Error(ErrorKind::ConfigError, "not a valid number: '" + v + "'", std::nullopt, canonical_key(key));
  }

  std::vector<std::size_t> number_list(std::string_view key) const {
    std::vector<std::size_t> out;
    for (const auto& part : util::split(get(key), ',')) {
      auto t = util::trim(part);
      if (t.empty()) continue;
      auto i = util::parse_int<std::size_t>(t);
      if (!i) throw Error(ErrorKind::ConfigError, "not a number list", std::nullopt, canonical_key(key));
      out.push_back(*i);
    }
    return out;
  }

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  // Sorted, sectioned text that merge_file_text reads back to the same values.
  std::string canonical_text() const {
    std::string out, section;
    for (const auto& [k, v] : values_)
      if (k.find('.') == std::string::npos) out += k + " = \"" + v + "\"\n";
    for (const auto& [k, v] : values_) {
      auto dot = k.find('.');
      if (dot == std::string::npos) continue;
      std::string sec = k.substr(0, dot);
      std::string name = k.substr(dot + 1);
      if (sec != section) {
        out += "\n[" + sec + "]\n";
        section = sec;
      }
      out += name + " = \"" + v + "\"\n";
    }
    return out;
  }

  std::string hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_text())));
    return buf;
  }

  std::uint64_t seed() const { return number<std::uint64_t>("seed"); }
  std::size_t jobs() const { return std::max<std::size_t>(1, number<std::size_t>("jobs")); }

  GibbsConfig gibbs(std::string_view stage) const {
    GibbsConfig c;
    c.topics = number<std::size_t>("lda.k");
    c.alpha = number<double>("lda.alpha");
    c.beta = number<double>("lda.beta");
    c.burn_in = number<std::size_t>("lda.burn_in");
    c.iterations = number<std::size_t>("lda.iterations");
    c.chains = number<std::size_t>("lda.chains");
    c.seed = stage_seed(seed(), stage);
    return c;
  }

  SvmConfig svm(std::string_view stage) const {
    SvmConfig c;
    c.C = number<double>("svm.c");
    c.tol = number<double>("svm.tol");
    c.max_passes = number<std::size_t>("svm.max_passes");
    c.seed = stage_seed(seed(), stage);
    return c;
  }

 private:
  std::map<std::string, std::string> values_;
};

inline std::string content_hash(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

// Record of one stage run. Holds no clock time or host data, so reruns
// produce identical bytes.
struct Manifest {
  std::string command;
  Settings settings;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, hash
  std::vector<std::pair<std::string, std::string>> outputs;  // file name, hash
  std::vector<std::string> warnings;

  std::string dump() const {
    nlohmann::ordered_json j;
    j["format"] = "discourse.manifest";
    j["version"] = 1;
    j["command"] = command;
    j["seed"] = settings.seed();
    j["config_hash"] = settings.hash();
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : settings.values()) cfg[k] = v;
    j["config"] = cfg;
    auto files = [](const auto& list) {
      nlohmann::ordered_json a = nlohmann::ordered_json::array();
      for (const auto& [p, h] : list) a.push_back({{"path", p}, {"fnv1a64", h}});
      return a;
    };
    j["inputs"] = files(inputs);
    j["outputs"] = files(outputs);
    j["warnings"] = warnings;
    return j.dump(2) + "\n";
  }
};

// Restores command and settings from a manifest written by a previous run.
inline std::pair<std::string, Settings> settings_from_manifest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(util::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("manifest is not valid JSON: ") + e.what(), std::nullopt, path);
  }
  if (j.value("format", "") != "discourse.manifest")
    throw Error(ErrorKind::ConfigError, "not a discourse manifest", std::nullopt, path);
  Settings s;
  for (const auto& [k, v] : j.at("config").items()) s.set(k, v.get<std::string>());
  return {j.at("command").get<std::string>(), std::move(s)};
}

}  // namespace discourse

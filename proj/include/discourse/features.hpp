#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "types.hpp"

namespace discourse {

// Lemma -> dense column index, in order of first occurrence.
class FeatureSpace {
 public:
  FeatureSpace() = default;

  static FeatureSpace build(std::span<const TokenStream> docs) {
    FeatureSpace fs;
    for (const auto& doc : docs)
      for (const auto& lemma : doc)
        if (fs.index_.emplace(lemma, static_cast<std::uint32_t>(fs.names_.size())).second)
          fs.names_.push_back(lemma);
    if (fs.names_.empty()) throw Error(ErrorKind::EmptyVocabulary, "no lemmas in training corpus");
    return fs;
  }

  static FeatureSpace from_names(std::vector<std::string> names) {
    FeatureSpace fs;
    for (const auto& n : names)
      if (!fs.index_.emplace(n, static_cast<std::uint32_t>(fs.names_.size())).second)
        throw Error(ErrorKind::MalformedRecord, "duplicate feature name", std::nullopt, n);
      else
        fs.names_.push_back(n);
    if (fs.names_.empty()) throw Error(ErrorKind::EmptyVocabulary, "feature space has no columns");
    return fs;
  }

  std::optional<std::uint32_t> find(const std::string& lemma) const {
    auto it = index_.find(lemma);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool operator==(const FeatureSpace& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Set of active feature columns, kept sorted and unique.
struct BinaryVector {
  std::vector<std::uint32_t> active;

  std::size_t count() const noexcept { return active.size(); }
  bool operator==(const BinaryVector&) const = default;
};

// Real-valued sparse vector (sorted indices). Binary vectors are the special
// case where every value is 1.
struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  SparseVector() = default;
  SparseVector(std::vector<std::uint32_t> idx, std::vector<double> val)
      : index(std::move(idx)), value(std::move(val)) {}
  SparseVector(const BinaryVector& b) : index(b.active), value(b.active.size(), 1.0) {}  // NOLINT
};

inline double dot(const SparseVector& a, const SparseVector& b) {
  double s = 0;
  std::size_t i = 0, j = 0;
  while (i < a.index.size() && j < b.index.size()) {
    if (a.index[i] == b.index[j])
      s += a.value[i++] * b.value[j++];
    else if (a.index[i] < b.index[j])
      ++i;
    else
      ++j;
  }
  return s;
}

inline double dot(std::span<const double> dense, const SparseVector& v) {
  double s = 0;
  for (std::size_t i = 0; i < v.index.size(); ++i) s += dense[v.index[i]] * v.value[i];
  return s;
}

// Out-of-vocabulary lemmas are dropped; repeats count once.
inline BinaryVector vectorize(const TokenStream& tokens, const FeatureSpace& fs) {
  BinaryVector v;
  for (const auto& lemma : tokens)
    if (auto idx = fs.find(lemma)) v.active.push_back(*idx);
  std::sort(v.active.begin(), v.active.end());
  v.active.erase(std::unique(v.active.begin(), v.active.end()), v.active.end());
  return v;
}

}  // namespace discourse

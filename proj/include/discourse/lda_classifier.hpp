#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "lda.hpp"
#include "types.hpp"
#include "util.hpp"

namespace discourse {

// Scores a message against each topic's word distribution. Words outside the
// model vocabulary contribute the class floor instead of a phi entry.
class LdaClassifier {
 public:
  LdaClassifier(TopicModel model, std::vector<DiscourseClass> class_of_topic)
      : model_(std::move(model)), class_of_topic_(std::move(class_of_topic)) {
    if (class_of_topic_.size() != model_.topics())
      throw Error(ErrorKind::InvalidConfig, "topic-class map must cover every topic exactly once");
    for (std::size_t a = 0; a < class_of_topic_.size(); ++a)
      for (std::size_t b = a + 1; b < class_of_topic_.size(); ++b)
        if (class_of_topic_[a] == class_of_topic_[b])
          throw Error(ErrorKind::InvalidConfig, "topic-class map is not a bijection", std::nullopt,
                      std::string(to_string(class_of_topic_[a])));
    for (std::size_t w = 0; w < model_.vocabulary.size(); ++w)
      word_index_.emplace(model_.vocabulary[w], static_cast<std::uint32_t>(w));
    // Smallest smoothed probability in the model, i.e. beta / (n_k + V beta)
    // of the most heavily used topic.
    double floor = std::numeric_limits<double>::infinity();
    for (double p : model_.phi.data()) floor = std::min(floor, p);
    floor_.fill(floor);
  }

  const TopicModel& model() const noexcept { return model_; }
  const std::vector<DiscourseClass>& class_of_topic() const noexcept { return class_of_topic_; }
  double floor(DiscourseClass c) const { return floor_[index_of(c)]; }
  void set_floor(DiscourseClass c, double value) { floor_[index_of(c)] = value; }

  // Mapped classes in canonical order.
  std::vector<DiscourseClass> classes() const {
    std::vector<DiscourseClass> out;
    for (auto c : kAllClasses)
      if (std::find(class_of_topic_.begin(), class_of_topic_.end(), c) != class_of_topic_.end()) out.push_back(c);
    return out;
  }

  std::size_t topic_of(DiscourseClass c) const {
    return static_cast<std::size_t>(std::find(class_of_topic_.begin(), class_of_topic_.end(), c) -
                                    class_of_topic_.begin());
  }

  const std::uint32_t* word(const std::string& w) const {
    auto it = word_index_.find(w);
    return it == word_index_.end() ? nullptr : &it->second;
  }

 private:
  TopicModel model_;
  std::vector<DiscourseClass> class_of_topic_;
  std::unordered_map<std::string, std::uint32_t> word_index_;
  std::array<double, kNumClasses> floor_{};
};

struct LdaPrediction {
  DiscourseClass label = DiscourseClass::Phatic;
  bool abstain = false;  // no in-vocabulary evidence; label is the tie rule's pick
  std::array<double, kNumClasses> log_scores{};
};

// score(c) = sum over lemmas of log phi[topic(c)][w] (floor for unseen words);
// argmax with ties toward canonical class order.
inline LdaPrediction classify_lda(const TokenStream& tokens, const LdaClassifier& clf) {
  LdaPrediction out;
  const auto& phi = clf.model().phi;
  auto classes = clf.classes();
  std::size_t seen = 0;
  for (const auto& lemma : tokens)
    if (clf.word(lemma)) ++seen;
  out.abstain = seen == 0;
  bool first = true;
  for (auto c : classes) {
    const std::size_t k = clf.topic_of(c);
    double score = 0;
    for (const auto& lemma : tokens) {
      const auto* w = clf.word(lemma);
      score += std::log(w ? phi(k, *w) : clf.floor(c));
    }
    out.log_scores[index_of(c)] = score;
    if (first || score > out.log_scores[index_of(out.label)]) {
      out.label = c;
      first = false;
    }
  }
  return out;
}

// Two-column CSV: topic_index,class. A header row is optional.
inline std::vector<DiscourseClass> parse_topic_class_map(std::string_view body, std::size_t topics) {
  std::vector<std::optional<DiscourseClass>> map(topics);
  std::size_t line_no = 0, start = 0;
  while (start < body.size()) {
    auto nl = body.find('\n', start);
    if (nl == std::string_view::npos) nl = body.size();
    auto line = util::trim(body.substr(start, nl - start));
    ++line_no;
    start = nl + 1;
    if (line.empty() || line.front() == '#') continue;
    auto fields = util::split(line, ',');
    if (fields.size() != 2) throw Error(ErrorKind::MalformedRecord, "expected topic_index,class", line_no);
    auto topic = util::parse_int<std::size_t>(fields[0]);
    if (!topic) {
      if (line_no == 1) continue;  // header
      throw Error(ErrorKind::MalformedRecord, "bad topic index", line_no);
    }
    auto cls = parse_class(util::trim(fields[1]));
    if (!cls) throw Error(ErrorKind::MalformedRecord, "unknown class", line_no, fields[1]);
    if (*topic >= topics) throw Error(ErrorKind::TopicOutOfRange, "topic index beyond model", line_no);
    if (map[*topic]) throw Error(ErrorKind::MalformedRecord, "topic mapped twice", line_no);
    map[*topic] = *cls;
  }
  std::vector<DiscourseClass> out;
  for (std::size_t k = 0; k < topics; ++k) {
    if (!map[k]) throw Error(ErrorKind::InvalidConfig, "topic " + std::to_string(k) + " has no class");
    out.push_back(*map[k]);
  }
  return out;
}

// Chooses the bijection topic -> class that maximizes the theta mass each
// labeled training document puts on its class's topic. Used where no operator
// map exists (inside cross-validation folds). Requires topics == classes.size().
inline std::vector<DiscourseClass> align_topics_to_labels(const TopicModel& m,
                                                          std::span<const DiscourseClass> labels,
                                                          std::vector<DiscourseClass> classes) {
  if (classes.size() != m.topics())
    throw Error(ErrorKind::InvalidConfig, "topic count must equal class count for alignment");
  std::sort(classes.begin(), classes.end());
  std::vector<std::vector<double>> mass(m.topics(), std::vector<double>(kNumClasses, 0.0));
  for (std::size_t d = 0; d < labels.size() && d < m.theta.rows(); ++d)
    for (std::size_t k = 0; k < m.topics(); ++k) mass[k][index_of(labels[d])] += m.theta(d, k);
  std::vector<DiscourseClass> best;
  double best_score = -1;
  auto perm = classes;
  do {
    double s = 0;
    for (std::size_t k = 0; k < perm.size(); ++k) s += mass[k][index_of(perm[k])];
    if (s > best_score) {
      best_score = s;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace discourse

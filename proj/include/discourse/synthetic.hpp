#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "random.hpp"
#include "types.hpp"

namespace discourse {

struct SynthClass {
  DiscourseClass label = DiscourseClass::Phatic;
  std::vector<std::string> vocabulary;  // word rank r is drawn with weight 1/(r+1)
  double weight = 1.0;                  // share of messages generated from this class
};

struct DateSchedule {
  Date start = Date{std::chrono::year{2013} / std::chrono::March / 4};
  std::size_t min_activities = 8;
  std::size_t max_activities = 12;
  std::size_t min_gap_days = 2;
  std::size_t max_gap_days = 14;
  std::size_t span_days = 120;  // message timestamps fall in [start, start + span)
};

struct SynthSpec {
  std::vector<SynthClass> classes;
  std::size_t n_groups = 12;
  std::size_t student_messages_per_group = 45;
  std::size_t teacher_messages_per_group = 5;
  // Probability that a single token is swapped for a word of another class.
  double noise_rate = 0.0;
  std::size_t min_words = 3;
  std::size_t max_words = 8;
  // Each group rescales the class weights by a factor in [1 - s, 1 + s] so
  // per-group proportions vary.
  double group_weight_spread = 0.6;
  DateSchedule schedule;
};

struct SyntheticData {
  Corpus corpus;
  std::vector<GroupMetadata> groups;
};

namespace synth_detail {

inline std::string padded(std::size_t v, std::size_t width) {
  std::string s = std::to_string(v);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

inline std::size_t pick_weighted(Rng& rng, const std::vector<double>& weights) {
  double total = 0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

inline const std::string& zipf_word(Rng& rng, const std::vector<std::string>& vocab) {
  std::vector<double> w(vocab.size());
  for (std::size_t r = 0; r < vocab.size(); ++r) w[r] = 1.0 / static_cast<double>(r + 1);
  return vocab[pick_weighted(rng, w)];
}

}  // namespace synth_detail

// Generates a labeled corpus plus matching group metadata. Every message's
// gold_label is the class that generated it, regardless of token noise.
inline SyntheticData generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  using namespace std::chrono;
  if (spec.classes.empty()) throw Error(ErrorKind::EmptySpec, "no classes");
  for (const auto& c : spec.classes) {
    if (c.vocabulary.empty())
      throw Error(ErrorKind::EmptySpec, "class has an empty vocabulary", std::nullopt,
                  std::string(to_string(c.label)));
    if (!(c.weight > 0)) throw Error(ErrorKind::EmptySpec, "class weight must be positive");
  }
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate <= 1.0))
    throw Error(ErrorKind::InvalidConfig, "noise rate outside [0,1]");
  if (spec.min_words < 1 || spec.max_words < spec.min_words)
    throw Error(ErrorKind::InvalidConfig, "bad words-per-message range");
  const auto& sched = spec.schedule;
  if (sched.max_activities < sched.min_activities || sched.max_gap_days < sched.min_gap_days ||
      sched.span_days == 0)
    throw Error(ErrorKind::InvalidConfig, "bad date schedule");

  Rng rng(seed);
  const std::size_t width = std::to_string(spec.n_groups).size();
  const std::size_t n_dd = std::max<std::size_t>(1, spec.n_groups / 3);
  static constexpr Subject kSubjects[] = {Subject::Language, Subject::History, Subject::Technology};

  std::vector<Message> messages;
  std::vector<GroupMetadata> groups;
  for (std::size_t g = 0; g < spec.n_groups; ++g) {
    const std::string group_id = "g" + synth_detail::padded(g + 1, width);
    const std::string dd_id = "dd" + std::to_string(g % n_dd + 1);
    const Subject subject = kSubjects[g % 3];
    const Level level = (g / 3) % 2 ? Level::High : Level::Middle;

    std::vector<double> weights;
    for (const auto& c : spec.classes)
      weights.push_back(c.weight * (1.0 + spec.group_weight_spread * (2.0 * rng.uniform() - 1.0)));

    auto make_message = [&](Role role, std::size_t n) {
      std::size_t ci = synth_detail::pick_weighted(rng, weights);
      const auto& cls = spec.classes[ci];
      std::size_t words = spec.min_words + rng.index(spec.max_words - spec.min_words + 1);
      std::string text;
      for (std::size_t w = 0; w < words; ++w) {
        const std::vector<std::string>* vocab = &cls.vocabulary;
        if (spec.classes.size() > 1 && rng.bernoulli(spec.noise_rate)) {
          std::size_t other = rng.index(spec.classes.size() - 1);
          if (other >= ci) ++other;
          vocab = &spec.classes[other].vocabulary;
        }
        if (!text.empty()) text += ' ';
        text += synth_detail::zipf_word(rng, *vocab);
      }
      Message m;
      m.id = group_id + (role == Role::Student ? "-s" : "-t") + synth_detail::padded(n + 1, 4);
      m.group_id = group_id;
      m.dd_id = dd_id;
      m.role = role;
      m.subject = subject;
      m.level = level;
      m.timestamp = Timestamp{sys_days{sched.start}} + days{rng.index(sched.span_days)} +
                    seconds{rng.index(86400)};
      m.text = std::move(text);
      m.gold_label = cls.label;
      messages.push_back(std::move(m));
    };
    for (std::size_t i = 0; i < spec.student_messages_per_group; ++i) make_message(Role::Student, i);
    for (std::size_t i = 0; i < spec.teacher_messages_per_group; ++i) make_message(Role::Teacher, i);

    GroupMetadata meta;
    meta.group_id = group_id;
    meta.n_students = 15 + rng.index(26);
    meta.total_activities =
        sched.min_activities + rng.index(sched.max_activities - sched.min_activities + 1);
    std::size_t completed = meta.total_activities == 0 ? 0 : 1 + rng.index(meta.total_activities);
    Date day = sched.start;
    for (std::size_t a = 0; a < completed; ++a) {
      if (a > 0) day += days{sched.min_gap_days + rng.index(sched.max_gap_days - sched.min_gap_days + 1)};
      meta.completed_activity_dates.push_back(day);
    }
    groups.push_back(std::move(meta));
  }
  return {Corpus(std::move(messages), "synthetic"), std::move(groups)};
}

// Three disjoint vocabularies built from lemma-stable words (no stopwords,
// no repeated vowels), weighted like the reference corpus (240/137/123).
inline SynthSpec default_synth_spec() {
  SynthSpec spec;
  spec.classes = {
      {DiscourseClass::Phatic,
       {"hola", "jajaja", ":D", "chao", "amigo", "oye", ":)", "xD", "saludo", "compañero", "wena",
        "loco", "cabro", "jeje", ":p", "buenas", "chiquillo", "weon", "profe", "<3"},
       240.0},
      {DiscourseClass::Emotive,
       {"gustar", "genial", "entretenido", "difícil", "aburrido", "bacán", "feliz", "pena",
        "encantar", "interesante", "divertido", "odiar", "cansado", "contento", "lindo", "terrible",
        "emocionante", "fome", "querer", "sentir"},
       137.0},
      {DiscourseClass::Referential,
       {"trabajo", "actividad", "texto", "historia", "http://app.kelluwen.cl/blog", "mundo",
        "agua", "guerra", "realidad", "grupo", "subir", "investigar", "capítulo", "autor",
        "revista", "noticia", "entrevista", "publicar", "tema", "pertenecer"},
       123.0},
  };
  return spec;
}

}  // namespace discourse

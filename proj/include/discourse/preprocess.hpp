#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "error.hpp"
#include "types.hpp"
#include "util.hpp"

namespace discourse {

enum class TokenKind { Word, Emoticon, Url, Number };

inline std::string_view to_string(TokenKind k) {
  switch (k) {
    case TokenKind::Word: return "Word";
    case TokenKind::Emoticon: return "Emoticon";
    case TokenKind::Url: return "Url";
    case TokenKind::Number: return "Number";
  }
  return "?";
}

struct Token {
  std::string surface;
  std::string lemma;
  TokenKind kind = TokenKind::Word;
  bool stopword = false;
};

inline constexpr std::string_view kUrlLemma = "http";
inline constexpr std::string_view kNumberLemma = "NUM";

// --- UTF-8 helpers ------------------------------------------------------------

namespace text {

// Decodes the code point starting at s[i] and advances i. Invalid bytes are
// returned as-is (one byte each) so no input is ever dropped.
inline char32_t next_code_point(std::string_view s, std::size_t& i) {
  auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) {
    return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  auto byte = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F); };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    char32_t cp = (static_cast<char32_t>(b0 & 0x1F) << 6) | byte(1);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    char32_t cp = (static_cast<char32_t>(b0 & 0x0F) << 12) | (byte(1) << 6) | byte(2);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    char32_t cp = (static_cast<char32_t>(b0 & 0x07) << 18) | (byte(1) << 12) | (byte(2) << 6) | byte(3);
    i += 4;
    return cp;
  }
  ++i;
  return b0;
}

inline std::vector<char32_t> decode(std::string_view s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) out.push_back(next_code_point(s, i));
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

inline std::string encode(const std::vector<char32_t>& cps) {
  std::string out;
  for (auto cp : cps) append_utf8(out, cp);
  return out;
}

// ASCII and Latin-1 letters only; that covers Spanish.
inline char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  return cp;
}

inline std::string lowercase(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size();) append_utf8(out, to_lower(next_code_point(s, i)));
  return out;
}

inline bool is_vowel(char32_t cp) {
  switch (cp) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
    case U'á': case U'é': case U'í': case U'ó': case U'ú': case U'ü':
      return true;
    default:
      return false;
  }
}

inline bool is_punct(char32_t cp) {
  if (cp < 0x80) return cp > 0x20 && cp < 0x7F && !((cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
                                                   (cp >= 'A' && cp <= 'Z'));
  switch (cp) {
    case U'¡': case U'¿': case U'«': case U'»': case U'…': case U'“': case U'”':
    case U'‘': case U'’': case U'–': case U'—': case U'·':
      return true;
    default:
      return false;
  }
}

inline bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' || cp == 0xA0;
}

inline bool is_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

inline bool is_letter(char32_t cp) {
  return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7);
}

// Collapses runs of identical vowels. min_run=3 collapses runs of length >= 3;
// min_run=2 collapses every run of length >= 2.
inline std::string collapse_vowel_runs(std::string_view s, std::size_t min_run) {
  auto cps = decode(s);
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < cps.size();) {
    std::size_t j = i + 1;
    while (j < cps.size() && cps[j] == cps[i]) ++j;
    std::size_t run = j - i;
    if (is_vowel(cps[i]) && run >= min_run)
      out.push_back(cps[i]);
    else
      out.insert(out.end(), cps.begin() + static_cast<std::ptrdiff_t>(i), cps.begin() + static_cast<std::ptrdiff_t>(j));
    i = j;
  }
  return encode(out);
}

}  // namespace text

// --- resources ----------------------------------------------------------------

namespace resource_detail {

// Yields the meaningful lines of a resource file: '#' starts a comment line,
// blank lines are skipped. Trailing CR is removed.
inline std::vector<std::pair<std::size_t, std::string>> content_lines(std::string_view body) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::size_t line_no = 0, start = 0;
  while (start < body.size()) {
    auto nl = body.find('\n', start);
    if (nl == std::string_view::npos) nl = body.size();
    std::string_view line = body.substr(start, nl - start);
    ++line_no;
    start = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (util::trim(line).empty()) continue;
    out.emplace_back(line_no, std::string(line));
  }
  return out;
}

}  // namespace resource_detail

// Surface form -> lemma. Keys are lowercase; every lemma is also a key that
// maps to itself, so lemmatizing a lemma is a no-op.
class Lexicon {
 public:
  Lexicon() = default;

  void add(std::string_view surface, std::string_view lemma) {
    entries_[text::lowercase(util::trim(surface))] = text::lowercase(util::trim(lemma));
  }

  // Resolves chains (a->b, b->c becomes a->c) and adds identity entries for
  // lemmas missing as keys.
  void finalize() {
    for (auto& [surface, lemma] : entries_) {
      for (int depth = 0; depth < 8; ++depth) {
        auto it = entries_.find(lemma);
        if (it == entries_.end() || it->second == lemma) break;
        lemma = it->second;
      }
    }
    std::vector<std::string> missing;
    for (const auto& [surface, lemma] : entries_)
      if (!entries_.count(lemma)) missing.push_back(lemma);
    for (auto& l : missing) entries_.emplace(l, l);
  }

  const std::string* lookup(std::string_view lowered) const {
    auto it = entries_.find(std::string(lowered));
    return it == entries_.end() ? nullptr : &it->second;
  }
  bool contains(std::string_view lowered) const { return lookup(lowered) != nullptr; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::string& provenance() const noexcept { return provenance_; }

  static Lexicon parse(std::string_view body, std::string provenance = {}) {
    Lexicon lex;
    lex.provenance_ = std::move(provenance);
    for (const auto& [line_no, line] : resource_detail::content_lines(body)) {
      auto tab = line.find('\t');
      if (tab == std::string::npos || util::trim(line.substr(0, tab)).empty() ||
          util::trim(line.substr(tab + 1)).empty())
        throw Error(ErrorKind::MalformedRecord, "expected 'surface<TAB>lemma'", line_no, lex.provenance_);
      lex.add(line.substr(0, tab), line.substr(tab + 1));
    }
    lex.finalize();
    return lex;
  }

  static Lexicon load(const std::string& path) { return parse(util::read_file(path), path); }

 private:
  std::unordered_map<std::string, std::string> entries_;
  std::string provenance_;
};

class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(std::initializer_list<std::string_view> words) {
    for (auto w : words) words_.insert(text::lowercase(w));
  }

  bool contains(std::string_view lemma) const { return words_.count(std::string(lemma)) > 0; }
  std::size_t size() const noexcept { return words_.size(); }

  static StopwordList parse(std::string_view body, const std::string& provenance = {}) {
    StopwordList list;
    for (const auto& [line_no, line] : resource_detail::content_lines(body))
      list.words_.insert(text::lowercase(util::trim(line)));
    if (list.words_.empty())
      throw Error(ErrorKind::MalformedRecord, "stopword list is empty", std::nullopt, provenance);
    return list;
  }

  static StopwordList load(const std::string& path) { return parse(util::read_file(path), path); }

 private:
  std::unordered_set<std::string> words_;
};

// Literal emoticons plus the generic sideways face: eyes [:;=8], optional
// nose [-'], one mouth character from [)(DPpc$b3<]. Matching is exact and
// case-sensitive.
class EmoticonTable {
 public:
  EmoticonTable() = default;
  explicit EmoticonTable(std::initializer_list<std::string_view> literals) {
    for (auto l : literals) literals_.emplace(l);
  }

  bool matches(std::string_view s) const {
    return literals_.count(std::string(s)) > 0 || generic_face(s);
  }

  static bool generic_face(std::string_view s) {
    auto eyes = [](char c) { return c == ':' || c == ';' || c == '=' || c == '8'; };
    auto nose = [](char c) { return c == '-' || c == '\''; };
    auto mouth = [](char c) { return std::string_view(")(DPpc$b3<").find(c) != std::string_view::npos; };
    if (s.size() == 2) return eyes(s[0]) && mouth(s[1]);
    if (s.size() == 3) return eyes(s[0]) && nose(s[1]) && mouth(s[2]);
    return false;
  }

  std::size_t literal_count() const noexcept { return literals_.size(); }

  static EmoticonTable builtin() {
    return EmoticonTable{"<3", "</3", "XD", "xD", "XDD", "xDD", "^^", "^_^", "^.^", "-_-", "T_T", ":')",
                         ":'(", "D:", ":*", ";*", ":/", ":|", ":o", ":O", "o.O", "O.o", ":-/",
                         ":-*", ":-|", ":-o", ":-O"};
  }

  static EmoticonTable parse(std::string_view body) {
    EmoticonTable t;
    for (const auto& [line_no, line] : resource_detail::content_lines(body)) t.literals_.emplace(util::trim(line));
    return t;
  }

  static EmoticonTable load(const std::string& path) { return parse(util::read_file(path)); }

 private:
  std::unordered_set<std::string> literals_;
};

// --- pipeline stages ----------------------------------------------------------

namespace preprocess_detail {

inline bool starts_with_icase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = s[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    if (c != prefix[i]) return false;
  }
  return true;
}

// scheme://... (scheme = letter followed by [a-z0-9+.-]*) or www.
inline bool is_url(std::string_view s) {
  if (starts_with_icase(s, "www.") && s.size() > 4) return true;
  auto sep = s.find("://");
  if (sep == std::string_view::npos || sep == 0 || sep + 3 >= s.size()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  if (!alpha(s[0])) return false;
  for (std::size_t i = 1; i < sep; ++i) {
    char c = s[i];
    if (!(alpha(c) || (c >= '0' && c <= '9') || c == '+' || c == '.' || c == '-')) return false;
  }
  return true;
}

// Digits, optionally grouped by single [.,:/] separators, e.g. 3,5 or 10:30.
inline bool is_numeric(std::string_view s) {
  if (s == kNumberLemma) return true;
  if (s.empty() || !(s.front() >= '0' && s.front() <= '9') || !(s.back() >= '0' && s.back() <= '9'))
    return false;
  bool prev_sep = false;
  for (char c : s) {
    bool digit = c >= '0' && c <= '9';
    bool sep = c == '.' || c == ',' || c == ':' || c == '/';
    if (!digit && !sep) return false;
    if (sep && prev_sep) return false;
    prev_sep = sep;
  }
  return true;
}

// Strips punctuation code points from both ends.
inline std::string strip_punct(std::string_view s) {
  auto cps = text::decode(s);
  std::size_t b = 0, e = cps.size();
  while (b < e && text::is_punct(cps[b])) ++b;
  while (e > b && text::is_punct(cps[e - 1])) --e;
  return text::encode(std::vector<char32_t>(cps.begin() + static_cast<std::ptrdiff_t>(b),
                                            cps.begin() + static_cast<std::ptrdiff_t>(e)));
}

inline std::string strip_url_edges(std::string_view s) {
  const std::string_view lead = "([{\"'<";
  const std::string_view trail = ".,;:!?)]}\"'>";
  std::size_t b = 0, e = s.size();
  while (b < e && lead.find(s[b]) != std::string_view::npos) ++b;
  while (e > b && trail.find(s[e - 1]) != std::string_view::npos) --e;
  return std::string(s.substr(b, e - b));
}

// Drops "¡", "¿" in front and [.,!?] behind, which never belong to a face.
inline std::string_view strip_sentence_punct(std::string_view s) {
  while (true) {
    if (s.rfind("¡", 0) == 0 || s.rfind("¿", 0) == 0)
      s.remove_prefix(2);
    else
      break;
  }
  while (!s.empty() && std::string_view(".,!?").find(s.back()) != std::string_view::npos) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> chunks;
  std::size_t i = 0, start = 0;
  bool in_chunk = false;
  while (i < s.size()) {
    std::size_t at = i;
    char32_t cp = text::next_code_point(s, i);
    if (text::is_space(cp)) {
      if (in_chunk) chunks.push_back(s.substr(start, at - start));
      in_chunk = false;
    } else if (!in_chunk) {
      in_chunk = true;
      start = at;
    }
  }
  if (in_chunk) chunks.push_back(s.substr(start));
  return chunks;
}

inline void push_word(std::vector<std::string>& out, std::string_view raw) {
  auto core = strip_punct(raw);
  if (!core.empty()) out.push_back(text::lowercase(core));
}

}  // namespace preprocess_detail

// Splits on whitespace. URL and emoticon chunks are detected first and kept
// verbatim; other chunks lose leading/trailing punctuation and are lowercased.
// An emoticon glued to the end of a word ("genial:)") becomes its own token.
inline std::vector<std::string> tokenize(std::string_view message, const EmoticonTable& emoticons) {
  using namespace preprocess_detail;
  std::vector<std::string> out;
  for (auto chunk : split_whitespace(message)) {
    if (chunk == kNumberLemma || emoticons.matches(chunk)) {
      out.emplace_back(chunk);
      continue;
    }
    if (auto url = strip_url_edges(chunk); is_url(url)) {
      out.push_back(std::move(url));
      continue;
    }
    if (auto face = strip_sentence_punct(chunk); face.size() != chunk.size() && emoticons.matches(face)) {
      out.emplace_back(face);
      continue;
    }
    bool split = false;
    for (std::size_t len = std::min<std::size_t>(chunk.size() - 1, 5); len >= 2; --len) {
      auto tail = chunk.substr(chunk.size() - len);
      if ((tail[0] != ':' && tail[0] != ';') || !emoticons.matches(tail)) continue;
      auto head = chunk.substr(0, chunk.size() - len);
      if (head.empty() || (head.back() >= '0' && head.back() <= '9')) continue;
      auto before = out.size();
      push_word(out, head);
      if (out.size() == before) continue;
      out.emplace_back(tail);
      split = true;
      break;
    }
    if (!split) push_word(out, chunk);
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view message) {
  static const EmoticonTable table = EmoticonTable::builtin();
  return tokenize(message, table);
}

// Classifies one surface and assigns its lemma. Words get vowel-run repair:
// runs of three or more identical vowels always collapse; runs of exactly two
// collapse only when the word is still unknown to the lexicon.
inline Token normalize_token(std::string_view surface, const Lexicon& lex, const EmoticonTable& emoticons) {
  using namespace preprocess_detail;
  Token t;
  t.surface = std::string(surface);
  if (is_url(surface)) {
    t.kind = TokenKind::Url;
    t.lemma = std::string(kUrlLemma);
  } else if (emoticons.matches(surface)) {
    t.kind = TokenKind::Emoticon;
    t.lemma = t.surface;
  } else if (is_numeric(surface)) {
    t.kind = TokenKind::Number;
    t.lemma = std::string(kNumberLemma);
  } else {
    t.kind = TokenKind::Word;
    auto repaired = text::collapse_vowel_runs(text::lowercase(surface), 3);
    if (!lex.contains(repaired)) {
      auto shorter = text::collapse_vowel_runs(repaired, 2);
      if (shorter != repaired) repaired = std::move(shorter);
    }
    const std::string* lemma = lex.lookup(repaired);
    t.lemma = lemma ? *lemma : repaired;
  }
  return t;
}

inline Token normalize_token(std::string_view surface, const Lexicon& lex) {
  static const EmoticonTable table = EmoticonTable::builtin();
  return normalize_token(surface, lex, table);
}

// Word tokens whose lemma is a stopword are dropped; emoticons, URLs and
// numbers always survive.
inline std::vector<Token> lemmatize_and_filter(std::vector<Token> tokens, const StopwordList& stop) {
  std::vector<Token> kept;
  kept.reserve(tokens.size());
  for (auto& t : tokens) {
    if (t.kind == TokenKind::Word && stop.contains(t.lemma)) {
      t.stopword = true;
      continue;
    }
    kept.push_back(std::move(t));
  }
  return kept;
}

struct Resources {
  Lexicon lexicon;
  StopwordList stopwords;
  EmoticonTable emoticons = EmoticonTable::builtin();

  // Loads lexicon.tsv, stopwords.txt and emoticons.txt from one directory.
  static Resources load(const std::string& dir) {
    return load(dir + "/lexicon.tsv", dir + "/stopwords.txt", dir + "/emoticons.txt");
  }
  static Resources load(const std::string& lexicon, const std::string& stopwords,
                        const std::string& emoticons) {
    return Resources{Lexicon::load(lexicon), StopwordList::load(stopwords), EmoticonTable::load(emoticons)};
  }
};

inline std::vector<Token> analyze(std::string_view message, const Resources& res) {
  std::vector<Token> tokens;
  for (const auto& surface : tokenize(message, res.emoticons))
    tokens.push_back(normalize_token(surface, res.lexicon, res.emoticons));
  return lemmatize_and_filter(std::move(tokens), res.stopwords);
}

inline TokenStream preprocess(std::string_view message, const Resources& res) {
  TokenStream lemmas;
  for (auto& t : analyze(message, res)) lemmas.push_back(std::move(t.lemma));
  return lemmas;
}

inline TokenStream preprocess(std::string_view message, const Lexicon& lex, const StopwordList& stop) {
  static const EmoticonTable table = EmoticonTable::builtin();
  TokenStream lemmas;
  for (const auto& surface : tokenize(message, table)) {
    auto kept = lemmatize_and_filter({normalize_token(surface, lex, table)}, stop);
    for (auto& t : kept) lemmas.push_back(std::move(t.lemma));
  }
  return lemmas;
}

}  // namespace discourse

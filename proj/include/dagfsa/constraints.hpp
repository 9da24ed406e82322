// Copyright (c) 2026 The dagfsa Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cctype>
#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dagfsa/common.hpp"
#include "dagfsa/token_table.hpp"
#include "dagfsa/wfsa.hpp"

namespace dagfsa {

// ---------------------------------------------------------------------------
// KMP matching over token sequences.

// Streaming matcher for one phrase. States 0..m count the matched prefix;
// m (complete) is absorbing.
class KmpMatcher {
 public:
  explicit KmpMatcher(std::vector<TokenId> phrase) : phrase_(std::move(phrase)) {
    if (phrase_.empty()) throw std::invalid_argument("KmpMatcher: empty phrase");
    failure_.assign(phrase_.size(), 0);
    int k = 0;
    for (std::size_t i = 1; i < phrase_.size(); ++i) {
      while (k > 0 && phrase_[i] != phrase_[static_cast<std::size_t>(k)]) {
        k = failure_[static_cast<std::size_t>(k) - 1];
      }
      if (phrase_[i] == phrase_[static_cast<std::size_t>(k)]) ++k;
      failure_[i] = k;
    }
  }

  int length() const { return static_cast<int>(phrase_.size()); }
  std::span<const TokenId> phrase() const { return phrase_; }
  bool complete(int state) const { return state == length(); }

  int advance(int state, TokenId token) const {
    if (state < 0 || state > length()) throw std::out_of_range("KmpMatcher: bad state");
    if (state == length()) return state;
    while (state > 0 && phrase_[static_cast<std::size_t>(state)] != token) {
      state = failure_[static_cast<std::size_t>(state) - 1];
    }
    if (phrase_[static_cast<std::size_t>(state)] == token) ++state;
    return state;
  }

  int run(std::span<const TokenId> tokens, int state = 0) const {
    for (TokenId t : tokens) state = advance(state, t);
    return state;
  }

 private:
  std::vector<TokenId> phrase_;
  std::vector<int> failure_;
};

inline int kmp_advance(int state, TokenId token, const ConstraintPhrase& phrase) {
  return KmpMatcher(phrase.tokens).advance(state, token);
}

/// Acceptor for ".*(phrase).*": the KMP automaton of the phrase with Sigma
/// arcs back to the start for tokens that break a partial match, and a
/// Sigma self-loop on the accepting state. Deterministic under the
/// "Sigma = any token without an explicit arc" reading.
inline Wfsa build_hlc_fsa(const ConstraintPhrase& phrase) {
  if (phrase.tokens.empty()) throw std::invalid_argument("build_hlc_fsa: empty phrase");
  KmpMatcher kmp(phrase.tokens);
  const int m = kmp.length();
  std::set<TokenId> alphabet(phrase.tokens.begin(), phrase.tokens.end());
  Wfsa w;
  w.add_states(m + 1);
  w.set_start(0);
  for (int j = 0; j < m; ++j) {
    for (TokenId c : alphabet) {
      int next = kmp.advance(j, c);
      if (next != 0) w.add_arc(j, c, 0.0, next);
    }
    w.add_arc(j, kSigma, 0.0, 0);
  }
  w.add_arc(m, kSigma, 0.0, m);
  w.set_final(m);
  return w;
}

// ---------------------------------------------------------------------------
// Tokenization against a token table.

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

}  // namespace detail

/// Greedy longest-match segmentation. Each whitespace-separated word is
/// prefixed with the start-of-word mark before matching, so a word's first
/// piece carries the mark ("photosynthesis" -> "_photo", "synthesis").
inline ConstraintPhrase tokenize_phrase(std::string_view surface, const TokenTable& table) {
  ConstraintPhrase phrase;
  phrase.surface = std::string(surface);
  for (const auto& word : detail::split_words(surface)) {
    const std::string text = table.sow_mark() + word;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t len = std::min(table.max_surface_bytes(), text.size() - pos);
      std::optional<TokenId> hit;
      for (; len > 0; --len) {
        if ((hit = table.find(std::string_view(text).substr(pos, len)))) break;
      }
      if (!hit) {
        throw ParseError("tokenize: cannot segment '" + text.substr(pos) + "' in word '" + word + "'");
      }
      phrase.tokens.push_back(*hit);
      pos += len;
    }
  }
  if (phrase.tokens.empty()) throw ParseError("tokenize: empty phrase");
  return phrase;
}

// ---------------------------------------------------------------------------
// Lexicon extraction.

namespace detail {

inline bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

inline std::string strip_punct(std::string_view word) {
  std::size_t b = 0, e = word.size();
  while (b < e && is_ascii_punct(word[b])) ++b;
  while (e > b && is_ascii_punct(word[e - 1])) --e;
  return std::string(word.substr(b, e - b));
}

inline bool has_digit(std::string_view word) {
  return std::any_of(word.begin(), word.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace detail

/// Space-delimited unigrams with surrounding punctuation stripped and
/// digit-bearing words dropped, case preserved, sorted by descending
/// frequency (ties lexicographic), cut at the shortest prefix whose
/// frequency mass reaches `cumulative_cutoff`.
inline std::vector<std::string> extract_lexicon(std::span<const std::string> corpus, double cumulative_cutoff) {
  if (!(cumulative_cutoff > 0.0 && cumulative_cutoff <= 1.0)) {
    throw std::invalid_argument("extract_lexicon: cutoff must be in (0, 1]");
  }
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& line : corpus) {
    for (const auto& raw : detail::split_words(line)) {
      auto w = detail::strip_punct(raw);
      if (w.empty() || detail::has_digit(w)) continue;
      ++counts[w];
      ++total;
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> lexicon;
  std::size_t mass = 0;
  for (auto& [word, count] : ranked) {
    lexicon.push_back(word);
    mass += count;
    if (static_cast<double>(mass) >= cumulative_cutoff * static_cast<double>(total)) break;
  }
  return lexicon;
}

inline std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline void write_lines(std::ostream& out, std::span<const std::string> lines) {
  for (const auto& l : lines) out << l << '\n';
}

// ---------------------------------------------------------------------------
// Vocabulary automaton: (dictionary | specials | dynamic entities)*.

inline constexpr std::string_view kDefaultPunctuation = "$&'()*+,-./:;=>?@[]_";

/// Default special tokens present in `table`: single punctuation marks,
/// sos, eos and the bare start-of-word mark.
inline std::vector<std::string> default_specials(const TokenTable& table) {
  std::vector<std::string> specials;
  for (char c : kDefaultPunctuation) {
    std::string s(1, c);
    if (table.find(s)) specials.push_back(s);
  }
  specials.push_back(table.surface(table.sos()));
  specials.push_back(table.surface(table.eos()));
  if (table.find(table.sow_mark())) specials.push_back(table.sow_mark());
  return specials;
}

struct LexiconProvenance {
  std::size_t dictionary_words = 0;
  std::size_t special_tokens = 0;
  std::size_t dynamic_entities = 0;
};

// det_min(dictionary | specials), shared read-only between decodes.
struct StaticLexicon {
  Wfsa automaton;
  LexiconProvenance provenance;
  std::uint64_t hash = 0;
};

struct LexiconFsa {
  Wfsa automaton;
  LexiconProvenance provenance;
};

namespace detail {

// Inserts `seq` into the trie rooted at `root`, reusing existing arcs.
inline void trie_insert(Wfsa& trie, StateId root, std::span<const TokenId> seq) {
  StateId s = root;
  for (TokenId t : seq) {
    StateId next = kNoState;
    for (const auto& a : trie.arcs(s)) {
      if (a.label == t) {
        next = a.next;
        break;
      }
    }
    if (next == kNoState) {
      next = trie.add_state();
      trie.add_arc(s, t, 0.0, next);
    }
    s = next;
  }
  trie.set_final(s);
}

inline bool is_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline std::vector<TokenId> resolve_special(const std::string& special, const TokenTable& table) {
  if (auto id = table.find(special)) return {*id};
  return tokenize_phrase(special, table).tokens;
}

}  // namespace detail

inline std::uint64_t lexicon_hash(std::span<const std::string> dictionary, std::span<const std::string> specials,
                                  const TokenTable& table) {
  Fnv1a h;
  h.update_field(table.sow_mark());
  for (std::size_t i = 0; i < table.size(); ++i) h.update_field(table.surface(static_cast<TokenId>(i)));
  h.update("|dict|");
  for (const auto& w : dictionary) h.update_field(w);
  h.update("|special|");
  for (const auto& s : specials) h.update_field(s);
  return h.digest();
}

/// Builds det_min(A_dict | A_special). Numbers are accepted by A_special as a
/// word-initial digit token followed by any run of continuation digit tokens.
inline StaticLexicon build_static_lexicon(std::span<const std::string> dictionary,
                                          std::span<const std::string> specials, const TokenTable& table) {
  Wfsa trie;
  StateId root = trie.add_state();
  trie.set_start(root);
  for (const auto& word : dictionary) detail::trie_insert(trie, root, tokenize_phrase(word, table).tokens);
  for (const auto& s : specials) detail::trie_insert(trie, root, detail::resolve_special(s, table));

  std::vector<TokenId> word_digits, cont_digits;
  const auto& mark = table.sow_mark();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& s = table.surface(static_cast<TokenId>(i));
    if (s.compare(0, mark.size(), mark) == 0 && detail::is_digits(std::string_view(s).substr(mark.size()))) {
      word_digits.push_back(static_cast<TokenId>(i));
    } else if (detail::is_digits(s)) {
      cont_digits.push_back(static_cast<TokenId>(i));
    }
  }
  if (!word_digits.empty()) {
    StateId number = trie.add_state();
    trie.set_final(number);
    for (TokenId t : word_digits) trie.add_arc(root, t, 0.0, number);
    for (TokenId t : cont_digits) trie.add_arc(number, t, 0.0, number);
  }

  StaticLexicon lex;
  lex.automaton = determinize_min(trie);
  lex.provenance.dictionary_words = dictionary.size();
  lex.provenance.special_tokens = specials.size();
  lex.hash = lexicon_hash(dictionary, specials, table);
  return lex;
}

/// Memoizes static lexicons by content hash. Thread-safe.
class StaticLexiconCache {
 public:
  std::shared_ptr<const StaticLexicon> get(std::span<const std::string> dictionary,
                                           std::span<const std::string> specials, const TokenTable& table) {
    const auto key = lexicon_hash(dictionary, specials, table);
    {
      std::lock_guard lock(mu_);
      if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    auto built = std::make_shared<const StaticLexicon>(build_static_lexicon(dictionary, specials, table));
    std::lock_guard lock(mu_);
    ++builds_;
    return entries_.try_emplace(key, std::move(built)).first->second;
  }

  std::size_t builds() const {
    std::lock_guard lock(mu_);
    return builds_;
  }

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::uint64_t, std::shared_ptr<const StaticLexicon>> entries_;
  std::size_t builds_ = 0;
};

inline StaticLexiconCache& default_lexicon_cache() {
  static StaticLexiconCache cache;
  return cache;
}

/// A_vocab = (static | A_dyn)*, with A_dyn rebuilt for this input.
inline LexiconFsa build_vocab_fsa(const StaticLexicon& static_part, std::span<const std::string> dynamic_entities,
                                  const TokenTable& table) {
  Wfsa dyn;
  StateId root = dyn.add_state();
  dyn.set_start(root);
  for (const auto& entity : dynamic_entities) detail::trie_insert(dyn, root, tokenize_phrase(entity, table).tokens);
  LexiconFsa out;
  out.automaton = closure(dynamic_entities.empty() ? static_part.automaton : union_of(static_part.automaton, dyn));
  out.provenance = static_part.provenance;
  out.provenance.dynamic_entities = dynamic_entities.size();
  return out;
}

inline LexiconFsa build_vocab_fsa(std::span<const std::string> dictionary, std::span<const std::string> specials,
                                  std::span<const std::string> dynamic_entities, const TokenTable& table,
                                  StaticLexiconCache& cache = default_lexicon_cache()) {
  return build_vocab_fsa(*cache.get(dictionary, specials, table), dynamic_entities, table);
}

// Cache file: "#hash <hex>" and "#provenance <dict> <specials>" headers followed
// by the automaton dump.
inline void save_static_lexicon(std::ostream& out, const StaticLexicon& lex) {
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(lex.hash));
  out << "#hash " << hex << '\n';
  out << "#provenance " << lex.provenance.dictionary_words << ' ' << lex.provenance.special_tokens << '\n';
  dump_wfsa(out, lex.automaton);
}

/// Returns nullopt when the stored hash does not match `expected_hash`.
inline std::optional<StaticLexicon> load_static_lexicon(std::istream& in, std::uint64_t expected_hash) {
  std::string line;
  StaticLexicon lex;
  if (!std::getline(in, line) || line.rfind("#hash ", 0) != 0) throw ParseError("lexicon cache: missing #hash header");
  lex.hash = std::stoull(line.substr(6), nullptr, 16);
  if (lex.hash != expected_hash) return std::nullopt;
  if (!std::getline(in, line) || line.rfind("#provenance ", 0) != 0) {
    throw ParseError("lexicon cache: missing #provenance header");
  }
  std::istringstream prov(line.substr(12));
  prov >> lex.provenance.dictionary_words >> lex.provenance.special_tokens;
  lex.automaton = parse_wfsa_dump(in);
  return lex;
}

}  // namespace dagfsa

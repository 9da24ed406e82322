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

// Toy token table and lattices with planted paths. A planted path is a
// start-to-final vertex chain whose tokens survive top-3 pruning: the first
// token of each planted phrase ranks second at its vertex, later phrase
// tokens rank last (they survive only through forced emission), and each
// planted transition ranks first or second.

#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "dagfsa/constraints.hpp"
#include "dagfsa/dag.hpp"
#include "dagfsa/token_table.hpp"
#include "support/oracles.hpp"

namespace dagfsa::fixtures {

inline const std::string kMark(kDefaultSowMark);

inline std::vector<std::string> toy_surfaces() {
  const std::string m = kMark;
  return {"<s>",       "</s>",    m,          ".",       ",",          "-",         m + "the", m + "cat",
          m + "sat",   m + "on",  m + "mat",  m + "a",   m + "dog",    m + "is",    m + "big", m + "new",
          m + "york",  m + "city", m + "hong", m + "kong", m + "photo", "synthesis", m + "zor", "blat",
          m + "cambr", "ige",     "s",        "ing",     m + "1",      m + "5",     "2",       "0",
          m + "c",     "at"};
}

inline TokenTable toy_table() { return TokenTable(toy_surfaces(), kMark, 1, 0); }

inline TokenId tok(const std::string& surface) {
  static const TokenTable table = toy_table();
  auto id = table.find(surface);
  if (!id) throw std::invalid_argument("toy table has no '" + surface + "'");
  return *id;
}

// Dictionary words whose tokenization is a single marked token.
inline std::vector<std::string> single_token_words() {
  return {"the", "cat", "sat", "on", "mat", "a", "dog", "is", "big", "new", "york", "city"};
}

inline std::vector<std::string> oov_pieces() { return {kMark + "zor", "blat", kMark + "cambr", "ige", "s", "ing"}; }

struct Planted {
  Dag dag{std::vector<Vertex>{Vertex{{{0, 0.0}}, {{1, 0.0}}}, Vertex{{{0, 0.0}}, {}}}};
  std::vector<std::string> phrase_surfaces;
  std::vector<ConstraintPhrase> phrases;
  std::vector<std::string> entities;
  std::vector<std::string> dictionary;  // lexicon for this fixture
  std::vector<TokenId> planted_tokens;   // tokens along the planted path
  int planted_length = 0;                // arcs on the planted path
};

struct PlantOptions {
  int min_phrases = 1;
  int max_phrases = 3;
  bool vocab_safe = false;  // every vertex offers an in-lexicon token within its top 3
  bool plant_oov = false;   // make an out-of-lexicon word the likely path
  bool allow_entities = true;
};

namespace detail {

inline std::vector<double> sorted_probs(std::mt19937_64& rng, std::size_t k, double top = 0.0) {
  auto p = oracle::random_simplex(rng, k);
  std::sort(p.rbegin(), p.rend());
  if (top > 0.0 && k > 1) {
    double rest = 0.0;
    for (std::size_t i = 1; i < k; ++i) rest += p[i];
    for (std::size_t i = 1; i < k; ++i) p[i] = p[i] / rest * (1.0 - top);
    p[0] = top;
  } else if (k == 1) {
    p[0] = 1.0;
  }
  return p;
}

inline void place(std::vector<TokenId>& ranked, TokenId t, std::size_t pos) {
  ranked.erase(std::remove(ranked.begin(), ranked.end(), t), ranked.end());
  pos = std::min(pos, ranked.size());
  ranked.insert(ranked.begin() + static_cast<std::ptrdiff_t>(pos), t);
}

}  // namespace detail

/// Builds a lattice with a planted path that carries every phrase
/// contiguously, separated by filler tokens.
inline Planted make_planted(std::uint64_t seed, const PlantOptions& opt) {
  std::mt19937_64 rng(seed);
  const TokenTable table = toy_table();
  Planted f;
  auto coin = [&](double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; };
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  // Lexicon: a random subset of the single-token words (at least 6) plus
  // "photosynthesis".
  auto words = single_token_words();
  std::shuffle(words.begin(), words.end(), rng);
  words.resize(static_cast<std::size_t>(pick(6, static_cast<int>(words.size()))));
  f.dictionary = words;
  f.dictionary.push_back("photosynthesis");
  std::sort(f.dictionary.begin(), f.dictionary.end());
  std::vector<TokenId> safe;
  for (const auto& w : words) safe.push_back(tok(kMark + w));

  // Phrases: one or two lexicon words, "photosynthesis", or the entity
  // "hong kong".
  const int np = pick(opt.min_phrases, opt.max_phrases);
  for (int i = 0; i < np; ++i) {
    std::string surface;
    const int kind = pick(0, opt.allow_entities ? 3 : 2);
    if (kind == 0) {
      surface = words[static_cast<std::size_t>(pick(0, static_cast<int>(words.size()) - 1))];
    } else if (kind == 1) {
      surface = words[static_cast<std::size_t>(pick(0, static_cast<int>(words.size()) - 1))] + " " +
                words[static_cast<std::size_t>(pick(0, static_cast<int>(words.size()) - 1))];
    } else if (kind == 2) {
      surface = "photosynthesis";
    } else {
      surface = "hong kong";
      if (f.entities.empty()) f.entities.push_back(surface);
    }
    f.phrase_surfaces.push_back(surface);
    f.phrases.push_back(tokenize_phrase(surface, table));
  }

  // Planted token sequence with role per position: 0 filler, 1 phrase
  // start, 2 phrase continuation, 3 planted OOV.
  std::vector<std::pair<TokenId, int>> seq;
  auto filler = [&] { return safe[static_cast<std::size_t>(pick(0, static_cast<int>(safe.size()) - 1))]; };
  for (int k = pick(0, 2); k > 0; --k) seq.push_back({filler(), 0});
  if (opt.plant_oov) {
    if (coin(0.5)) {
      seq.push_back({tok(kMark + "zor"), 3});
      seq.push_back({tok("blat"), 3});
    } else {
      seq.push_back({tok(kMark + "cambr"), 3});
      seq.push_back({tok("ige"), 3});
    }
    for (int k = pick(1, 2); k > 0; --k) seq.push_back({filler(), 0});
  }
  for (const auto& p : f.phrases) {
    for (std::size_t j = 0; j < p.tokens.size(); ++j) seq.push_back({p.tokens[j], j == 0 ? 1 : 2});
    for (int k = pick(1, 2); k > 0; --k) seq.push_back({filler(), 0});
  }
  f.planted_length = static_cast<int>(seq.size());
  for (auto& s : seq) f.planted_tokens.push_back(s.first);

  // Vertex chain: steps of 1 or 2.
  std::vector<VertexId> chain{0};
  for (std::size_t i = 0; i < seq.size(); ++i) chain.push_back(chain.back() + (coin(0.35) ? 2 : 1));
  const int n = chain.back() + 1;
  std::vector<int> role_at(static_cast<std::size_t>(n), -1);
  std::vector<TokenId> token_at(static_cast<std::size_t>(n), -1);
  std::vector<VertexId> next_at(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto u = static_cast<std::size_t>(chain[i]);
    token_at[u] = seq[i].first;
    role_at[u] = seq[i].second;
    next_at[u] = chain[i + 1];
  }

  std::vector<TokenId> pool;
  for (TokenId t = 2; t < static_cast<TokenId>(table.size()); ++t) {
    if (t != tok(kMark) && t != tok(kMark + "photo") && t != tok("synthesis")) pool.push_back(t);
  }

  std::vector<Vertex> vs(static_cast<std::size_t>(n));
  for (VertexId u = 0; u < n; ++u) {
    const auto ui = static_cast<std::size_t>(u);
    auto& vx = vs[ui];
    std::vector<TokenId> ranked = pool;
    std::shuffle(ranked.begin(), ranked.end(), rng);
    ranked.resize(static_cast<std::size_t>(pick(3, 5)));
    const int role = role_at[ui];
    double top = 0.0;
    if (role == 0) {
      detail::place(ranked, token_at[ui], opt.plant_oov ? 0 : static_cast<std::size_t>(pick(0, 2)));
      if (opt.plant_oov) top = 0.6;
    } else if (role == 1) {
      detail::place(ranked, token_at[ui], 1);
    } else if (role == 2) {
      // Pushed below the top 3 so only forced emission keeps it.
      while (ranked.size() < 4) {
        TokenId extra = pool[static_cast<std::size_t>(pick(0, static_cast<int>(pool.size()) - 1))];
        if (std::find(ranked.begin(), ranked.end(), extra) == ranked.end()) ranked.push_back(extra);
      }
      detail::place(ranked, token_at[ui], ranked.size());
    } else if (role == 3) {
      detail::place(ranked, token_at[ui], 0);
      top = 0.75;
    }
    if (opt.vocab_safe) {
      bool ok = std::any_of(ranked.begin(), ranked.begin() + 3,
                            [&](TokenId t) { return std::find(safe.begin(), safe.end(), t) != safe.end(); });
      if (!ok) detail::place(ranked, filler(), 2);
    }
    auto pe = detail::sorted_probs(rng, ranked.size(), top);
    for (std::size_t i = 0; i < ranked.size(); ++i) vx.emissions.push_back({ranked[i], std::log(pe[i])});

    if (u == n - 1) continue;
    std::vector<VertexId> targets;
    for (VertexId v = u + 1; v <= std::min(n - 1, u + 4); ++v) targets.push_back(v);
    std::shuffle(targets.begin(), targets.end(), rng);
    targets.resize(std::min<std::size_t>(targets.size(), static_cast<std::size_t>(pick(1, 3))));
    double ttop = 0.0;
    if (next_at[ui] >= 0) {
      targets.erase(std::remove(targets.begin(), targets.end(), next_at[ui]), targets.end());
      const bool first = opt.plant_oov || coin(0.5);
      targets.insert(targets.begin() + (first || targets.empty() ? 0 : 1), next_at[ui]);
      if (opt.plant_oov) ttop = 0.7;
    }
    auto pt = detail::sorted_probs(rng, targets.size(), ttop);
    for (std::size_t i = 0; i < targets.size(); ++i) vx.transitions.push_back({targets[i], std::log(pt[i])});
  }
  f.dag = Dag(std::move(vs));
  return f;
}

}  // namespace dagfsa::fixtures

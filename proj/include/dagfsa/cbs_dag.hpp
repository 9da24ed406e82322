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

// Search directly over the lattice: greedy walk and constrained beam search
// with bank allocation. A hypothesis sitting at vertex u has emitted one
// token for each vertex it left; moving u -> v emits a token of u, the same
// convention as the lattice-to-automaton conversion.

#pragma once

#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "dagfsa/common.hpp"
#include "dagfsa/constraints.hpp"
#include "dagfsa/dag.hpp"
#include "dagfsa/decode_result.hpp"

namespace dagfsa {

/// Argmax token, then argmax transition, from the start until the final
/// vertex. Ties go to the smaller token id / target index.
inline DecodeResult greedy_decode(const Dag& dag) {
  DecodeResult r;
  double score = 0.0;
  for (VertexId u = dag.start_vertex(); u != dag.final_vertex();) {
    const auto& e = dag.emissions(u).front();
    const auto& t = dag.transitions(u).front();
    r.tokens.push_back(e.token);
    score += e.log_prob + t.log_prob;
    u = t.target;
  }
  r.cost = -score;
  r.adjusted_cost = r.cost;
  return r;
}

struct BeamItem {
  VertexId vertex = 0;
  double score = 0.0;  // cumulative log-probability
  std::vector<TokenId> tokens;
  std::vector<int> match_states;  // KMP state per constraint
  int met_tokens = 0;
};

inline int effective_beam_size(int base_beam, std::span<const ConstraintPhrase> constraints) {
  return std::max(base_beam, static_cast<int>(total_constraint_tokens(constraints)) + 1);
}

// Progress credited to a hypothesis: a completed phrase counts all of its
// tokens, an open one its current KMP state.
inline int met_constraint_tokens(std::span<const KmpMatcher> matchers, std::span<const int> states) {
  int met = 0;
  for (std::size_t i = 0; i < matchers.size(); ++i) met += states[i];
  return met;
}

struct CbsObserver {
  // Called with the retained beam after every expansion step (finished
  // hypotheses included).
  std::function<void(std::span<const BeamItem>)> on_step;
};

namespace detail {

// Better first: higher score, fewer unmet tokens, smaller token sequence,
// smaller vertex.
inline bool beam_before(const BeamItem& a, const BeamItem& b, int total) {
  if (a.score != b.score) return a.score > b.score;
  if (a.met_tokens != b.met_tokens) return total - a.met_tokens < total - b.met_tokens;
  if (a.tokens != b.tokens) return a.tokens < b.tokens;
  return a.vertex < b.vertex;
}

}  // namespace detail

/// Constrained beam search over a (pruned) lattice. Hypotheses advance one
/// transition per step. Candidate tokens at vertex u are the top-K emissions,
/// the next token of every partially matched phrase and the first token of
/// every unstarted phrase. Candidates are grouped into banks by unmet
/// constraint tokens; at most one survives per (vertex, bank), and the K
/// beam slots are dealt round-robin across banks, fewest unmet first, so
/// every non-empty bank keeps its best item. K = max(base_beam, T + 1) with
/// T the total constraint tokens. The answer is the best finished hypothesis
/// meeting all constraints, else the best finished one flagged unmet.
inline DecodeResult cbs_dag_decode(const Dag& dag, std::span<const ConstraintPhrase> constraints, int base_beam,
                                   const CbsObserver* observer = nullptr) {
  if (base_beam < 1) throw std::invalid_argument("cbs_dag_decode: beam must be >= 1");
  std::vector<KmpMatcher> matchers;
  for (const auto& c : constraints) matchers.emplace_back(c.tokens);
  const int total = static_cast<int>(total_constraint_tokens(constraints));
  const int beam_size = effective_beam_size(base_beam, constraints);

  std::vector<BeamItem> beam(1);
  beam[0].vertex = dag.start_vertex();
  beam[0].match_states.assign(matchers.size(), 0);
  std::vector<BeamItem> finished;
  if (dag.start_vertex() == dag.final_vertex()) finished.push_back(beam[0]);
  auto before = [total](const BeamItem& a, const BeamItem& b) { return detail::beam_before(a, b, total); };

  while (!beam.empty()) {
    // Best candidate per (vertex, unmet tokens).
    std::map<std::pair<VertexId, int>, BeamItem> best;
    for (const auto& item : beam) {
      const VertexId u = item.vertex;
      std::set<TokenId> wanted;
      auto em = dag.emissions(u);
      for (std::size_t i = 0; i < em.size() && i < static_cast<std::size_t>(beam_size); ++i) wanted.insert(em[i].token);
      for (std::size_t c = 0; c < matchers.size(); ++c) {
        const int st = item.match_states[c];
        if (!matchers[c].complete(st)) wanted.insert(matchers[c].phrase()[static_cast<std::size_t>(st)]);
      }
      for (TokenId t : wanted) {
        auto lp = dag.emission_log_prob(u, t);
        if (!lp) continue;
        std::vector<int> states(item.match_states);
        for (std::size_t c = 0; c < matchers.size(); ++c) states[c] = matchers[c].advance(states[c], t);
        const int met = met_constraint_tokens(matchers, states);
        for (const auto& tr : dag.transitions(u)) {
          BeamItem cand;
          cand.vertex = tr.target;
          cand.score = item.score + *lp + tr.log_prob;
          cand.tokens = item.tokens;
          cand.tokens.push_back(t);
          cand.match_states = states;
          cand.met_tokens = met;
          auto key = std::make_pair(cand.vertex, total - met);
          auto it = best.find(key);
          if (it == best.end()) {
            best.emplace(key, std::move(cand));
          } else if (before(cand, it->second)) {
            it->second = std::move(cand);
          }
        }
      }
    }

    // Bank allocation.
    std::map<int, std::vector<BeamItem>> banks;
    for (auto& [key, item] : best) banks[key.second].push_back(std::move(item));
    for (auto& [unmet, items] : banks) std::sort(items.begin(), items.end(), before);
    std::vector<BeamItem> retained;
    for (std::size_t round = 0; static_cast<int>(retained.size()) < beam_size; ++round) {
      bool any = false;
      for (auto& [unmet, items] : banks) {
        if (round < items.size() && static_cast<int>(retained.size()) < beam_size) {
          retained.push_back(std::move(items[round]));
          any = true;
        }
      }
      if (!any) break;
    }
    std::sort(retained.begin(), retained.end(), before);
    if (observer && observer->on_step) observer->on_step(retained);

    beam.clear();
    for (auto& item : retained) {
      if (item.vertex == dag.final_vertex()) {
        finished.push_back(std::move(item));
      } else {
        beam.push_back(std::move(item));
      }
    }
  }

  DecodeResult r;
  const BeamItem* pick = nullptr;
  for (const auto& f : finished) {
    if (f.met_tokens != total) continue;
    if (!pick || before(f, *pick)) pick = &f;
  }
  r.status = DecodeStatus::kOk;
  if (!pick) {
    for (const auto& f : finished) {
      if (!pick || before(f, *pick)) pick = &f;
    }
    r.status = total > 0 ? DecodeStatus::kConstraintsUnmet : DecodeStatus::kOk;
  }
  if (pick) {
    r.tokens = pick->tokens;
    r.cost = -pick->score;
    r.adjusted_cost = r.cost;
  }
  r.constraints_satisfied = phrase_flags(r.tokens, constraints);
  return r;
}

}  // namespace dagfsa

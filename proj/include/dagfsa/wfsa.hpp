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

// Weighted acceptors over the tropical semiring (min, +). Costs are negative
// log-likelihoods; kInfinity is the semiring zero and 0 the semiring one.

#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dagfsa/common.hpp"
#include "dagfsa/dag.hpp"

namespace dagfsa {

struct Arc {
  Label label;
  double cost;
  StateId next;
  friend bool operator==(const Arc&, const Arc&) = default;
};

class Wfsa {
 public:
  StateId add_state() {
    arcs_.emplace_back();
    final_.push_back(kInfinity);
    return static_cast<StateId>(arcs_.size() - 1);
  }

  void add_states(int count) {
    for (int i = 0; i < count; ++i) add_state();
  }

  void set_start(StateId s) {
    check_state(s);
    start_ = s;
  }

  void set_final(StateId s, double cost = 0.0) {
    check_state(s);
    final_[static_cast<std::size_t>(s)] = cost;
  }

  void add_arc(StateId src, Label label, double cost, StateId next) {
    check_state(src);
    check_state(next);
    arcs_[static_cast<std::size_t>(src)].push_back({label, cost, next});
  }

  StateId start() const { return start_; }
  int num_states() const { return static_cast<int>(arcs_.size()); }
  bool empty() const { return start_ == kNoState; }

  std::size_t num_arcs() const {
    std::size_t n = 0;
    for (const auto& a : arcs_) n += a.size();
    return n;
  }

  std::span<const Arc> arcs(StateId s) const { return arcs_[static_cast<std::size_t>(s)]; }
  std::vector<Arc>& mutable_arcs(StateId s) { return arcs_[static_cast<std::size_t>(s)]; }

  bool is_final(StateId s) const { return final_[static_cast<std::size_t>(s)] != kInfinity; }
  double final_cost(StateId s) const { return final_[static_cast<std::size_t>(s)]; }

  bool has_label(Label label) const {
    for (const auto& v : arcs_) {
      for (const auto& a : v) {
        if (a.label == label) return true;
      }
    }
    return false;
  }

  friend bool operator==(const Wfsa&, const Wfsa&) = default;

 private:
  void check_state(StateId s) const {
    if (s < 0 || s >= num_states()) throw std::out_of_range("wfsa: invalid state " + std::to_string(s));
  }

  StateId start_ = kNoState;
  std::vector<std::vector<Arc>> arcs_;
  std::vector<double> final_;
};

// ---------------------------------------------------------------------------
// Small constructors.

/// Acceptor for exactly one label sequence.
inline Wfsa linear_acceptor(std::span<const Label> labels, double cost = 0.0) {
  Wfsa w;
  StateId s = w.add_state();
  w.set_start(s);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    StateId n = w.add_state();
    w.add_arc(s, labels[i], i == 0 ? cost : 0.0, n);
    s = n;
  }
  w.set_final(s, labels.empty() ? cost : 0.0);
  return w;
}

/// Accepts every token string (Sigma*).
inline Wfsa universal_acceptor() {
  Wfsa w;
  StateId s = w.add_state();
  w.set_start(s);
  w.set_final(s);
  w.add_arc(s, kSigma, 0.0, s);
  return w;
}

inline bool has_accepting_path(const Wfsa& w) {
  if (w.empty()) return false;
  std::vector<char> seen(static_cast<std::size_t>(w.num_states()), 0);
  std::vector<StateId> stack{w.start()};
  seen[static_cast<std::size_t>(w.start())] = 1;
  while (!stack.empty()) {
    StateId s = stack.back();
    stack.pop_back();
    if (w.is_final(s)) return true;
    for (const auto& a : w.arcs(s)) {
      if (!seen[static_cast<std::size_t>(a.next)]) {
        seen[static_cast<std::size_t>(a.next)] = 1;
        stack.push_back(a.next);
      }
    }
  }
  return false;
}

/// Removes states that are not both reachable from the start and able to
/// reach a final state. Surviving states keep their relative order. An
/// automaton with no accepting path becomes the empty automaton.
inline Wfsa connect(const Wfsa& w) {
  if (w.empty()) return Wfsa{};
  const auto n = static_cast<std::size_t>(w.num_states());
  std::vector<char> fwd(n, 0), bwd(n, 0);
  std::vector<std::vector<StateId>> rev(n);
  std::vector<StateId> stack{w.start()};
  fwd[static_cast<std::size_t>(w.start())] = 1;
  while (!stack.empty()) {
    StateId s = stack.back();
    stack.pop_back();
    for (const auto& a : w.arcs(s)) {
      rev[static_cast<std::size_t>(a.next)].push_back(s);
      if (!fwd[static_cast<std::size_t>(a.next)]) {
        fwd[static_cast<std::size_t>(a.next)] = 1;
        stack.push_back(a.next);
      }
    }
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (fwd[s] && w.is_final(static_cast<StateId>(s))) {
      bwd[s] = 1;
      stack.push_back(static_cast<StateId>(s));
    }
  }
  while (!stack.empty()) {
    StateId s = stack.back();
    stack.pop_back();
    for (StateId p : rev[static_cast<std::size_t>(s)]) {
      if (!bwd[static_cast<std::size_t>(p)]) {
        bwd[static_cast<std::size_t>(p)] = 1;
        stack.push_back(p);
      }
    }
  }
  if (!bwd[static_cast<std::size_t>(w.start())]) return Wfsa{};
  std::vector<StateId> remap(n, kNoState);
  Wfsa out;
  for (std::size_t s = 0; s < n; ++s) {
    if (fwd[s] && bwd[s]) remap[s] = out.add_state();
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (remap[s] == kNoState) continue;
    for (const auto& a : w.arcs(static_cast<StateId>(s))) {
      StateId t = remap[static_cast<std::size_t>(a.next)];
      if (t != kNoState) out.add_arc(remap[s], a.label, a.cost, t);
    }
    if (w.is_final(static_cast<StateId>(s))) out.set_final(remap[s], w.final_cost(static_cast<StateId>(s)));
  }
  out.set_start(remap[static_cast<std::size_t>(w.start())]);
  return out;
}

// ---------------------------------------------------------------------------
// Lattice conversion: vertices become states and each kept (token, successor)
// pair at a vertex becomes an arc carrying -(log P[u,t] + log E[u,v]).

inline Wfsa wfsa_from_pruned_dag(const Dag& dag) {
  Wfsa w;
  w.add_states(dag.num_vertices());
  w.set_start(dag.start_vertex());
  w.set_final(dag.final_vertex());
  for (VertexId u = 0; u < dag.num_vertices(); ++u) {
    for (const auto& e : dag.emissions(u)) {
      for (const auto& t : dag.transitions(u)) {
        w.add_arc(u, e.token, -(e.log_prob + t.log_prob), t.target);
      }
    }
  }
  return w;
}

inline Wfsa dag_to_wfsa(const Dag& dag, const PruneConfig& cfg) {
  return wfsa_from_pruned_dag(prune_dag(dag, cfg));
}

// ---------------------------------------------------------------------------
// Intersection.

namespace detail {

// Per-state arc index of the unweighted operand: token arcs sorted by label,
// plus the Sigma and epsilon arcs kept apart.
struct ArcIndex {
  std::vector<std::vector<Arc>> tokens;
  std::vector<std::vector<Arc>> sigma;
  std::vector<std::vector<Arc>> eps;

  explicit ArcIndex(const Wfsa& a) {
    const auto n = static_cast<std::size_t>(a.num_states());
    tokens.resize(n);
    sigma.resize(n);
    eps.resize(n);
    for (StateId s = 0; s < a.num_states(); ++s) {
      for (const auto& arc : a.arcs(s)) {
        auto si = static_cast<std::size_t>(s);
        if (arc.label == kEpsilon) {
          eps[si].push_back(arc);
        } else if (arc.label == kSigma) {
          sigma[si].push_back(arc);
        } else {
          tokens[si].push_back(arc);
        }
      }
      auto& t = tokens[static_cast<std::size_t>(s)];
      std::stable_sort(t.begin(), t.end(), [](const Arc& x, const Arc& y) { return x.label < y.label; });
    }
  }

  // Arcs of state s that consume `token`: the explicit ones, or Sigma arcs
  // when there are none.
  std::span<const Arc> match(StateId s, Label token) const {
    const auto& t = tokens[static_cast<std::size_t>(s)];
    auto lo = std::lower_bound(t.begin(), t.end(), token,
                               [](const Arc& a, Label l) { return a.label < l; });
    auto hi = lo;
    while (hi != t.end() && hi->label == token) ++hi;
    if (lo != hi) return {&*lo, static_cast<std::size_t>(hi - lo)};
    return sigma[static_cast<std::size_t>(s)];
  }
};

}  // namespace detail

/// Product of a weighted acceptor with an (usually unweighted) constraint
/// acceptor. Sigma arcs in `a` stand for every token without an explicit arc
/// at that state. Epsilons of `a` are folded into each product step through
/// the epsilon closure of the current `a` state, so every product arc
/// advances `w` and the result is acyclic whenever `w` is. Epsilons of `w`
/// leave `a` in place. Only states reachable from the start are built; the
/// result is trimmed.
inline Wfsa intersect(const Wfsa& w, const Wfsa& a) {
  if (w.empty() || a.empty()) return Wfsa{};
  if (w.has_label(kSigma)) throw std::invalid_argument("intersect: Sigma arcs are only allowed in the constraint operand");
  detail::ArcIndex index(a);

  // Epsilon closure of an `a` state with min costs, built on first use.
  std::vector<std::vector<std::pair<StateId, double>>> closures(static_cast<std::size_t>(a.num_states()));
  std::vector<char> closed(static_cast<std::size_t>(a.num_states()), 0);
  auto closure_of = [&](StateId qa) -> const std::vector<std::pair<StateId, double>>& {
    const auto qi = static_cast<std::size_t>(qa);
    if (closed[qi]) return closures[qi];
    closed[qi] = 1;
    std::map<StateId, double> dist{{qa, 0.0}};
    using Entry = std::pair<double, StateId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    heap.push({0.0, qa});
    while (!heap.empty()) {
      auto [d, q] = heap.top();
      heap.pop();
      if (d > dist.at(q)) continue;
      for (const auto& m : index.eps[static_cast<std::size_t>(q)]) {
        const double nd = d + m.cost;
        auto [it, inserted] = dist.try_emplace(m.next, nd);
        if (inserted || nd < it->second) {
          it->second = nd;
          heap.push({nd, m.next});
        }
      }
    }
    closures[qi].assign(dist.begin(), dist.end());
    return closures[qi];
  };

  const auto na = static_cast<std::uint64_t>(a.num_states());
  auto key = [na](StateId qw, StateId qa) {
    return static_cast<std::uint64_t>(qw) * na + static_cast<std::uint64_t>(qa);
  };
  Wfsa out;
  std::unordered_map<std::uint64_t, StateId> ids;
  std::deque<std::pair<StateId, StateId>> queue;
  auto state_of = [&](StateId qw, StateId qa) {
    auto [it, inserted] = ids.try_emplace(key(qw, qa), kNoState);
    if (inserted) {
      it->second = out.add_state();
      queue.push_back({qw, qa});
    }
    return it->second;
  };

  out.set_start(state_of(w.start(), a.start()));
  while (!queue.empty()) {
    auto [qw, qa] = queue.front();
    queue.pop_front();
    const StateId src = ids.at(key(qw, qa));
    const auto& cl = closure_of(qa);
    if (w.is_final(qw)) {
      double fa = kInfinity;
      for (auto [q, d] : cl) {
        if (a.is_final(q)) fa = std::min(fa, d + a.final_cost(q));
      }
      if (fa < kInfinity) out.set_final(src, w.final_cost(qw) + fa);
    }
    // Parallel arcs reached through different closure states keep the cheapest.
    std::map<std::pair<Label, StateId>, double> arcs;
    for (const auto& arc : w.arcs(qw)) {
      if (arc.label == kEpsilon) {
        auto [it, inserted] = arcs.try_emplace({kEpsilon, state_of(arc.next, qa)}, arc.cost);
        if (!inserted) it->second = std::min(it->second, arc.cost);
        continue;
      }
      for (auto [q, d] : cl) {
        for (const auto& m : index.match(q, arc.label)) {
          const double c = arc.cost + d + m.cost;
          auto [it, inserted] = arcs.try_emplace({arc.label, state_of(arc.next, m.next)}, c);
          if (!inserted) it->second = std::min(it->second, c);
        }
      }
    }
    for (const auto& [k, c] : arcs) out.add_arc(src, k.first, c, k.second);
  }
  return connect(out);
}

// ---------------------------------------------------------------------------
// Rational operations (Thompson style, epsilon-linked).

namespace detail {

// Copies `src` into `dst`, returning the state offset.
inline StateId append_states(Wfsa& dst, const Wfsa& src) {
  const StateId offset = dst.num_states();
  dst.add_states(src.num_states());
  for (StateId s = 0; s < src.num_states(); ++s) {
    for (const auto& arc : src.arcs(s)) dst.add_arc(offset + s, arc.label, arc.cost, offset + arc.next);
  }
  return offset;
}

}  // namespace detail

inline Wfsa union_of(const Wfsa& a, const Wfsa& b) {
  Wfsa out;
  StateId start = out.add_state();
  out.set_start(start);
  for (const Wfsa* part : {&a, &b}) {
    if (part->empty()) continue;
    StateId off = detail::append_states(out, *part);
    out.add_arc(start, kEpsilon, 0.0, off + part->start());
    for (StateId s = 0; s < part->num_states(); ++s) {
      if (part->is_final(s)) out.set_final(off + s, part->final_cost(s));
    }
  }
  return out;
}

inline Wfsa concat(const Wfsa& a, const Wfsa& b) {
  if (a.empty() || b.empty()) return Wfsa{};
  Wfsa out;
  StateId off_a = detail::append_states(out, a);
  StateId off_b = detail::append_states(out, b);
  out.set_start(off_a + a.start());
  for (StateId s = 0; s < a.num_states(); ++s) {
    if (a.is_final(s)) out.add_arc(off_a + s, kEpsilon, a.final_cost(s), off_b + b.start());
  }
  for (StateId s = 0; s < b.num_states(); ++s) {
    if (b.is_final(s)) out.set_final(off_b + s, b.final_cost(s));
  }
  return out;
}

/// Kleene star. The new start state is final (accepts the empty string) and
/// every final state of `a` loops back to it.
inline Wfsa closure(const Wfsa& a) {
  Wfsa out;
  StateId start = out.add_state();
  out.set_start(start);
  out.set_final(start);
  if (a.empty()) return out;
  StateId off = detail::append_states(out, a);
  out.add_arc(start, kEpsilon, 0.0, off + a.start());
  for (StateId s = 0; s < a.num_states(); ++s) {
    if (a.is_final(s)) out.add_arc(off + s, kEpsilon, a.final_cost(s), start);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Epsilon removal and topological sort.

/// Replaces epsilon paths by direct arcs: for every state s and every state q
/// in its epsilon closure (at min cost d), each non-epsilon arc of q is copied
/// onto s with cost d added, and s's final cost becomes the min over the
/// closure. Parallel arcs with equal label and target keep the cheapest.
inline Wfsa rm_epsilon(const Wfsa& w) {
  if (w.empty() || !w.has_label(kEpsilon)) return w;
  const int n = w.num_states();
  Wfsa out;
  out.add_states(n);
  out.set_start(w.start());
  std::vector<double> dist(static_cast<std::size_t>(n), kInfinity);
  std::vector<StateId> touched;
  using Entry = std::pair<double, StateId>;
  for (StateId s = 0; s < n; ++s) {
    // Dijkstra over epsilon arcs; costs are non-negative.
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[static_cast<std::size_t>(s)] = 0.0;
    touched.assign(1, s);
    heap.push({0.0, s});
    while (!heap.empty()) {
      auto [d, q] = heap.top();
      heap.pop();
      if (d > dist[static_cast<std::size_t>(q)]) continue;
      for (const auto& arc : w.arcs(q)) {
        if (arc.label != kEpsilon) continue;
        double nd = d + arc.cost;
        auto& slot = dist[static_cast<std::size_t>(arc.next)];
        if (nd < slot) {
          if (slot == kInfinity) touched.push_back(arc.next);
          slot = nd;
          heap.push({nd, arc.next});
        }
      }
    }
    std::sort(touched.begin(), touched.end());
    std::map<std::pair<Label, StateId>, double> merged;
    double final_cost = kInfinity;
    for (StateId q : touched) {
      double d = dist[static_cast<std::size_t>(q)];
      if (w.is_final(q)) final_cost = std::min(final_cost, d + w.final_cost(q));
      for (const auto& arc : w.arcs(q)) {
        if (arc.label == kEpsilon) continue;
        auto [it, inserted] = merged.try_emplace({arc.label, arc.next}, d + arc.cost);
        if (!inserted) it->second = std::min(it->second, d + arc.cost);
      }
    }
    for (const auto& [k, cost] : merged) out.add_arc(s, k.first, cost, k.second);
    if (final_cost != kInfinity) out.set_final(s, final_cost);
    for (StateId q : touched) dist[static_cast<std::size_t>(q)] = kInfinity;
  }
  return connect(out);
}

/// States in an order where every arc goes forward; throws on cycles.
inline std::vector<StateId> topological_order(const Wfsa& w) {
  const auto n = static_cast<std::size_t>(w.num_states());
  std::vector<int> indegree(n, 0);
  for (StateId s = 0; s < w.num_states(); ++s) {
    for (const auto& a : w.arcs(s)) ++indegree[static_cast<std::size_t>(a.next)];
  }
  std::vector<StateId> order;
  order.reserve(n);
  std::deque<StateId> ready;
  for (std::size_t s = 0; s < n; ++s) {
    if (indegree[s] == 0) ready.push_back(static_cast<StateId>(s));
  }
  while (!ready.empty()) {
    StateId s = ready.front();
    ready.pop_front();
    order.push_back(s);
    for (const auto& a : w.arcs(s)) {
      if (--indegree[static_cast<std::size_t>(a.next)] == 0) ready.push_back(a.next);
    }
  }
  if (order.size() != n) throw std::invalid_argument("topological_sort: cycle detected");
  return order;
}

inline bool is_topologically_sorted(const Wfsa& w) {
  for (StateId s = 0; s < w.num_states(); ++s) {
    for (const auto& a : w.arcs(s)) {
      if (a.next <= s) return false;
    }
  }
  return true;
}

inline Wfsa topological_sort(const Wfsa& w) {
  if (w.empty()) return w;
  auto order = topological_order(w);
  std::vector<StateId> rank(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[static_cast<std::size_t>(order[i])] = static_cast<StateId>(i);
  Wfsa out;
  out.add_states(w.num_states());
  for (StateId old : order) {
    StateId s = rank[static_cast<std::size_t>(old)];
    for (const auto& a : w.arcs(old)) out.add_arc(s, a.label, a.cost, rank[static_cast<std::size_t>(a.next)]);
    if (w.is_final(old)) out.set_final(s, w.final_cost(old));
  }
  out.set_start(rank[static_cast<std::size_t>(w.start())]);
  return out;
}

// ---------------------------------------------------------------------------
// Unweighted determinization and minimization.

inline bool is_deterministic(const Wfsa& w) {
  for (StateId s = 0; s < w.num_states(); ++s) {
    std::vector<Label> labels;
    for (const auto& a : w.arcs(s)) {
      if (a.label == kEpsilon) return false;
      labels.push_back(a.label);
    }
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) return false;
  }
  return true;
}

/// Subset construction over an epsilon-free view of `a`; weights are ignored
/// and the result is unweighted.
inline Wfsa determinize(const Wfsa& a) {
  if (a.empty()) return Wfsa{};
  if (a.has_label(kSigma)) throw std::invalid_argument("determinize: Sigma arcs are not supported");
  Wfsa nfa = rm_epsilon(a);
  if (nfa.empty()) return Wfsa{};
  Wfsa out;
  std::map<std::vector<StateId>, StateId> ids;
  std::deque<std::vector<StateId>> queue;
  auto state_of = [&](std::vector<StateId> subset) {
    auto [it, inserted] = ids.try_emplace(subset, kNoState);
    if (inserted) {
      it->second = out.add_state();
      queue.push_back(std::move(subset));
    }
    return it->second;
  };
  out.set_start(state_of({nfa.start()}));
  while (!queue.empty()) {
    auto subset = std::move(queue.front());
    queue.pop_front();
    StateId src = ids.at(subset);
    std::map<Label, std::vector<StateId>> moves;
    bool final = false;
    for (StateId q : subset) {
      final = final || nfa.is_final(q);
      for (const auto& arc : nfa.arcs(q)) moves[arc.label].push_back(arc.next);
    }
    if (final) out.set_final(src);
    for (auto& [label, dests] : moves) {
      std::sort(dests.begin(), dests.end());
      dests.erase(std::unique(dests.begin(), dests.end()), dests.end());
      out.add_arc(src, label, 0.0, state_of(std::move(dests)));
    }
  }
  return out;
}

/// Partition refinement on a trimmed deterministic acceptor: states start
/// split by finality and are refined by their (label, successor block)
/// signatures until the partition is stable. Missing transitions lead to the
/// implicit dead state, which no trimmed state is equivalent to. The result
/// is renumbered breadth-first from the start.
inline Wfsa minimize(const Wfsa& dfa) {
  if (!is_deterministic(dfa)) throw std::invalid_argument("minimize: input is not deterministic");
  Wfsa a = connect(dfa);
  if (a.empty()) return a;
  const auto n = static_cast<std::size_t>(a.num_states());
  std::vector<int> block(n);
  for (std::size_t s = 0; s < n; ++s) block[s] = a.is_final(static_cast<StateId>(s)) ? 1 : 0;
  std::size_t num_blocks = 0;
  for (;;) {
    std::map<std::pair<int, std::vector<std::pair<Label, int>>>, int> signatures;
    std::vector<int> next_block(n);
    for (std::size_t s = 0; s < n; ++s) {
      std::vector<std::pair<Label, int>> sig;
      for (const auto& arc : a.arcs(static_cast<StateId>(s))) {
        sig.emplace_back(arc.label, block[static_cast<std::size_t>(arc.next)]);
      }
      std::sort(sig.begin(), sig.end());
      auto [it, inserted] = signatures.try_emplace({block[s], std::move(sig)},
                                                   static_cast<int>(signatures.size()));
      next_block[s] = it->second;
    }
    block = std::move(next_block);
    if (signatures.size() == num_blocks) break;
    num_blocks = signatures.size();
  }

  // Build the quotient, numbering blocks in BFS order from the start.
  std::vector<StateId> rep(num_blocks, kNoState);
  for (std::size_t s = 0; s < n; ++s) {
    if (rep[static_cast<std::size_t>(block[s])] == kNoState) rep[static_cast<std::size_t>(block[s])] = static_cast<StateId>(s);
  }
  std::vector<StateId> id(num_blocks, kNoState);
  std::deque<int> queue;
  Wfsa out;
  auto visit = [&](int b) {
    if (id[static_cast<std::size_t>(b)] == kNoState) {
      id[static_cast<std::size_t>(b)] = out.add_state();
      queue.push_back(b);
    }
    return id[static_cast<std::size_t>(b)];
  };
  out.set_start(visit(block[static_cast<std::size_t>(a.start())]));
  while (!queue.empty()) {
    int b = queue.front();
    queue.pop_front();
    StateId r = rep[static_cast<std::size_t>(b)];
    std::vector<Arc> arcs(a.arcs(r).begin(), a.arcs(r).end());
    std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) { return x.label < y.label; });
    for (const auto& arc : arcs) {
      StateId dst = visit(block[static_cast<std::size_t>(arc.next)]);
      out.add_arc(id[static_cast<std::size_t>(b)], arc.label, 0.0, dst);
    }
    if (a.is_final(r)) out.set_final(id[static_cast<std::size_t>(b)]);
  }
  return out;
}

inline Wfsa determinize_min(const Wfsa& a) { return minimize(connect(determinize(a))); }

// ---------------------------------------------------------------------------
// Shortest path on acyclic automata.

struct PathResult {
  bool found = false;
  std::vector<Label> labels;  // epsilons omitted
  double cost = kInfinity;
};

/// Single relaxation pass in topological order. An automaton without an
/// accepting path yields `found == false`.
inline PathResult shortest_path(const Wfsa& w) {
  PathResult result;
  if (w.empty()) return result;
  auto order = topological_order(w);
  const auto n = static_cast<std::size_t>(w.num_states());
  std::vector<double> dist(n, kInfinity);
  std::vector<std::pair<StateId, std::size_t>> parent(n, {kNoState, 0});
  dist[static_cast<std::size_t>(w.start())] = 0.0;
  StateId best = kNoState;
  double best_cost = kInfinity;
  for (StateId s : order) {
    const double d = dist[static_cast<std::size_t>(s)];
    if (d == kInfinity) continue;
    if (w.is_final(s) && d + w.final_cost(s) < best_cost) {
      best_cost = d + w.final_cost(s);
      best = s;
    }
    auto arcs = w.arcs(s);
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      double nd = d + arcs[i].cost;
      auto ni = static_cast<std::size_t>(arcs[i].next);
      if (nd < dist[ni]) {
        dist[ni] = nd;
        parent[ni] = {s, i};
      }
    }
  }
  if (best == kNoState) return result;
  result.found = true;
  result.cost = best_cost;
  for (StateId s = best; s != w.start();) {
    auto [p, i] = parent[static_cast<std::size_t>(s)];
    Label l = w.arcs(p)[i].label;
    if (l != kEpsilon) result.labels.push_back(l);
    s = p;
  }
  std::reverse(result.labels.begin(), result.labels.end());
  return result;
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration (exponential; for tests and small inputs).

/// All accepted strings of at most `max_len` tokens with their minimal path
/// cost, sorted by string. Sigma arcs expand over `alphabet`, which is
/// required when the automaton contains any.
inline std::vector<std::pair<std::vector<Label>, double>> enumerate_strings(
    const Wfsa& w, int max_len, std::span<const Label> alphabet = {}) {
  std::map<std::vector<Label>, double> best;
  if (w.empty()) return {};
  if (alphabet.empty() && w.has_label(kSigma)) {
    throw std::invalid_argument("enumerate_strings: Sigma arcs need an explicit alphabet");
  }
  std::vector<Label> prefix;
  // Epsilon runs never revisit a state: with non-negative costs an epsilon
  // cycle cannot lower a path cost.
  std::vector<StateId> eps_run;
  std::function<void(StateId, double)> walk = [&](StateId s, double cost) {
    if (w.is_final(s)) {
      auto [it, inserted] = best.try_emplace(prefix, cost + w.final_cost(s));
      if (!inserted) it->second = std::min(it->second, cost + w.final_cost(s));
    }
    auto arcs = w.arcs(s);
    for (const auto& arc : arcs) {
      if (arc.label == kEpsilon) {
        if (std::find(eps_run.begin(), eps_run.end(), arc.next) != eps_run.end()) continue;
        eps_run.push_back(arc.next);
        walk(arc.next, cost + arc.cost);
        eps_run.pop_back();
        continue;
      }
      if (static_cast<int>(prefix.size()) >= max_len) continue;
      auto step = [&](Label token) {
        auto saved = std::move(eps_run);
        eps_run.assign(1, arc.next);
        prefix.push_back(token);
        walk(arc.next, cost + arc.cost);
        prefix.pop_back();
        eps_run = std::move(saved);
      };
      if (arc.label != kSigma) {
        step(arc.label);
        continue;
      }
      for (Label t : alphabet) {
        bool explicit_arc = std::any_of(arcs.begin(), arcs.end(), [t](const Arc& a) { return a.label == t; });
        if (!explicit_arc) step(t);
      }
    }
  };
  eps_run.push_back(w.start());
  walk(w.start(), 0.0);
  return {best.begin(), best.end()};
}

// ---------------------------------------------------------------------------
// Text dump:
//   states<TAB>N
//   start<TAB>s
//   src<TAB>dst<TAB>label<TAB>cost        sorted by (src, label, dst)
//   final<TAB>state[<TAB>cost]           cost omitted when zero
// Labels are tok:<id>, eps or sigma.

inline std::string label_to_string(Label l) {
  if (l == kEpsilon) return "eps";
  if (l == kSigma) return "sigma";
  return "tok:" + std::to_string(l);
}

inline Label label_from_string(std::string_view s) {
  if (s == "eps") return kEpsilon;
  if (s == "sigma") return kSigma;
  if (s.substr(0, 4) == "tok:") {
    auto v = parse_int(s.substr(4));
    if (v < 0 || v > std::numeric_limits<Label>::max()) throw ParseError("dump: token id out of range");
    return static_cast<Label>(v);
  }
  throw ParseError("dump: bad label '" + std::string(s) + "'");
}

inline void dump_wfsa(std::ostream& out, const Wfsa& w) {
  out << "states\t" << w.num_states() << '\n';
  out << "start\t" << w.start() << '\n';
  for (StateId s = 0; s < w.num_states(); ++s) {
    std::vector<Arc> arcs(w.arcs(s).begin(), w.arcs(s).end());
    std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) {
      return std::tie(x.label, x.next, x.cost) < std::tie(y.label, y.next, y.cost);
    });
    for (const auto& a : arcs) {
      out << s << '\t' << a.next << '\t' << label_to_string(a.label) << '\t' << format_double(a.cost) << '\n';
    }
  }
  for (StateId s = 0; s < w.num_states(); ++s) {
    if (!w.is_final(s)) continue;
    out << "final\t" << s;
    if (w.final_cost(s) != 0.0) out << '\t' << format_double(w.final_cost(s));
    out << '\n';
  }
}

inline std::string dump_wfsa(const Wfsa& w) {
  std::ostringstream os;
  dump_wfsa(os, w);
  return os.str();
}

inline Wfsa parse_wfsa_dump(std::istream& in) {
  Wfsa w;
  std::optional<StateId> start;
  bool have_states = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (;;) {
      auto tab = rest.find('\t');
      f.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    auto where = [&] { return " (line " + std::to_string(line_no) + ")"; };
    auto state = [&](std::string_view v) {
      auto s = parse_int(v);
      if (s < 0 || s >= w.num_states()) throw ParseError("dump: state out of range" + where());
      return static_cast<StateId>(s);
    };
    if (f[0] == "states" && f.size() == 2) {
      auto count = parse_int(f[1]);
      if (have_states || count < 0) throw ParseError("dump: bad states line" + where());
      w.add_states(static_cast<int>(count));
      have_states = true;
    } else if (!have_states) {
      throw ParseError("dump: missing states header" + where());
    } else if (f[0] == "start" && f.size() == 2) {
      auto s = parse_int(f[1]);
      if (s != kNoState) start = state(f[1]);
    } else if (f[0] == "final" && (f.size() == 2 || f.size() == 3)) {
      w.set_final(state(f[1]), f.size() == 3 ? parse_double(f[2]) : 0.0);
    } else if (f.size() == 4) {
      w.add_arc(state(f[0]), label_from_string(f[2]), parse_double(f[3]), state(f[1]));
    } else {
      throw ParseError("dump: unrecognized line" + where());
    }
  }
  if (start) w.set_start(*start);
  return w;
}

}  // namespace dagfsa

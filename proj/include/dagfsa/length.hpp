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

#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "dagfsa/common.hpp"
#include "dagfsa/wfsa.hpp"

namespace dagfsa {

// ---------------------------------------------------------------------------
// Target length prediction: ceil(slope * input_length + intercept), >= 1.

struct LengthPredictor {
  double slope = 0.0;
  double intercept = 1.0;
};

/// Ordinary least squares on (input length, output length) pairs.
inline LengthPredictor fit_length_predictor(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 2) throw std::invalid_argument("fit_length_predictor: need at least 2 pairs");
  const auto n = static_cast<double>(pairs.size());
  double mx = 0.0, my = 0.0;
  for (auto [x, y] : pairs) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (auto [x, y] : pairs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_length_predictor: degenerate regression (all x equal)");
  LengthPredictor p;
  p.slope = sxy / sxx;
  p.intercept = my - p.slope * mx;
  return p;
}

inline int predict_target_length(const LengthPredictor& pred, int input_length) {
  if (input_length < 0) throw std::invalid_argument("predict_target_length: negative input length");
  // The tolerance keeps exact integers (e.g. 7.0000000000001) from rounding up.
  double raw = pred.slope * input_length + pred.intercept;
  double target = std::ceil(raw - 1e-9);
  return target < 1.0 ? 1 : static_cast<int>(target);
}

// Two lines: slope, then intercept.
inline void save_length_predictor(std::ostream& out, const LengthPredictor& p) {
  out << format_double(p.slope) << '\n' << format_double(p.intercept) << '\n';
}

inline LengthPredictor load_length_predictor(std::istream& in) {
  std::string slope, intercept;
  if (!std::getline(in, slope) || !std::getline(in, intercept)) {
    throw ParseError("length predictor: expected two lines (slope, intercept)");
  }
  return {parse_double(slope), parse_double(intercept)};
}

// ---------------------------------------------------------------------------
// Length penalty and length-bucketed Viterbi.

/// exp(A * (L_tgt / l - 1)) for strings shorter than the target, else 1.
inline double length_penalty(int length, int target_length, double strictness) {
  if (length < 1) throw std::invalid_argument("length_penalty: length must be >= 1");
  if (length >= target_length) return 1.0;
  return std::exp(strictness * (static_cast<double>(target_length) / length - 1.0));
}

inline int default_upper_length(int target_length) {
  return std::max(1, std::min(target_length + 5, static_cast<int>(std::floor(target_length * 1.5))));
}

struct LcConfig {
  int target_length = 1;
  double strictness = 1.0;
  double edge_prune_p = 0.7;
  std::optional<int> upper_length;  // default_upper_length(target) when unset

  int resolved_upper() const { return upper_length.value_or(default_upper_length(target_length)); }
};

struct LengthDecodeResult {
  enum class Status { kOk, kInfeasible };
  Status status = Status::kInfeasible;
  std::vector<Label> labels;
  int length = 0;
  double cost = kInfinity;           // delta(start, length)
  double adjusted_cost = kInfinity;  // length_penalty * cost
  // delta(start, l) for l = 0..upper.
  std::vector<double> costs_by_length;
  std::size_t memo_entries = 0;
  // Shortest and longest accepting path lengths of the unpruned automaton,
  // reported when no candidate was found.
  std::optional<int> min_accepting_length;
  std::optional<int> max_accepting_length;
};

namespace detail {

// Minimal prefix of the cost-sorted arcs whose renormalized probability
// mass exceeds p. p >= 1 keeps every arc.
inline std::vector<Arc> prune_by_mass(std::span<const Arc> arcs, double p) {
  std::vector<Arc> sorted(arcs.begin(), arcs.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const Arc& a, const Arc& b) { return a.cost < b.cost; });
  if (p >= 1.0 || sorted.empty()) return sorted;
  const double base = sorted.front().cost;
  double total = 0.0;
  for (const auto& a : sorted) total += std::exp(-(a.cost - base));
  double mass = 0.0;
  std::size_t keep = 0;
  while (keep < sorted.size()) {
    mass += std::exp(-(sorted[keep].cost - base)) / total;
    ++keep;
    if (mass > p) break;
  }
  sorted.resize(keep);
  return sorted;
}

inline std::pair<std::optional<int>, std::optional<int>> accepting_length_range(const Wfsa& w) {
  if (w.empty()) return {};
  auto order = topological_order(w);
  const auto n = static_cast<std::size_t>(w.num_states());
  std::vector<int> lo(n, std::numeric_limits<int>::max()), hi(n, -1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto s = static_cast<std::size_t>(*it);
    if (w.is_final(*it)) {
      lo[s] = 0;
      hi[s] = 0;
    }
    for (const auto& a : w.arcs(*it)) {
      const auto t = static_cast<std::size_t>(a.next);
      if (hi[t] < 0) continue;
      lo[s] = std::min(lo[s], lo[t] + 1);
      hi[s] = std::max(hi[s], hi[t] + 1);
    }
  }
  const auto s0 = static_cast<std::size_t>(w.start());
  if (hi[s0] < 0) return {};
  return {lo[s0], hi[s0]};
}

}  // namespace detail

/// Length-constrained decoding. delta(u, l) is the cheapest cost from u to a
/// final state using exactly l arcs (delta(final, 0) = final cost,
/// delta(u, 0) = inf otherwise), computed by memoized depth-first search that
/// follows, at each state, only the minimal set of cheapest arcs whose
/// renormalized probability exceeds `edge_prune_p`. Every length 1..upper
/// competes on length_penalty(l) * delta(start, l); ties prefer the longer.
/// The automaton must be epsilon-free and acyclic.
inline LengthDecodeResult dfs_viterbi(const Wfsa& w, const LcConfig& cfg) {
  if (cfg.target_length < 1) throw std::invalid_argument("dfs_viterbi: target length must be >= 1");
  if (!(cfg.edge_prune_p > 0.0 && cfg.edge_prune_p <= 1.0)) {
    throw std::invalid_argument("dfs_viterbi: edge_prune_p must be in (0, 1]");
  }
  if (w.has_label(kEpsilon)) throw std::invalid_argument("dfs_viterbi: automaton has epsilon arcs");
  const int upper = cfg.resolved_upper();
  if (upper < 1) throw std::invalid_argument("dfs_viterbi: upper length must be >= 1");

  LengthDecodeResult result;
  result.costs_by_length.assign(static_cast<std::size_t>(upper) + 1, kInfinity);
  if (w.empty()) return result;
  topological_order(w);  // throws on cycles

  const auto n = static_cast<std::size_t>(w.num_states());
  const auto width = static_cast<std::size_t>(upper) + 1;
  std::vector<std::vector<Arc>> pruned(n);
  std::vector<char> expanded(n, 0);
  // Row-major (state, remaining length); NaN marks "not computed".
  std::vector<double> delta(n * width, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::int32_t> choice(n * width, -1);

  auto arcs_of = [&](StateId s) -> const std::vector<Arc>& {
    const auto si = static_cast<std::size_t>(s);
    if (!expanded[si]) {
      pruned[si] = detail::prune_by_mass(w.arcs(s), cfg.edge_prune_p);
      expanded[si] = 1;
    }
    return pruned[si];
  };

  std::function<double(StateId, int)> solve = [&](StateId s, int l) -> double {
    const auto cell = static_cast<std::size_t>(s) * width + static_cast<std::size_t>(l);
    if (!std::isnan(delta[cell])) return delta[cell];
    double best = kInfinity;
    std::int32_t pick = -1;
    if (l == 0) {
      best = w.is_final(s) ? w.final_cost(s) : kInfinity;
    } else {
      const auto& arcs = arcs_of(s);
      for (std::size_t i = 0; i < arcs.size(); ++i) {
        double d = arcs[i].cost + solve(arcs[i].next, l - 1);
        // Equal costs: smaller label first.
        if (d < best || (d == best && d < kInfinity && arcs[i].label < arcs[static_cast<std::size_t>(pick)].label)) {
          best = d;
          pick = static_cast<std::int32_t>(i);
        }
      }
    }
    delta[cell] = best;
    choice[cell] = pick;
    ++result.memo_entries;
    return best;
  };

  int best_len = -1;
  double best_adjusted = kInfinity;
  for (int l = 1; l <= upper; ++l) {
    double d = solve(w.start(), l);
    result.costs_by_length[static_cast<std::size_t>(l)] = d;
    if (d == kInfinity) continue;
    double adjusted = length_penalty(l, cfg.target_length, cfg.strictness) * d;
    if (adjusted <= best_adjusted) {
      best_adjusted = adjusted;
      best_len = l;
    }
  }
  result.costs_by_length[0] = w.is_final(w.start()) ? w.final_cost(w.start()) : kInfinity;

  if (best_len < 0) {
    auto [lo, hi] = detail::accepting_length_range(w);
    result.min_accepting_length = lo;
    result.max_accepting_length = hi;
    return result;
  }
  result.status = LengthDecodeResult::Status::kOk;
  result.length = best_len;
  result.cost = result.costs_by_length[static_cast<std::size_t>(best_len)];
  result.adjusted_cost = best_adjusted;
  StateId s = w.start();
  for (int l = best_len; l > 0; --l) {
    const auto cell = static_cast<std::size_t>(s) * width + static_cast<std::size_t>(l);
    const Arc& arc = pruned[static_cast<std::size_t>(s)][static_cast<std::size_t>(choice[cell])];
    result.labels.push_back(arc.label);
    s = arc.next;
  }
  return result;
}

}  // namespace dagfsa

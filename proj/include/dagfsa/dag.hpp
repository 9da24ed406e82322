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
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dagfsa/common.hpp"

namespace dagfsa {

struct Emission {
  TokenId token;
  double log_prob;
  friend bool operator==(const Emission&, const Emission&) = default;
};

struct Transition {
  VertexId target;
  double log_prob;
  friend bool operator==(const Transition&, const Transition&) = default;
};

struct Vertex {
  std::vector<Emission> emissions;
  std::vector<Transition> transitions;
  friend bool operator==(const Vertex&, const Vertex&) = default;
};

namespace detail {

inline bool emission_before(const Emission& a, const Emission& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.token < b.token;
}

inline bool transition_before(const Transition& a, const Transition& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.target < b.target;
}

}  // namespace detail

// A token lattice: vertex 0 is the start, the last vertex the unique final
// one. Edges only point forward, so vertex index order is a topological
// order. Per-vertex lists are kept sorted by descending log-probability.
class Dag {
 public:
  Dag() = default;

  explicit Dag(std::vector<Vertex> vertices) : vertices_(std::move(vertices)) {
    const auto n = static_cast<VertexId>(vertices_.size());
    if (n < 1) throw ParseError("dag: no vertices");
    for (VertexId u = 0; u < n; ++u) {
      auto fail = [u](const std::string& what) {
        throw ParseError("dag: vertex " + std::to_string(u) + ": " + what);
      };
      auto& vx = vertices_[static_cast<std::size_t>(u)];
      std::set<TokenId> seen_tokens;
      for (const auto& e : vx.emissions) {
        if (e.token < 0) fail("negative token id " + std::to_string(e.token));
        if (!std::isfinite(e.log_prob)) fail("non-finite log-probability");
        if (e.log_prob > 0.0) fail("probability > 1 (positive log-probability)");
        if (!seen_tokens.insert(e.token).second) fail("duplicate token " + std::to_string(e.token));
      }
      std::set<VertexId> seen_targets;
      for (const auto& t : vx.transitions) {
        if (t.target == u) fail("self edge");
        if (t.target < u) fail("backward edge " + std::to_string(u) + "->" + std::to_string(t.target));
        if (t.target >= n) fail("dangling vertex index " + std::to_string(t.target));
        if (!std::isfinite(t.log_prob)) fail("non-finite log-probability");
        if (t.log_prob > 0.0) fail("probability > 1 (positive log-probability)");
        if (!seen_targets.insert(t.target).second) fail("duplicate transition to " + std::to_string(t.target));
      }
      const bool is_final = u == n - 1;
      if (is_final && !vx.transitions.empty()) fail("final vertex has outgoing transitions");
      if (!is_final && vx.transitions.empty()) fail("no outgoing transitions (multiple final vertices)");
      if (!is_final && vx.emissions.empty()) fail("no emissions");
      std::sort(vx.emissions.begin(), vx.emissions.end(), detail::emission_before);
      std::sort(vx.transitions.begin(), vx.transitions.end(), detail::transition_before);
    }
  }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  VertexId start_vertex() const { return 0; }
  VertexId final_vertex() const { return num_vertices() - 1; }

  const Vertex& vertex(VertexId u) const { return vertices_.at(static_cast<std::size_t>(u)); }
  std::span<const Emission> emissions(VertexId u) const { return vertex(u).emissions; }
  std::span<const Transition> transitions(VertexId u) const { return vertex(u).transitions; }

  std::optional<double> emission_log_prob(VertexId u, TokenId t) const {
    for (const auto& e : emissions(u)) {
      if (e.token == t) return e.log_prob;
    }
    return std::nullopt;
  }

  friend bool operator==(const Dag&, const Dag&) = default;

 private:
  std::vector<Vertex> vertices_;
};

// Whether per-vertex distributions sum to one (unpruned lattices only).
inline bool is_normalized(const Dag& dag, double tolerance = 1e-6) {
  for (VertexId u = 0; u < dag.num_vertices(); ++u) {
    double em = 0.0;
    for (const auto& e : dag.emissions(u)) em += std::exp(e.log_prob);
    if (!dag.emissions(u).empty() && std::abs(em - 1.0) > tolerance) return false;
    if (u == dag.final_vertex()) continue;
    double tr = 0.0;
    for (const auto& t : dag.transitions(u)) tr += std::exp(t.log_prob);
    if (std::abs(tr - 1.0) > tolerance) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// JSON format:
//   {"version": 1, "num_vertices": L,
//    "vertices": [{"emissions": [[token, logprob], ...],
//                  "transitions": [[target, logprob], ...]}, ...]}

inline nlohmann::json dag_to_json(const Dag& dag) {
  nlohmann::json vertices = nlohmann::json::array();
  for (VertexId u = 0; u < dag.num_vertices(); ++u) {
    nlohmann::json em = nlohmann::json::array();
    for (const auto& e : dag.emissions(u)) em.push_back({e.token, e.log_prob});
    nlohmann::json tr = nlohmann::json::array();
    for (const auto& t : dag.transitions(u)) tr.push_back({t.target, t.log_prob});
    vertices.push_back({{"emissions", std::move(em)}, {"transitions", std::move(tr)}});
  }
  return {{"version", 1}, {"num_vertices", dag.num_vertices()}, {"vertices", std::move(vertices)}};
}

inline Dag dag_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("dag: document is not an object");
  if (doc.contains("version") && doc.at("version") != 1) {
    throw ParseError("dag: unsupported version " + doc.at("version").dump());
  }
  if (!doc.contains("num_vertices") || !doc.at("num_vertices").is_number_integer()) {
    throw ParseError("dag: missing integer num_vertices");
  }
  if (!doc.contains("vertices") || !doc.at("vertices").is_array()) {
    throw ParseError("dag: missing vertices array");
  }
  const auto declared = doc.at("num_vertices").get<long long>();
  const auto& vs = doc.at("vertices");
  if (declared < 1 || static_cast<std::size_t>(declared) != vs.size()) {
    throw ParseError("dag: num_vertices " + std::to_string(declared) + " does not match " +
                     std::to_string(vs.size()) + " vertex entries");
  }
  std::vector<Vertex> vertices;
  vertices.reserve(vs.size());
  for (std::size_t u = 0; u < vs.size(); ++u) {
    auto fail = [u](const std::string& what) {
      throw ParseError("dag: vertex " + std::to_string(u) + ": " + what);
    };
    const auto& v = vs[u];
    if (!v.is_object()) fail("entry is not an object");
    Vertex vx;
    auto read_pairs = [&](const char* key, auto&& emit) {
      if (!v.contains(key)) return;
      const auto& arr = v.at(key);
      if (!arr.is_array()) fail(std::string(key) + " is not an array");
      for (const auto& pair : arr) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
            !pair[1].is_number()) {
          fail(std::string("malformed ") + key + " entry " + pair.dump());
        }
        emit(pair[0].get<long long>(), pair[1].get<double>());
      }
    };
    read_pairs("emissions", [&](long long id, double lp) {
      if (id < 0 || id > std::numeric_limits<TokenId>::max()) fail("token id out of range");
      vx.emissions.push_back({static_cast<TokenId>(id), lp});
    });
    read_pairs("transitions", [&](long long target, double lp) {
      if (target < 0 || target >= declared) fail("dangling vertex index " + std::to_string(target));
      vx.transitions.push_back({static_cast<VertexId>(target), lp});
    });
    vertices.push_back(std::move(vx));
  }
  return Dag(std::move(vertices));
}

inline Dag load_dag(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("dag: malformed JSON: ") + e.what());
  }
  return dag_from_json(doc);
}

inline std::string serialize_dag(const Dag& dag) { return dag_to_json(dag).dump(); }

inline void save_dag(std::ostream& out, const Dag& dag) { out << serialize_dag(dag) << '\n'; }

// ---------------------------------------------------------------------------
// Likelihood pruning with forced emission of constraint continuations.

struct PruneConfig {
  int k_e = 3;
  int k_t = 3;
  std::vector<ConstraintPhrase> constraints;
};

/// Tokens that must be kept at `u` so constraint phrases can continue across
/// the edge from a pruned predecessor: for every phrase token t_j that is not
/// the phrase's last token, if some predecessor of `u` keeps t_j, then t_{j+1}
/// is forced. `kept_emissions[v]` must be sorted ascending.
inline std::set<TokenId> force_emit(VertexId u, std::span<const ConstraintPhrase> constraints,
                                    std::span<const std::vector<TokenId>> kept_emissions,
                                    std::span<const std::vector<VertexId>> pruned_predecessors) {
  std::set<TokenId> forced;
  const auto& preds = pruned_predecessors[static_cast<std::size_t>(u)];
  for (const auto& phrase : constraints) {
    for (std::size_t j = 0; j + 1 < phrase.tokens.size(); ++j) {
      for (VertexId v : preds) {
        const auto& kept = kept_emissions[static_cast<std::size_t>(v)];
        if (std::binary_search(kept.begin(), kept.end(), phrase.tokens[j])) {
          forced.insert(phrase.tokens[j + 1]);
          break;
        }
      }
    }
  }
  return forced;
}

inline Dag prune_dag(const Dag& dag, const PruneConfig& cfg) {
  if (cfg.k_e < 1 || cfg.k_t < 1) throw std::invalid_argument("prune_dag: k_e and k_t must be >= 1");
  const auto n = static_cast<std::size_t>(dag.num_vertices());
  std::vector<std::vector<TokenId>> kept_tokens(n);
  std::vector<std::vector<VertexId>> preds(n);
  std::vector<Vertex> out(n);
  for (VertexId u = 0; u < dag.num_vertices(); ++u) {
    const auto ui = static_cast<std::size_t>(u);
    auto em = dag.emissions(u);
    auto tr = dag.transitions(u);
    auto& vx = out[ui];
    vx.transitions.assign(tr.begin(), tr.begin() + std::min<std::size_t>(tr.size(), cfg.k_t));
    vx.emissions.assign(em.begin(), em.begin() + std::min<std::size_t>(em.size(), cfg.k_e));
    for (TokenId t : force_emit(u, cfg.constraints, kept_tokens, preds)) {
      bool kept = std::any_of(vx.emissions.begin(), vx.emissions.end(),
                              [t](const Emission& e) { return e.token == t; });
      if (kept) continue;
      // Tokens with zero probability at u cannot be emitted there.
      if (auto lp = dag.emission_log_prob(u, t)) vx.emissions.push_back({t, *lp});
    }
    std::sort(vx.emissions.begin(), vx.emissions.end(), detail::emission_before);
    auto& ks = kept_tokens[ui];
    for (const auto& e : vx.emissions) ks.push_back(e.token);
    std::sort(ks.begin(), ks.end());
    for (const auto& t : vx.transitions) preds[static_cast<std::size_t>(t.target)].push_back(u);
  }
  return Dag(std::move(out));
}

// ---------------------------------------------------------------------------
// Synthetic lattices for fixtures and benchmarks.

// Defaults for sparse benchmark lattices. With these, vertices average about
// 1.68 transitions above p=0.2 (measured over seeds 7..1006, 16 vertices,
// 4 emissions, 4 transitions).
inline constexpr int kSparseEmissionDegree = 4;
inline constexpr int kSparseTransitionDegree = 4;
inline constexpr double kSparseConcentration = 0.45;

/// Deterministic random lattice. Targets of vertex u are drawn from the
/// window u+1 .. u+2*transition_degree; distributions are Dirichlet with the
/// given concentration (smaller is sparser).
inline Dag generate_synthetic_dag(std::uint64_t seed, int num_vertices, int emission_degree,
                                  int transition_degree, double concentration,
                                  int vocab_size = 64) {
  if (num_vertices < 2) throw std::invalid_argument("generate_synthetic_dag: num_vertices must be >= 2");
  if (emission_degree < 1 || transition_degree < 1) {
    throw std::invalid_argument("generate_synthetic_dag: degrees must be >= 1");
  }
  if (transition_degree > num_vertices - 1) {
    throw std::invalid_argument("generate_synthetic_dag: transition degree exceeds feasible forward-edge count");
  }
  if (emission_degree > vocab_size) {
    throw std::invalid_argument("generate_synthetic_dag: emission degree exceeds vocabulary size");
  }
  if (!(concentration > 0.0)) throw std::invalid_argument("generate_synthetic_dag: concentration must be > 0");

  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  auto dirichlet = [&](std::size_t k) {
    std::vector<double> p(k);
    for (auto& x : p) x = std::max(gamma(rng), 1e-300);
    double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& x : p) x = std::max(x / sum, 1e-9);
    sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& x : p) x /= sum;
    return p;
  };

  std::vector<TokenId> vocab(static_cast<std::size_t>(vocab_size));
  std::iota(vocab.begin(), vocab.end(), 0);
  std::vector<Vertex> vertices(static_cast<std::size_t>(num_vertices));
  for (VertexId u = 0; u < num_vertices; ++u) {
    auto& vx = vertices[static_cast<std::size_t>(u)];
    std::vector<TokenId> tokens;
    std::sample(vocab.begin(), vocab.end(), std::back_inserter(tokens), emission_degree, rng);
    auto ep = dirichlet(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) vx.emissions.push_back({tokens[i], std::log(ep[i])});
    if (u == num_vertices - 1) continue;

    const VertexId last = std::min<VertexId>(num_vertices - 1, u + 2 * transition_degree);
    std::vector<VertexId> window;
    for (VertexId v = u + 1; v <= last; ++v) window.push_back(v);
    std::vector<VertexId> targets;
    std::sample(window.begin(), window.end(), std::back_inserter(targets),
                std::min<std::size_t>(window.size(), static_cast<std::size_t>(transition_degree)), rng);
    if (targets.size() == 1) {
      vx.transitions.push_back({targets[0], 0.0});
      continue;
    }
    auto tp = dirichlet(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) vx.transitions.push_back({targets[i], std::log(tp[i])});
  }
  return Dag(std::move(vertices));
}

// Mean number of out-transitions per non-final vertex whose probability
// exceeds `threshold`.
inline double mean_transitions_above(const Dag& dag, double threshold) {
  if (dag.num_vertices() < 2) return 0.0;
  std::size_t count = 0;
  for (VertexId u = 0; u < dag.final_vertex(); ++u) {
    for (const auto& t : dag.transitions(u)) count += std::exp(t.log_prob) > threshold;
  }
  return static_cast<double>(count) / static_cast<double>(dag.final_vertex());
}

inline double mean_emissions_above(const Dag& dag, double threshold) {
  std::size_t count = 0;
  for (VertexId u = 0; u < dag.num_vertices(); ++u) {
    for (const auto& e : dag.emissions(u)) count += std::exp(e.log_prob) > threshold;
  }
  return static_cast<double>(count) / static_cast<double>(dag.num_vertices());
}

}  // namespace dagfsa

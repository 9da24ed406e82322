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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dagfsa/cbs_dag.hpp"
#include "dagfsa/constraints.hpp"
#include "dagfsa/dag.hpp"
#include "dagfsa/decode_result.hpp"
#include "dagfsa/length.hpp"
#include "dagfsa/metrics.hpp"
#include "dagfsa/token_table.hpp"
#include "dagfsa/wfsa.hpp"

namespace dagfsa {

enum class DecodeMode { kGreedy, kBeam, kCbsDag, kWfsaShortest, kHlc, kVc, kLc, kControlDag };

inline const char* to_string(DecodeMode m) {
  switch (m) {
    case DecodeMode::kGreedy:
      return "greedy";
    case DecodeMode::kBeam:
      return "beam";
    case DecodeMode::kCbsDag:
      return "cbs-dag";
    case DecodeMode::kWfsaShortest:
      return "wfsa-shortest";
    case DecodeMode::kHlc:
      return "hlc";
    case DecodeMode::kVc:
      return "vc";
    case DecodeMode::kLc:
      return "lc";
    case DecodeMode::kControlDag:
      return "control-dag";
  }
  return "unknown";
}

inline DecodeMode parse_decode_mode(std::string_view name) {
  for (auto m : {DecodeMode::kGreedy, DecodeMode::kBeam, DecodeMode::kCbsDag, DecodeMode::kWfsaShortest,
                 DecodeMode::kHlc, DecodeMode::kVc, DecodeMode::kLc, DecodeMode::kControlDag}) {
    if (name == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown decode mode '" + std::string(name) + "'");
}

inline bool uses_phrases(DecodeMode m) {
  return m == DecodeMode::kCbsDag || m == DecodeMode::kHlc || m == DecodeMode::kControlDag;
}
inline bool uses_vocabulary(DecodeMode m) { return m == DecodeMode::kVc || m == DecodeMode::kControlDag; }
inline bool uses_length(DecodeMode m) { return m == DecodeMode::kLc || m == DecodeMode::kControlDag; }

struct DecodeRequest {
  DecodeMode mode = DecodeMode::kWfsaShortest;
  std::vector<ConstraintPhrase> phrases;
  std::vector<std::string> entities;
  std::shared_ptr<const StaticLexicon> lexicon;  // vc, control-dag
  std::optional<LcConfig> length;                // lc, control-dag
  int k_e = 3;
  int k_t = 3;
  int beam = 5;  // beam, cbs-dag
};

struct DecodeOutcome {
  DecodeResult result;
  std::optional<int> upper_length;  // length modes
  std::size_t product_states = 0;   // WFSA modes: states of the decoded automaton
  bool exact_fallback = false;      // length modes: pruned search found nothing, exact search ran
  double wall_ms = 0.0;
};

namespace detail {

inline void check_request(const DecodeRequest& req) {
  if (uses_vocabulary(req.mode) && !req.lexicon) {
    throw std::invalid_argument(std::string("mode ") + to_string(req.mode) + " needs a lexicon");
  }
  if (uses_length(req.mode) && !req.length) {
    throw std::invalid_argument(std::string("mode ") + to_string(req.mode) + " needs a length configuration");
  }
}

inline std::string describe_range(const LengthDecodeResult& lr, int upper) {
  std::string s = "no accepting path of length 1.." + std::to_string(upper);
  if (lr.min_accepting_length) {
    s += "; accepting lengths span " + std::to_string(*lr.min_accepting_length) + ".." +
         std::to_string(*lr.max_accepting_length);
  }
  return s;
}

}  // namespace detail

/// Decodes one lattice. `table` is used to tokenize entities and to
/// detokenize the output.
inline DecodeOutcome run_decode(const Dag& dag, const TokenTable& table, const DecodeRequest& req) {
  detail::check_request(req);
  const auto t0 = std::chrono::steady_clock::now();
  DecodeOutcome out;
  DecodeResult& r = out.result;

  PruneConfig prune{req.k_e, req.k_t, {}};
  if (uses_phrases(req.mode)) prune.constraints = req.phrases;
  const Dag pruned = prune_dag(dag, prune);

  switch (req.mode) {
    case DecodeMode::kGreedy:
      r = greedy_decode(pruned);
      break;
    case DecodeMode::kBeam:
      r = cbs_dag_decode(pruned, {}, req.beam);
      break;
    case DecodeMode::kCbsDag:
      r = cbs_dag_decode(pruned, req.phrases, req.beam);
      break;
    default: {
      Wfsa w = wfsa_from_pruned_dag(pruned);
      if (req.mode == DecodeMode::kHlc || req.mode == DecodeMode::kControlDag) {
        for (const auto& p : req.phrases) {
          w = intersect(w, build_hlc_fsa(p));
          if (w.empty()) break;
        }
      }
      if (uses_vocabulary(req.mode) && !w.empty()) {
        w = intersect(w, build_vocab_fsa(*req.lexicon, req.entities, table).automaton);
      }
      w = topological_sort(rm_epsilon(w));
      out.product_states = static_cast<std::size_t>(w.num_states());
      if (uses_length(req.mode)) {
        const int upper = req.length->resolved_upper();
        out.upper_length = upper;
        if (w.empty()) {
          r.status = DecodeStatus::kEmptyIntersection;
          r.detail = "constraint product is empty";
          break;
        }
        auto lr = dfs_viterbi(w, *req.length);
        if (lr.status != LengthDecodeResult::Status::kOk && req.length->edge_prune_p < 1.0) {
          // Mass pruning removed every candidate in the window; search exactly.
          LcConfig exact = *req.length;
          exact.edge_prune_p = 1.0;
          lr = dfs_viterbi(w, exact);
          out.exact_fallback = true;
        }
        if (lr.status != LengthDecodeResult::Status::kOk) {
          r.status = DecodeStatus::kInfeasible;
          r.detail = detail::describe_range(lr, upper);
          break;
        }
        r.tokens.assign(lr.labels.begin(), lr.labels.end());
        r.cost = lr.cost;
        r.adjusted_cost = lr.adjusted_cost;
      } else {
        auto sp = shortest_path(w);
        if (!sp.found) {
          r.status = DecodeStatus::kEmptyIntersection;
          r.detail = "constraint product is empty";
          break;
        }
        r.tokens.assign(sp.labels.begin(), sp.labels.end());
        r.cost = sp.cost;
        r.adjusted_cost = sp.cost;
      }
      break;
    }
  }
  r.text = table.detokenize(r.tokens);
  r.constraints_satisfied = phrase_flags(r.tokens, req.phrases);
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline std::vector<ConstraintPhrase> tokenize_phrases(std::span<const std::string> surfaces, const TokenTable& table) {
  std::vector<ConstraintPhrase> phrases;
  phrases.reserve(surfaces.size());
  for (const auto& s : surfaces) phrases.push_back(tokenize_phrase(s, table));
  return phrases;
}

// ---------------------------------------------------------------------------
// JSON output.

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json outcome_to_json(const DecodeOutcome& o, DecodeMode mode, bool with_timing) {
  const auto& r = o.result;
  nlohmann::json j;
  j["mode"] = to_string(mode);
  j["status"] = to_string(r.status);
  j["tokens"] = r.tokens;
  j["text"] = r.text;
  j["length"] = r.tokens.size();
  j["cost"] = finite_or_null(r.cost);
  j["adjusted_cost"] = finite_or_null(r.adjusted_cost);
  j["constraints_satisfied"] = r.constraints_satisfied;
  if (o.upper_length) j["upper_length"] = *o.upper_length;
  if (o.exact_fallback) j["exact_fallback"] = true;
  if (!r.detail.empty()) j["detail"] = r.detail;
  if (with_timing) j["wall_ms"] = o.wall_ms;
  return j;
}

// ---------------------------------------------------------------------------
// Per-input constraints and batch manifests.

struct InputConstraints {
  std::vector<std::string> phrases;
  std::vector<std::string> entities;
};

inline InputConstraints input_constraints_from_json(const nlohmann::json& j) {
  InputConstraints c;
  c.phrases = j.value("phrases", std::vector<std::string>{});
  c.entities = j.value("entities", std::vector<std::string>{});
  return c;
}

// Reads the first non-blank line of a constraint file.
inline InputConstraints load_input_constraints(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      return input_constraints_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("constraints: ") + e.what());
    }
  }
  return {};
}

// One manifest line: {"id", "dag", "phrases", "entities", "input_len",
// "target_len", "references"}. Relative dag paths resolve against the
// manifest's directory.
struct BatchJob {
  std::string id;
  std::filesystem::path dag_path;
  InputConstraints constraints;
  std::optional<int> input_length;
  std::optional<int> target_length;
  std::vector<std::string> references;
};

inline std::vector<BatchJob> load_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  std::vector<BatchJob> jobs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      BatchJob job;
      job.id = j.value("id", std::to_string(jobs.size()));
      std::filesystem::path p = j.at("dag").get<std::string>();
      job.dag_path = p.is_absolute() ? p : base_dir / p;
      job.constraints = input_constraints_from_json(j);
      if (j.contains("input_len")) job.input_length = j.at("input_len").get<int>();
      if (j.contains("target_len")) job.target_length = j.at("target_len").get<int>();
      job.references = j.value("references", std::vector<std::string>{});
      jobs.push_back(std::move(job));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("manifest: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return jobs;
}

struct BatchOptions {
  DecodeMode mode = DecodeMode::kWfsaShortest;
  const TokenTable* table = nullptr;
  std::shared_ptr<const StaticLexicon> lexicon;
  int k_e = 3;
  int k_t = 3;
  int beam = 5;
  // Length settings; a job's target_len wins, then the predictor applied to
  // its input_len, then `target_length`.
  std::optional<int> target_length;
  std::optional<LengthPredictor> predictor;
  double strictness = 1.0;
  double edge_prune_p = 0.7;
  std::optional<int> upper_length;
  const EvalVocabulary* eval_vocabulary = nullptr;
  int parallelism = 1;
  bool with_timing = true;
};

struct BatchOutput {
  std::vector<nlohmann::json> results;  // manifest order
  nlohmann::json summary;
};

inline std::optional<LcConfig> length_config_for(const BatchJob& job, const BatchOptions& opt) {
  std::optional<int> target = job.target_length;
  if (!target && opt.predictor && job.input_length) target = predict_target_length(*opt.predictor, *job.input_length);
  if (!target) target = opt.target_length;
  if (!target) return std::nullopt;
  LcConfig cfg;
  cfg.target_length = *target;
  cfg.strictness = opt.strictness;
  cfg.edge_prune_p = opt.edge_prune_p;
  cfg.upper_length = opt.upper_length;
  return cfg;
}

inline nlohmann::json run_job(const BatchJob& job, const BatchOptions& opt, DecodeResult* decoded) {
  nlohmann::json j;
  try {
    std::ifstream in(job.dag_path);
    if (!in) throw std::runtime_error("cannot open " + job.dag_path.string());
    Dag dag = load_dag(in);
    DecodeRequest req;
    req.mode = opt.mode;
    req.phrases = tokenize_phrases(job.constraints.phrases, *opt.table);
    req.entities = job.constraints.entities;
    req.lexicon = opt.lexicon;
    if (uses_length(opt.mode)) req.length = length_config_for(job, opt);
    req.k_e = opt.k_e;
    req.k_t = opt.k_t;
    req.beam = opt.beam;
    auto outcome = run_decode(dag, *opt.table, req);
    j = outcome_to_json(outcome, opt.mode, opt.with_timing);
    *decoded = outcome.result;
  } catch (const std::exception& e) {
    j = nlohmann::json::object();
    j["mode"] = to_string(opt.mode);
    j["status"] = "error";
    j["error"] = e.what();
  }
  nlohmann::json line;
  line["id"] = job.id;
  line.update(j);
  return line;
}

/// Decodes every job with up to `parallelism` worker threads. Jobs share only
/// the token table and the static lexicon. A failing job yields a
/// {"status": "error"} line and the batch continues.
inline BatchOutput run_batch(std::span<const BatchJob> jobs, const BatchOptions& opt) {
  if (!opt.table) throw std::invalid_argument("run_batch: token table required");
  BatchOutput out;
  out.results.resize(jobs.size());
  std::vector<DecodeResult> decoded(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) out.results[i] = run_job(jobs[i], opt, &decoded[i]);
  };
  const int threads = std::max(1, std::min<int>(opt.parallelism, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<EvalRecord> records;
  std::size_t failed = 0;
  double total_ms = 0.0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& res = out.results[i];
    if (res.at("status") == "error") {
      ++failed;
      continue;
    }
    if (res.contains("wall_ms")) total_ms += res.at("wall_ms").get<double>();
    records.push_back({decoded[i].text, jobs[i].constraints.phrases, jobs[i].references});
  }
  auto report = evaluate_records(records, opt.eval_vocabulary);
  nlohmann::json s = report_to_json(report);
  s["jobs"] = jobs.size();
  s["failed"] = failed;
  if (opt.with_timing) s["wall_ms_total"] = total_ms;
  out.summary = nlohmann::json{{"summary", s}};
  return out;
}

}  // namespace dagfsa

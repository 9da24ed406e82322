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
#include <cstdlib>
#include <istream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "dagfsa/common.hpp"
#include "dagfsa/constraints.hpp"

namespace dagfsa {

struct EvalRecord {
  std::string output;
  std::vector<std::string> required_values;
  std::vector<std::string> references;
};

struct EvalVocabulary {
  std::unordered_set<std::string> words;
};

// ---------------------------------------------------------------------------
// Constraint errors.

/// Fraction of (record, required value) pairs whose value is not a substring
/// of the output. 0 when there are no pairs.
inline double slot_error_rate(std::span<const EvalRecord> records) {
  std::size_t pairs = 0, missing = 0;
  for (const auto& r : records) {
    for (const auto& v : r.required_values) {
      ++pairs;
      missing += r.output.find(v) == std::string::npos;
    }
  }
  return pairs == 0 ? 0.0 : static_cast<double>(missing) / static_cast<double>(pairs);
}

inline bool has_missing_value(const EvalRecord& r) {
  return std::any_of(r.required_values.begin(), r.required_values.end(),
                     [&](const std::string& v) { return r.output.find(v) == std::string::npos; });
}

/// Fraction of records missing at least one required value. Records without
/// required values count as correct.
inline double exact_occurrence_error_rate(std::span<const EvalRecord> records) {
  if (records.empty()) return 0.0;
  std::size_t bad = 0;
  for (const auto& r : records) bad += has_missing_value(r);
  return static_cast<double>(bad) / static_cast<double>(records.size());
}

// Per-response slot error: the same count as the exact occurrence error.
inline double response_slot_error_rate(std::span<const EvalRecord> records) {
  return exact_occurrence_error_rate(records);
}

// ---------------------------------------------------------------------------
// Neologisms.

// Digits with optional separators , . : - /
inline bool is_numeric_word(std::string_view w) {
  bool digit = false;
  for (char c : w) {
    if (c >= '0' && c <= '9') {
      digit = true;
    } else if (c != ',' && c != '.' && c != ':' && c != '-' && c != '/') {
      return false;
    }
  }
  return digit;
}

/// Words of `output` that are out of vocabulary after stripping surrounding
/// punctuation. Empty and numeric words are never OOV.
inline std::vector<std::string> oov_words(std::string_view output, const EvalVocabulary& vocab) {
  std::vector<std::string> oov;
  for (const auto& raw : detail::split_words(output)) {
    if (is_numeric_word(raw)) continue;
    auto w = detail::strip_punct(raw);
    if (w.empty() || is_numeric_word(w)) continue;
    if (!vocab.words.contains(w)) oov.push_back(w);
  }
  return oov;
}

/// Fraction of records whose output contains at least one OOV word.
inline double neologism_rate(std::span<const EvalRecord> records, const EvalVocabulary& vocab) {
  if (records.empty()) return 0.0;
  std::size_t flagged = 0;
  for (const auto& r : records) flagged += !oov_words(r.output, vocab).empty();
  return static_cast<double>(flagged) / static_cast<double>(records.size());
}

/// Evaluation vocabulary: corpus words (surrounding punctuation stripped,
/// digit-bearing words dropped, case kept) plus every word of the required
/// values and any extra words added verbatim.
inline EvalVocabulary build_eval_vocabulary(std::span<const std::string> corpus,
                                            std::span<const EvalRecord> records = {},
                                            std::span<const std::string> extra_words = {}) {
  EvalVocabulary v;
  auto add_text = [&](std::string_view text) {
    for (const auto& raw : detail::split_words(text)) {
      auto w = detail::strip_punct(raw);
      if (!w.empty() && !detail::has_digit(w)) v.words.insert(w);
    }
  };
  for (const auto& line : corpus) add_text(line);
  for (const auto& r : records) {
    for (const auto& val : r.required_values) add_text(val);
  }
  for (const auto& w : extra_words) v.words.insert(w);
  return v;
}

// ---------------------------------------------------------------------------
// Brevity penalty.

/// Corpus-level BLEU brevity penalty. For each candidate the closest
/// reference length is chosen (ties to the shorter); with c and r the sums,
/// BP = exp(1 - r/c) if c < r else 1.
inline double brevity_penalty(std::span<const int> candidate_lengths,
                              std::span<const std::vector<int>> reference_lengths) {
  if (candidate_lengths.empty()) throw std::invalid_argument("brevity_penalty: empty input");
  if (candidate_lengths.size() != reference_lengths.size()) {
    throw std::invalid_argument("brevity_penalty: candidate/reference count mismatch");
  }
  long long c = 0, r = 0;
  for (std::size_t i = 0; i < candidate_lengths.size(); ++i) {
    const int cand = candidate_lengths[i];
    const auto& refs = reference_lengths[i];
    if (cand < 1 || refs.empty()) throw std::invalid_argument("brevity_penalty: lengths must be positive");
    int closest = refs.front();
    for (int ref : refs) {
      if (ref < 1) throw std::invalid_argument("brevity_penalty: lengths must be positive");
      const int d = std::abs(ref - cand), dc = std::abs(closest - cand);
      if (d < dc || (d == dc && ref < closest)) closest = ref;
    }
    c += cand;
    r += closest;
  }
  if (c >= r) return 1.0;
  return std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
}

inline double brevity_penalty(std::span<const int> candidate_lengths, std::span<const int> reference_lengths) {
  std::vector<std::vector<int>> refs;
  refs.reserve(reference_lengths.size());
  for (int r : reference_lengths) refs.push_back({r});
  return brevity_penalty(candidate_lengths, refs);
}

inline int word_count(std::string_view text) { return static_cast<int>(detail::split_words(text).size()); }

// ---------------------------------------------------------------------------
// Report over JSON-lines records.

struct MetricsReport {
  double ser = 0.0;           // per slot value
  double ser_response = 0.0;  // per response
  double eor = 0.0;
  std::optional<double> neo;  // needs a vocabulary
  std::optional<double> bp;   // needs references on every record
  std::size_t records = 0;
};

inline MetricsReport evaluate_records(std::span<const EvalRecord> records, const EvalVocabulary* vocab) {
  MetricsReport rep;
  rep.records = records.size();
  rep.ser = slot_error_rate(records);
  rep.ser_response = response_slot_error_rate(records);
  rep.eor = exact_occurrence_error_rate(records);
  if (vocab) rep.neo = neologism_rate(records, *vocab);
  bool with_refs = !records.empty() && std::all_of(records.begin(), records.end(), [](const EvalRecord& r) {
    return !r.references.empty();
  });
  if (with_refs) {
    std::vector<int> cand;
    std::vector<std::vector<int>> refs;
    bool positive = true;
    for (const auto& r : records) {
      cand.push_back(word_count(r.output));
      positive = positive && cand.back() > 0;
      auto& rl = refs.emplace_back();
      for (const auto& ref : r.references) rl.push_back(word_count(ref));
    }
    if (positive) rep.bp = brevity_penalty(cand, refs);
  }
  return rep;
}

inline EvalRecord eval_record_from_json(const nlohmann::json& j) {
  EvalRecord r;
  r.output = j.value("output", std::string());
  r.required_values = j.value("required_values", std::vector<std::string>{});
  r.references = j.value("references", std::vector<std::string>{});
  return r;
}

inline std::vector<EvalRecord> load_eval_records(std::istream& in) {
  std::vector<EvalRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(eval_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("records: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

inline nlohmann::json report_to_json(const MetricsReport& rep) {
  nlohmann::json j;
  j["ser"] = rep.ser;
  j["ser_response"] = rep.ser_response;
  j["eor"] = rep.eor;
  j["neo"] = rep.neo ? nlohmann::json(*rep.neo) : nlohmann::json(nullptr);
  j["bp"] = rep.bp ? nlohmann::json(*rep.bp) : nlohmann::json(nullptr);
  j["records"] = rep.records;
  return j;
}

}  // namespace dagfsa

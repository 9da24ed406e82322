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

#include <string>
#include <vector>

#include "dagfsa/common.hpp"

namespace dagfsa {

enum class DecodeStatus {
  kOk,
  kEmptyIntersection,  // no string satisfies the constraints
  kInfeasible,         // no candidate within the length window
  kConstraintsUnmet,   // beam search finished without meeting every phrase
};

inline const char* to_string(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::kOk:
      return "ok";
    case DecodeStatus::kEmptyIntersection:
      return "empty_intersection";
    case DecodeStatus::kInfeasible:
      return "infeasible";
    case DecodeStatus::kConstraintsUnmet:
      return "constraints_unmet";
  }
  return "unknown";
}

struct DecodeResult {
  DecodeStatus status = DecodeStatus::kOk;
  std::vector<TokenId> tokens;
  std::string text;
  double cost = kInfinity;           // path negative log-likelihood
  double adjusted_cost = kInfinity;  // length-penalized cost; equals cost outside length decoding
  std::vector<bool> constraints_satisfied;
  std::string detail;

  bool has_output() const { return status == DecodeStatus::kOk || status == DecodeStatus::kConstraintsUnmet; }
};

inline std::vector<bool> phrase_flags(std::span<const TokenId> tokens, std::span<const ConstraintPhrase> phrases) {
  std::vector<bool> flags;
  flags.reserve(phrases.size());
  for (const auto& p : phrases) flags.push_back(contains_run<TokenId>(tokens, p.tokens));
  return flags;
}

}  // namespace dagfsa

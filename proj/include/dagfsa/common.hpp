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
#include <charconv>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace dagfsa {

using TokenId = std::int32_t;
using VertexId = std::int32_t;
using StateId = std::int32_t;

// Arc labels are token ids (>= 0) or one of the two reserved values below.
using Label = std::int32_t;
inline constexpr Label kEpsilon = -1;
// Matches any token that has no explicit arc leaving the same state.
inline constexpr Label kSigma = -2;

inline constexpr StateId kNoState = -1;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Raised for malformed input documents (DAG JSON, token tables, dumps).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A token sequence that must appear contiguously in the decoded output.
struct ConstraintPhrase {
  std::vector<TokenId> tokens;
  std::string surface;

  friend bool operator==(const ConstraintPhrase&, const ConstraintPhrase&) = default;
};

inline std::size_t total_constraint_tokens(std::span<const ConstraintPhrase> phrases) {
  std::size_t total = 0;
  for (const auto& p : phrases) total += p.tokens.size();
  return total;
}

// True when `needle` occurs as a contiguous run inside `haystack`.
template <typename T>
bool contains_run(std::span<const T> haystack, std::span<const T> needle) {
  if (needle.empty()) return true;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

// Shortest decimal text that parses back to the identical double.
inline std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

inline double parse_double(std::string_view text) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ParseError("invalid number '" + std::string(text) + "'");
  }
  return value;
}

inline long long parse_int(std::string_view text) {
  long long value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ParseError("invalid integer '" + std::string(text) + "'");
  }
  return value;
}

// FNV-1a, 64 bit. Stable across platforms, used for cache keys.
class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      hash_ ^= c;
      hash_ *= 0x100000001b3ULL;
    }
  }
  // Length-prefixed so that ("ab","c") and ("a","bc") differ.
  void update_field(std::string_view bytes) {
    update(std::to_string(bytes.size()));
    update(":");
    update(bytes);
  }
  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace dagfsa

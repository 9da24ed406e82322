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

#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dagfsa/common.hpp"

namespace dagfsa {

// U+2581, the SentencePiece word-start mark.
inline constexpr std::string_view kDefaultSowMark = "\xE2\x96\x81";

// Maps dense token ids to surface strings. The start-of-word mark is the
// prefix that stands for a preceding space.
class TokenTable {
 public:
  TokenTable() = default;

  TokenTable(std::vector<std::string> surfaces, std::string sow_mark, TokenId eos, TokenId sos)
      : surfaces_(std::move(surfaces)), sow_mark_(std::move(sow_mark)), eos_(eos), sos_(sos) {
    if (sow_mark_.empty()) throw ParseError("token table: empty start-of-word mark");
    for (std::size_t i = 0; i < surfaces_.size(); ++i) {
      const auto& s = surfaces_[i];
      if (s.empty()) throw ParseError("token table: empty surface for id " + std::to_string(i));
      if (!index_.emplace(s, static_cast<TokenId>(i)).second) {
        throw ParseError("token table: duplicate surface '" + s + "'");
      }
      max_surface_bytes_ = std::max(max_surface_bytes_, s.size());
    }
    auto check = [&](TokenId id, const char* what) {
      if (id < 0 || static_cast<std::size_t>(id) >= surfaces_.size()) {
        throw ParseError(std::string("token table: invalid ") + what + " id " + std::to_string(id));
      }
    };
    check(eos_, "eos");
    check(sos_, "sos");
  }

  std::size_t size() const { return surfaces_.size(); }
  const std::string& surface(TokenId id) const { return surfaces_.at(static_cast<std::size_t>(id)); }
  const std::string& sow_mark() const { return sow_mark_; }
  TokenId eos() const { return eos_; }
  TokenId sos() const { return sos_; }
  std::size_t max_surface_bytes() const { return max_surface_bytes_; }
  bool contains(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < surfaces_.size();
  }

  std::optional<TokenId> find(std::string_view surface) const {
    auto it = index_.find(std::string(surface));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Joins surfaces, turning each start-of-word mark into a space. Sequence
  // markers (sos/eos) are dropped and leading spaces trimmed.
  std::string detokenize(std::span<const TokenId> tokens) const {
    std::string joined;
    for (TokenId t : tokens) {
      if (t == eos_ || t == sos_) continue;
      joined += surface(t);
    }
    std::string out;
    out.reserve(joined.size());
    for (std::size_t i = 0; i < joined.size();) {
      if (joined.compare(i, sow_mark_.size(), sow_mark_) == 0) {
        out += ' ';
        i += sow_mark_.size();
      } else {
        out += joined[i++];
      }
    }
    auto first = out.find_first_not_of(' ');
    return first == std::string::npos ? std::string() : out.substr(first);
  }

  friend bool operator==(const TokenTable& a, const TokenTable& b) {
    return a.surfaces_ == b.surfaces_ && a.sow_mark_ == b.sow_mark_ && a.eos_ == b.eos_ &&
           a.sos_ == b.sos_;
  }

 private:
  std::vector<std::string> surfaces_;
  std::string sow_mark_{kDefaultSowMark};
  TokenId eos_ = 0;
  TokenId sos_ = 0;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t max_surface_bytes_ = 0;
};

// Text format:
//   #version 1
//   #sow <mark>
//   #eos <id>
//   #sos <id>
//   <id>\t<surface>      (one per token, ids dense 0..N-1)
inline TokenTable load_token_table(std::istream& in) {
  std::string sow(kDefaultSowMark);
  std::optional<TokenId> eos, sos;
  std::vector<std::optional<std::string>> slots;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto where = [&] { return " (line " + std::to_string(line_no) + ")"; };
    if (line[0] == '#') {
      auto space = line.find(' ');
      std::string key = line.substr(1, space == std::string::npos ? std::string::npos : space - 1);
      std::string value = space == std::string::npos ? "" : line.substr(space + 1);
      if (key == "version") {
        if (value != "1") throw ParseError("token table: unsupported version '" + value + "'" + where());
      } else if (key == "sow") {
        sow = value;
      } else if (key == "eos") {
        eos = static_cast<TokenId>(parse_int(value));
      } else if (key == "sos") {
        sos = static_cast<TokenId>(parse_int(value));
      } else {
        throw ParseError("token table: unknown header '#" + key + "'" + where());
      }
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("token table: expected id<TAB>surface" + where());
    long long id = parse_int(std::string_view(line).substr(0, tab));
    if (id < 0 || id > 100000000) throw ParseError("token table: id out of range" + where());
    if (static_cast<std::size_t>(id) >= slots.size()) slots.resize(static_cast<std::size_t>(id) + 1);
    if (slots[static_cast<std::size_t>(id)]) throw ParseError("token table: duplicate id" + where());
    slots[static_cast<std::size_t>(id)] = line.substr(tab + 1);
  }
  std::vector<std::string> surfaces;
  surfaces.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) throw ParseError("token table: ids not dense, missing id " + std::to_string(i));
    surfaces.push_back(std::move(*slots[i]));
  }
  if (!eos || !sos) throw ParseError("token table: missing #eos or #sos header");
  return TokenTable(std::move(surfaces), sow, *eos, *sos);
}

inline void save_token_table(std::ostream& out, const TokenTable& table) {
  out << "#version 1\n#sow " << table.sow_mark() << "\n#eos " << table.eos() << "\n#sos "
      << table.sos() << "\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << i << '\t' << table.surface(static_cast<TokenId>(i)) << '\n';
  }
}

}  // namespace dagfsa

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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "dagfsa/metrics.hpp"
#include "support/paths.hpp"

namespace dagfsa {
namespace {

EvalRecord rec(std::string out, std::vector<std::string> values = {}, std::vector<std::string> refs = {}) {
  return {std::move(out), std::move(values), std::move(refs)};
}

TEST(Slots, Examples) {
  std::vector<EvalRecord> rs{rec("Call 555-1234 now", {"555-1234"}), rec("Call now", {"555-1234"})};
  EXPECT_DOUBLE_EQ(slot_error_rate(rs), 0.5);
  std::vector<EvalRecord> none{rec("anything")};
  EXPECT_EQ(slot_error_rate(none), 0.0);
  EXPECT_EQ(slot_error_rate({}), 0.0);
}

TEST(Slots, PerSlotAndPerResponseDiffer) {
  std::vector<EvalRecord> rs{rec("a b", {"a", "c", "d"}), rec("x", {"x"})};
  EXPECT_DOUBLE_EQ(slot_error_rate(rs), 0.5);
  EXPECT_DOUBLE_EQ(response_slot_error_rate(rs), 0.5);
  std::vector<EvalRecord> rs2{rec("a", {"a", "b"}), rec("x", {"x"}), rec("y", {"y"}), rec("z", {"z"})};
  EXPECT_DOUBLE_EQ(slot_error_rate(rs2), 0.2);
  EXPECT_DOUBLE_EQ(response_slot_error_rate(rs2), 0.25);
}

TEST(Eor, QuarterOfRecords) {
  std::vector<EvalRecord> rs{rec("hong kong", {"hong kong"}), rec("new york", {"new york"}), rec("paris", {}),
                             rec("a photo", {"photosynthesis"})};
  EXPECT_DOUBLE_EQ(exact_occurrence_error_rate(rs), 0.25);
}

TEST(Neo, FlagsMisspelling) {
  std::vector<std::string> corpus{"Cambridge is nice.", "Call now!"};
  auto vocab = build_eval_vocabulary(corpus);
  EXPECT_TRUE(vocab.words.contains("Cambridge"));
  EXPECT_TRUE(vocab.words.contains("nice"));
  EXPECT_EQ(oov_words("Cambrige is nice", vocab), (std::vector<std::string>{"Cambrige"}));
  EXPECT_TRUE(oov_words("Call 555-1234, now.", vocab).empty());
  EXPECT_TRUE(oov_words("(Cambridge) 10:30 ...", vocab).empty());
  std::vector<EvalRecord> rs{rec("Cambrige is nice"), rec("Cambridge is nice")};
  EXPECT_DOUBLE_EQ(neologism_rate(rs, vocab), 0.5);
}

TEST(Neo, RequiredValueWordsAreInVocabulary) {
  std::vector<EvalRecord> rs{rec("meet at Zanzibar", {"Zanzibar", "gate 12"})};
  std::vector<std::string> corpus{"meet at"};
  auto vocab = build_eval_vocabulary(corpus, rs);
  EXPECT_TRUE(vocab.words.contains("Zanzibar"));
  EXPECT_TRUE(vocab.words.contains("gate"));
  EXPECT_FALSE(vocab.words.contains("12"));
  EXPECT_EQ(neologism_rate(rs, vocab), 0.0);
}

TEST(Numbers, Classification) {
  EXPECT_TRUE(is_numeric_word("555-1234"));
  EXPECT_TRUE(is_numeric_word("10:30"));
  EXPECT_TRUE(is_numeric_word("3.5"));
  EXPECT_FALSE(is_numeric_word("-"));
  EXPECT_FALSE(is_numeric_word("12a"));
}

TEST(Bp, Shape) {
  std::vector<int> c{10}, r{10};
  EXPECT_EQ(brevity_penalty(std::span<const int>(c), std::span<const int>(r)), 1.0);
  std::vector<int> half{5};
  EXPECT_NEAR(brevity_penalty(std::span<const int>(half), std::span<const int>(r)), std::exp(-1.0), 1e-12);
  std::vector<int> longer{12};
  EXPECT_EQ(brevity_penalty(std::span<const int>(longer), std::span<const int>(r)), 1.0);
  EXPECT_THROW(brevity_penalty(std::span<const int>(), std::span<const int>()), std::invalid_argument);
  std::vector<int> zero{0};
  EXPECT_THROW(brevity_penalty(std::span<const int>(zero), std::span<const int>(r)), std::invalid_argument);
  EXPECT_THROW(brevity_penalty(std::span<const int>(c), std::span<const int>()),
               std::invalid_argument);
}

TEST(Bp, ClosestReferenceTiesToShorter) {
  std::vector<int> c{6};
  std::vector<std::vector<int>> refs{{4, 8}};
  EXPECT_EQ(brevity_penalty(c, refs), 1.0);  // 4 and 8 tie, 4 chosen
  std::vector<std::vector<int>> refs2{{9, 7}};
  EXPECT_NEAR(brevity_penalty(c, refs2), std::exp(1.0 - 7.0 / 6.0), 1e-12);
}

std::vector<EvalRecord> frozen_records() {
  std::ifstream in(testing::fixture_path("metrics_corpus.jsonl"));
  return load_eval_records(in);
}

EvalVocabulary frozen_vocab(std::span<const EvalRecord> records) {
  std::ifstream in(testing::fixture_path("metrics_vocab.txt"));
  auto lines = read_lines(in);
  return build_eval_vocabulary(lines, records);
}

TEST(Report, MatchesFrozenReference) {
  auto records = frozen_records();
  auto vocab = frozen_vocab(records);
  auto rep = evaluate_records(records, &vocab);
  auto expected = testing::read_json(testing::fixture_path("metrics_expected.json"));
  EXPECT_EQ(rep.records, expected["records"].get<std::size_t>());
  EXPECT_DOUBLE_EQ(rep.ser, expected["ser"].get<double>());
  EXPECT_DOUBLE_EQ(rep.ser_response, expected["ser_response"].get<double>());
  EXPECT_DOUBLE_EQ(rep.eor, expected["eor"].get<double>());
  ASSERT_TRUE(rep.neo && rep.bp);
  EXPECT_DOUBLE_EQ(*rep.neo, expected["neo"].get<double>());
  EXPECT_NEAR(*rep.bp, expected["bp"].get<double>(), 1e-9);
}

TEST(Report, PermutationInvariant) {
  auto records = frozen_records();
  auto vocab = frozen_vocab(records);
  auto base = evaluate_records(records, &vocab);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(records.begin(), records.end(), rng);
    auto rep = evaluate_records(records, &vocab);
    EXPECT_NEAR(rep.ser, base.ser, 1e-12);
    EXPECT_NEAR(rep.eor, base.eor, 1e-12);
    EXPECT_NEAR(*rep.neo, *base.neo, 1e-12);
    EXPECT_NEAR(*rep.bp, *base.bp, 1e-12);
  }
}

TEST(Report, OptionalFields) {
  std::vector<EvalRecord> rs{rec("a b", {"a"}), rec("c", {}, {"c d"})};
  auto rep = evaluate_records(rs, nullptr);
  EXPECT_FALSE(rep.neo.has_value());
  EXPECT_FALSE(rep.bp.has_value());
  auto j = report_to_json(rep);
  EXPECT_TRUE(j["neo"].is_null());
  EXPECT_TRUE(j["bp"].is_null());
  EXPECT_EQ(j["records"], 2);
}

TEST(Report, BadJsonLine) {
  std::istringstream in("{\"output\": \"x\"}\n{oops\n");
  try {
    load_eval_records(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

}  // namespace
}  // namespace dagfsa

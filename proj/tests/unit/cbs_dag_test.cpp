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

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "dagfsa/cbs_dag.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

namespace dagfsa {
namespace {

TEST(Greedy, FollowsArgmaxes) {
  // 0 -> {1: 0.7, 2: 0.3}; greedy never visits 2.
  std::vector<Vertex> vs{
      {{{5, std::log(0.9)}, {4, std::log(0.1)}}, {{1, std::log(0.7)}, {2, std::log(0.3)}}},
      {{{3, std::log(0.4)}, {8, std::log(0.6)}}, {{3, 0.0}}},
      {{{9, 0.0}}, {{3, 0.0}}},
      {{{1, 0.0}}, {}}};
  Dag d(std::move(vs));
  auto r = greedy_decode(d);
  EXPECT_EQ(r.tokens, (std::vector<TokenId>{5, 8}));
  EXPECT_NEAR(r.cost, -(std::log(0.9) + std::log(0.7) + std::log(0.6)), 1e-12);
}

TEST(Greedy, Tiny4) {
  std::ifstream in(testing::fixture_path("tiny4.json"));
  auto d = load_dag(in);
  auto expected = testing::read_json(testing::fixture_path("tiny4_expected.json"));
  EXPECT_EQ(greedy_decode(d).tokens, expected["greedy"].get<std::vector<TokenId>>());
}

TEST(CbsDag, BeamOneMatchesGreedy) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    Dag d = oracle::random_dag(rng, 10, 4, 12);
    auto g = greedy_decode(d);
    auto b = cbs_dag_decode(d, {}, 1);
    EXPECT_EQ(b.tokens, g.tokens) << "instance " << i;
    EXPECT_NEAR(b.cost, g.cost, 1e-9);
  }
}

TEST(CbsDag, UnconstrainedWideBeamNeverWorseThanGreedy) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 50; ++i) {
    Dag d = oracle::random_dag(rng, 8, 3, 6);
    auto b = cbs_dag_decode(d, {}, 64);
    EXPECT_LE(b.cost, greedy_decode(d).cost + 1e-9);
    EXPECT_NEAR(b.cost, oracle::best_dag_path(d).cost, 1e-9);
  }
}

TEST(CbsDag, EffectiveBeam) {
  std::vector<ConstraintPhrase> cs{{{1, 2, 3}, "x"}, {{4, 5}, "y"}};
  EXPECT_EQ(effective_beam_size(4, cs), 6);
  EXPECT_EQ(effective_beam_size(9, cs), 9);
  EXPECT_EQ(effective_beam_size(2, {}), 2);
}

TEST(CbsDag, FindsPhraseOffTheArgmaxPath) {
  // Argmax path emits 5 then 8; token 7 is only reachable through vertex 2.
  std::vector<Vertex> vs{
      {{{5, std::log(0.9)}, {4, std::log(0.1)}}, {{1, std::log(0.7)}, {2, std::log(0.3)}}},
      {{{8, std::log(0.6)}, {3, std::log(0.4)}}, {{3, 0.0}}},
      {{{7, std::log(0.2)}, {9, std::log(0.8)}}, {{3, 0.0}}},
      {{{1, 0.0}}, {}}};
  Dag d(std::move(vs));
  EXPECT_FALSE(oracle::contains_naive(greedy_decode(d).tokens, {7}));
  std::vector<ConstraintPhrase> cs{{{7}, "x"}};
  auto r = cbs_dag_decode(d, cs, 1);
  EXPECT_EQ(r.status, DecodeStatus::kOk);
  EXPECT_EQ(r.tokens, (std::vector<TokenId>{5, 7}));
  EXPECT_EQ(r.constraints_satisfied, std::vector<bool>{true});
}

TEST(CbsDag, UnmetConstraintsAreFlagged) {
  std::vector<Vertex> vs{{{{5, 0.0}}, {{1, 0.0}}}, {{{1, 0.0}}, {}}};
  Dag d(std::move(vs));
  std::vector<ConstraintPhrase> cs{{{6}, "y"}};
  auto r = cbs_dag_decode(d, cs, 3);
  EXPECT_EQ(r.status, DecodeStatus::kConstraintsUnmet);
  EXPECT_EQ(r.tokens, std::vector<TokenId>{5});
  EXPECT_EQ(r.constraints_satisfied, std::vector<bool>{false});
}

TEST(CbsDag, PlantedConstraintsFlagsAreHonest) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto f = fixtures::make_planted(seed, {});
    PruneConfig cfg;
    cfg.constraints = f.phrases;
    Dag pruned = prune_dag(f.dag, cfg);
    auto r = cbs_dag_decode(pruned, f.phrases, 5);
    for (std::size_t c = 0; c < f.phrases.size(); ++c) {
      EXPECT_EQ(r.constraints_satisfied[c], oracle::contains_naive(r.tokens, f.phrases[c].tokens)) << "seed " << seed;
    }
    const bool all = std::all_of(r.constraints_satisfied.begin(), r.constraints_satisfied.end(), [](bool b) { return b; });
    EXPECT_EQ(r.status == DecodeStatus::kOk, all) << "seed " << seed;
  }
}

TEST(CbsDag, BankInvariants) {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    auto f = fixtures::make_planted(seed, {});
    PruneConfig cfg;
    cfg.constraints = f.phrases;
    Dag pruned = prune_dag(f.dag, cfg);
    std::vector<KmpMatcher> matchers;
    for (const auto& p : f.phrases) matchers.emplace_back(p.tokens);
    const int k = effective_beam_size(3, f.phrases);
    int steps = 0;
    CbsObserver obs;
    obs.on_step = [&](std::span<const BeamItem> beam) {
      ++steps;
      EXPECT_LE(static_cast<int>(beam.size()), k);
      std::set<std::pair<VertexId, int>> keys;
      for (const auto& item : beam) {
        int met = 0;
        for (const auto& m : matchers) met += m.run(item.tokens);
        EXPECT_EQ(item.met_tokens, met);
        EXPECT_TRUE(keys.insert({item.vertex, item.met_tokens}).second);
      }
    };
    cbs_dag_decode(pruned, f.phrases, 3, &obs);
    EXPECT_GT(steps, 0);
  }
}

TEST(CbsDag, FlagsImplySubstring) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    Dag d = oracle::random_dag(rng, 8, 3, 5);
    std::vector<ConstraintPhrase> cs{{{static_cast<TokenId>(i % 5)}, "a"},
                                     {{static_cast<TokenId>((i + 1) % 5), static_cast<TokenId>(i % 5)}, "b"}};
    auto r = cbs_dag_decode(d, cs, 2);
    ASSERT_EQ(r.constraints_satisfied.size(), 2u);
    for (std::size_t c = 0; c < cs.size(); ++c) {
      EXPECT_EQ(r.constraints_satisfied[c], oracle::contains_naive(r.tokens, cs[c].tokens));
    }
    if (r.status == DecodeStatus::kOk) {
      EXPECT_TRUE(r.constraints_satisfied[0] && r.constraints_satisfied[1]);
    }
  }
}

TEST(CbsDag, RejectsZeroBeam) { EXPECT_THROW(cbs_dag_decode(fixtures::make_planted(1, {}).dag, {}, 0), std::invalid_argument); }

}  // namespace
}  // namespace dagfsa

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

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dagfsa/dagfsa.hpp"
#include "support/fixtures.hpp"
#include "support/paths.hpp"

namespace dagfsa {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  std::string cmd = std::string("'") + DAGFSA_CLI + "' " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<nlohmann::json> json_lines(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("dagfsa_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& content) {
    auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return "'" + p.string() + "'";
  }
  std::string path(const std::string& name) const { return "'" + (dir_ / name).string() + "'"; }

  std::string tokens() const { return "'" + testing::fixture_path("toy.tokens") + "'"; }
  std::string tiny4() const { return "'" + testing::fixture_path("tiny4.json") + "'"; }

  fs::path dir_;
};

TEST_F(Cli, ShortestOnTiny4MatchesLibrary) {
  auto r = run("decode --dag " + tiny4() + " --tokens " + tokens() + " --mode wfsa-shortest --ke 2 --kt 2");
  ASSERT_EQ(r.code, 0);
  auto j = json_lines(r.out).at(0);
  std::ifstream in(testing::fixture_path("tiny4.json"));
  auto sp = shortest_path(dag_to_wfsa(load_dag(in), {2, 2, {}}));
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["tokens"].get<std::vector<TokenId>>(), std::vector<TokenId>(sp.labels.begin(), sp.labels.end()));
  EXPECT_DOUBLE_EQ(j["cost"].get<double>(), sp.cost);
  EXPECT_TRUE(j.contains("wall_ms"));
}

TEST_F(Cli, OutputIsBitIdenticalWithoutTiming) {
  const std::string args = "decode --dag " + tiny4() + " --tokens " + tokens() + " --mode beam --omit-timing";
  auto a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_FALSE(json_lines(a.out).at(0).contains("wall_ms"));
}

TEST_F(Cli, UnreachablePhraseExitsTwo) {
  auto c = write("c.jsonl", "{\"phrases\": [\"hong kong\"]}\n");
  auto r = run("decode --dag " + tiny4() + " --tokens " + tokens() + " --mode hlc --constraints " + c);
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json_lines(r.out).at(0)["status"], "empty_intersection");
}

TEST_F(Cli, ErrorsExitOne) {
  EXPECT_EQ(run("decode --dag " + path("nope.json") + " --tokens " + tokens()).code, 1);
  EXPECT_EQ(run("decode --dag " + tiny4() + " --tokens " + tokens() + " --mode hlc").code, 1);
  EXPECT_EQ(run("decode --dag " + tiny4() + " --tokens " + tokens() + " --mode lc").code, 1);
  EXPECT_EQ(run("decode --dag " + tiny4() + " --tokens " + tokens() + " --mode sideways").code, 1);
  auto bad = write("bad.json", "{\"num_vertices\": 2");
  EXPECT_EQ(run("decode --dag " + bad + " --tokens " + tokens()).code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
}

TEST_F(Cli, ControlDagOnPlantedFixture) {
  fixtures::PlantOptions opt;
  opt.vocab_safe = true;
  auto f = fixtures::make_planted(3, opt);
  auto dag = write("d.json", serialize_dag(f.dag));
  std::ostringstream lex;
  write_lines(lex, f.dictionary);
  auto dict = write("dict.txt", lex.str());
  nlohmann::json c{{"phrases", f.phrase_surfaces}, {"entities", f.entities}};
  auto cons = write("c.jsonl", c.dump() + "\n");
  auto r = run("decode --dag " + dag + " --tokens " + tokens() + " --mode control-dag --constraints " + cons +
               " --lexicon " + dict + " --lexicon-cache " + path("lex.cache") + " --target-len " +
               std::to_string(f.planted_length - 1));
  ASSERT_EQ(r.code, 0) << r.out;
  auto j = json_lines(r.out).at(0);
  for (const auto& flag : j["constraints_satisfied"]) EXPECT_TRUE(flag.get<bool>());
  EXPECT_LE(j["length"].get<int>(), j["upper_length"].get<int>());
  ASSERT_TRUE(fs::exists(dir_ / "lex.cache"));
  // Second run reads the cache and produces the same answer.
  auto again = run("decode --dag " + dag + " --tokens " + tokens() + " --mode control-dag --constraints " + cons +
                   " --lexicon " + dict + " --lexicon-cache " + path("lex.cache") + " --target-len " +
                   std::to_string(f.planted_length - 1) + " --omit-timing");
  auto j2 = json_lines(again.out).at(0);
  EXPECT_EQ(j2["tokens"], j["tokens"]);
}

TEST_F(Cli, BatchWritesOneLinePerJobPlusSummary) {
  std::ostringstream manifest;
  for (int i = 0; i < 3; ++i) {
    auto f = fixtures::make_planted(static_cast<std::uint64_t>(60 + i), {});
    write("d" + std::to_string(i) + ".json", serialize_dag(f.dag));
    nlohmann::json line{{"id", "j" + std::to_string(i)}, {"dag", "d" + std::to_string(i) + ".json"},
                        {"phrases", f.phrase_surfaces}};
    manifest << line.dump() << '\n';
  }
  auto m = write("manifest.jsonl", manifest.str());
  auto seq = run("batch --manifest " + m + " --tokens " + tokens() + " --mode hlc --parallel 1 --omit-timing");
  auto par = run("batch --manifest " + m + " --tokens " + tokens() + " --mode hlc --parallel 4 --omit-timing");
  ASSERT_EQ(seq.code, 0);
  auto lines = json_lines(seq.out);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_TRUE(lines.back().contains("summary"));
  EXPECT_EQ(lines.back()["summary"]["ser"], 0.0);
  EXPECT_EQ(seq.out, par.out);
}

TEST_F(Cli, LexiconMatchesFrozenReference) {
  auto r = run("lexicon --corpus '" + testing::fixture_path("lexicon_corpus.txt") + "' --cutoff 0.9");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, testing::read_file(testing::fixture_path("lexicon_expected_090.txt")));
}

TEST_F(Cli, FitLength) {
  auto pairs = write("pairs.txt", "1 2\n2 4\n3 6\n");
  auto r = run("fit-length --pairs " + pairs);
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  auto p = load_length_predictor(in);
  EXPECT_NEAR(p.slope, 2.0, 1e-12);
  EXPECT_NEAR(p.intercept, 0.0, 1e-12);
  EXPECT_EQ(run("fit-length --pairs " + write("flat.txt", "3 1\n3 2\n")).code, 1);

  // The predictor drives lc decoding.
  auto pred = write("pred.txt", r.out);
  auto d = run("decode --dag " + tiny4() + " --tokens " + tokens() + " --mode lc --len-predictor " + pred +
               " --input-len 1");
  EXPECT_EQ(d.code, 0);
  EXPECT_EQ(json_lines(d.out).at(0)["mode"], "lc");
}

TEST_F(Cli, EvaluateMatchesFrozenReference) {
  auto r = run("evaluate --records '" + testing::fixture_path("metrics_corpus.jsonl") + "' --eval-vocab '" +
               testing::fixture_path("metrics_vocab.txt") + "'");
  ASSERT_EQ(r.code, 0);
  auto j = json_lines(r.out).at(0);
  auto expected = testing::read_json(testing::fixture_path("metrics_expected.json"));
  for (const char* key : {"ser", "ser_response", "eor", "neo", "records"}) EXPECT_EQ(j[key], expected[key]) << key;
  EXPECT_NEAR(j["bp"].get<double>(), expected["bp"].get<double>(), 1e-9);
}

TEST_F(Cli, SynthIsDeterministic) {
  auto a = run("synth --seed 9 --vertices 32");
  auto b = run("synth --seed 9 --vertices 32");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  auto d = dag_from_json(nlohmann::json::parse(a.out));
  EXPECT_EQ(d.num_vertices(), 32);
  EXPECT_NE(run("synth --seed 10 --vertices 32").out, a.out);
}

}  // namespace
}  // namespace dagfsa

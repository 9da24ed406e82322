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


// dagfsa command-line tool. Exit codes: 0 success, 2 the decode produced no
// result (empty constraint product, no candidate within the length window,
// or unmet beam-search constraints), 1 usage, I/O or parse errors.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dagfsa/dagfsa.hpp"

namespace {

using namespace dagfsa;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoResult = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::vector<std::string> read_lines_file(const std::string& path) {
  auto in = open_in(path);
  return read_lines(in);
}

// Writes to --out when given, else stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw std::runtime_error("write failed");
  }

 private:
  std::ofstream file_;
};

struct LexiconArgs {
  std::string lexicon;  // dictionary, one word per line
  std::string specials;
  std::string cache;
};

struct LengthArgs {
  std::optional<int> target_len;
  std::string predictor;
  std::optional<int> input_len;
  std::optional<int> upper;
  double strictness = 1.0;
  double edge_prune_p = 0.7;
};

struct PruneArgs {
  int k_e = 3;
  int k_t = 3;
  int beam = 5;
};

void add_lexicon_flags(CLI::App* cmd, LexiconArgs& a) {
  cmd->add_option("--lexicon", a.lexicon, "Dictionary file, one word per line");
  cmd->add_option("--specials", a.specials, "Special tokens file (default: punctuation, sos, eos, word mark)");
  cmd->add_option("--lexicon-cache", a.cache, "Static lexicon cache file, rebuilt when stale");
}

void add_length_flags(CLI::App* cmd, LengthArgs& a) {
  cmd->add_option("--target-len", a.target_len, "Target length")->check(CLI::PositiveNumber);
  cmd->add_option("--len-predictor", a.predictor, "Length predictor file (slope, intercept)");
  cmd->add_option("--input-len", a.input_len, "Input length fed to the predictor")->check(CLI::NonNegativeNumber);
  cmd->add_option("--len-upper", a.upper, "Upper length bound")->check(CLI::PositiveNumber);
  cmd->add_option("--strictness", a.strictness, "Length penalty strictness")->capture_default_str();
  cmd->add_option("--edge-prune-p", a.edge_prune_p, "DFS-Viterbi edge mass threshold")
      ->check(CLI::Range(1e-9, 1.0))
      ->capture_default_str();
}

void add_prune_flags(CLI::App* cmd, PruneArgs& a) {
  cmd->add_option("--ke", a.k_e, "Emissions kept per vertex")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--kt", a.k_t, "Transitions kept per vertex")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--beam", a.beam, "Beam size for beam and cbs-dag")->check(CLI::PositiveNumber)->capture_default_str();
}

std::shared_ptr<const StaticLexicon> load_lexicon(const LexiconArgs& a, const TokenTable& table) {
  if (a.lexicon.empty()) return nullptr;
  auto dictionary = read_lines_file(a.lexicon);
  auto specials = a.specials.empty() ? default_specials(table) : read_lines_file(a.specials);
  const auto hash = lexicon_hash(dictionary, specials, table);
  if (!a.cache.empty() && std::filesystem::exists(a.cache)) {
    auto in = open_in(a.cache);
    if (auto cached = load_static_lexicon(in, hash)) return std::make_shared<const StaticLexicon>(std::move(*cached));
  }
  auto lex = std::make_shared<const StaticLexicon>(build_static_lexicon(dictionary, specials, table));
  if (!a.cache.empty()) {
    std::ofstream out(a.cache, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + a.cache);
    save_static_lexicon(out, *lex);
  }
  return lex;
}

std::optional<LengthPredictor> load_predictor(const std::string& path) {
  if (path.empty()) return std::nullopt;
  auto in = open_in(path);
  return load_length_predictor(in);
}

TokenTable load_tokens(const std::string& path) {
  auto in = open_in(path);
  return load_token_table(in);
}

// ---------------------------------------------------------------------------

struct DecodeArgs {
  std::string dag, tokens, mode = "wfsa-shortest", constraints, out;
  LexiconArgs lexicon;
  LengthArgs length;
  PruneArgs prune;
  bool omit_timing = false;
};

int cmd_decode(const DecodeArgs& a) {
  const DecodeMode mode = parse_decode_mode(a.mode);
  if ((mode == DecodeMode::kHlc || mode == DecodeMode::kCbsDag) && a.constraints.empty()) {
    throw UsageError(std::string("mode ") + to_string(mode) + " requires --constraints");
  }
  if (uses_vocabulary(mode) && a.lexicon.lexicon.empty()) {
    throw UsageError(std::string("mode ") + to_string(mode) + " requires --lexicon");
  }
  const TokenTable table = load_tokens(a.tokens);
  Dag dag = [&] {
    auto in = open_in(a.dag);
    return load_dag(in);
  }();
  InputConstraints ic;
  if (!a.constraints.empty()) {
    auto in = open_in(a.constraints);
    ic = load_input_constraints(in);
  }

  DecodeRequest req;
  req.mode = mode;
  req.phrases = tokenize_phrases(ic.phrases, table);
  req.entities = ic.entities;
  req.k_e = a.prune.k_e;
  req.k_t = a.prune.k_t;
  req.beam = a.prune.beam;
  if (uses_vocabulary(mode)) req.lexicon = load_lexicon(a.lexicon, table);
  if (uses_length(mode)) {
    std::optional<int> target = a.length.target_len;
    if (!target) {
      auto pred = load_predictor(a.length.predictor);
      if (pred && a.length.input_len) target = predict_target_length(*pred, *a.length.input_len);
    }
    if (!target) {
      throw UsageError(std::string("mode ") + to_string(mode) +
                       " requires --target-len or --len-predictor with --input-len");
    }
    LcConfig lc;
    lc.target_length = *target;
    lc.strictness = a.length.strictness;
    lc.edge_prune_p = a.length.edge_prune_p;
    lc.upper_length = a.length.upper;
    req.length = lc;
  }

  auto outcome = run_decode(dag, table, req);
  Output out(a.out);
  out.stream() << outcome_to_json(outcome, mode, !a.omit_timing).dump() << '\n';
  out.finish();
  return outcome.result.status == DecodeStatus::kOk ? kExitOk : kExitNoResult;
}

// ---------------------------------------------------------------------------

struct BatchArgs {
  std::string manifest, tokens, mode = "wfsa-shortest", eval_vocab, out;
  LexiconArgs lexicon;
  LengthArgs length;
  PruneArgs prune;
  int parallel = 1;
  bool omit_timing = false;
};

int cmd_batch(const BatchArgs& a) {
  const DecodeMode mode = parse_decode_mode(a.mode);
  if (uses_vocabulary(mode) && a.lexicon.lexicon.empty()) {
    throw UsageError(std::string("mode ") + to_string(mode) + " requires --lexicon");
  }
  const TokenTable table = load_tokens(a.tokens);
  std::vector<BatchJob> jobs;
  {
    auto in = open_in(a.manifest);
    jobs = load_manifest(in, std::filesystem::path(a.manifest).parent_path());
  }

  BatchOptions opt;
  opt.mode = mode;
  opt.table = &table;
  if (uses_vocabulary(mode)) opt.lexicon = load_lexicon(a.lexicon, table);
  opt.k_e = a.prune.k_e;
  opt.k_t = a.prune.k_t;
  opt.beam = a.prune.beam;
  opt.target_length = a.length.target_len;
  opt.predictor = load_predictor(a.length.predictor);
  opt.strictness = a.length.strictness;
  opt.edge_prune_p = a.length.edge_prune_p;
  opt.upper_length = a.length.upper;
  opt.parallelism = a.parallel;
  opt.with_timing = !a.omit_timing;

  // NEO vocabulary: --eval-vocab, else the decoding dictionary; both are
  // extended with the words of every job's phrases and entities.
  std::optional<EvalVocabulary> vocab;
  std::string vocab_path = a.eval_vocab.empty() ? a.lexicon.lexicon : a.eval_vocab;
  if (!vocab_path.empty()) {
    auto corpus = read_lines_file(vocab_path);
    for (const auto& j : jobs) {
      corpus.insert(corpus.end(), j.constraints.phrases.begin(), j.constraints.phrases.end());
      corpus.insert(corpus.end(), j.constraints.entities.begin(), j.constraints.entities.end());
    }
    vocab = build_eval_vocabulary(corpus);
    opt.eval_vocabulary = &*vocab;
  }

  auto result = run_batch(jobs, opt);
  Output out(a.out);
  for (const auto& line : result.results) out.stream() << line.dump() << '\n';
  out.stream() << result.summary.dump() << '\n';
  out.finish();
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_lexicon(const std::string& corpus, double cutoff, const std::string& out_path) {
  auto lines = read_lines_file(corpus);
  auto words = extract_lexicon(lines, cutoff);
  Output out(out_path);
  write_lines(out.stream(), words);
  out.finish();
  return kExitOk;
}

// Pairs file: one "input_length output_length" pair per line.
int cmd_fit_length(const std::string& pairs_path, const std::string& out_path) {
  std::vector<std::pair<double, double>> pairs;
  int line_no = 0;
  for (const auto& line : read_lines_file(pairs_path)) {
    ++line_no;
    std::istringstream ss(line);
    std::string x, y, extra;
    if (!(ss >> x >> y) || (ss >> extra)) {
      throw ParseError("pairs: line " + std::to_string(line_no) + ": expected two numbers");
    }
    pairs.push_back({parse_double(x), parse_double(y)});
  }
  auto pred = fit_length_predictor(pairs);
  Output out(out_path);
  save_length_predictor(out.stream(), pred);
  out.finish();
  return kExitOk;
}

int cmd_evaluate(const std::string& records_path, const std::string& vocab_path, const std::string& out_path) {
  std::vector<EvalRecord> records;
  {
    auto in = open_in(records_path);
    records = load_eval_records(in);
  }
  std::optional<EvalVocabulary> vocab;
  if (!vocab_path.empty()) vocab = build_eval_vocabulary(read_lines_file(vocab_path), records);
  auto rep = evaluate_records(records, vocab ? &*vocab : nullptr);
  Output out(out_path);
  out.stream() << report_to_json(rep).dump() << '\n';
  out.finish();
  return kExitOk;
}

struct SynthArgs {
  std::uint64_t seed = 1;
  int vertices = 16;
  int emission_degree = kSparseEmissionDegree;
  int transition_degree = kSparseTransitionDegree;
  double concentration = kSparseConcentration;
  int vocab = 64;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  Dag d = generate_synthetic_dag(a.seed, a.vertices, a.emission_degree, a.transition_degree, a.concentration,
                                 a.vocab);
  Output out(a.out);
  save_dag(out.stream(), d);
  out.finish();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained decoding of token lattices"};
  app.require_subcommand(1);

  DecodeArgs dec;
  auto* decode = app.add_subcommand("decode", "Decode one lattice");
  decode->add_option("--dag", dec.dag, "Lattice JSON")->required();
  decode->add_option("--tokens", dec.tokens, "Token table")->required();
  decode->add_option("--mode", dec.mode, "greedy|beam|cbs-dag|wfsa-shortest|hlc|vc|lc|control-dag")
      ->capture_default_str();
  decode->add_option("--constraints", dec.constraints, "Constraint file (JSON lines, first line used)");
  decode->add_option("--out", dec.out, "Output file (default stdout)");
  decode->add_flag("--omit-timing", dec.omit_timing, "Leave wall_ms out of the output");
  add_lexicon_flags(decode, dec.lexicon);
  add_length_flags(decode, dec.length);
  add_prune_flags(decode, dec.prune);

  BatchArgs bat;
  auto* batch = app.add_subcommand("batch", "Decode every job of a manifest and summarize");
  batch->add_option("--manifest", bat.manifest, "Manifest (JSON lines)")->required();
  batch->add_option("--tokens", bat.tokens, "Token table")->required();
  batch->add_option("--mode", bat.mode, "Decoding mode")->capture_default_str();
  batch->add_option("--eval-vocab", bat.eval_vocab, "Vocabulary for the neologism rate");
  batch->add_option("--parallel", bat.parallel, "Concurrent jobs")->check(CLI::PositiveNumber)->capture_default_str();
  batch->add_option("--out", bat.out, "Output file (default stdout)");
  batch->add_flag("--omit-timing", bat.omit_timing, "Leave timings out of the output");
  add_lexicon_flags(batch, bat.lexicon);
  add_length_flags(batch, bat.length);
  add_prune_flags(batch, bat.prune);

  std::string lex_corpus, lex_out;
  double lex_cutoff = 0.9;
  auto* lexicon = app.add_subcommand("lexicon", "Extract a dictionary from a text corpus");
  lexicon->add_option("--corpus", lex_corpus, "Corpus, one text per line")->required();
  lexicon->add_option("--cutoff", lex_cutoff, "Cumulative frequency cutoff")
      ->check(CLI::Range(1e-9, 1.0))
      ->capture_default_str();
  lexicon->add_option("--out", lex_out, "Output file (default stdout)");

  std::string fit_pairs, fit_out;
  auto* fit = app.add_subcommand("fit-length", "Fit a linear length predictor");
  fit->add_option("--pairs", fit_pairs, "Pairs file: 'input_len output_len' per line")->required();
  fit->add_option("--out", fit_out, "Output file (default stdout)");

  std::string ev_records, ev_vocab, ev_out;
  auto* evaluate = app.add_subcommand("evaluate", "Compute SER, EOR, NEO and BP over records");
  evaluate->add_option("--records", ev_records, "Records (JSON lines)")->required();
  evaluate->add_option("--eval-vocab", ev_vocab, "Vocabulary for the neologism rate");
  evaluate->add_option("--out", ev_out, "Output file (default stdout)");

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic lattice");
  synth->add_option("--seed", syn.seed, "Seed")->capture_default_str();
  synth->add_option("--vertices", syn.vertices, "Vertices")->check(CLI::Range(2, 1 << 20))->capture_default_str();
  synth->add_option("--emission-degree", syn.emission_degree)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--transition-degree", syn.transition_degree)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--concentration", syn.concentration)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--vocab", syn.vocab, "Vocabulary size")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--out", syn.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*decode) return cmd_decode(dec);
    if (*batch) return cmd_batch(bat);
    if (*lexicon) return cmd_lexicon(lex_corpus, lex_cutoff, lex_out);
    if (*fit) return cmd_fit_length(fit_pairs, fit_out);
    if (*evaluate) return cmd_evaluate(ev_records, ev_vocab, ev_out);
    if (*synth) return cmd_synth(syn);
  } catch (const std::exception& e) {
    std::cerr << "dagfsa: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

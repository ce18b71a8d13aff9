// Copyright 2026 The semsum Authors.
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
//
// Command-line surface: build-vocab, train, summarize, evaluate, ablate, and
// a standalone rouge scorer.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "semsum/checkpoint.hpp"
#include "semsum/config_io.hpp"
#include "semsum/corpus.hpp"
#include "semsum/decode.hpp"
#include "semsum/model.hpp"
#include "semsum/rouge.hpp"
#include "semsum/train.hpp"
#include "semsum/vocab.hpp"

namespace {

using namespace semsum;

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

/// The vocabulary next to a checkpoint unless one was named explicitly.
Vocabulary vocab_for_checkpoint(const std::string& ckpt_path, const std::string& vocab_flag) {
  if (!vocab_flag.empty()) return Vocabulary::load(vocab_flag);
  const auto sibling = std::filesystem::path(ckpt_path).parent_path() / "vocab.txt";
  if (!std::filesystem::exists(sibling)) {
    throw std::runtime_error("no vocabulary found at " + sibling.string() +
                             "; pass --vocab explicitly");
  }
  return Vocabulary::load(sibling.string());
}

/// Reconciles the configured vocab_size with the actual vocabulary: an
/// omitted key inherits the vocabulary's size, an explicit one must match.
void reconcile_vocab_size(ConfigFile& cfg, const Vocabulary& vocab) {
  if (!cfg.has("vocab_size")) {
    cfg.model.vocab_size = vocab.size();
    return;
  }
  if (cfg.model.vocab_size != vocab.size()) {
    throw std::runtime_error("config vocab_size=" + std::to_string(cfg.model.vocab_size) +
                             " does not match the vocabulary file (" +
                             std::to_string(vocab.size()) + " entries)");
  }
}

std::optional<int> min_score_option(int raw) {
  if (raw < 0) return std::nullopt;
  return raw;
}

int run_build_vocab(const std::string& corpus_path, const std::string& out_path, int max_size) {
  Vocabulary vocab = build_vocabulary_from_file(corpus_path, max_size);
  vocab.save(out_path);
  std::cerr << "wrote " << vocab.size() << " entries to " << out_path << "\n";
  return 0;
}

int run_train(const std::string& corpus_path, const std::string& vocab_path,
              const std::string& config_path, const std::string& out_dir, long seed_flag,
              const std::string& resume_path, int min_score_raw) {
  ConfigFile cfg = parse_config_file(config_path);
  Vocabulary vocab = Vocabulary::load(vocab_path);
  reconcile_vocab_size(cfg, vocab);
  if (seed_flag >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed_flag);
  cfg.train.corpus_path = corpus_path;
  cfg.train.vocab_path = vocab_path;
  cfg.train.checkpoint_dir = out_dir;

  LoadStats stats;
  CorpusSplit corpus = load_corpus(corpus_path, vocab, SplitRole::train,
                                   min_score_option(min_score_raw), cfg.limits, &stats);
  std::cerr << "loaded " << stats.kept << " pairs (" << stats.dropped_empty << " empty, "
            << stats.dropped_low_score << " low-score, " << stats.dropped_missing_score
            << " unscored dropped)\n";

  std::filesystem::create_directories(out_dir);
  vocab.save((std::filesystem::path(out_dir) / "vocab.txt").string());

  int start_epoch = 0;
  std::optional<ModelParams> params;
  std::optional<AdamState> adam;
  if (!resume_path.empty()) {
    CheckpointData data = read_checkpoint(resume_path);
    if (model_config_kv(data.config) != model_config_kv(cfg.model)) {
      throw std::runtime_error("checkpoint model configuration differs from " + config_path);
    }
    params.emplace(params_from_checkpoint(data));
    adam = adam_from_checkpoint(data, params->set);
    if (!adam.has_value()) adam = AdamState::for_params(params->set);
    start_epoch = epochs_from_checkpoint(data);
    std::cerr << "resuming after " << start_epoch << " epochs from " << resume_path << "\n";
  } else {
    params.emplace(cfg.model, cfg.train.seed);
    adam = AdamState::for_params(params->set);
  }

  TrainResult result = train(corpus, *params, cfg.train, *adam,
                             [](const TrainLogRecord& rec) {
                               std::cout << format_train_log_line(rec) << "\n";
                             },
                             start_epoch);
  std::cerr << "finished " << result.epochs_completed << " epochs, "
            << (result.records.empty() ? 0L : result.records.back().step) << " steps; checkpoint in "
            << out_dir << "/checkpoint-final.ckpt\n";
  return 0;
}

int run_summarize(const std::string& ckpt_path, const std::string& input_path,
                  const std::string& vocab_flag, int beam, int max_len, bool length_norm) {
  CheckpointData data = read_checkpoint(ckpt_path);
  ModelParams params = params_from_checkpoint(data);
  Vocabulary vocab = vocab_for_checkpoint(ckpt_path, vocab_flag);
  if (vocab.size() != params.config.vocab_size) {
    throw std::runtime_error("vocabulary size does not match the checkpoint");
  }
  IngestLimits limits;
  for (const std::string& line : read_lines(input_path)) {
    std::u32string text = utf8_decode(line);
    if (static_cast<int>(text.size()) > limits.max_source_chars) {
      text.resize(static_cast<std::size_t>(limits.max_source_chars));
    }
    if (text.empty()) {
      std::cout << "\n";
      continue;
    }
    const std::vector<int> source = vocab.encode(text);
    const std::vector<int> out =
        beam > 1 ? beam_decode(source, params, beam, max_len, length_norm)
                 : greedy_decode(source, params, max_len);
    std::cout << vocab.decode_utf8(out) << "\n";
  }
  return 0;
}

int run_evaluate(const std::string& ckpt_path, const std::string& corpus_path,
                 const std::string& vocab_flag, int beam, int max_len, int min_score_raw,
                 bool micro) {
  CheckpointData data = read_checkpoint(ckpt_path);
  ModelParams params = params_from_checkpoint(data);
  Vocabulary vocab = vocab_for_checkpoint(ckpt_path, vocab_flag);
  if (vocab.size() != params.config.vocab_size) {
    throw std::runtime_error("vocabulary size does not match the checkpoint");
  }
  CorpusSplit corpus =
      load_corpus(corpus_path, vocab, SplitRole::test, min_score_option(min_score_raw));

  EvaluateOptions opt;
  opt.beam = beam;
  opt.max_len = max_len;
  opt.micro = micro;
  const RougeReport report = evaluate(corpus, params, opt);

  char buf[160];
  std::snprintf(buf, sizeof(buf), "semsum\t%.4f\t%.4f\t%.4f", report.rouge1.f, report.rouge2.f,
                report.rougeL.f);
  std::cout << "model\trouge1_f\trouge2_f\trougeL_f\n" << buf << "\n";
  std::cout << format_rouge_kv(report);
  return 0;
}

int run_ablate(const std::string& corpus_path, const std::string& out_dir,
               const std::string& config_path, const std::string& vocab_flag,
               const std::string& eval_corpus_path, long seed_flag, int min_score_raw) {
  ConfigFile cfg = config_path.empty() ? ConfigFile{} : parse_config_file(config_path);
  if (seed_flag >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed_flag);

  Vocabulary vocab = vocab_flag.empty()
                         ? build_vocabulary_from_file(corpus_path, cfg.model.vocab_size,
                                                      cfg.limits)
                         : Vocabulary::load(vocab_flag);
  reconcile_vocab_size(cfg, vocab);

  const auto min_score = min_score_option(min_score_raw);
  CorpusSplit train_corpus =
      load_corpus(corpus_path, vocab, SplitRole::train, min_score, cfg.limits);
  CorpusSplit eval_corpus =
      eval_corpus_path.empty()
          ? train_corpus
          : load_corpus(eval_corpus_path, vocab, SplitRole::test, min_score, cfg.limits);

  const auto rows = ablate(train_corpus, eval_corpus, cfg.model, cfg.train);
  const std::string table = format_ablation_table(rows);
  std::cout << table;

  std::filesystem::create_directories(out_dir);
  vocab.save((std::filesystem::path(out_dir) / "vocab.txt").string());
  std::ofstream out(std::filesystem::path(out_dir) / "ablation.tsv", std::ios::binary);
  out << table;
  std::cerr << "wrote " << out_dir << "/ablation.tsv\n";
  return 0;
}

int run_rouge(const std::string& cand_path, const std::string& ref_path, bool micro) {
  const std::vector<std::string> cand_lines = read_lines(cand_path);
  const std::vector<std::string> ref_lines = read_lines(ref_path);
  if (cand_lines.size() != ref_lines.size()) {
    throw std::runtime_error("candidate and reference files differ in line count (" +
                             std::to_string(cand_lines.size()) + " vs " +
                             std::to_string(ref_lines.size()) + ")");
  }
  std::vector<TokenPair> pairs;
  pairs.reserve(cand_lines.size());
  for (std::size_t i = 0; i < cand_lines.size(); ++i) {
    pairs.emplace_back(rouge_tokens(utf8_decode(cand_lines[i])),
                       rouge_tokens(utf8_decode(ref_lines[i])));
  }
  const RougeReport report = corpus_rouge(pairs, micro);
  std::cout << format_rouge_table(report);
  std::cout << format_rouge_kv(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"character-level abstractive summarizer with a semantic-relevance objective"};
  app.require_subcommand(1);

  // build-vocab
  auto* sc_vocab = app.add_subcommand("build-vocab", "build a character vocabulary from a corpus");
  std::string bv_corpus, bv_out;
  int bv_max = 4000;
  sc_vocab->add_option("--corpus", bv_corpus, "corpus file (score<TAB>text<TAB>summary lines)")
      ->required();
  sc_vocab->add_option("--out", bv_out, "output vocabulary path")->required();
  sc_vocab->add_option("--max-size", bv_max, "maximum vocabulary size");

  // train
  auto* sc_train = app.add_subcommand("train", "train a model");
  std::string tr_corpus, tr_vocab, tr_config, tr_out, tr_resume;
  long tr_seed = -1;
  int tr_min_score = -1;
  sc_train->add_option("--corpus", tr_corpus, "training corpus")->required();
  sc_train->add_option("--vocab", tr_vocab, "vocabulary file")->required();
  sc_train->add_option("--config", tr_config, "key=value configuration file")->required();
  sc_train->add_option("--out", tr_out, "checkpoint directory")->required();
  sc_train->add_option("--seed", tr_seed, "override the configured seed");
  sc_train->add_option("--resume", tr_resume, "continue from a checkpoint");
  sc_train->add_option("--min-score", tr_min_score, "drop pairs scored below this value");

  // summarize
  auto* sc_sum = app.add_subcommand("summarize", "decode summaries for a file of texts");
  std::string su_ckpt, su_input, su_vocab;
  int su_beam = 4, su_max_len = 30;
  bool su_norm = false;
  sc_sum->add_option("--ckpt", su_ckpt, "checkpoint file")->required();
  sc_sum->add_option("--input", su_input, "input file, one source text per line")->required();
  sc_sum->add_option("--vocab", su_vocab, "vocabulary (default: vocab.txt beside the checkpoint)");
  sc_sum->add_option("--beam", su_beam, "beam width (1 = greedy)");
  sc_sum->add_option("--max-len", su_max_len, "maximum summary length");
  sc_sum->add_flag("--length-norm", su_norm, "normalize beam scores by length");

  // evaluate
  auto* sc_eval = app.add_subcommand("evaluate", "decode a corpus and report ROUGE");
  std::string ev_ckpt, ev_corpus, ev_vocab;
  int ev_beam = 4, ev_max_len = 30, ev_min_score = -1;
  bool ev_micro = false;
  sc_eval->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
  sc_eval->add_option("--corpus", ev_corpus, "evaluation corpus")->required();
  sc_eval->add_option("--vocab", ev_vocab, "vocabulary (default: vocab.txt beside the checkpoint)");
  sc_eval->add_option("--beam", ev_beam, "beam width (1 = greedy)");
  sc_eval->add_option("--max-len", ev_max_len, "maximum summary length");
  sc_eval->add_option("--min-score", ev_min_score, "drop pairs scored below this value");
  sc_eval->add_flag("--micro", ev_micro, "micro-average instead of macro");

  // ablate
  auto* sc_abl = app.add_subcommand("ablate", "train and score the four model variants");
  std::string ab_corpus, ab_out, ab_config, ab_vocab, ab_eval;
  long ab_seed = -1;
  int ab_min_score = -1;
  sc_abl->add_option("--corpus", ab_corpus, "training corpus")->required();
  sc_abl->add_option("--out", ab_out, "output directory for the report")->required();
  sc_abl->add_option("--config", ab_config, "key=value configuration file");
  sc_abl->add_option("--vocab", ab_vocab, "vocabulary (default: built from the corpus)");
  sc_abl->add_option("--eval-corpus", ab_eval, "held-out corpus (default: the training corpus)");
  sc_abl->add_option("--seed", ab_seed, "override the configured seed");
  sc_abl->add_option("--min-score", ab_min_score, "drop pairs scored below this value");

  // rouge
  auto* sc_rouge = app.add_subcommand("rouge", "score line-aligned candidate/reference files");
  std::string ro_cand, ro_ref;
  bool ro_micro = false;
  sc_rouge->add_option("--candidates", ro_cand, "candidate summaries, one per line")->required();
  sc_rouge->add_option("--references", ro_ref, "reference summaries, one per line")->required();
  sc_rouge->add_flag("--micro", ro_micro, "micro-average instead of macro");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sc_vocab->parsed()) return run_build_vocab(bv_corpus, bv_out, bv_max);
    if (sc_train->parsed()) {
      return run_train(tr_corpus, tr_vocab, tr_config, tr_out, tr_seed, tr_resume, tr_min_score);
    }
    if (sc_sum->parsed()) {
      return run_summarize(su_ckpt, su_input, su_vocab, su_beam, su_max_len, su_norm);
    }
    if (sc_eval->parsed()) {
      return run_evaluate(ev_ckpt, ev_corpus, ev_vocab, ev_beam, ev_max_len, ev_min_score,
                          ev_micro);
    }
    if (sc_abl->parsed()) {
      return run_ablate(ab_corpus, ab_out, ab_config, ab_vocab, ab_eval, ab_seed, ab_min_score);
    }
    if (sc_rouge->parsed()) return run_rouge(ro_cand, ro_ref, ro_micro);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

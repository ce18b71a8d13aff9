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
// Acceptance suite. Each criterion prints one [PASS]/[FAIL] line; the binary
// exits non-zero if any criterion fails. Criteria carry their own runtime
// budgets, enforced here.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "semsum/checkpoint.hpp"
#include "semsum/decode.hpp"
#include "semsum/model.hpp"
#include "semsum/rouge.hpp"
#include "semsum/train.hpp"
#include "testing_models.hpp"
#include "testing_oracles.hpp"

using namespace semsum;
namespace oracle = semsum::testing;
using semsum::testing::copy_task_corpus;
using semsum::testing::random_ids;
using semsum::testing::random_pair;

namespace {

struct CriterionResult {
  bool pass = false;
  std::string detail;
};

using CriterionFn = std::function<CriterionResult()>;

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("semsum_accept_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

std::string file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

// Shared by criteria 3, 4, and 6: the copy-task training run.
struct CopyTaskRun {
  ModelConfig config;
  TrainConfig train_config;
  CorpusSplit corpus;
  std::optional<ModelParams> params;
  TrainResult result;
};

CopyTaskRun& copy_task_run() {
  static CopyTaskRun run = [] {
    CopyTaskRun r;
    r.config.vocab_size = 20;
    r.config.embed_dim = 16;
    r.config.hidden_dim = 32;
    r.config.gate_hidden_dim = 16;
    r.config.lambda = 0.1;
    r.config.cell_kind = CellKind::lstm;

    r.train_config.batch_size = 10;
    r.train_config.learning_rate = 0.01;
    r.train_config.epochs = 300;
    r.train_config.seed = 12;

    r.corpus = copy_task_corpus(50, r.config.vocab_size, 10, 5, 99);
    r.params.emplace(r.config, r.train_config.seed);
    AdamState adam = AdamState::for_params(r.params->set);
    r.result = train(r.corpus, *r.params, r.train_config, adam);
    return r;
  }();
  return run;
}

double epoch_mean_of(const TrainResult& result, int epoch, double TrainLogRecord::* field) {
  double sum = 0.0;
  int count = 0;
  for (const TrainLogRecord& rec : result.records) {
    if (rec.epoch == epoch) {
      sum += rec.*field;
      ++count;
    }
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / count;
}

// --------------------------------------------------------------------------
// 1. Full-model gradient check, both cells, all ablation-flag combinations.
// --------------------------------------------------------------------------
CriterionResult criterion_gradient_check() {
  std::mt19937_64 rng(427);
  double worst_rel = 0.0;
  std::string worst_at = "-";
  long combos = 0;
  for (CellKind kind : {CellKind::lstm, CellKind::gru}) {
    for (int mask = 0; mask < 8; ++mask) {
      ModelConfig cfg;
      cfg.vocab_size = 20;
      cfg.embed_dim = 8;
      cfg.hidden_dim = 12;
      cfg.gate_hidden_dim = 16;
      cfg.lambda = 0.1;
      cfg.cell_kind = kind;
      cfg.use_gate = (mask & 1) != 0;
      cfg.use_attention = (mask & 2) != 0;
      cfg.use_srb = (mask & 4) != 0;

      ModelParams params(cfg, 1000 + static_cast<std::uint64_t>(mask));
      TextSummaryPair pair = random_pair(rng, cfg, 5, 3);

      params.set.zero_grads();
      {
        Tape tape;
        tape.backward(srb_loss(tape, pair, params).loss);
      }
      const auto check = oracle::check_gradients(
          params.set,
          [&] {
            Tape tape;
            return srb_loss(tape, pair, params).loss.scalar();
          },
          1e-5, 1e-4, 1e-7);
      ++combos;
      if (check.worst_rel > worst_rel) {
        worst_rel = check.worst_rel;
        worst_at = to_string(kind) + " mask=" + std::to_string(mask) + " " + check.worst_param;
      }
      if (!check.ok()) {
        return {false, fmt("gradient mismatch for %s mask=%d: worst rel err %.3e in %s",
                           to_string(kind).c_str(), mask, check.worst_rel,
                           check.worst_param.c_str())};
      }
    }
  }
  return {true, fmt("max rel err %.3e (%s) across %ld cell/flag combinations", worst_rel,
                    worst_at.c_str(), combos)};
}

// --------------------------------------------------------------------------
// 2. ROUGE agrees with the brute-force oracle; LCS cross-checked.
// --------------------------------------------------------------------------
CriterionResult criterion_rouge_oracle() {
  std::mt19937_64 rng(1913);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = oracle::random_token_string(rng, 20, 5);
    const auto b = oracle::random_token_string(rng, 20, 5);
    for (int n = 1; n <= 2; ++n) {
      const RougeScore got = rouge_n(a, b, n);
      const auto want = oracle::oracle_ngram(a, b, n);
      worst = std::max({worst, std::fabs(got.precision - want.p), std::fabs(got.recall - want.r),
                        std::fabs(got.f - want.f)});
    }
    const RougeScore got_l = rouge_l(a, b);
    const auto want_l = oracle::oracle_lcs_score(a, b);
    worst = std::max({worst, std::fabs(got_l.precision - want_l.p),
                      std::fabs(got_l.recall - want_l.r), std::fabs(got_l.f - want_l.f)});
    if (worst > 1e-12) {
      return {false, fmt("oracle deviation %.3e at trial %d", worst, trial)};
    }
  }
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = oracle::random_token_string(rng, 8, 3);
    const auto b = oracle::random_token_string(rng, 8, 3);
    const int dp = lcs_length(a, b);
    if (dp != oracle::oracle_lcs_exhaustive(a, b) || dp != oracle::oracle_lcs_memo(a, b)) {
      return {false, "LCS dynamic program disagrees with exhaustive subsequence search"};
    }
  }
  return {true, fmt("1000 random pairs within %.1e of the oracle; 300 exhaustive LCS checks",
                    std::max(worst, 0.0))};
}

// --------------------------------------------------------------------------
// 3. Overfit capacity on the 50-pair copy task.
// --------------------------------------------------------------------------
CriterionResult criterion_overfit() {
  CopyTaskRun& run = copy_task_run();
  const double final_nll =
      epoch_mean_of(run.result, run.train_config.epochs - 1, &TrainLogRecord::nll);
  if (!(final_nll < 0.1)) {
    return {false, fmt("final-epoch mean nll %.4f (need < 0.1)", final_nll)};
  }
  EvaluateOptions opt;
  opt.beam = 1;
  opt.max_len = 30;
  const RougeReport report = evaluate(run.corpus, *run.params, opt);
  if (!(report.rouge1.f >= 0.95)) {
    return {false, fmt("greedy corpus ROUGE-1 F %.4f (need >= 0.95)", report.rouge1.f)};
  }
  return {true, fmt("final nll %.4f, greedy ROUGE-1 F %.4f within %d epochs", final_nll,
                    report.rouge1.f, run.train_config.epochs)};
}

// --------------------------------------------------------------------------
// 4. The relevance term raises cos(V_s, V_t) over training.
// --------------------------------------------------------------------------
CriterionResult criterion_srb_directionality() {
  CopyTaskRun& run = copy_task_run();
  const double first = epoch_mean_of(run.result, 0, &TrainLogRecord::cos);
  const double last =
      epoch_mean_of(run.result, run.train_config.epochs - 1, &TrainLogRecord::cos);
  const double gain = last - first;
  if (!(gain >= 0.05)) {
    return {false, fmt("mean cos moved %.4f -> %.4f (gain %.4f, need >= 0.05)", first, last, gain)};
  }
  return {true, fmt("mean cos %.4f (epoch 1) -> %.4f (epoch %d), gain %.4f", first, last,
                    run.train_config.epochs, gain)};
}

// --------------------------------------------------------------------------
// 5. Every emitted distribution and attention row sums to 1 within 1e-12.
// --------------------------------------------------------------------------
CriterionResult criterion_normalization() {
  ModelConfig cfg;
  cfg.vocab_size = 24;
  cfg.embed_dim = 10;
  cfg.hidden_dim = 16;
  cfg.gate_hidden_dim = 12;
  cfg.lambda = 0.1;
  ModelParams params(cfg, 5151);
  std::mt19937_64 rng(626);
  std::uniform_int_distribution<int> len_d(5, 12);

  long dists = 0, attns = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<int> source = random_ids(rng, len_d(rng), cfg.vocab_size);
    DecodeTrace trace;
    (void)greedy_decode(source, params, 12, &trace);
    for (const Matrix& dist : trace.distributions) {
      double s = 0.0;
      for (double p : dist.v) s += p;
      worst = std::max(worst, std::fabs(s - 1.0));
      ++dists;
    }
    for (const Matrix& attn : trace.attention_weights) {
      double s = 0.0;
      for (double a : attn.v) s += a;
      worst = std::max(worst, std::fabs(s - 1.0));
      ++attns;
    }
  }
  if (dists == 0 || attns == 0 || worst > 1e-12) {
    return {false, fmt("checked %ld distributions / %ld attention rows, worst |sum-1| = %.3e",
                       dists, attns, worst)};
  }
  return {true, fmt("%ld distributions and %ld attention rows, worst |sum-1| = %.3e", dists,
                    attns, worst)};
}

// --------------------------------------------------------------------------
// 6. Search dominance and exhaustive equivalence.
// --------------------------------------------------------------------------
CriterionResult criterion_search() {
  CopyTaskRun& run = copy_task_run();
  std::mt19937_64 rng(8181);
  const int max_len = 12;
  int dominated = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<int> source = random_ids(rng, 10, run.config.vocab_size);  // held out
    const std::vector<int> greedy = greedy_decode(source, *run.params, max_len);
    if (beam_decode(source, *run.params, 1, max_len) != greedy) {
      return {false, fmt("beam=1 diverged from greedy on instance %d", trial)};
    }
    const std::vector<int> beamed = beam_decode(source, *run.params, 4, max_len);
    const double gs = sequence_score(source, greedy, *run.params, max_len);
    const double bs = sequence_score(source, beamed, *run.params, max_len);
    if (bs < gs) {
      return {false, fmt("beam=4 scored %.6f below greedy %.6f on instance %d", bs, gs, trial)};
    }
    if (bs > gs) ++dominated;
  }

  // exhaustive equivalence on a toy model
  ModelConfig toy;
  toy.vocab_size = 6;
  toy.embed_dim = 5;
  toy.hidden_dim = 6;
  toy.gate_hidden_dim = 4;
  toy.lambda = 0.1;
  for (int trial = 0; trial < 3; ++trial) {
    ModelParams toy_params(toy, 7000 + static_cast<std::uint64_t>(trial));
    const std::vector<int> source = random_ids(rng, 5, toy.vocab_size);
    // brute force over every emission sequence of length <= 3
    std::vector<int> best_tokens;
    double best_score = -std::numeric_limits<double>::infinity();
    std::vector<int> current;
    std::function<void()> walk = [&] {
      const double s = sequence_score(source, current, toy_params, 3);
      if (s > best_score || (s == best_score && current < best_tokens)) {
        best_score = s;
        best_tokens = current;
      }
      if (static_cast<int>(current.size()) == 3) return;
      for (int id = Vocabulary::kUnk; id < toy.vocab_size; ++id) {
        current.push_back(id);
        walk();
        current.pop_back();
      }
    };
    walk();
    const std::vector<int> beamed = beam_decode(source, toy_params, 6 * 6 * 6, 3);
    if (beamed != best_tokens) {
      return {false, fmt("saturated beam diverged from exhaustive search on toy trial %d", trial)};
    }
  }
  return {true, fmt("beam=4 >= greedy on 200/200 held-out instances (stronger on %d), "
                    "beam=1 == greedy, toy exhaustive equivalence exact",
                    dominated)};
}

// --------------------------------------------------------------------------
// 7. Determinism and persistence.
// --------------------------------------------------------------------------
CriterionResult criterion_determinism() {
  ModelConfig cfg;
  cfg.vocab_size = 20;
  cfg.embed_dim = 8;
  cfg.hidden_dim = 12;
  cfg.gate_hidden_dim = 16;
  cfg.lambda = 0.1;
  const CorpusSplit corpus = copy_task_corpus(15, cfg.vocab_size, 8, 4, 333);
  TrainConfig tcfg;
  tcfg.batch_size = 5;
  tcfg.learning_rate = 0.01;
  tcfg.epochs = 5;
  tcfg.seed = 77;

  TempDir dir;
  const auto run_once = [&](const std::string& name) {
    ModelParams params(cfg, tcfg.seed);
    AdamState adam = AdamState::for_params(params.set);
    train(corpus, params, tcfg, adam);
    const std::string path = dir.str() + "/" + name;
    save_model_checkpoint(path, params, &adam, tcfg.epochs);
    return path;
  };
  const std::string a = run_once("a.ckpt");
  const std::string b = run_once("b.ckpt");
  if (file_bytes(a) != file_bytes(b)) {
    return {false, "fixed-seed training produced differing checkpoint bytes"};
  }

  ModelParams restored = params_from_checkpoint(read_checkpoint(a));
  ModelParams fresh(cfg, tcfg.seed);
  AdamState adam = AdamState::for_params(fresh.set);
  train(corpus, fresh, tcfg, adam);
  long values = 0;
  for (const TextSummaryPair& pair : corpus.pairs) {
    Tape ta, tb;
    LossParts la = srb_loss(ta, pair, fresh);
    LossParts lb = srb_loss(tb, pair, restored);
    if (la.loss.scalar() != lb.loss.scalar()) {
      return {false, "restored checkpoint produced a different forward loss"};
    }
    for (std::size_t t = 0; t < la.decoder.distributions.size(); ++t) {
      const Matrix& da = la.decoder.distributions[t].value();
      const Matrix& db = lb.decoder.distributions[t].value();
      for (std::size_t j = 0; j < da.size(); ++j) {
        if (da.v[j] != db.v[j]) {
          return {false, "restored checkpoint produced differing distribution values"};
        }
        ++values;
      }
    }
  }
  return {true, fmt("identical checkpoint bytes (%zu) and %ld bitwise-equal forward values",
                    file_bytes(a).size(), values)};
}

// --------------------------------------------------------------------------
// 8. Summary-vector and cosine identities.
// --------------------------------------------------------------------------
CriterionResult criterion_identities() {
  ModelConfig cfg;
  cfg.vocab_size = 20;
  cfg.embed_dim = 8;
  cfg.hidden_dim = 12;
  cfg.gate_hidden_dim = 16;
  cfg.lambda = 0.1;
  ModelParams params(cfg, 4242);
  std::mt19937_64 rng(4343);
  TextSummaryPair pair = random_pair(rng, cfg, 6, 4);

  Tape tape;
  EncoderOutput enc = encode(tape, pair.source_ids, params);
  if (enc.text_vector.node() != enc.states.back().node()) {
    return {false, "text vector is not the encoder's final state node"};
  }
  DecoderOutput dec = decode_teacher_forced(tape, pair.summary_ids, enc, params);
  for (std::size_t j = 0; j < dec.summary_vector.value().size(); ++j) {
    const double expect = dec.final_state.value().v[j] - enc.text_vector.value().v[j];
    if (dec.summary_vector.value().v[j] != expect) {
      return {false, "summary vector differs from final state minus text vector"};
    }
  }

  Tape t2;
  Value v = t2.input(uniform_matrix(1, 9, -2, 2, rng));
  const double self_cos = cosine(v, v).scalar();
  const double anti_cos = cosine(v, scale(v, -1.0)).scalar();
  if (std::fabs(self_cos - 1.0) > 1e-12 || std::fabs(anti_cos + 1.0) > 1e-12) {
    return {false, fmt("cos(v,v)=%.17g, cos(v,-v)=%.17g", self_cos, anti_cos)};
  }

  ParamSet degenerate;
  degenerate.add("zero", Matrix::zeros(1, 7));
  degenerate.add("other", Matrix::row_of({1, 2, 3, 4, 5, 6, 7}));
  Tape t3;
  Value c = cosine(t3.param(degenerate.at("zero")), t3.param(degenerate.at("other")));
  if (c.scalar() != 0.0) return {false, "degenerate cosine is not exactly 0"};
  t3.backward(c);
  for (const auto& p : degenerate) {
    for (double g : p.grad.v) {
      if (g != 0.0) return {false, "degenerate cosine leaked gradient"};
    }
  }
  return {true, "V_s = s_M - h_N exact; cos(v,v)=1, cos(v,-v)=-1, zero-vector policy holds"};
}

// --------------------------------------------------------------------------
// 9. Ablation harness reproducibility and shape.
// --------------------------------------------------------------------------
CriterionResult criterion_ablation() {
  ModelConfig cfg;
  cfg.vocab_size = 20;
  cfg.embed_dim = 8;
  cfg.hidden_dim = 10;
  cfg.gate_hidden_dim = 8;
  cfg.lambda = 0.1;
  const CorpusSplit corpus = copy_task_corpus(12, cfg.vocab_size, 7, 4, 555);
  TrainConfig tcfg;
  tcfg.batch_size = 6;
  tcfg.learning_rate = 0.01;
  tcfg.epochs = 3;
  tcfg.seed = 13;
  EvaluateOptions eopt;
  eopt.beam = 1;
  eopt.max_len = 8;

  const std::string table_a = format_ablation_table(ablate(corpus, corpus, cfg, tcfg, eopt));
  const std::string table_b = format_ablation_table(ablate(corpus, corpus, cfg, tcfg, eopt));
  if (table_a != table_b) return {false, "ablation table differs between identically seeded runs"};

  std::istringstream in(table_a);
  std::string line;
  int rows = -1;  // skip header
  while (std::getline(in, line)) {
    if (rows >= 0 && std::count(line.begin(), line.end(), '\t') != 3) {
      return {false, "ablation row lacks the 3 ROUGE columns: " + line};
    }
    ++rows;
  }
  if (rows != 4) return {false, fmt("expected 4 ablation rows, found %d", rows)};
  return {true, "4x3 table reproduced bit-identically under a fixed seed"};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    double budget_seconds;
    CriterionFn fn;
  };
  const std::vector<Entry> criteria = {
      {1, "full-model gradient check", 120.0, criterion_gradient_check},
      {2, "ROUGE oracle equivalence", 30.0, criterion_rouge_oracle},
      {3, "overfit capacity on the copy task", 600.0, criterion_overfit},
      {4, "relevance-term directionality", 600.0, criterion_srb_directionality},
      {5, "decoder and attention normalization", 120.0, criterion_normalization},
      {6, "search dominance and exhaustive equivalence", 300.0, criterion_search},
      {7, "determinism and persistence", 300.0, criterion_determinism},
      {8, "summary-vector and cosine identities", 60.0, criterion_identities},
      {9, "ablation harness report", 300.0, criterion_ablation},
  };

  // criteria 3, 4, and 6 share the copy-task training run; its cost counts
  // against the first budget that needs it
  int failures = 0;
  for (const Entry& entry : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult result;
    try {
      result = entry.fn();
    } catch (const std::exception& e) {
      result = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (result.pass && seconds > entry.budget_seconds) {
      result.pass = false;
      result.detail += fmt(" [over budget: %.1fs > %.0fs]", seconds, entry.budget_seconds);
    }
    std::printf("[%s] criterion %d: %s — %s (%.1fs)\n", result.pass ? "PASS" : "FAIL", entry.id,
                entry.name, result.detail.c_str(), seconds);
    std::fflush(stdout);
    if (!result.pass) ++failures;
  }
  if (failures > 0) {
    std::printf("%d of %zu criteria FAILED\n", failures, criteria.size());
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}

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
// The training loop (seeded shuffling, batch-mean gradients, clipping, Adam,
// checkpointing), ROUGE evaluation over decoded summaries, and the four-way
// ablation harness. Shuffles derive from (seed, epoch), so a run resumed from
// a checkpoint continues the exact trajectory of an uninterrupted one.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "semsum/adam.hpp"
#include "semsum/checkpoint.hpp"
#include "semsum/corpus.hpp"
#include "semsum/decode.hpp"
#include "semsum/model.hpp"
#include "semsum/rouge.hpp"

namespace semsum {

struct TrainLogRecord {
  long step = 0;       // optimizer step, cumulative across resumed runs
  int epoch = 0;       // 0-based
  double loss = 0.0;   // batch means; loss == nll - lambda * cos when srb is on
  double nll = 0.0;
  double cos = 0.0;
  double seconds = 0.0;  // wall time since train() started
};

using TrainLogSink = std::function<void(const TrainLogRecord&)>;

struct TrainResult {
  std::vector<TrainLogRecord> records;
  int epochs_completed = 0;
};

/// Column order: step, nll, cos, loss, seconds.
inline std::string format_train_log_line(const TrainLogRecord& rec) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%ld\t%.6f\t%.6f\t%.6f\t%.3f", rec.step, rec.nll, rec.cos,
                rec.loss, rec.seconds);
  return buf;
}

/// Deterministic per-epoch shuffle derived from (seed, epoch).
inline std::vector<std::size_t> epoch_permutation(std::uint64_t seed, int epoch, std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xFFFFFFFFu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

namespace detail {

inline void check_corpus_fits_model(const CorpusSplit& corpus, const ModelConfig& cfg,
                                    const char* op) {
  if (corpus.pairs.empty()) {
    throw std::invalid_argument(std::string(op) + ": empty corpus");
  }
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    const TextSummaryPair& p = corpus.pairs[i];
    if (p.source_ids.empty() || p.summary_ids.empty()) {
      throw std::invalid_argument(std::string(op) + ": pair " + std::to_string(i) +
                                  " has an empty side");
    }
    for (int id : p.source_ids) {
      if (id < 0 || id >= cfg.vocab_size) {
        throw std::invalid_argument(std::string(op) + ": pair " + std::to_string(i) +
                                    " holds source id " + std::to_string(id) +
                                    " outside the model vocabulary (" +
                                    std::to_string(cfg.vocab_size) + ")");
      }
    }
    for (int id : p.summary_ids) {
      if (id < 0 || id >= cfg.vocab_size) {
        throw std::invalid_argument(std::string(op) + ": pair " + std::to_string(i) +
                                    " holds summary id " + std::to_string(id) +
                                    " outside the model vocabulary (" +
                                    std::to_string(cfg.vocab_size) + ")");
      }
    }
  }
}

}  // namespace detail

/// Runs epochs [start_epoch, cfg.epochs). Batch gradients are example means,
/// clipped to cfg.clip_norm before each Adam step. Checkpoints land in
/// cfg.checkpoint_dir (every cfg.checkpoint_interval epochs plus a final one)
/// and embed the optimizer state.
inline TrainResult train(const CorpusSplit& corpus, ModelParams& params, const TrainConfig& cfg,
                         AdamState& adam, const TrainLogSink& sink = {}, int start_epoch = 0) {
  cfg.validate();
  params.config.validate();
  detail::check_corpus_fits_model(corpus, params.config, "train");
  if (start_epoch < 0 || start_epoch > cfg.epochs) {
    throw std::invalid_argument("train: start_epoch outside [0, epochs]");
  }
  if (!cfg.checkpoint_dir.empty()) {
    std::filesystem::create_directories(cfg.checkpoint_dir);
  }

  TrainResult result;
  result.epochs_completed = start_epoch;
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = corpus.pairs.size();

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> perm = epoch_permutation(cfg.seed, epoch, n);
    for (std::size_t batch_start = 0; batch_start < n;
         batch_start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t batch_end =
          std::min(n, batch_start + static_cast<std::size_t>(cfg.batch_size));
      const double batch_size = static_cast<double>(batch_end - batch_start);

      params.set.zero_grads();
      double loss_sum = 0.0, nll_sum = 0.0, cos_sum = 0.0;
      for (std::size_t i = batch_start; i < batch_end; ++i) {
        const TextSummaryPair& pair = corpus.pairs[perm[i]];
        Tape tape;
        LossParts parts = srb_loss(tape, pair, params);
        tape.backward(parts.loss);
        loss_sum += parts.loss.scalar();
        nll_sum += parts.nll.scalar();
        cos_sum += parts.cos.scalar();
      }
      params.set.scale_grads(1.0 / batch_size);
      clip_gradients(params.set, cfg.clip_norm);
      adam_step(params.set, adam, cfg);

      TrainLogRecord rec;
      rec.step = adam.step;
      rec.epoch = epoch;
      rec.loss = loss_sum / batch_size;
      rec.nll = nll_sum / batch_size;
      rec.cos = cos_sum / batch_size;
      rec.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.records.push_back(rec);
      if (sink) sink(rec);
    }
    result.epochs_completed = epoch + 1;
    if (!cfg.checkpoint_dir.empty() && cfg.checkpoint_interval > 0 &&
        (epoch + 1) % cfg.checkpoint_interval == 0 && epoch + 1 < cfg.epochs) {
      const std::string path =
          cfg.checkpoint_dir + "/checkpoint-epoch-" + std::to_string(epoch + 1) + ".ckpt";
      save_model_checkpoint(path, params, &adam, epoch + 1);
    }
  }
  if (!cfg.checkpoint_dir.empty()) {
    save_model_checkpoint(cfg.checkpoint_dir + "/checkpoint-final.ckpt", params, &adam,
                          cfg.epochs);
  }
  return result;
}

struct EvaluateOptions {
  int beam = 4;
  int max_len = 30;
  bool length_normalize = false;
  bool micro = false;
};

/// Decodes every source and scores the outputs against the gold summaries.
inline RougeReport evaluate(const CorpusSplit& corpus, const ModelParams& params,
                            const EvaluateOptions& opt = {}) {
  detail::check_corpus_fits_model(corpus, params.config, "evaluate");
  std::vector<TokenPair> pairs;
  pairs.reserve(corpus.pairs.size());
  for (const TextSummaryPair& p : corpus.pairs) {
    std::vector<int> candidate =
        opt.beam > 1 ? beam_decode(p.source_ids, params, opt.beam, opt.max_len,
                                   opt.length_normalize)
                     : greedy_decode(p.source_ids, params, opt.max_len);
    pairs.emplace_back(std::move(candidate), p.summary_ids);
  }
  return corpus_rouge(pairs, opt.micro);
}

struct AblationRow {
  std::string name;
  ModelConfig config;
  RougeReport report;
};

/// Trains the four model variants under one seed and budget and scores each:
/// the plain encoder-decoder, then attention, then the relevance term, then
/// the input gate.
inline std::vector<AblationRow> ablate(const CorpusSplit& train_corpus,
                                       const CorpusSplit& eval_corpus, const ModelConfig& base,
                                       const TrainConfig& tcfg, const EvaluateOptions& eopt = {},
                                       const TrainLogSink& sink = {}) {
  struct VariantSpec {
    const char* name;
    bool attention, srb, gate;
  };
  constexpr VariantSpec kVariants[] = {
      {"rnn", false, false, false},
      {"rnn+attention", true, false, false},
      {"rnn+attention+srb", true, true, false},
      {"rnn+attention+srb+gate", true, true, true},
  };
  TrainConfig per_variant = tcfg;
  per_variant.checkpoint_dir.clear();

  std::vector<AblationRow> rows;
  for (const VariantSpec& v : kVariants) {
    ModelConfig mc = base;
    mc.use_attention = v.attention;
    mc.use_srb = v.srb;
    mc.use_gate = v.gate;
    ModelParams params(mc, tcfg.seed);
    AdamState adam = AdamState::for_params(params.set);
    train(train_corpus, params, per_variant, adam, sink);
    rows.push_back({v.name, mc, evaluate(eval_corpus, params, eopt)});
  }
  return rows;
}

/// Four rows by three ROUGE F columns, tab separated.
inline std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::string out = "model\trouge1_f\trouge2_f\trougeL_f\n";
  char buf[160];
  for (const AblationRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%s\t%.4f\t%.4f\t%.4f\n", row.name.c_str(),
                  row.report.rouge1.f, row.report.rouge2.f, row.report.rougeL.f);
    out += buf;
  }
  return out;
}

}  // namespace semsum

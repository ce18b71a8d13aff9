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
// Greedy and beam-search generation. A hypothesis scores the sum of the log
// probabilities of every emission, including the EOS that finishes it; a
// hypothesis cut off at max_len carries no EOS factor. PAD and BOS are never
// emitted, and EOS only terminates, so outputs contain content tokens only.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "semsum/model.hpp"
#include "semsum/vocab.hpp"

namespace semsum {

/// Per-step decoder internals captured during generation, for inspection.
struct DecodeTrace {
  std::vector<Matrix> distributions;
  std::vector<Matrix> attention_weights;
};

/// A partial or finished output during search.
struct Hypothesis {
  std::vector<int> tokens;  // content tokens; never PAD/BOS/EOS
  double log_prob = 0.0;    // non-increasing as tokens are appended
  DecoderState state;
  bool finished = false;    // reached EOS or max length
};

namespace detail {

inline double normalized_score(const Hypothesis& h, bool length_normalize) {
  if (!length_normalize) return h.log_prob;
  return h.log_prob / static_cast<double>(std::max<std::size_t>(1, h.tokens.size()));
}

/// Score-descending order; exact ties prefer the lexicographically smaller
/// token sequence (a finished hypothesis is a prefix of its continuations, so
/// ties resolve toward stopping, matching greedy's lowest-id rule).
inline bool better(const Hypothesis& a, const Hypothesis& b, bool length_normalize = false) {
  const double sa = normalized_score(a, length_normalize);
  const double sb = normalized_score(b, length_normalize);
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

struct GreedyResult {
  std::vector<int> tokens;
  double log_prob = 0.0;
  bool ended_with_eos = false;
};

inline GreedyResult greedy_rollout(Tape& tape, const EncoderOutput& enc, const ModelParams& params,
                                   int max_len, DecodeTrace* trace) {
  const int vocab = params.config.vocab_size;
  GreedyResult res;
  DecoderState state = initial_decoder_state(tape, enc, params.config);
  int prev = Vocabulary::kBos;
  for (int step = 0; step < max_len; ++step) {
    DecoderStepResult sr = decoder_step(tape, prev, state, enc, params);
    if (trace != nullptr) {
      trace->distributions.push_back(sr.distribution.value());
      if (sr.attention.valid()) trace->attention_weights.push_back(sr.attention.value());
    }
    // argmax over emittable ids; PAD and BOS sit below kEos and are excluded,
    // strict comparison keeps the lowest id on ties
    const Matrix& dist = sr.distribution.value();
    int best = Vocabulary::kEos;
    for (int id = Vocabulary::kEos + 1; id < vocab; ++id) {
      if (dist.at(0, id) > dist.at(0, best)) best = id;
    }
    res.log_prob += std::log(dist.at(0, best));
    if (best == Vocabulary::kEos) {
      res.ended_with_eos = true;
      return res;
    }
    res.tokens.push_back(best);
    state = sr.state;
    prev = best;
  }
  return res;
}

}  // namespace detail

/// Greedy argmax decoding; stops at EOS or after max_len content tokens. The
/// returned sequence never includes BOS/EOS.
inline std::vector<int> greedy_decode(std::span<const int> source_ids, const ModelParams& params,
                                      int max_len, DecodeTrace* trace = nullptr) {
  if (max_len < 0) throw std::invalid_argument("greedy_decode: max_len must be >= 0");
  if (max_len == 0) {
    if (source_ids.empty()) throw std::invalid_argument("greedy_decode: source must be non-empty");
    return {};
  }
  Tape tape;
  EncoderOutput enc = encode(tape, source_ids, params);
  return detail::greedy_rollout(tape, enc, params, max_len, trace).tokens;
}

/// Cumulative log probability of generating `tokens` from `source_ids` under
/// the model, with the trailing EOS factor when the sequence is shorter than
/// max_len (the same scoring rule the search uses).
inline double sequence_score(std::span<const int> source_ids, std::span<const int> tokens,
                             const ModelParams& params, int max_len) {
  detail::check_token_ids(tokens, params.config.vocab_size, "scored");
  if (static_cast<int>(tokens.size()) > max_len) {
    throw std::invalid_argument("sequence_score: sequence longer than max_len");
  }
  Tape tape;
  EncoderOutput enc = encode(tape, source_ids, params);
  DecoderState state = initial_decoder_state(tape, enc, params.config);
  int prev = Vocabulary::kBos;
  double score = 0.0;
  for (int tok : tokens) {
    DecoderStepResult sr = decoder_step(tape, prev, state, enc, params);
    score += std::log(sr.distribution.value().at(0, tok));
    state = sr.state;
    prev = tok;
  }
  if (static_cast<int>(tokens.size()) < max_len) {
    DecoderStepResult sr = decoder_step(tape, prev, state, enc, params);
    score += std::log(sr.distribution.value().at(0, Vocabulary::kEos));
  }
  return score;
}

/// Beam search over emittable tokens. Scores are raw cumulative log
/// probabilities unless length_normalize divides by output length at the
/// final selection. The width-1 trajectory always competes as a candidate, so
/// widening the beam never returns a lower-scoring sequence than greedy.
/// beam == 1 reproduces greedy_decode exactly.
inline std::vector<int> beam_decode(std::span<const int> source_ids, const ModelParams& params,
                                    int beam, int max_len, bool length_normalize = false) {
  if (beam < 1) throw std::invalid_argument("beam_decode: beam width must be >= 1");
  if (max_len < 0) throw std::invalid_argument("beam_decode: max_len must be >= 0");
  const int vocab = params.config.vocab_size;

  Tape tape;
  EncoderOutput enc = encode(tape, source_ids, params);
  if (max_len == 0) return {};

  std::vector<Hypothesis> live(1);
  live[0].state = initial_decoder_state(tape, enc, params.config);
  std::optional<Hypothesis> best_finished;
  const auto offer_finished = [&](Hypothesis h) {
    h.finished = true;
    if (!best_finished.has_value() || detail::better(h, *best_finished, length_normalize)) {
      best_finished = std::move(h);
    }
  };

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    // EOS expansions compete for beam slots like any other token; only the
    // selected ones retire into the finished pool. This keeps beam == 1
    // identical to the greedy trajectory.
    std::vector<Hypothesis> candidates;
    candidates.reserve(live.size() * static_cast<std::size_t>(vocab));
    for (const Hypothesis& hyp : live) {
      const int prev = hyp.tokens.empty() ? Vocabulary::kBos : hyp.tokens.back();
      DecoderStepResult sr = decoder_step(tape, prev, hyp.state, enc, params);
      const Matrix& dist = sr.distribution.value();
      for (int id = Vocabulary::kEos; id < vocab; ++id) {  // PAD/BOS sit below kEos
        Hypothesis next;
        next.tokens = hyp.tokens;
        next.log_prob = hyp.log_prob + std::log(dist.at(0, id));
        if (id == Vocabulary::kEos) {
          next.finished = true;
        } else {
          next.tokens.push_back(id);
          next.state = sr.state;
        }
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Hypothesis& a, const Hypothesis& b) { return detail::better(a, b); });
    if (static_cast<int>(candidates.size()) > beam) candidates.resize(static_cast<std::size_t>(beam));
    live.clear();
    for (Hypothesis& hyp : candidates) {
      if (hyp.finished) {
        offer_finished(std::move(hyp));
      } else {
        live.push_back(std::move(hyp));
      }
    }
    // raw scores only shrink along a path, so a strictly better finished
    // hypothesis can never be overtaken
    if (!length_normalize && best_finished.has_value() && !live.empty() &&
        best_finished->log_prob > live.front().log_prob) {
      live.clear();
    }
  }
  for (Hypothesis& hyp : live) offer_finished(std::move(hyp));  // cut off at max_len

  if (beam > 1) {
    // keep the width-1 trajectory in the candidate pool
    detail::GreedyResult g = detail::greedy_rollout(tape, enc, params, max_len, nullptr);
    Hypothesis anchor;
    anchor.tokens = std::move(g.tokens);
    anchor.log_prob = g.log_prob;
    offer_finished(std::move(anchor));
  }
  return best_finished.has_value() ? best_finished->tokens : std::vector<int>{};
}

}  // namespace semsum

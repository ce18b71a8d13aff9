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
// The summarization network: character embeddings, a gated-input bidirectional
// recurrent encoder, an attentive recurrent decoder, and a joint loss that
// adds a cosine-similarity relevance term between the source-text vector
// (the encoder's last state) and the summary vector (final decoder state minus
// the text vector).
//
// Conventions: states are 1xH row vectors and parameters multiply on the
// right, x * W. Ablation flags reduce the network to its baselines: with
// attention off the context vector is identically zero, with the gate off
// embeddings pass through unscaled, with the relevance term off the loss is
// plain negative log-likelihood.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "semsum/autodiff.hpp"
#include "semsum/corpus.hpp"
#include "semsum/matrix.hpp"
#include "semsum/vocab.hpp"

namespace semsum {

enum class CellKind { lstm, gru };

inline std::string to_string(CellKind k) { return k == CellKind::lstm ? "lstm" : "gru"; }

inline CellKind cell_kind_from_string(const std::string& s) {
  if (s == "lstm") return CellKind::lstm;
  if (s == "gru") return CellKind::gru;
  throw std::invalid_argument("unknown cell kind: '" + s + "' (expected lstm or gru)");
}

struct ModelConfig {
  int vocab_size = 4000;
  int embed_dim = 400;
  int hidden_dim = 500;
  int gate_hidden_dim = 1000;
  double lambda = 0.0001;
  CellKind cell_kind = CellKind::lstm;
  bool use_gate = true;
  bool use_attention = true;
  bool use_srb = true;

  void validate() const {
    if (embed_dim < 1 || hidden_dim < 1 || gate_hidden_dim < 1) {
      throw std::invalid_argument("model dimensions must be >= 1");
    }
    if (vocab_size < Vocabulary::kReservedCount) {
      throw std::invalid_argument("vocab_size must cover the reserved token ids");
    }
    if (lambda < 0.0) {
      throw std::invalid_argument("lambda must be >= 0");
    }
  }

  /// Width of a fused cell pre-activation: 4 gate blocks for LSTM, 3 for GRU.
  int cell_block_cols() const {
    return hidden_dim * (cell_kind == CellKind::lstm ? 4 : 3);
  }
};

struct CellWeights {
  ParamTensor* w_x = nullptr;  // input projection
  ParamTensor* w_h = nullptr;  // recurrent projection
  ParamTensor* b = nullptr;    // bias
};

/// The complete named parameter set. Every shape derives from ModelConfig;
/// all tensors are allocated regardless of ablation flags so that checkpoints
/// and flag flips stay compatible.
struct ModelParams {
  ModelConfig config;
  ParamSet set;

  ParamTensor* embedding = nullptr;
  CellWeights encoder_fwd;
  CellWeights encoder_bwd;
  ParamTensor* combine_w = nullptr;  // [2H x H], merges direction states
  ParamTensor* gate_w_in = nullptr;  // [(E+H) x G]
  ParamTensor* gate_b = nullptr;     // [1 x G]
  ParamTensor* gate_w_out = nullptr;  // [G x 1]
  ParamTensor* attn_w_query = nullptr;  // [H x H]
  ParamTensor* attn_w_state = nullptr;  // [H x H]
  ParamTensor* attn_v = nullptr;        // [H x 1]
  CellWeights decoder;
  ParamTensor* output_w = nullptr;  // [2H x V]
  ParamTensor* output_b = nullptr;  // [1 x V]

  ModelParams(const ModelConfig& cfg, std::uint64_t seed) : config(cfg) {
    config.validate();
    std::mt19937_64 rng(seed);
    const int E = config.embed_dim;
    const int H = config.hidden_dim;
    const int G = config.gate_hidden_dim;
    const int V = config.vocab_size;
    const int B = config.cell_block_cols();

    const auto weight = [&](const std::string& name, int r, int c) {
      return &set.add(name, uniform_matrix(r, c, -0.08, 0.08, rng));
    };
    const auto bias = [&](const std::string& name, int c) {
      return &set.add(name, Matrix::zeros(1, c));
    };
    const auto cell = [&](const std::string& prefix, int in_dim) {
      CellWeights w;
      w.w_x = weight(prefix + ".w_x", in_dim, B);
      w.w_h = weight(prefix + ".w_h", H, B);
      w.b = bias(prefix + ".b", B);
      return w;
    };

    embedding = weight("embedding", V, E);
    encoder_fwd = cell("encoder.fwd", E);
    encoder_bwd = cell("encoder.bwd", E);
    combine_w = weight("encoder.combine.w", 2 * H, H);
    gate_w_in = weight("gate.w_in", E + H, G);
    gate_b = bias("gate.b", G);
    gate_w_out = weight("gate.w_out", G, 1);
    attn_w_query = weight("attention.w_query", H, H);
    attn_w_state = weight("attention.w_state", H, H);
    attn_v = weight("attention.v", H, 1);
    decoder = cell("decoder", E + H);
    output_w = weight("output.w", 2 * H, V);
    output_b = bias("output.b", V);
  }

  ModelParams(const ModelParams&) = delete;
  ModelParams& operator=(const ModelParams&) = delete;
  ModelParams(ModelParams&&) = default;
  ModelParams& operator=(ModelParams&&) = default;
};

/// Recurrent state: h always, c only for LSTM cells.
struct RecState {
  Value h;
  Value c;
};

/// Fused LSTM cell, gate block order [i, f, o, g].
inline RecState lstm_cell(Tape& tape, Value x, const RecState& prev, const CellWeights& w,
                          int hidden) {
  Value pre = add(add(matmul(x, tape.param(*w.w_x)), matmul(prev.h, tape.param(*w.w_h))),
                  tape.param(*w.b));
  Value i = sigmoid(slice_cols(pre, 0, hidden));
  Value f = sigmoid(slice_cols(pre, hidden, hidden));
  Value o = sigmoid(slice_cols(pre, 2 * hidden, hidden));
  Value cand = tanh(slice_cols(pre, 3 * hidden, hidden));
  Value c = add(mul(f, prev.c), mul(i, cand));
  Value h = mul(o, tanh(c));
  return {h, c};
}

/// Fused GRU cell, gate block order [z, r, n]. The candidate applies the
/// recurrent projection to r (.) h_prev.
inline Value gru_cell(Tape& tape, Value x, Value h_prev, const CellWeights& w, int hidden) {
  Value wx = tape.param(*w.w_x);
  Value wh = tape.param(*w.w_h);
  Value b = tape.param(*w.b);
  Value zr_pre = add(add(matmul(x, slice_cols(wx, 0, 2 * hidden)),
                         matmul(h_prev, slice_cols(wh, 0, 2 * hidden))),
                     slice_cols(b, 0, 2 * hidden));
  Value z = sigmoid(slice_cols(zr_pre, 0, hidden));
  Value r = sigmoid(slice_cols(zr_pre, hidden, hidden));
  Value n_pre = add(add(matmul(x, slice_cols(wx, 2 * hidden, hidden)),
                        matmul(mul(r, h_prev), slice_cols(wh, 2 * hidden, hidden))),
                    slice_cols(b, 2 * hidden, hidden));
  Value n = tanh(n_pre);
  // h = (1 - z) (.) h_prev + z (.) n
  return add(h_prev, mul(z, sub(n, h_prev)));
}

inline RecState advance_cell(Tape& tape, Value x, const RecState& prev, const CellWeights& w,
                             const ModelConfig& cfg) {
  if (cfg.cell_kind == CellKind::lstm) {
    return lstm_cell(tape, x, prev, w, cfg.hidden_dim);
  }
  return {gru_cell(tape, x, prev.h, w, cfg.hidden_dim), Value()};
}

inline RecState zero_state(Tape& tape, const ModelConfig& cfg) {
  RecState s;
  s.h = tape.zeros(1, cfg.hidden_dim);
  if (cfg.cell_kind == CellKind::lstm) s.c = tape.zeros(1, cfg.hidden_dim);
  return s;
}

/// Importance score of one input character, strictly in (0, 1):
/// beta = sigmoid(w_out^T tanh(W_in [e; h_prev] + b)).
inline Value gate_score(Tape& tape, Value embedded, Value h_prev, const ModelParams& params) {
  Value joint = concat({embedded, h_prev});
  Value hidden = tanh(add(matmul(joint, tape.param(*params.gate_w_in)), tape.param(*params.gate_b)));
  return sigmoid(matmul(hidden, tape.param(*params.gate_w_out)));
}

struct EncoderOutput {
  std::vector<Value> states;       // combined bidirectional states h_1..h_N
  Value text_vector;               // the same node as states.back()
  std::vector<Value> gate_scores;  // beta_t per position; empty when gate off
};

namespace detail {

inline void check_token_ids(std::span<const int> ids, int vocab_size, const char* what) {
  for (int id : ids) {
    if (id < 0 || id >= vocab_size) {
      throw std::invalid_argument(std::string(what) + " id " + std::to_string(id) +
                                  " outside vocabulary range [0, " + std::to_string(vocab_size) +
                                  ")");
    }
  }
}

}  // namespace detail

/// Runs the bidirectional encoder. When the gate is on, each embedding is
/// scaled by its importance score before both directions consume it; the
/// score conditions on the forward direction's previous hidden state.
inline EncoderOutput encode(Tape& tape, std::span<const int> source_ids,
                            const ModelParams& params) {
  const ModelConfig& cfg = params.config;
  if (source_ids.empty()) {
    throw std::invalid_argument("encode: source must be non-empty");
  }
  detail::check_token_ids(source_ids, cfg.vocab_size, "source");

  EncoderOutput out;
  const std::size_t n = source_ids.size();
  Value embed_matrix = tape.param(*params.embedding);

  std::vector<Value> inputs(n);
  std::vector<Value> fwd_states(n);
  RecState fwd = zero_state(tape, cfg);
  for (std::size_t t = 0; t < n; ++t) {
    Value e = row(embed_matrix, source_ids[t]);
    if (cfg.use_gate) {
      Value beta = gate_score(tape, e, fwd.h, params);
      out.gate_scores.push_back(beta);
      inputs[t] = scale_by(e, beta);
    } else {
      inputs[t] = e;
    }
    fwd = advance_cell(tape, inputs[t], fwd, params.encoder_fwd, cfg);
    fwd_states[t] = fwd.h;
  }

  std::vector<Value> bwd_states(n);
  RecState bwd = zero_state(tape, cfg);
  for (std::size_t t = n; t-- > 0;) {
    bwd = advance_cell(tape, inputs[t], bwd, params.encoder_bwd, cfg);
    bwd_states[t] = bwd.h;
  }

  out.states.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    Value both = concat({fwd_states[t], bwd_states[t]});
    out.states.push_back(tanh(matmul(both, tape.param(*params.combine_w))));
  }
  out.text_vector = out.states.back();
  return out;
}

struct AttentionResult {
  Value context;  // [1 x H]
  Value weights;  // [1 x N], rows sum to 1
};

/// Additive attention: score(q, h_i) = v^T tanh(W_q q + W_s h_i), weights by
/// softmax over positions, context as the weighted sum of states.
inline AttentionResult attention_context(Tape& tape, Value query,
                                         const std::vector<Value>& states,
                                         const ModelParams& params) {
  if (states.empty()) {
    throw std::invalid_argument("attention_context: need at least one encoder state");
  }
  Value q_proj = matmul(query, tape.param(*params.attn_w_query));
  Value w_state = tape.param(*params.attn_w_state);
  Value v = tape.param(*params.attn_v);
  std::vector<Value> scores;
  scores.reserve(states.size());
  for (const Value& h : states) {
    scores.push_back(matmul(tanh(add(q_proj, matmul(h, w_state))), v));
  }
  AttentionResult res;
  res.weights = softmax_rows(concat(scores));
  res.context = matmul(res.weights, stack_rows(states));
  return res;
}

struct DecoderState {
  RecState rec;
};

struct DecoderStepResult {
  Value distribution;  // [1 x V], sums to 1
  Value context;       // [1 x H]; exactly zero when attention is off
  Value attention;     // [1 x N]; invalid when attention is off
  DecoderState state;
};

inline DecoderState initial_decoder_state(Tape& tape, const EncoderOutput& enc,
                                          const ModelConfig& cfg) {
  DecoderState st;
  st.rec.h = enc.text_vector;
  if (cfg.cell_kind == CellKind::lstm) st.rec.c = tape.zeros(1, cfg.hidden_dim);
  return st;
}

/// One decoder step. The attention query is the previous decoder state; the
/// cell consumes [embedding; context] and the output layer sees [state;
/// context].
inline DecoderStepResult decoder_step(Tape& tape, int prev_token, const DecoderState& state,
                                      const EncoderOutput& enc, const ModelParams& params) {
  const ModelConfig& cfg = params.config;
  if (prev_token < 0 || prev_token >= cfg.vocab_size) {
    throw std::invalid_argument("decoder_step: token id " + std::to_string(prev_token) +
                                " outside vocabulary range");
  }
  DecoderStepResult res;
  Value e = row(tape.param(*params.embedding), prev_token);
  if (cfg.use_attention) {
    AttentionResult attn = attention_context(tape, state.rec.h, enc.states, params);
    res.context = attn.context;
    res.attention = attn.weights;
  } else {
    res.context = tape.zeros(1, cfg.hidden_dim);
  }
  Value x = concat({e, res.context});
  res.state.rec = advance_cell(tape, x, state.rec, params.decoder, cfg);
  Value pre = add(matmul(concat({res.state.rec.h, res.context}), tape.param(*params.output_w)),
                  tape.param(*params.output_b));
  res.distribution = softmax_rows(pre);
  return res;
}

struct DecoderOutput {
  std::vector<Value> distributions;      // one per step, targets gold tokens then EOS
  std::vector<Value> attention_weights;  // per step when attention is on
  std::vector<int> targets;              // summary ids followed by EOS
  Value final_state;                     // s_M
  Value summary_vector;                  // V_s = s_M - h_N
};

/// Teacher-forced pass over the gold summary. Step t consumes the previous
/// gold token (BOS first) and is scored against the next one; the final step
/// consumes the last summary character and targets EOS. The summary vector is
/// the final decoder state minus the encoder's text vector.
inline DecoderOutput decode_teacher_forced(Tape& tape, std::span<const int> summary_ids,
                                           const EncoderOutput& enc, const ModelParams& params) {
  const ModelConfig& cfg = params.config;
  if (summary_ids.empty()) {
    throw std::invalid_argument("decode_teacher_forced: summary must be non-empty");
  }
  detail::check_token_ids(summary_ids, cfg.vocab_size, "summary");

  DecoderOutput out;
  out.targets.assign(summary_ids.begin(), summary_ids.end());
  out.targets.push_back(Vocabulary::kEos);

  DecoderState state = initial_decoder_state(tape, enc, cfg);
  int prev = Vocabulary::kBos;
  for (std::size_t t = 0; t < out.targets.size(); ++t) {
    DecoderStepResult step = decoder_step(tape, prev, state, enc, params);
    out.distributions.push_back(step.distribution);
    if (cfg.use_attention) out.attention_weights.push_back(step.attention);
    state = step.state;
    prev = out.targets[t];
  }
  out.final_state = state.rec.h;
  out.summary_vector = sub(out.final_state, enc.text_vector);
  return out;
}

struct LossParts {
  Value loss;  // nll - lambda * cos when the relevance term is on, else nll
  Value nll;   // mean per-token negative log-likelihood
  Value cos;   // cosine(summary vector, text vector), always computed
  EncoderOutput encoder;
  DecoderOutput decoder;
};

/// Joint training loss for one pair.
inline LossParts srb_loss(Tape& tape, const TextSummaryPair& pair, const ModelParams& params) {
  const ModelConfig& cfg = params.config;
  LossParts parts;
  parts.encoder = encode(tape, pair.source_ids, params);
  parts.decoder = decode_teacher_forced(tape, pair.summary_ids, parts.encoder, params);

  Value log_prob_sum;
  for (std::size_t t = 0; t < parts.decoder.targets.size(); ++t) {
    Value lp = log(pick(parts.decoder.distributions[t], 0, parts.decoder.targets[t]));
    log_prob_sum = t == 0 ? lp : add(log_prob_sum, lp);
  }
  const double inv_len = 1.0 / static_cast<double>(parts.decoder.targets.size());
  parts.nll = scale(log_prob_sum, -inv_len);
  parts.cos = cosine(parts.decoder.summary_vector, parts.encoder.text_vector);
  parts.loss = cfg.use_srb ? add(parts.nll, scale(parts.cos, -cfg.lambda)) : parts.nll;
  return parts;
}

}  // namespace semsum

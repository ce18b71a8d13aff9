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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "semsum/model.hpp"
#include "testing_models.hpp"
#include "testing_oracles.hpp"

using namespace semsum;
using semsum::testing::check_gradients;
using semsum::testing::random_pair;
using semsum::testing::tiny_config;

namespace {

/// Plain matrix product for test-side evaluation of cell formulas.
Matrix mm(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      for (int j = 0; j < b.cols; ++j) out.at(i, j) += a.at(i, k) * b.at(k, j);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("lstm cell: zero weights and inputs give zero state") {
  ModelConfig cfg = tiny_config();
  ModelParams params(cfg, 1);
  for (auto& p : params.set) p.value.fill(0.0);

  Tape tape;
  RecState prev = zero_state(tape, cfg);
  RecState next =
      lstm_cell(tape, tape.zeros(1, cfg.embed_dim), prev, params.encoder_fwd, cfg.hidden_dim);
  for (double h : next.h.value().v) CHECK(h == 0.0);
  for (double c : next.c.value().v) CHECK(c == 0.0);
}

TEST_CASE("lstm cell: saturated forget gate passes the cell state through") {
  ModelConfig cfg = tiny_config();
  const int H = cfg.hidden_dim;
  ModelParams params(cfg, 2);
  // forget-gate block saturates at sigmoid(~20) ~= 1 - 2e-9
  for (int j = H; j < 2 * H; ++j) params.decoder.b->value.at(0, j) = 20.0;

  std::mt19937_64 rng(3);
  const Matrix x = uniform_matrix(1, cfg.embed_dim + cfg.hidden_dim, -1, 1, rng);
  const Matrix h_prev = uniform_matrix(1, H, -0.5, 0.5, rng);
  const Matrix c_prev = uniform_matrix(1, H, -0.5, 0.5, rng);

  Tape tape;
  RecState prev{tape.input(h_prev), tape.input(c_prev)};
  RecState next = lstm_cell(tape, tape.input(x), prev, params.decoder, H);

  // evaluate the cell formula directly: c ~= c_prev + i (.) cand
  Matrix pre = mm(x, params.decoder.w_x->value);
  const Matrix rec = mm(h_prev, params.decoder.w_h->value);
  for (int j = 0; j < pre.cols; ++j) pre.at(0, j) += rec.at(0, j) + params.decoder.b->value.at(0, j);
  for (int j = 0; j < H; ++j) {
    const double i_gate = 1.0 / (1.0 + std::exp(-pre.at(0, j)));
    const double cand = std::tanh(pre.at(0, 3 * H + j));
    const double expected = c_prev.at(0, j) + i_gate * cand;
    CHECK(std::fabs(next.c.value().at(0, j) - expected) < 1e-8);
  }
}

TEST_CASE("lstm cell gradients match finite differences") {
  ModelConfig cfg = tiny_config();
  std::mt19937_64 rng(5);
  ParamSet params;
  params.add("x", uniform_matrix(1, cfg.embed_dim + cfg.hidden_dim, -1, 1, rng));
  params.add("h", uniform_matrix(1, cfg.hidden_dim, -1, 1, rng));
  params.add("c", uniform_matrix(1, cfg.hidden_dim, -1, 1, rng));
  ModelParams model(cfg, 6);
  for (const char* n : {"decoder.w_x", "decoder.w_h", "decoder.b"}) {
    params.add(n, model.set.at(n).value);
  }
  const Matrix w = uniform_matrix(1, cfg.hidden_dim, -1, 1, rng);

  auto build = [&](Tape& tape) {
    CellWeights cw{&params.at("decoder.w_x"), &params.at("decoder.w_h"), &params.at("decoder.b")};
    RecState prev{tape.param(params.at("h")), tape.param(params.at("c"))};
    RecState next = lstm_cell(tape, tape.param(params.at("x")), prev, cw, cfg.hidden_dim);
    return add(sum(mul(next.h, tape.input(w))), sum(mul(next.c, tape.input(w))));
  };
  params.zero_grads();
  {
    Tape tape;
    tape.backward(build(tape));
  }
  auto check = check_gradients(params, [&] {
    Tape tape;
    return build(tape).scalar();
  });
  INFO("worst rel err " << check.worst_rel << " in " << check.worst_param);
  CHECK(check.ok());
}

TEST_CASE("gru cell: zero weights give zero state, saturated update keeps h_prev") {
  ModelConfig cfg = tiny_config(CellKind::gru);
  ModelParams params(cfg, 7);
  for (auto& p : params.set) p.value.fill(0.0);

  Tape tape;
  Value h0 = tape.zeros(1, cfg.hidden_dim);
  Value h1 = gru_cell(tape, tape.zeros(1, cfg.embed_dim), h0, params.encoder_fwd, cfg.hidden_dim);
  for (double h : h1.value().v) CHECK(h == 0.0);

  // update gate driven to 0 freezes the state
  ModelParams frozen(cfg, 8);
  for (int j = 0; j < cfg.hidden_dim; ++j) frozen.encoder_fwd.b->value.at(0, j) = -20.0;
  std::mt19937_64 rng(9);
  const Matrix h_prev = uniform_matrix(1, cfg.hidden_dim, -0.5, 0.5, rng);
  Tape t2;
  Value out = gru_cell(t2, t2.input(uniform_matrix(1, cfg.embed_dim, -1, 1, rng)),
                       t2.input(h_prev), frozen.encoder_fwd, cfg.hidden_dim);
  for (int j = 0; j < cfg.hidden_dim; ++j) {
    CHECK(std::fabs(out.value().at(0, j) - h_prev.at(0, j)) < 1e-8);
  }
}

TEST_CASE("gru cell gradients match finite differences") {
  ModelConfig cfg = tiny_config(CellKind::gru);
  std::mt19937_64 rng(11);
  ParamSet params;
  params.add("x", uniform_matrix(1, cfg.embed_dim, -1, 1, rng));
  params.add("h", uniform_matrix(1, cfg.hidden_dim, -1, 1, rng));
  ModelParams model(cfg, 12);
  for (const char* n : {"encoder.fwd.w_x", "encoder.fwd.w_h", "encoder.fwd.b"}) {
    params.add(n, model.set.at(n).value);
  }
  const Matrix w = uniform_matrix(1, cfg.hidden_dim, -1, 1, rng);

  auto build = [&](Tape& tape) {
    CellWeights cw{&params.at("encoder.fwd.w_x"), &params.at("encoder.fwd.w_h"),
                   &params.at("encoder.fwd.b")};
    Value next = gru_cell(tape, tape.param(params.at("x")), tape.param(params.at("h")), cw,
                          cfg.hidden_dim);
    return sum(mul(next, tape.input(w)));
  };
  params.zero_grads();
  {
    Tape tape;
    tape.backward(build(tape));
  }
  auto check = check_gradients(params, [&] {
    Tape tape;
    return build(tape).scalar();
  });
  INFO("worst rel err " << check.worst_rel << " in " << check.worst_param);
  CHECK(check.ok());
}

TEST_CASE("gate score: 0.5 at zero weights, pushed away by scaling the readout") {
  ModelConfig cfg = tiny_config();
  ModelParams params(cfg, 13);
  for (auto& p : params.set) p.value.fill(0.0);
  Tape tape;
  Value beta = gate_score(tape, tape.zeros(1, cfg.embed_dim), tape.zeros(1, cfg.hidden_dim), params);
  CHECK(beta.scalar() == 0.5);

  ModelParams live(cfg, 14);
  std::mt19937_64 rng(15);
  const Matrix e = uniform_matrix(1, cfg.embed_dim, -1, 1, rng);
  const Matrix h = uniform_matrix(1, cfg.hidden_dim, -1, 1, rng);
  Tape t1;
  const double b1 = gate_score(t1, t1.input(e), t1.input(h), live).scalar();
  for (double& w : live.gate_w_out->value.v) w *= 3.0;
  Tape t2;
  const double b3 = gate_score(t2, t2.input(e), t2.input(h), live).scalar();
  CHECK(std::fabs(b3 - 0.5) > std::fabs(b1 - 0.5));
  CHECK(b1 > 0.0);
  CHECK(b1 < 1.0);
}

TEST_CASE("encoder: single position, text vector identity, determinism") {
  ModelConfig cfg = tiny_config();
  ModelParams params(cfg, 16);

  Tape tape;
  const std::vector<int> one{5};
  EncoderOutput enc = encode(tape, one, params);
  CHECK(enc.states.size() == 1);
  CHECK(enc.text_vector.node() == enc.states.back().node());

  Tape t2;
  CHECK_THROWS_AS(encode(t2, std::vector<int>{}, params), std::invalid_argument);
  CHECK_THROWS_AS(encode(t2, std::vector<int>{cfg.vocab_size}, params), std::invalid_argument);

  const std::vector<int> ids{4, 9, 7, 7, 12};
  Tape ta, tb;
  EncoderOutput ea = encode(ta, ids, params);
  EncoderOutput eb = encode(tb, ids, params);
  for (std::size_t i = 0; i < ea.states.size(); ++i) {
    for (std::size_t j = 0; j < ea.states[i].value().size(); ++j) {
      CHECK(ea.states[i].value().v[j] == eb.states[i].value().v[j]);
    }
  }
}

TEST_CASE("encoder: zero-weight gate halves inputs and changes the states") {
  ModelConfig gated = tiny_config();
  ModelConfig plain = tiny_config();
  plain.use_gate = false;

  ModelParams params(gated, 17);
  for (double& w : params.gate_w_in->value.v) w = 0.0;
  for (double& w : params.gate_w_out->value.v) w = 0.0;  // beta == 0.5 everywhere

  const std::vector<int> ids{4, 9, 7};
  Tape tg, tp;
  EncoderOutput with_gate = encode(tg, ids, params);
  ModelParams plain_params(plain, 17);  // same seed, same tensors
  EncoderOutput without_gate = encode(tp, ids, plain_params);

  CHECK(params.set.at("embedding").value.v == plain_params.set.at("embedding").value.v);
  bool any_difference = false;
  for (std::size_t j = 0; j < with_gate.text_vector.value().size(); ++j) {
    if (with_gate.text_vector.value().v[j] != without_gate.text_vector.value().v[j]) {
      any_difference = true;
    }
  }
  CHECK(any_difference);
  REQUIRE(with_gate.gate_scores.size() == ids.size());
  for (const Value& beta : with_gate.gate_scores) CHECK(beta.scalar() == 0.5);
}

TEST_CASE("attention: singleton weight, convexity, normalization") {
  ModelConfig cfg = tiny_config();
  ModelParams params(cfg, 18);
  std::mt19937_64 rng(19);

  Tape tape;
  Value query = tape.input(uniform_matrix(1, cfg.hidden_dim, -1, 1, rng));
  Value h1 = tape.input(uniform_matrix(1, cfg.hidden_dim, -1, 1, rng));
  AttentionResult single = attention_context(tape, query, {h1}, params);
  CHECK(single.weights.value().scalar() == 1.0);
  for (std::size_t j = 0; j < single.context.value().size(); ++j) {
    CHECK(single.context.value().v[j] == h1.value().v[j]);
  }

  // identical states: context equals the shared state regardless of weights
  Value h = tape.input(uniform_matrix(1, cfg.hidden_dim, -1, 1, rng));
  AttentionResult same = attention_context(tape, query, {h, h, h, h}, params);
  for (std::size_t j = 0; j < same.context.value().size(); ++j) {
    CHECK(std::fabs(same.context.value().v[j] - h.value().v[j]) < 1e-12);
  }

  std::vector<Value> states;
  for (int i = 0; i < 7; ++i) states.push_back(tape.input(uniform_matrix(1, cfg.hidden_dim, -1, 1, rng)));
  AttentionResult spread = attention_context(tape, query, states, params);
  double total = 0.0;
  for (double a : spread.weights.value().v) {
    CHECK(a >= 0.0);
    total += a;
  }
  CHECK(std::fabs(total - 1.0) < 1e-12);
}

TEST_CASE("teacher-forced decoder: normalized steps and the subtraction identity") {
  for (CellKind kind : {CellKind::lstm, CellKind::gru}) {
    ModelConfig cfg = tiny_config(kind);
    ModelParams params(cfg, 21);
    std::mt19937_64 rng(22);
    TextSummaryPair pair = random_pair(rng, cfg, 6, 4);

    Tape tape;
    EncoderOutput enc = encode(tape, pair.source_ids, params);
    DecoderOutput dec = decode_teacher_forced(tape, pair.summary_ids, enc, params);

    CHECK(dec.distributions.size() == pair.summary_ids.size() + 1);
    CHECK(dec.targets.back() == Vocabulary::kEos);
    for (const Value& dist : dec.distributions) {
      double s = 0.0;
      for (double p : dist.value().v) s += p;
      CHECK(std::fabs(s - 1.0) < 1e-12);
    }
    for (const Value& attn : dec.attention_weights) {
      double s = 0.0;
      for (double a : attn.value().v) s += a;
      CHECK(std::fabs(s - 1.0) < 1e-12);
    }

    // V_s = s_M - h_N, element for element
    for (std::size_t j = 0; j < dec.summary_vector.value().size(); ++j) {
      CHECK(dec.summary_vector.value().v[j] ==
            dec.final_state.value().v[j] - enc.text_vector.value().v[j]);
    }

    Tape t2;
    CHECK_THROWS_AS(decode_teacher_forced(t2, std::vector<int>{}, enc, params),
                    std::invalid_argument);
  }
}

TEST_CASE("ablations are structural: disabled paths contribute nothing") {
  std::mt19937_64 rng(23);
  ModelConfig cfg = tiny_config(CellKind::lstm, /*gate=*/false, /*attn=*/false, /*srb=*/false);
  ModelParams params(cfg, 24);
  TextSummaryPair pair = random_pair(rng, cfg, 5, 3);

  double base;
  {
    Tape tape;
    LossParts parts = srb_loss(tape, pair, params);
    base = parts.loss.scalar();
    CHECK(parts.loss.scalar() == parts.nll.scalar());  // srb off: loss == nll

    // attention off: every context is exactly zero
    EncoderOutput enc = encode(tape, pair.source_ids, params);
    DecoderState st = initial_decoder_state(tape, enc, cfg);
    DecoderStepResult step = decoder_step(tape, Vocabulary::kBos, st, enc, params);
    for (double c : step.context.value().v) CHECK(c == 0.0);
    CHECK_FALSE(step.attention.valid());
  }

  // perturbing unused parameters cannot move the loss
  for (double& w : params.attn_w_query->value.v) w += 0.37;
  for (double& w : params.gate_w_in->value.v) w -= 1.21;
  {
    Tape tape;
    CHECK(srb_loss(tape, pair, params).loss.scalar() == base);
  }
}

TEST_CASE("loss: lambda scaling is exact and bounded") {
  std::mt19937_64 rng(25);
  ModelConfig cfg = tiny_config();
  ModelParams params(cfg, 26);
  TextSummaryPair pair = random_pair(rng, cfg, 6, 4);

  cfg.lambda = 0.0;
  ModelParams zero_lambda(cfg, 26);
  Tape t0;
  LossParts at0 = srb_loss(t0, pair, zero_lambda);
  CHECK(at0.loss.scalar() == at0.nll.scalar());

  for (double lambda : {0.05, 0.3, 1.0}) {
    cfg.lambda = lambda;
    ModelParams p(cfg, 26);
    Tape tape;
    LossParts parts = srb_loss(tape, pair, p);
    CHECK(std::fabs((parts.loss.scalar() - parts.nll.scalar()) -
                    (-lambda * parts.cos.scalar())) < 1e-12);
    CHECK(parts.loss.scalar() >= parts.nll.scalar() - lambda);  // cos <= 1
  }
}

TEST_CASE("full loss gradient matches finite differences on the tiny model") {
  std::mt19937_64 rng(27);
  for (CellKind kind : {CellKind::lstm, CellKind::gru}) {
    ModelConfig cfg = tiny_config(kind);
    ModelParams params(cfg, 28);
    TextSummaryPair pair = random_pair(rng, cfg, 5, 3);

    params.set.zero_grads();
    {
      Tape tape;
      tape.backward(srb_loss(tape, pair, params).loss);
    }
    auto check = check_gradients(params.set, [&] {
      Tape tape;
      return srb_loss(tape, pair, params).loss.scalar();
    });
    INFO(to_string(kind) << ": worst rel err " << check.worst_rel << " in " << check.worst_param
                         << " over " << check.checked << " elements");
    CHECK(check.ok());
  }
}

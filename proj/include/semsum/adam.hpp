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
// Adam with bias correction plus global-norm gradient clipping, operating on
// the gradients accumulated inside a ParamSet.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "semsum/autodiff.hpp"
#include "semsum/matrix.hpp"

namespace semsum {

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 10;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;
  int checkpoint_interval = 0;  // epochs between checkpoints; 0 writes only the final one
  std::string corpus_path;
  std::string vocab_path;
  std::string checkpoint_dir;

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
      throw std::invalid_argument("adam betas must lie in [0, 1)");
    }
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be > 0");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (clip_norm <= 0.0) throw std::invalid_argument("clip_norm must be > 0");
    if (checkpoint_interval < 0) throw std::invalid_argument("checkpoint_interval must be >= 0");
  }
};

/// Per-parameter first and second moments, keyed by parameter name. The step
/// counter drives bias correction and persists across checkpoints.
struct AdamState {
  long step = 0;
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;

  static AdamState for_params(const ParamSet& params) {
    AdamState st;
    for (const auto& p : params) {
      st.m.emplace(p.name, Matrix::zeros(p.value.rows, p.value.cols));
      st.v.emplace(p.name, Matrix::zeros(p.value.rows, p.value.cols));
    }
    return st;
  }
};

/// Scales all gradients so their global norm is at most max_norm; returns the
/// pre-clip norm.
inline double clip_gradients(ParamSet& params, double max_norm) {
  const double norm = params.grad_norm();
  if (norm > max_norm && norm > 0.0) params.scale_grads(max_norm / norm);
  return norm;
}

/// One Adam update from the gradients currently held in the ParamSet.
inline void adam_step(ParamSet& params, AdamState& state, const TrainConfig& cfg) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state does not match the parameter set");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (auto& p : params) {
    auto mit = state.m.find(p.name);
    auto vit = state.v.find(p.name);
    if (mit == state.m.end() || vit == state.v.end() || !mit->second.same_shape(p.value)) {
      throw std::invalid_argument("adam_step: missing or mismatched state for parameter " +
                                  p.name);
    }
    Matrix& m = mit->second;
    Matrix& v = vit->second;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.v[i];
      m.v[i] = cfg.beta1 * m.v[i] + (1.0 - cfg.beta1) * g;
      v.v[i] = cfg.beta2 * v.v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m.v[i] / bc1;
      const double v_hat = v.v[i] / bc2;
      p.value.v[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace semsum

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
// Checkpoint files: a text manifest (config and training counters as
// key=value lines) followed by each named tensor as `name rows cols` plus
// row-major 64-bit little-endian payload. Round-trips are bit-exact.
//
// Optimizer moments ride along as extra tensors (`adam.m:<name>`,
// `adam.v:<name>`) so a resumed run continues the exact trajectory of an
// uninterrupted one.

#pragma once

#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semsum/adam.hpp"
#include "semsum/config_io.hpp"
#include "semsum/model.hpp"

namespace semsum {

namespace detail {

constexpr const char* kCheckpointMagic = "semsum-checkpoint-v1";

inline void write_f64_le(std::string& out, double x) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &x, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

inline double read_f64_le(const char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  double x = 0.0;
  std::memcpy(&x, &bits, sizeof(x));
  return x;
}

}  // namespace detail

struct CheckpointData {
  ModelConfig config;
  std::map<std::string, std::string> manifest;
  std::vector<std::pair<std::string, Matrix>> tensors;  // file order

  const Matrix* find_tensor(const std::string& name) const {
    for (const auto& [n, m] : tensors) {
      if (n == name) return &m;
    }
    return nullptr;
  }
};

inline void write_checkpoint(const std::string& path, const ModelConfig& config,
                             const std::vector<std::pair<std::string, const Matrix*>>& tensors,
                             const std::map<std::string, std::string>& extra_manifest = {}) {
  std::string out;
  out += detail::kCheckpointMagic;
  out += '\n';
  std::map<std::string, std::string> manifest = model_config_kv(config);
  for (const auto& [k, v] : extra_manifest) manifest[k] = v;
  out += "manifest " + std::to_string(manifest.size()) + "\n";
  for (const auto& [k, v] : manifest) out += k + "=" + v + "\n";
  out += "tensors " + std::to_string(tensors.size()) + "\n";
  for (const auto& [name, m] : tensors) {
    out += "tensor " + name + " " + std::to_string(m->rows) + " " + std::to_string(m->cols) + "\n";
    for (double x : m->v) detail::write_f64_le(out, x);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("failed writing checkpoint: " + path);
}

inline CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string line;
  const auto expect_line = [&](const char* what) {
    if (!std::getline(f, line)) throw std::runtime_error("checkpoint truncated before " +
                                                         std::string(what) + ": " + path);
    return line;
  };

  if (expect_line("magic") != detail::kCheckpointMagic) {
    throw std::runtime_error("not a semsum checkpoint: " + path);
  }
  CheckpointData data;

  std::istringstream header(expect_line("manifest header"));
  std::string word;
  std::size_t manifest_count = 0;
  header >> word >> manifest_count;
  if (word != "manifest") throw std::runtime_error("malformed manifest header in " + path);
  for (std::size_t i = 0; i < manifest_count; ++i) {
    const std::string entry = expect_line("manifest entry");
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed manifest entry in " + path);
    data.manifest[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  data.config = model_config_from_kv(data.manifest);

  std::istringstream theader(expect_line("tensor header"));
  std::size_t tensor_count = 0;
  theader >> word >> tensor_count;
  if (word != "tensors") throw std::runtime_error("malformed tensor header in " + path);
  for (std::size_t i = 0; i < tensor_count; ++i) {
    std::istringstream meta(expect_line("tensor metadata"));
    std::string tag, name;
    int rows = 0, cols = 0;
    meta >> tag >> name >> rows >> cols;
    if (tag != "tensor" || rows < 0 || cols < 0) {
      throw std::runtime_error("malformed tensor metadata in " + path);
    }
    Matrix m(rows, cols);
    std::vector<char> bytes(m.size() * 8);
    f.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (f.gcount() != static_cast<std::streamsize>(bytes.size())) {
      throw std::runtime_error("checkpoint tensor payload truncated in " + path);
    }
    for (std::size_t k = 0; k < m.size(); ++k) m.v[k] = detail::read_f64_le(&bytes[k * 8]);
    f.get();  // trailing newline
    data.tensors.emplace_back(std::move(name), std::move(m));
  }
  return data;
}

/// Writes model parameters, optionally with optimizer state and epoch counter
/// for exact training resumption.
inline void save_model_checkpoint(const std::string& path, const ModelParams& params,
                                  const AdamState* adam = nullptr, int completed_epochs = -1) {
  std::vector<std::pair<std::string, const Matrix*>> tensors;
  for (const auto& p : params.set) tensors.emplace_back(p.name, &p.value);
  std::map<std::string, std::string> extra;
  if (adam != nullptr) {
    for (const auto& p : params.set) {
      tensors.emplace_back("adam.m:" + p.name, &adam->m.at(p.name));
      tensors.emplace_back("adam.v:" + p.name, &adam->v.at(p.name));
    }
    extra["trained.adam_step"] = std::to_string(adam->step);
  }
  if (completed_epochs >= 0) extra["trained.epochs"] = std::to_string(completed_epochs);
  write_checkpoint(path, params.config, tensors, extra);
}

/// Rebuilds ModelParams from a checkpoint; every model tensor must be present
/// with its exact shape.
inline ModelParams params_from_checkpoint(const CheckpointData& data) {
  ModelParams params(data.config, /*seed=*/0);
  for (auto& p : params.set) {
    const Matrix* m = data.find_tensor(p.name);
    if (m == nullptr) {
      throw std::runtime_error("checkpoint is missing parameter " + p.name);
    }
    if (!m->same_shape(p.value)) {
      throw std::runtime_error("checkpoint parameter " + p.name + " has shape " + shape_of(*m) +
                               ", expected " + shape_of(p.value));
    }
    p.value = *m;
  }
  return params;
}

/// Optimizer state embedded in a checkpoint, if any.
inline std::optional<AdamState> adam_from_checkpoint(const CheckpointData& data,
                                                     const ParamSet& params) {
  auto it = data.manifest.find("trained.adam_step");
  if (it == data.manifest.end()) return std::nullopt;
  AdamState st;
  st.step = std::stol(it->second);
  for (const auto& p : params) {
    const Matrix* m = data.find_tensor("adam.m:" + p.name);
    const Matrix* v = data.find_tensor("adam.v:" + p.name);
    if (m == nullptr || v == nullptr || !m->same_shape(p.value) || !v->same_shape(p.value)) {
      throw std::runtime_error("checkpoint optimizer state is incomplete for " + p.name);
    }
    st.m.emplace(p.name, *m);
    st.v.emplace(p.name, *v);
  }
  return st;
}

inline int epochs_from_checkpoint(const CheckpointData& data) {
  auto it = data.manifest.find("trained.epochs");
  return it == data.manifest.end() ? 0 : std::stoi(it->second);
}

}  // namespace semsum

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
// key=value configuration files mirroring the model, trainer, and ingestion
// fields. Lines starting with '#' are comments; unknown keys are errors.

#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "semsum/adam.hpp"
#include "semsum/corpus.hpp"
#include "semsum/model.hpp"

namespace semsum {

struct ConfigFile {
  ModelConfig model;
  TrainConfig train;
  IngestLimits limits;
  std::set<std::string> present;  // keys that appeared in the file

  bool has(const std::string& key) const { return present.count(key) != 0; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline int kv_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": expected integer, got '" + value + "'");
  }
}

inline std::uint64_t kv_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": expected unsigned integer, got '" + value +
                             "'");
  }
}

inline double kv_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": expected number, got '" + value + "'");
  }
}

inline bool kv_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::runtime_error("config key " + key + ": expected boolean, got '" + value + "'");
}

inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

inline ConfigFile parse_config_text(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (cfg.present.count(key) != 0) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": duplicate key " + key);
    }
    cfg.present.insert(key);

    if (key == "vocab_size") {
      cfg.model.vocab_size = detail::kv_int(key, value);
    } else if (key == "embed_dim") {
      cfg.model.embed_dim = detail::kv_int(key, value);
    } else if (key == "hidden_dim") {
      cfg.model.hidden_dim = detail::kv_int(key, value);
    } else if (key == "gate_hidden_dim") {
      cfg.model.gate_hidden_dim = detail::kv_int(key, value);
    } else if (key == "lambda") {
      cfg.model.lambda = detail::kv_double(key, value);
    } else if (key == "cell_kind") {
      cfg.model.cell_kind = cell_kind_from_string(value);
    } else if (key == "use_gate") {
      cfg.model.use_gate = detail::kv_bool(key, value);
    } else if (key == "use_attention") {
      cfg.model.use_attention = detail::kv_bool(key, value);
    } else if (key == "use_srb") {
      cfg.model.use_srb = detail::kv_bool(key, value);
    } else if (key == "batch_size") {
      cfg.train.batch_size = detail::kv_int(key, value);
    } else if (key == "learning_rate") {
      cfg.train.learning_rate = detail::kv_double(key, value);
    } else if (key == "beta1") {
      cfg.train.beta1 = detail::kv_double(key, value);
    } else if (key == "beta2") {
      cfg.train.beta2 = detail::kv_double(key, value);
    } else if (key == "epsilon") {
      cfg.train.epsilon = detail::kv_double(key, value);
    } else if (key == "epochs") {
      cfg.train.epochs = detail::kv_int(key, value);
    } else if (key == "seed") {
      cfg.train.seed = detail::kv_u64(key, value);
    } else if (key == "clip_norm") {
      cfg.train.clip_norm = detail::kv_double(key, value);
    } else if (key == "checkpoint_interval") {
      cfg.train.checkpoint_interval = detail::kv_int(key, value);
    } else if (key == "corpus_path") {
      cfg.train.corpus_path = value;
    } else if (key == "vocab_path") {
      cfg.train.vocab_path = value;
    } else if (key == "checkpoint_dir") {
      cfg.train.checkpoint_dir = value;
    } else if (key == "max_source_chars") {
      cfg.limits.max_source_chars = detail::kv_int(key, value);
    } else if (key == "max_summary_chars") {
      cfg.limits.max_summary_chars = detail::kv_int(key, value);
    } else {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": unknown key " + key);
    }
  }
  return cfg;
}

inline ConfigFile parse_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

inline std::map<std::string, std::string> model_config_kv(const ModelConfig& m) {
  return {
      {"vocab_size", std::to_string(m.vocab_size)},
      {"embed_dim", std::to_string(m.embed_dim)},
      {"hidden_dim", std::to_string(m.hidden_dim)},
      {"gate_hidden_dim", std::to_string(m.gate_hidden_dim)},
      {"lambda", detail::fmt_double(m.lambda)},
      {"cell_kind", to_string(m.cell_kind)},
      {"use_gate", m.use_gate ? "true" : "false"},
      {"use_attention", m.use_attention ? "true" : "false"},
      {"use_srb", m.use_srb ? "true" : "false"},
  };
}

inline ModelConfig model_config_from_kv(const std::map<std::string, std::string>& kv) {
  ModelConfig m;
  const auto want = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error(std::string("missing model config key ") + key);
    return it->second;
  };
  m.vocab_size = detail::kv_int("vocab_size", want("vocab_size"));
  m.embed_dim = detail::kv_int("embed_dim", want("embed_dim"));
  m.hidden_dim = detail::kv_int("hidden_dim", want("hidden_dim"));
  m.gate_hidden_dim = detail::kv_int("gate_hidden_dim", want("gate_hidden_dim"));
  m.lambda = detail::kv_double("lambda", want("lambda"));
  m.cell_kind = cell_kind_from_string(want("cell_kind"));
  m.use_gate = detail::kv_bool("use_gate", want("use_gate"));
  m.use_attention = detail::kv_bool("use_attention", want("use_attention"));
  m.use_srb = detail::kv_bool("use_srb", want("use_srb"));
  return m;
}

inline std::string serialize_config(const ModelConfig& model, const TrainConfig& train,
                                    const IngestLimits& limits = {}) {
  std::string out;
  for (const auto& [k, v] : model_config_kv(model)) out += k + "=" + v + "\n";
  out += "batch_size=" + std::to_string(train.batch_size) + "\n";
  out += "learning_rate=" + detail::fmt_double(train.learning_rate) + "\n";
  out += "beta1=" + detail::fmt_double(train.beta1) + "\n";
  out += "beta2=" + detail::fmt_double(train.beta2) + "\n";
  out += "epsilon=" + detail::fmt_double(train.epsilon) + "\n";
  out += "epochs=" + std::to_string(train.epochs) + "\n";
  out += "seed=" + std::to_string(train.seed) + "\n";
  out += "clip_norm=" + detail::fmt_double(train.clip_norm) + "\n";
  out += "checkpoint_interval=" + std::to_string(train.checkpoint_interval) + "\n";
  out += "max_source_chars=" + std::to_string(limits.max_source_chars) + "\n";
  out += "max_summary_chars=" + std::to_string(limits.max_summary_chars) + "\n";
  return out;
}

}  // namespace semsum

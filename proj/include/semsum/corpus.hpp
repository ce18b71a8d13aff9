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
// Corpus ingestion. One record per line: `score<TAB>text<TAB>summary`, score
// optionally empty, UTF-8 throughout. Filtering never reorders survivors.

#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "semsum/vocab.hpp"

namespace semsum {

/// One corpus record: character ids without BOS/EOS plus the optional human
/// relevance score (1-5).
struct TextSummaryPair {
  std::vector<int> source_ids;
  std::vector<int> summary_ids;
  std::optional<int> score;
};

enum class SplitRole { train, dev, test };

struct CorpusSplit {
  std::vector<TextSummaryPair> pairs;
  SplitRole role = SplitRole::train;
};

/// Ingestion truncation bounds (characters). The corpus line format carries
/// short texts; these defaults keep desk-scale training tractable.
struct IngestLimits {
  int max_source_chars = 150;
  int max_summary_chars = 30;
};

struct RawRecord {
  std::optional<int> score;
  std::u32string text;
  std::u32string summary;
};

struct LoadStats {
  std::size_t parsed = 0;
  std::size_t kept = 0;
  std::size_t dropped_empty = 0;
  std::size_t dropped_low_score = 0;
  std::size_t dropped_missing_score = 0;  // warning count when min_score is set
};

namespace detail {

inline std::optional<int> parse_score_field(const std::string& field, int lineno) {
  if (field.empty()) return std::nullopt;
  int score = 0;
  try {
    std::size_t pos = 0;
    score = std::stoi(field, &pos);
    if (pos != field.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw std::runtime_error("corpus line " + std::to_string(lineno) +
                             ": score field is not an integer: '" + field + "'");
  }
  if (score < 1 || score > 5) {
    throw std::runtime_error("corpus line " + std::to_string(lineno) + ": score " +
                             std::to_string(score) + " outside [1, 5]");
  }
  return score;
}

}  // namespace detail

/// Parses and filters the line format without encoding. Records failing the
/// score filter or with an empty text/summary are dropped; survivors keep
/// file order. Malformed records raise with their line number.
inline std::vector<RawRecord> load_corpus_text(const std::string& path,
                                               std::optional<int> min_score = std::nullopt,
                                               const IngestLimits& limits = {},
                                               LoadStats* stats = nullptr) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<RawRecord> out;
  LoadStats local;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos ||
        line.find('\t', tab2 + 1) != std::string::npos) {
      throw std::runtime_error("corpus line " + std::to_string(lineno) +
                               ": expected 3 tab-separated fields");
    }
    ++local.parsed;
    RawRecord rec;
    rec.score = detail::parse_score_field(line.substr(0, tab1), lineno);
    rec.text = utf8_decode(line.substr(tab1 + 1, tab2 - tab1 - 1));
    rec.summary = utf8_decode(line.substr(tab2 + 1));
    if (min_score.has_value()) {
      if (!rec.score.has_value()) {
        ++local.dropped_missing_score;
        continue;
      }
      if (*rec.score < *min_score) {
        ++local.dropped_low_score;
        continue;
      }
    }
    if (rec.text.empty() || rec.summary.empty()) {
      ++local.dropped_empty;
      continue;
    }
    if (static_cast<int>(rec.text.size()) > limits.max_source_chars) {
      rec.text.resize(static_cast<std::size_t>(limits.max_source_chars));
    }
    if (static_cast<int>(rec.summary.size()) > limits.max_summary_chars) {
      rec.summary.resize(static_cast<std::size_t>(limits.max_summary_chars));
    }
    ++local.kept;
    out.push_back(std::move(rec));
  }
  if (stats != nullptr) *stats = local;
  return out;
}

/// Loads, filters, and encodes a corpus split.
inline CorpusSplit load_corpus(const std::string& path, const Vocabulary& vocab, SplitRole role,
                               std::optional<int> min_score = std::nullopt,
                               const IngestLimits& limits = {}, LoadStats* stats = nullptr) {
  CorpusSplit split;
  split.role = role;
  for (const RawRecord& rec : load_corpus_text(path, min_score, limits, stats)) {
    TextSummaryPair pair;
    pair.source_ids = vocab.encode(rec.text);
    pair.summary_ids = vocab.encode(rec.summary);
    pair.score = rec.score;
    split.pairs.push_back(std::move(pair));
  }
  return split;
}

/// Builds the character vocabulary over both the text and summary sides.
inline Vocabulary build_vocabulary_from_file(const std::string& path, int max_size,
                                             const IngestLimits& limits = {}) {
  std::vector<std::u32string> texts;
  for (RawRecord& rec : load_corpus_text(path, std::nullopt, limits)) {
    texts.push_back(std::move(rec.text));
    texts.push_back(std::move(rec.summary));
  }
  return Vocabulary::build(texts, max_size);
}

}  // namespace semsum

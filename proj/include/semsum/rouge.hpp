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
// ROUGE-1 / ROUGE-2 / ROUGE-L over token sequences. Tokens are plain ints
// (character ids or code points); F uses the harmonic mean (beta = 1), which
// may sit at a constant offset from toolkits weighting recall more heavily.

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace semsum {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

struct RougeReport {
  RougeScore rouge1;
  RougeScore rouge2;
  RougeScore rougeL;
  std::size_t pair_count = 0;
};

namespace detail {

inline RougeScore score_from(double overlap, double cand_total, double ref_total) {
  RougeScore s;
  if (cand_total <= 0.0 || ref_total <= 0.0) return s;
  s.precision = overlap / cand_total;
  s.recall = overlap / ref_total;
  s.f = (s.precision + s.recall > 0.0)
            ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
            : 0.0;
  return s;
}

/// Clipped n-gram overlap count plus both totals. Exact keys (no hashing of
/// token windows) keep the count collision-free.
struct NgramCounts {
  double overlap = 0.0;
  double cand_total = 0.0;
  double ref_total = 0.0;
};

inline NgramCounts ngram_counts(const std::vector<int>& cand, const std::vector<int>& ref, int n) {
  if (n < 1) throw std::invalid_argument("rouge_n: n must be >= 1, got " + std::to_string(n));
  NgramCounts c;
  const auto count = [n](const std::vector<int>& s) {
    std::map<std::vector<int>, long> m;
    if (static_cast<int>(s.size()) >= n) {
      for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= s.size(); ++i) {
        ++m[std::vector<int>(s.begin() + i, s.begin() + i + n)];
      }
    }
    return m;
  };
  const auto cm = count(cand);
  const auto rm = count(ref);
  for (const auto& [gram, cnt] : cm) {
    c.cand_total += static_cast<double>(cnt);
    auto it = rm.find(gram);
    if (it != rm.end()) c.overlap += static_cast<double>(std::min(cnt, it->second));
  }
  for (const auto& [gram, cnt] : rm) c.ref_total += static_cast<double>(cnt);
  return c;
}

}  // namespace detail

/// Longest common subsequence length by dynamic programming.
inline int lcs_length(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  if (m == 0 || n == 0) return 0;
  std::vector<int> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      if (a[i - 1] == b[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

/// Clipped n-gram precision/recall/F. Empty n-gram sets yield all zeros.
inline RougeScore rouge_n(const std::vector<int>& cand, const std::vector<int>& ref, int n) {
  const auto c = detail::ngram_counts(cand, ref, n);
  return detail::score_from(c.overlap, c.cand_total, c.ref_total);
}

/// LCS-based precision/recall/F.
inline RougeScore rouge_l(const std::vector<int>& cand, const std::vector<int>& ref) {
  if (cand.empty() || ref.empty()) return RougeScore{};
  const double l = static_cast<double>(lcs_length(cand, ref));
  return detail::score_from(l, static_cast<double>(cand.size()),
                            static_cast<double>(ref.size()));
}

using TokenPair = std::pair<std::vector<int>, std::vector<int>>;  // candidate, reference

/// Corpus-level report. Macro (default) averages per-pair scores; micro pools
/// overlap counts across the corpus before dividing.
inline RougeReport corpus_rouge(const std::vector<TokenPair>& pairs, bool micro = false) {
  if (pairs.empty()) throw std::invalid_argument("corpus_rouge: empty pair list");
  RougeReport report;
  report.pair_count = pairs.size();
  if (!micro) {
    const double inv = 1.0 / static_cast<double>(pairs.size());
    auto acc = [inv](RougeScore& into, const RougeScore& s) {
      into.precision += inv * s.precision;
      into.recall += inv * s.recall;
      into.f += inv * s.f;
    };
    for (const auto& [cand, ref] : pairs) {
      acc(report.rouge1, rouge_n(cand, ref, 1));
      acc(report.rouge2, rouge_n(cand, ref, 2));
      acc(report.rougeL, rouge_l(cand, ref));
    }
    return report;
  }
  detail::NgramCounts c1, c2, cl;
  for (const auto& [cand, ref] : pairs) {
    const auto a = detail::ngram_counts(cand, ref, 1);
    const auto b = detail::ngram_counts(cand, ref, 2);
    c1.overlap += a.overlap;
    c1.cand_total += a.cand_total;
    c1.ref_total += a.ref_total;
    c2.overlap += b.overlap;
    c2.cand_total += b.cand_total;
    c2.ref_total += b.ref_total;
    if (!cand.empty() && !ref.empty()) {
      cl.overlap += static_cast<double>(lcs_length(cand, ref));
      cl.cand_total += static_cast<double>(cand.size());
      cl.ref_total += static_cast<double>(ref.size());
    }
  }
  report.rouge1 = detail::score_from(c1.overlap, c1.cand_total, c1.ref_total);
  report.rouge2 = detail::score_from(c2.overlap, c2.cand_total, c2.ref_total);
  report.rougeL = detail::score_from(cl.overlap, cl.cand_total, cl.ref_total);
  return report;
}

// ---------------------------------------------------------------------------
// Report formatting
// ---------------------------------------------------------------------------

inline std::string format_rouge_table(const RougeReport& r) {
  char buf[256];
  std::string out = "metric\tprecision\trecall\tf\n";
  const auto line = [&](const char* name, const RougeScore& s) {
    std::snprintf(buf, sizeof(buf), "%s\t%.4f\t%.4f\t%.4f\n", name, s.precision, s.recall, s.f);
    out += buf;
  };
  line("rouge1", r.rouge1);
  line("rouge2", r.rouge2);
  line("rougeL", r.rougeL);
  return out;
}

/// Machine-readable key=value lines; full precision so parsing reproduces the
/// report exactly.
inline std::string format_rouge_kv(const RougeReport& r) {
  char buf[512];
  std::string out;
  const auto line = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s=%.17g\n", key, v);
    out += buf;
  };
  line("rouge1_p", r.rouge1.precision);
  line("rouge1_r", r.rouge1.recall);
  line("rouge1_f", r.rouge1.f);
  line("rouge2_p", r.rouge2.precision);
  line("rouge2_r", r.rouge2.recall);
  line("rouge2_f", r.rouge2.f);
  line("rougeL_p", r.rougeL.precision);
  line("rougeL_r", r.rougeL.recall);
  line("rougeL_f", r.rougeL.f);
  out += "pair_count=" + std::to_string(r.pair_count) + "\n";
  return out;
}

inline RougeReport parse_rouge_kv(const std::string& text) {
  RougeReport r;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    const auto set = [&](const char* name, double& slot) {
      if (key == name) slot = std::stod(value);
    };
    set("rouge1_p", r.rouge1.precision);
    set("rouge1_r", r.rouge1.recall);
    set("rouge1_f", r.rouge1.f);
    set("rouge2_p", r.rouge2.precision);
    set("rouge2_r", r.rouge2.recall);
    set("rouge2_f", r.rouge2.f);
    set("rougeL_p", r.rougeL.precision);
    set("rougeL_r", r.rougeL.recall);
    set("rougeL_f", r.rougeL.f);
    if (key == "pair_count") r.pair_count = static_cast<std::size_t>(std::stoull(value));
  }
  return r;
}

/// Convenience over text: one token per Unicode scalar value.
inline std::vector<int> rouge_tokens(const std::u32string& s) {
  return std::vector<int>(s.begin(), s.end());
}

}  // namespace semsum

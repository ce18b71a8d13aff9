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
// Character vocabulary over Unicode scalar values. Tokens are single
// characters (no segmentation, no grapheme clustering); ids 0..3 are the
// reserved PAD/BOS/EOS/UNK tokens.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semsum {

// ---------------------------------------------------------------------------
// Minimal UTF-8 codec. Decoding is total: malformed bytes become U+FFFD.
// ---------------------------------------------------------------------------

inline std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (len > 1) {
      if (i + len > s.size()) {
        out.push_back(0xFFFD);
        ++i;
        continue;
      }
      bool ok = true;
      for (std::size_t k = 1; k < len; ++k) {
        const unsigned char bk = static_cast<unsigned char>(s[i + k]);
        if ((bk & 0xC0) != 0x80) {
          ok = false;
          break;
        }
        cp = (cp << 6) | (bk & 0x3F);
      }
      if (!ok || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        out.push_back(0xFFFD);
        ++i;
        continue;
      }
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void utf8_append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string utf8_encode(const std::u32string& s) {
  std::string out;
  out.reserve(s.size() * 3);
  for (char32_t cp : s) utf8_append(out, cp);
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

/// Bidirectional character <-> id map with reserved ids 0..3 and a
/// frequency-capped size. Reserved tokens render as private-use sentinel
/// characters so encode(decode(ids)) == ids holds for every valid sequence.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReservedCount = 4;

  static constexpr std::array<char32_t, 4> kSentinels = {0xE000, 0xE001, 0xE002, 0xE003};
  static constexpr std::array<std::string_view, 4> kReservedNames = {"<pad>", "<bos>", "<eos>",
                                                                     "<unk>"};

  /// Keeps the max_size-4 most frequent characters; ties break by first
  /// occurrence in iteration order, so construction is deterministic.
  static Vocabulary build(const std::vector<std::u32string>& texts, int max_size) {
    if (max_size < kReservedCount + 1) {
      throw std::invalid_argument("vocabulary max_size must be at least " +
                                  std::to_string(kReservedCount + 1));
    }
    struct Entry {
      char32_t c;
      long count = 0;
      long first_seen = 0;
    };
    std::unordered_map<char32_t, std::size_t> where;
    std::vector<Entry> entries;
    long position = 0;
    for (const auto& text : texts) {
      for (char32_t c : text) {
        ++position;
        if (is_sentinel(c)) continue;  // sentinels are not ordinary characters
        auto it = where.find(c);
        if (it == where.end()) {
          where[c] = entries.size();
          entries.push_back({c, 1, position});
        } else {
          ++entries[it->second].count;
        }
      }
    }
    if (entries.empty()) {
      throw std::invalid_argument("cannot build a vocabulary from an empty corpus");
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.first_seen < b.first_seen;
    });
    const std::size_t keep =
        std::min(entries.size(), static_cast<std::size_t>(max_size - kReservedCount));
    Vocabulary v;
    for (std::size_t i = 0; i < keep; ++i) v.append_char(entries[i].c);
    return v;
  }

  static Vocabulary build_utf8(const std::vector<std::string>& texts, int max_size) {
    std::vector<std::u32string> decoded;
    decoded.reserve(texts.size());
    for (const auto& t : texts) decoded.push_back(utf8_decode(t));
    return build(decoded, max_size);
  }

  int size() const { return static_cast<int>(id_to_char_.size()); }

  /// Id of a character; unseen characters map to UNK.
  int id_of(char32_t c) const {
    auto it = char_to_id_.find(c);
    return it == char_to_id_.end() ? kUnk : it->second;
  }

  bool contains(char32_t c) const { return char_to_id_.count(c) != 0; }

  std::vector<int> encode(const std::u32string& text) const {
    std::vector<int> ids;
    ids.reserve(text.size());
    for (char32_t c : text) ids.push_back(id_of(c));
    return ids;
  }

  std::vector<int> encode_utf8(std::string_view text) const { return encode(utf8_decode(text)); }

  /// Total on valid ids; out-of-range ids are rejected.
  std::u32string decode(const std::vector<int>& ids) const {
    std::u32string out;
    out.reserve(ids.size());
    for (int id : ids) {
      if (id < 0 || id >= size()) {
        throw std::invalid_argument("decode: id " + std::to_string(id) + " out of range [0, " +
                                    std::to_string(size()) + ")");
      }
      out.push_back(id_to_char_[static_cast<std::size_t>(id)]);
    }
    return out;
  }

  std::string decode_utf8(const std::vector<int>& ids) const { return utf8_encode(decode(ids)); }

  /// Serialized as UTF-8 lines `id<TAB>char` behind a 4-line reserved-token
  /// header (`0<TAB><pad>` .. `3<TAB><unk>`).
  std::string serialize() const {
    std::string out;
    for (int i = 0; i < kReservedCount; ++i) {
      out += std::to_string(i);
      out += '\t';
      out += kReservedNames[static_cast<std::size_t>(i)];
      out += '\n';
    }
    for (int i = kReservedCount; i < size(); ++i) {
      const char32_t c = id_to_char_[static_cast<std::size_t>(i)];
      if (c == U'\t' || c == U'\n' || c == U'\r') {
        throw std::runtime_error("vocabulary contains an unserializable control character");
      }
      out += std::to_string(i);
      out += '\t';
      utf8_append(out, c);
      out += '\n';
    }
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open vocabulary file for writing: " + path);
    f << serialize();
  }

  static Vocabulary parse(std::istream& in) {
    Vocabulary v;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw std::runtime_error("vocabulary line " + std::to_string(lineno) + ": missing tab");
      }
      int id = 0;
      try {
        id = std::stoi(line.substr(0, tab));
      } catch (const std::exception&) {
        throw std::runtime_error("vocabulary line " + std::to_string(lineno) + ": bad id field");
      }
      const std::string field = line.substr(tab + 1);
      if (id < kReservedCount) {
        if (field != kReservedNames[static_cast<std::size_t>(id)]) {
          throw std::runtime_error("vocabulary line " + std::to_string(lineno) +
                                   ": expected reserved token header");
        }
        continue;
      }
      if (id != v.size()) {
        throw std::runtime_error("vocabulary line " + std::to_string(lineno) +
                                 ": ids must be dense and ordered");
      }
      const std::u32string decoded = utf8_decode(field);
      if (decoded.size() != 1) {
        throw std::runtime_error("vocabulary line " + std::to_string(lineno) +
                                 ": char field must hold exactly one character");
      }
      v.append_char(decoded[0]);
    }
    if (v.size() < kReservedCount) {
      throw std::runtime_error("vocabulary file is missing the reserved-token header");
    }
    return v;
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open vocabulary file: " + path);
    return parse(f);
  }

 private:
  Vocabulary() {
    for (int i = 0; i < kReservedCount; ++i) {
      id_to_char_.push_back(kSentinels[static_cast<std::size_t>(i)]);
      char_to_id_[kSentinels[static_cast<std::size_t>(i)]] = i;
    }
  }

  static bool is_sentinel(char32_t c) {
    return c >= kSentinels.front() && c <= kSentinels.back();
  }

  void append_char(char32_t c) {
    char_to_id_[c] = size();
    id_to_char_.push_back(c);
  }

  std::unordered_map<char32_t, int> char_to_id_;
  std::vector<char32_t> id_to_char_;
};

}  // namespace semsum

// Copyright 2026 The twinrank Authors.
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

#include "twinrank/text_frontend.h"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <stdexcept>

namespace twinrank {
namespace {

bool IsAsciiSpace(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool IsAsciiPunct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) ||
         (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

// Splits a UTF-8 string into code point substrings. Malformed lead bytes are
// treated as single-byte code points.
std::vector<std::string_view> CodePoints(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    size_t len = 1;
    if (c >= 0xF0) {
      len = 4;
    } else if (c >= 0xE0) {
      len = 3;
    } else if (c >= 0xC0) {
      len = 2;
    }
    len = std::min(len, s.size() - i);
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

uint64_t Fnv1a(uint64_t seed, std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // Final avalanche so that the low bits used by the modulus are well mixed.
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

}  // namespace

std::string Normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (IsAsciiSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (IsAsciiPunct(c)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::vector<std::string> SplitWords(std::string_view normalized) {
  std::vector<std::string> words;
  size_t start = 0;
  while (start < normalized.size()) {
    size_t end = normalized.find(' ', start);
    if (end == std::string_view::npos) end = normalized.size();
    if (end > start) words.emplace_back(normalized.substr(start, end - start));
    start = end + 1;
  }
  return words;
}

std::vector<std::string> WordTrigrams(std::string_view word) {
  if (word.empty()) throw std::invalid_argument("WordTrigrams: empty word");
  for (unsigned char c : word) {
    if (IsAsciiSpace(c)) {
      throw std::invalid_argument("WordTrigrams: word contains whitespace");
    }
  }
  std::vector<std::string_view> cps = CodePoints(word);
  cps.insert(cps.begin(), "#");
  cps.push_back("#");
  std::vector<std::string> trigrams;
  trigrams.reserve(cps.size() - 2);
  for (size_t i = 0; i + 2 < cps.size(); ++i) {
    std::string t;
    t.append(cps[i]).append(cps[i + 1]).append(cps[i + 2]);
    trigrams.push_back(std::move(t));
  }
  return trigrams;
}

int32_t TrigramVocab::Bucket(std::string_view trigram) const {
  return static_cast<int32_t>(Fnv1a(hash_seed, trigram) %
                              static_cast<uint64_t>(bucket_count));
}

void TrigramVocab::Validate() const {
  if (bucket_count < 1 || bucket_count > (int64_t{1} << 30)) {
    throw std::invalid_argument("TrigramVocab: bucket_count out of range");
  }
  if (normalization_version != kNormalizationVersion) {
    throw std::invalid_argument(
        "TrigramVocab: unsupported normalization version " +
        std::to_string(normalization_version));
  }
}

std::string TrigramVocab::ToJson() const {
  nlohmann::json j = {{"bucket_count", bucket_count},
                      {"hash_seed", hash_seed},
                      {"normalization_version", normalization_version}};
  return j.dump();
}

TrigramVocab TrigramVocab::FromJson(std::string_view json) {
  const auto j = nlohmann::json::parse(json);
  TrigramVocab v;
  v.bucket_count = j.at("bucket_count").get<int64_t>();
  v.hash_seed = j.at("hash_seed").get<uint64_t>();
  v.normalization_version = j.at("normalization_version").get<int>();
  v.Validate();
  return v;
}

int TokenSequence::num_real() const {
  return static_cast<int>(std::count(mask.begin(), mask.end(), true));
}

namespace {

std::vector<int32_t> WordBuckets(const std::string& word,
                                 const TrigramVocab& vocab) {
  std::vector<int32_t> buckets;
  for (const auto& t : WordTrigrams(word)) buckets.push_back(vocab.Bucket(t));
  return buckets;
}

void Pad(TokenSequence& seq, int max_len) {
  while (seq.max_len() < max_len) {
    seq.tokens.emplace_back();
    seq.mask.push_back(false);
  }
  seq.positions.resize(max_len);
  for (int i = 0; i < max_len; ++i) seq.positions[i] = i;
}

}  // namespace

TokenSequence EncodeText(std::string_view text, const TrigramVocab& vocab,
                         int max_len, Framing framing) {
  const int reserved = framing == Framing::kCls ? 1 : 0;
  if (max_len < 1 + reserved) {
    throw std::invalid_argument("EncodeText: max_len too small");
  }
  const auto words = SplitWords(Normalize(text));
  if (words.empty()) {
    throw std::invalid_argument("EncodeText: text normalizes to empty");
  }
  TokenSequence seq;
  seq.original_length = static_cast<int>(words.size());
  if (framing == Framing::kCls) {
    seq.tokens.push_back({vocab.cls_id()});
    seq.mask.push_back(true);
  }
  const int budget = max_len - reserved;
  for (int i = 0; i < std::min<int>(budget, words.size()); ++i) {
    seq.tokens.push_back(WordBuckets(words[i], vocab));
    seq.mask.push_back(true);
  }
  Pad(seq, max_len);
  return seq;
}

TokenSequence EncodePairText(std::string_view query, std::string_view keyword,
                             const TrigramVocab& vocab, int side_len) {
  if (side_len < 1) throw std::invalid_argument("EncodePairText: side_len");
  const auto qw = SplitWords(Normalize(query));
  const auto kw = SplitWords(Normalize(keyword));
  if (qw.empty() || kw.empty()) {
    throw std::invalid_argument("EncodePairText: text normalizes to empty");
  }
  TokenSequence seq;
  seq.original_length = static_cast<int>(qw.size() + kw.size());
  seq.tokens.push_back({vocab.cls_id()});
  for (int i = 0; i < std::min<int>(side_len, qw.size()); ++i) {
    seq.tokens.push_back(WordBuckets(qw[i], vocab));
  }
  seq.tokens.push_back({vocab.sep_id()});
  for (int i = 0; i < std::min<int>(side_len, kw.size()); ++i) {
    seq.tokens.push_back(WordBuckets(kw[i], vocab));
  }
  seq.mask.assign(seq.tokens.size(), true);
  Pad(seq, 2 * side_len + 2);
  return seq;
}

}  // namespace twinrank

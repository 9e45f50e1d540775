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

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "twinrank/training.h"

namespace twinrank {
namespace {

constexpr double kTeacherScale = 4.0;
constexpr double kTeacherNoise = 1.0;
// Standard deviation of the editorial noise added to the overlap before it
// is cut into the four label grades.
constexpr double kEditorNoise = 0.15;
constexpr int kWordListSize = 400;

uint64_t Mix(uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= 0xff;  // field separator
  h *= 0x100000001b3ULL;
  return h;
}

uint64_t Avalanche(uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  return x ^ (x >> 33);
}

std::set<std::string> WordSet(std::string_view text) {
  const auto words = SplitWords(Normalize(text));
  return {words.begin(), words.end()};
}

std::vector<std::string> WordList(uint64_t seed) {
  static constexpr const char* kOnsets[] = {"b", "d",  "f",  "g", "k", "l",
                                            "m", "n",  "p",  "r", "s", "t",
                                            "v", "z",  "sh", "ch", "tr", "pl"};
  static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai"};
  Rng rng(seed ^ 0x776f726473ULL);
  std::uniform_int_distribution<int> onset(0, std::size(kOnsets) - 1);
  std::uniform_int_distribution<int> vowel(0, std::size(kVowels) - 1);
  std::uniform_int_distribution<int> syllables(1, 3);
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  while (static_cast<int>(words.size()) < kWordListSize) {
    std::string w;
    const int n = syllables(rng);
    for (int i = 0; i < n; ++i) {
      w += kOnsets[onset(rng)];
      w += kVowels[vowel(rng)];
    }
    if (seen.insert(w).second) words.push_back(w);
  }
  return words;
}

std::string Join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::vector<std::string> RandomWords(Rng& rng,
                                     const std::vector<std::string>& vocab,
                                     int count) {
  std::uniform_int_distribution<size_t> pick(0, vocab.size() - 1);
  std::vector<std::string> out;
  while (static_cast<int>(out.size()) < count) {
    const auto& w = vocab[pick(rng)];
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  }
  return out;
}

}  // namespace

double WordJaccard(std::string_view a, std::string_view b) {
  const auto sa = WordSet(a);
  const auto sb = WordSet(b);
  if (sa.empty() && sb.empty()) return 0.0;
  size_t inter = 0;
  for (const auto& w : sa) inter += sb.count(w);
  return static_cast<double>(inter) /
         static_cast<double>(sa.size() + sb.size() - inter);
}

Logits SyntheticTeacher(std::string_view query, std::string_view keyword,
                        uint64_t seed) {
  const double j = WordJaccard(query, keyword);
  const uint64_t h =
      Avalanche(Mix(Mix(0xcbf29ce484222325ULL ^ seed, query), keyword));
  const double u = 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
  const double margin =
      kTeacherScale * (2.0 * j - 1.0) + kTeacherNoise * 4.0 * j * (1.0 - j) * u;
  return {-0.5 * margin, 0.5 * margin};
}

std::vector<PairRecord> GenerateSyntheticPairs(int count, uint64_t seed) {
  if (count < 0) throw std::invalid_argument("GenerateSyntheticPairs: count");
  const auto vocab = WordList(seed);
  Rng rng(Avalanche(seed + 1));
  std::uniform_int_distribution<int> length(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> editor(0.0, kEditorNoise);
  std::vector<PairRecord> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const auto query_words = RandomWords(rng, vocab, length(rng));
    std::vector<std::string> kw;
    if (unit(rng) < 0.3) {
      kw = RandomWords(rng, vocab, length(rng));
    } else {
      // Keep a non-empty random subset of the query words and add up to two
      // extra words.
      std::vector<std::string> shuffled = query_words;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      std::uniform_int_distribution<int> keep(1, shuffled.size());
      kw.assign(shuffled.begin(), shuffled.begin() + keep(rng));
      std::uniform_int_distribution<int> extra(0, 2);
      for (const auto& w : RandomWords(rng, vocab, extra(rng))) {
        if (std::find(kw.begin(), kw.end(), w) == kw.end()) kw.push_back(w);
      }
      std::shuffle(kw.begin(), kw.end(), rng);
    }
    PairRecord r;
    r.query = Join(query_words);
    r.keyword = Join(kw);
    r.teacher_logits = SyntheticTeacher(r.query, r.keyword, seed);
    const double relevance = WordJaccard(r.query, r.keyword) + editor(rng);
    r.editorial_label = relevance < 0.2    ? EditorialLabel::kBad
                        : relevance < 0.45 ? EditorialLabel::kFair
                        : relevance < 0.7  ? EditorialLabel::kGood
                                           : EditorialLabel::kExcellent;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> GenerateSyntheticKeywords(int count, uint64_t seed) {
  const auto vocab = WordList(seed);
  Rng rng(Avalanche(seed + 2));
  std::uniform_int_distribution<int> length(1, 4);
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > 100 * count + 1000) {
      throw std::runtime_error("GenerateSyntheticKeywords: too many duplicates");
    }
    std::string kw = Join(RandomWords(rng, vocab, length(rng)));
    if (seen.insert(kw).second) out.push_back(std::move(kw));
  }
  return out;
}

}  // namespace twinrank

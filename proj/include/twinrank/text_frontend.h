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

#ifndef TWINRANK_TEXT_FRONTEND_H_
#define TWINRANK_TEXT_FRONTEND_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace twinrank {

// Version tag of the normalization rule implemented by Normalize(). Stored
// alongside the vocab config so that a checkpoint produced under a different
// rule is refused on load.
inline constexpr int kNormalizationVersion = 1;

// Lowercases ASCII letters, deletes ASCII punctuation and collapses runs of
// whitespace into a single space with no leading or trailing space. Bytes
// outside the ASCII range are kept unchanged.
std::string Normalize(std::string_view text);

// Splits normalized text on single spaces.
std::vector<std::string> SplitWords(std::string_view normalized);

// Letter trigrams of "#" + word + "#", one per code point of the word.
// Throws std::invalid_argument for an empty word or one containing whitespace.
std::vector<std::string> WordTrigrams(std::string_view word);

// Hashed letter-trigram vocabulary. Bucket ids [0, bucket_count) are trigram
// buckets; the two ids right after are reserved for the classification and
// separator tokens.
struct TrigramVocab {
  int64_t bucket_count = 4096;
  uint64_t hash_seed = 0x5eed;
  int normalization_version = kNormalizationVersion;

  int32_t Bucket(std::string_view trigram) const;
  int32_t cls_id() const { return static_cast<int32_t>(bucket_count); }
  int32_t sep_id() const { return static_cast<int32_t>(bucket_count + 1); }
  int64_t table_rows() const { return bucket_count + 2; }

  void Validate() const;
  std::string ToJson() const;
  static TrigramVocab FromJson(std::string_view json);

  bool operator==(const TrigramVocab&) const = default;
};

// Token-level input of one sentence. Every vector has exactly max_len
// entries; mask is true for real tokens, which always form a prefix.
struct TokenSequence {
  std::vector<std::vector<int32_t>> tokens;
  std::vector<int32_t> positions;
  std::vector<bool> mask;
  int original_length = 0;  // word count before truncation

  int max_len() const { return static_cast<int>(tokens.size()); }
  int num_real() const;

  bool operator==(const TokenSequence&) const = default;
};

// Framing of the token sequence. kCls prefixes the classification token and
// so leaves max_len - 1 slots for words.
enum class Framing { kPlain, kCls };

// Normalizes text, splits it into words and maps every word onto its trigram
// buckets. Throws std::invalid_argument when the text normalizes to empty or
// max_len is too small for the framing.
TokenSequence EncodeText(std::string_view text, const TrigramVocab& vocab,
                         int max_len, Framing framing = Framing::kPlain);

// Joint input for a cross encoder: [CLS] query-words [SEP] keyword-words,
// each side truncated to its own word budget.
TokenSequence EncodePairText(std::string_view query, std::string_view keyword,
                             const TrigramVocab& vocab, int side_len);

}  // namespace twinrank

#endif  // TWINRANK_TEXT_FRONTEND_H_

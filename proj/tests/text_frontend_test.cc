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

#include <random>
#include <stdexcept>

#include "doctest.h"

namespace twinrank {
namespace {

TEST_CASE("Normalize lowercases, strips punctuation and collapses spaces") {
  CHECK(Normalize("Hello,  World") == "hello world");
  CHECK(Normalize("") == "");
  CHECK(Normalize("CAT") == "cat");
  CHECK(Normalize("  red\tshoes!! \n") == "red shoes");
  CHECK(Normalize("...") == "");
  CHECK(Normalize("caf\xc3\xa9 Au-Lait") == "caf\xc3\xa9 aulait");
}

TEST_CASE("WordTrigrams windows over boundary-padded word") {
  CHECK(WordTrigrams("cat") == std::vector<std::string>{"#ca", "cat", "at#"});
  CHECK(WordTrigrams("a") == std::vector<std::string>{"#a#"});
  CHECK(WordTrigrams("ad") == std::vector<std::string>{"#ad", "ad#"});
  CHECK_THROWS_AS(WordTrigrams(""), std::invalid_argument);
  CHECK_THROWS_AS(WordTrigrams("a b"), std::invalid_argument);
}

TEST_CASE("WordTrigrams counts code points, not bytes") {
  // "é" is two bytes but one character.
  const auto t = WordTrigrams("caf\xc3\xa9");
  REQUIRE(t.size() == 4);
  CHECK(t.back() == "f\xc3\xa9#");
}

TEST_CASE("trigram count equals word length for random ASCII words") {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> len(1, 20);
  std::uniform_int_distribution<int> ch('a', 'z');
  for (int trial = 0; trial < 200; ++trial) {
    std::string w(len(rng), 'a');
    for (char& c : w) c = static_cast<char>(ch(rng));
    CHECK(WordTrigrams(w).size() == w.size());
  }
}

TEST_CASE("EncodeText pads, masks and truncates") {
  TrigramVocab vocab;
  vocab.bucket_count = 4096;
  const TokenSequence one = EncodeText("cat", vocab, 8);
  CHECK(one.max_len() == 8);
  CHECK(one.positions.size() == 8);
  CHECK(one.mask ==
        std::vector<bool>{true, false, false, false, false, false, false, false});
  CHECK(one.tokens[0].size() == 3);
  CHECK(one.original_length == 1);
  for (int i = 0; i < 8; ++i) CHECK(one.positions[i] == i);

  const TokenSequence trunc = EncodeText("a b c d", vocab, 2);
  CHECK(trunc.max_len() == 2);
  CHECK(trunc.num_real() == 2);
  CHECK(trunc.original_length == 4);

  const TokenSequence twice = EncodeText("cat cat", vocab, 4);
  CHECK(twice.tokens[0] == twice.tokens[1]);

  CHECK_THROWS_AS(EncodeText("  ,, ", vocab, 4), std::invalid_argument);
  CHECK_THROWS_AS(EncodeText("cat", vocab, 0), std::invalid_argument);
}

TEST_CASE("EncodeText with CLS framing reserves slot zero") {
  TrigramVocab vocab;
  const TokenSequence s = EncodeText("a b c", vocab, 3, Framing::kCls);
  CHECK(s.tokens[0] == std::vector<int32_t>{vocab.cls_id()});
  CHECK(s.num_real() == 3);
  CHECK(s.original_length == 3);
  CHECK_THROWS_AS(EncodeText("a", vocab, 1, Framing::kCls),
                  std::invalid_argument);
}

TEST_CASE("EncodePairText joins both sides around the separator") {
  TrigramVocab vocab;
  const TokenSequence s = EncodePairText("red shoes", "shoes", vocab, 4);
  CHECK(s.max_len() == 10);
  CHECK(s.num_real() == 5);
  CHECK(s.tokens[0] == std::vector<int32_t>{vocab.cls_id()});
  CHECK(s.tokens[3] == std::vector<int32_t>{vocab.sep_id()});
  CHECK(s.tokens[2] == s.tokens[4]);
}

TEST_CASE("buckets are in range and deterministic") {
  TrigramVocab vocab;
  vocab.bucket_count = 7;
  for (const char* t : {"#ca", "cat", "at#", "xyz"}) {
    const int32_t b = vocab.Bucket(t);
    CHECK(b >= 0);
    CHECK(b < 7);
    CHECK(vocab.Bucket(t) == b);
  }
  TrigramVocab other = vocab;
  other.hash_seed = vocab.hash_seed + 1;
  other.bucket_count = 1 << 20;
  vocab.bucket_count = 1 << 20;
  int differ = 0;
  for (const char* t : {"#ca", "cat", "at#", "xyz", "abc", "bcd"}) {
    differ += vocab.Bucket(t) != other.Bucket(t);
  }
  CHECK(differ > 0);
}

TEST_CASE("vocab config round-trips through JSON with identical buckets") {
  TrigramVocab vocab;
  vocab.bucket_count = 50000;
  vocab.hash_seed = 12345;
  const TrigramVocab back = TrigramVocab::FromJson(vocab.ToJson());
  CHECK(back == vocab);
  CHECK(EncodeText("running shoes sale", back, 16) ==
        EncodeText("running shoes sale", vocab, 16));
  CHECK_THROWS(TrigramVocab::FromJson(
      R"({"bucket_count":0,"hash_seed":1,"normalization_version":1})"));
  CHECK_THROWS(TrigramVocab::FromJson(
      R"({"bucket_count":10,"hash_seed":1,"normalization_version":99})"));
}

}  // namespace
}  // namespace twinrank

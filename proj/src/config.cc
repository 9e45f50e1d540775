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

#include "twinrank/config.h"

#include <cmath>
#include <stdexcept>

namespace twinrank {

std::string_view ToString(Pooling p) {
  return p == Pooling::kClsToken ? "cls_token" : "weighted_average";
}

std::string_view ToString(Crossing c) {
  return c == Crossing::kCosine ? "cosine" : "residual";
}

Pooling ParsePooling(std::string_view s) {
  if (s == "weighted_average") return Pooling::kWeightedAverage;
  if (s == "cls_token") return Pooling::kClsToken;
  throw std::invalid_argument("unknown pooling mode: " + std::string(s));
}

Crossing ParseCrossing(std::string_view s) {
  if (s == "cosine") return Crossing::kCosine;
  if (s == "residual") return Crossing::kResidual;
  throw std::invalid_argument("unknown crossing mode: " + std::string(s));
}

ModelConfig ModelConfig::Desk() { return ModelConfig{}; }

ModelConfig ModelConfig::Large() {
  ModelConfig c;
  c.layers = 6;
  c.hidden = 512;
  c.heads = 8;
  c.ffn = 512;
  c.vocab_buckets = 50000;
  return c;
}

TrigramVocab ModelConfig::vocab() const {
  TrigramVocab v;
  v.bucket_count = vocab_buckets;
  v.hash_seed = hash_seed;
  return v;
}

void ModelConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("ModelConfig: " + what);
  };
  if (layers < 0) fail("layers must be >= 0");
  if (hidden < 1) fail("hidden must be >= 1");
  if (heads < 1) fail("heads must be >= 1");
  if (hidden % heads != 0) fail("hidden must be divisible by heads");
  if (ffn < 1) fail("ffn must be >= 1");
  if (max_len < 1) fail("max_len must be >= 1");
  if (pooling == Pooling::kClsToken && max_len < 2) {
    fail("cls_token pooling needs max_len >= 2");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (residual_blocks < 1) fail("residual_blocks must be >= 1");
  vocab().Validate();
}

nlohmann::json ModelConfig::ToJson() const {
  return {{"layers", layers},
          {"hidden", hidden},
          {"heads", heads},
          {"ffn", ffn},
          {"vocab_buckets", vocab_buckets},
          {"hash_seed", hash_seed},
          {"normalization_version", kNormalizationVersion},
          {"max_len", max_len},
          {"pooling", ToString(pooling)},
          {"crossing", ToString(crossing)},
          {"shared_encoders", shared_encoders},
          {"dropout", dropout},
          {"residual_blocks", residual_blocks}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  ModelConfig c;
  c.layers = j.value("layers", c.layers);
  c.hidden = j.value("hidden", c.hidden);
  c.heads = j.value("heads", c.heads);
  c.ffn = j.value("ffn", c.hidden);
  c.vocab_buckets = j.value("vocab_buckets", c.vocab_buckets);
  c.hash_seed = j.value("hash_seed", c.hash_seed);
  c.max_len = j.value("max_len", c.max_len);
  if (j.contains("pooling")) {
    c.pooling = ParsePooling(j.at("pooling").get<std::string>());
  }
  if (j.contains("crossing")) {
    c.crossing = ParseCrossing(j.at("crossing").get<std::string>());
  }
  c.shared_encoders = j.value("shared_encoders", c.shared_encoders);
  c.dropout = j.value("dropout", c.dropout);
  c.residual_blocks = j.value("residual_blocks", c.residual_blocks);
  if (j.value("normalization_version", kNormalizationVersion) !=
      kNormalizationVersion) {
    throw std::invalid_argument("ModelConfig: normalization version mismatch");
  }
  c.Validate();
  return c;
}

}  // namespace twinrank

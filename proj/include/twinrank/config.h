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

#ifndef TWINRANK_CONFIG_H_
#define TWINRANK_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "twinrank/text_frontend.h"

namespace twinrank {

enum class Pooling { kWeightedAverage, kClsToken };
enum class Crossing { kCosine, kResidual };

std::string_view ToString(Pooling p);
std::string_view ToString(Crossing c);
Pooling ParsePooling(std::string_view s);
Crossing ParseCrossing(std::string_view s);

// Architecture hyperparameters of the twin encoder and its crossing head.
struct ModelConfig {
  int layers = 2;
  int hidden = 64;
  int heads = 2;
  int ffn = 64;  // feed-forward inner size; equal to hidden unless overridden
  int64_t vocab_buckets = 4096;
  uint64_t hash_seed = 0x5eed;
  int max_len = 16;
  Pooling pooling = Pooling::kWeightedAverage;
  Crossing crossing = Crossing::kResidual;
  bool shared_encoders = true;
  double dropout = 0.1;  // training only
  int residual_blocks = 1;

  static ModelConfig Desk();
  // L=6, H=512, A=8 with a 50K trigram vocabulary.
  static ModelConfig Large();

  int head_dim() const { return hidden / heads; }
  Framing framing() const {
    return pooling == Pooling::kClsToken ? Framing::kCls : Framing::kPlain;
  }
  TrigramVocab vocab() const;

  // Throws std::invalid_argument on any inconsistent field.
  void Validate() const;

  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace twinrank

#endif  // TWINRANK_CONFIG_H_

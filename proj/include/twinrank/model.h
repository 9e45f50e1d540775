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

#ifndef TWINRANK_MODEL_H_
#define TWINRANK_MODEL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "twinrank/config.h"
#include "twinrank/crossing.h"
#include "twinrank/encoder.h"
#include "twinrank/tensor.h"
#include "twinrank/text_frontend.h"

namespace twinrank {

template <typename S>
struct ModelParams {
  EncoderParams<S> query_encoder;
  EncoderParams<S> keyword_encoder;  // unused when encoders are shared
  CosineHeadParams<S> cosine;
  ResidualHeadParams<S> residual;
};

using ModelParamsD = ModelParams<double>;

// Query encoder, keyword encoder and crossing head. With shared_encoders the
// keyword side reads the query encoder's parameters, so a single parameter
// set receives the gradients of both sides.
class TwinModel {
 public:
  TwinModel() = default;
  TwinModel(ModelConfig config, ModelParamsD params);

  static TwinModel Init(const ModelConfig& config, uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const TrigramVocab& vocab() const { return vocab_; }
  ModelParamsD& params() { return params_; }
  const ModelParamsD& params() const { return params_; }

  const EncoderParamsD& query_encoder() const { return params_.query_encoder; }
  const EncoderParamsD& keyword_encoder() const {
    return config_.shared_encoders ? params_.query_encoder
                                   : params_.keyword_encoder;
  }

  TokenSequence Tokenize(std::string_view text) const;

  VecD EncodeQuery(const TokenSequence& seq) const;
  VecD EncodeKeyword(const TokenSequence& seq) const;
  VecD EncodeQuery(std::string_view text) const;
  VecD EncodeKeyword(std::string_view text) const;

  // Logit / probability of the configured crossing head.
  double Logit(const VecD& q, const VecD& k) const;
  double Score(const VecD& q, const VecD& k) const;
  double Score(std::string_view query, std::string_view keyword) const;

  // Trainable tensors in canonical (checkpoint) order. Only the configured
  // crossing head is included.
  std::vector<TensorRef<double>> Tensors();
  static std::vector<TensorRef<double>> Tensors(ModelParamsD& params,
                                                const ModelConfig& config);
  int64_t NumParameters();

  // Zero gradients shaped like this model's parameters.
  ModelParamsD ZeroGrads() const;

  // Binary cross-entropy of one pair against target y in [0, 1]. Gradients
  // are accumulated into `grads`; returns the loss.
  double ForwardBackward(const TokenSequence& query,
                         const TokenSequence& keyword, double target,
                         Dropout dropout, ModelParamsD& grads) const;

  ModelParams<float> CastFloat() const;

 private:
  ModelConfig config_;
  TrigramVocab vocab_;
  ModelParamsD params_;
};

// Single-precision inference copy used by the latency benchmark.
struct FloatTwinModel {
  ModelConfig config;
  ModelParams<float> params;

  explicit FloatTwinModel(const TwinModel& model)
      : config(model.config()), params(model.CastFloat()) {}

  const EncoderParams<float>& keyword_encoder() const {
    return config.shared_encoders ? params.query_encoder
                                  : params.keyword_encoder;
  }
  RowVec<float> EncodeQuery(const TokenSequence& seq) const;
  RowVec<float> EncodeKeyword(const TokenSequence& seq) const;
  double Score(const RowVec<float>& q, const RowVec<float>& k) const;
};

// Numerically guarded binary cross-entropy between target y and the sigmoid
// of `logit`; predictions are clamped to [1e-12, 1 - 1e-12].
double BinaryCrossEntropy(double target, double logit);

// Checkpoint file: magic, format version, config JSON, then named float64
// tensors. Writes go to a temporary file that is renamed into place.
void SaveCheckpoint(TwinModel& model, const std::string& path);
TwinModel LoadCheckpoint(const std::string& path);

inline constexpr uint32_t kCheckpointVersion = 1;

}  // namespace twinrank

#endif  // TWINRANK_MODEL_H_

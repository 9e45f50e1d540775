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

#include "twinrank/model.h"

#include <algorithm>
#include <stdexcept>

namespace twinrank {

TwinModel::TwinModel(ModelConfig config, ModelParamsD params)
    : config_(std::move(config)),
      vocab_(config_.vocab()),
      params_(std::move(params)) {
  config_.Validate();
}

TwinModel TwinModel::Init(const ModelConfig& config, uint64_t seed) {
  config.Validate();
  Rng rng(seed);
  const TrigramVocab vocab = config.vocab();
  ModelParamsD p;
  p.query_encoder =
      InitEncoder(config, vocab.table_rows(), config.max_len, rng);
  if (!config.shared_encoders) {
    p.keyword_encoder =
        InitEncoder(config, vocab.table_rows(), config.max_len, rng);
  }
  p.cosine = InitCosineHead();
  p.residual = InitResidualHead(config.hidden, config.residual_blocks, rng);
  return TwinModel(config, std::move(p));
}

TokenSequence TwinModel::Tokenize(std::string_view text) const {
  return EncodeText(text, vocab_, config_.max_len, config_.framing());
}

VecD TwinModel::EncodeQuery(const TokenSequence& seq) const {
  return Encode<double>(seq, query_encoder(), config_);
}

VecD TwinModel::EncodeKeyword(const TokenSequence& seq) const {
  return Encode<double>(seq, keyword_encoder(), config_);
}

VecD TwinModel::EncodeQuery(std::string_view text) const {
  return EncodeQuery(Tokenize(text));
}

VecD TwinModel::EncodeKeyword(std::string_view text) const {
  return EncodeKeyword(Tokenize(text));
}

double TwinModel::Logit(const VecD& q, const VecD& k) const {
  return config_.crossing == Crossing::kCosine
             ? CosineHeadLogit(q, k, params_.cosine)
             : ResidualHeadLogit(q, k, params_.residual);
}

double TwinModel::Score(const VecD& q, const VecD& k) const {
  return Sigmoid(Logit(q, k));
}

double TwinModel::Score(std::string_view query,
                        std::string_view keyword) const {
  return Score(EncodeQuery(query), EncodeKeyword(keyword));
}

std::vector<TensorRef<double>> TwinModel::Tensors(ModelParamsD& params,
                                                  const ModelConfig& config) {
  auto out = params.query_encoder.Tensors("query_encoder.");
  if (!config.shared_encoders) {
    auto kw = params.keyword_encoder.Tensors("keyword_encoder.");
    out.insert(out.end(), kw.begin(), kw.end());
  }
  auto head = config.crossing == Crossing::kCosine
                  ? params.cosine.Tensors("head.")
                  : params.residual.Tensors("head.");
  out.insert(out.end(), head.begin(), head.end());
  return out;
}

std::vector<TensorRef<double>> TwinModel::Tensors() {
  return Tensors(params_, config_);
}

int64_t TwinModel::NumParameters() { return CountParameters(Tensors()); }

ModelParamsD TwinModel::ZeroGrads() const {
  ModelParamsD g = params_;
  for (auto& t : Tensors(g, config_)) t.tensor->setZero();
  return g;
}

double BinaryCrossEntropy(double target, double logit) {
  constexpr double kEps = 1e-12;
  const double p = std::clamp(Sigmoid(logit), kEps, 1.0 - kEps);
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

double TwinModel::ForwardBackward(const TokenSequence& query,
                                  const TokenSequence& keyword, double target,
                                  Dropout dropout, ModelParamsD& grads) const {
  EncoderCache qc, kc;
  const VecD q = Encode<double>(query, query_encoder(), config_, &qc, dropout);
  const VecD k =
      Encode<double>(keyword, keyword_encoder(), config_, &kc, dropout);
  const double logit = Logit(q, k);
  const double loss = BinaryCrossEntropy(target, logit);
  // d loss / d logit of sigmoid + cross-entropy.
  const double d_logit = Sigmoid(logit) - target;
  const HeadGrad hg =
      config_.crossing == Crossing::kCosine
          ? CosineHeadBackward(q, k, params_.cosine, d_logit, grads.cosine)
          : ResidualHeadBackward(q, k, params_.residual, d_logit,
                                 grads.residual);
  EncodeBackward(query, qc, hg.d_q, query_encoder(), grads.query_encoder,
                 config_);
  EncoderParamsD& kw_grads = config_.shared_encoders ? grads.query_encoder
                                                     : grads.keyword_encoder;
  EncodeBackward(keyword, kc, hg.d_k, keyword_encoder(), kw_grads, config_);
  return loss;
}

ModelParams<float> TwinModel::CastFloat() const {
  ModelParams<float> p;
  p.query_encoder = params_.query_encoder.Cast<float>();
  if (!config_.shared_encoders) {
    p.keyword_encoder = params_.keyword_encoder.Cast<float>();
  }
  p.cosine = CastHead(params_.cosine);
  p.residual = CastHead(params_.residual);
  return p;
}

RowVec<float> FloatTwinModel::EncodeQuery(const TokenSequence& seq) const {
  return Encode<float>(seq, params.query_encoder, config);
}

RowVec<float> FloatTwinModel::EncodeKeyword(const TokenSequence& seq) const {
  return Encode<float>(seq, keyword_encoder(), config);
}

double FloatTwinModel::Score(const RowVec<float>& q,
                             const RowVec<float>& k) const {
  return config.crossing == Crossing::kCosine
             ? CosineHead(q, k, params.cosine)
             : ResidualHead(q, k, params.residual);
}

}  // namespace twinrank

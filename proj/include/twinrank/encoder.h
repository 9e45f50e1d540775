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

#ifndef TWINRANK_ENCODER_H_
#define TWINRANK_ENCODER_H_

#include <string>
#include <vector>

#include "twinrank/config.h"
#include "twinrank/tensor.h"
#include "twinrank/text_frontend.h"

namespace twinrank {

// Post-norm transformer block: multi-head self-attention and a GELU
// feed-forward sublayer, each wrapped in residual + layer norm.
template <typename S>
struct LayerParams {
  Mat<S> wq, bq, wk, bk, wv, bv, wo, bo;
  Mat<S> ln1_gain, ln1_bias;
  Mat<S> w1, b1, w2, b2;
  Mat<S> ln2_gain, ln2_bias;

  void Collect(const std::string& prefix, std::vector<TensorRef<S>>& out);
};

template <typename S>
struct EncoderParams {
  Mat<S> token_embedding;     // vocab rows x H
  Mat<S> position_embedding;  // positions x H
  std::vector<LayerParams<S>> layers;
  Mat<S> pool_scorer;  // 1 x H, weighted-average pooling only

  int hidden() const { return static_cast<int>(token_embedding.cols()); }
  int max_positions() const {
    return static_cast<int>(position_embedding.rows());
  }

  std::vector<TensorRef<S>> Tensors(const std::string& prefix);

  template <typename T>
  EncoderParams<T> Cast() const;
};

using EncoderParamsD = EncoderParams<double>;

// Truncated-normal(0.02) weights, zero biases, unit layer-norm gains and a
// zero pooling scorer (mean pooling at initialization).
EncoderParamsD InitEncoder(const ModelConfig& config, int64_t vocab_rows,
                           int max_positions, Rng& rng);

// Same shapes as `like`, all zeros.
EncoderParamsD ZerosLike(const EncoderParamsD& like);

// One row per slot of `seq`: the sum of the slot's trigram-bucket embeddings
// plus its position embedding. Padding slots get the position embedding only.
template <typename S>
Mat<S> EmbedInput(const TokenSequence& seq, const EncoderParams<S>& params);

struct LayerNormCache {
  MatD normalized;
  Eigen::VectorXd inv_std;
};

struct LayerCache {
  MatD input;
  MatD q, k, v;
  std::vector<MatD> probs;  // per head, n x n
  MatD context;
  MatD attn_drop;  // scaled keep mask, empty when dropout is off
  LayerNormCache ln1;
  MatD x1;
  MatD pre_act;
  MatD act;
  MatD ffn_drop;
  LayerNormCache ln2;
};

// Dropout state for one forward pass. A null rng or zero rate disables it.
struct Dropout {
  Rng* rng = nullptr;
  double rate = 0.0;
  bool active() const { return rng != nullptr && rate > 0.0; }
};

// One transformer block. Rows whose mask entry is false are excluded as
// attention keys, so they never influence other rows. Throws
// std::invalid_argument when the input holds NaN or Inf.
template <typename S>
Mat<S> TransformerLayer(const Mat<S>& hidden, const std::vector<bool>& mask,
                        const LayerParams<S>& params, int heads,
                        LayerCache* cache = nullptr, Dropout dropout = {});

// Returns the gradient with respect to the layer input and accumulates
// parameter gradients into `grads`.
MatD TransformerLayerBackward(const LayerCache& cache, const MatD& d_out,
                              const LayerParams<double>& params,
                              LayerParams<double>& grads, int heads);

template <typename S>
struct Pooled {
  RowVec<S> embedding;
  RowVec<S> weights;  // per row; zero on masked rows
};

// Weighted-average mode: softmax of a learned linear score over unmasked
// rows. CLS mode: row 0. Throws std::invalid_argument on an all-masked input.
template <typename S>
Pooled<S> Pool(const Mat<S>& hidden, const std::vector<bool>& mask,
               Pooling mode, const Mat<S>& scorer);

struct EncoderCache {
  int num_real = 0;
  MatD embedded;  // num_real x H
  std::vector<LayerCache> layers;
  MatD final_hidden;
  VecD pool_weights;
};

// embed -> layers -> pool over the real-token prefix of `seq`. Padding slots
// are dropped before the transformer stack, which is equivalent to masking
// them as keys and makes the embedding independent of padding content.
template <typename S>
RowVec<S> Encode(const TokenSequence& seq, const EncoderParams<S>& params,
                 const ModelConfig& config, EncoderCache* cache = nullptr,
                 Dropout dropout = {});

// Backpropagates d_embedding through a cached Encode() call.
void EncodeBackward(const TokenSequence& seq, const EncoderCache& cache,
                    const VecD& d_embedding, const EncoderParamsD& params,
                    EncoderParamsD& grads, const ModelConfig& config);

}  // namespace twinrank

#endif  // TWINRANK_ENCODER_H_

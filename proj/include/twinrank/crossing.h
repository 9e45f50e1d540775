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

#ifndef TWINRANK_CROSSING_H_
#define TWINRANK_CROSSING_H_

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "twinrank/tensor.h"

namespace twinrank {

inline double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Logistic calibration of the cosine score: sigmoid(scale * cos + bias).
template <typename S>
struct CosineHeadParams {
  Mat<S> scale;  // 1 x 1
  Mat<S> bias;   // 1 x 1

  std::vector<TensorRef<S>> Tensors(const std::string& prefix);
};

// y = F(x) + x over x = max(q, k), F a stack of GELU residual blocks,
// followed by a single-logit logistic layer.
template <typename S>
struct ResidualHeadParams {
  struct Block {
    Mat<S> w_hidden, b_hidden;  // H x H, 1 x H
    Mat<S> w_out, b_out;        // H x H, 1 x H
  };
  std::vector<Block> blocks;
  Mat<S> logit_weight;  // 1 x H
  Mat<S> logit_bias;    // 1 x 1

  std::vector<TensorRef<S>> Tensors(const std::string& prefix);
};

CosineHeadParams<double> InitCosineHead();
// The output transform of every block is zero-initialized, so the head
// starts as a logistic layer over max(q, k).
ResidualHeadParams<double> InitResidualHead(int hidden, int blocks, Rng& rng);

template <typename S>
CosineHeadParams<float> CastHead(const CosineHeadParams<S>& p);
template <typename S>
ResidualHeadParams<float> CastHead(const ResidualHeadParams<S>& p);

// q.k / (|q||k|). Throws std::invalid_argument for a zero vector or a
// length mismatch.
template <typename S>
double Cosine(const RowVec<S>& q, const RowVec<S>& k);

template <typename S>
double CosineHead(const RowVec<S>& q, const RowVec<S>& k,
                  const CosineHeadParams<S>& params);

// Elementwise max. Throws std::invalid_argument on a length mismatch.
template <typename S>
RowVec<S> MaxCombine(const RowVec<S>& q, const RowVec<S>& k);

// y = F(max(q, k)) + max(q, k).
template <typename S>
RowVec<S> ResidualTransform(const RowVec<S>& q, const RowVec<S>& k,
                            const ResidualHeadParams<S>& params);

template <typename S>
double ResidualHead(const RowVec<S>& q, const RowVec<S>& k,
                    const ResidualHeadParams<S>& params);

// |q - k|^2 for unit vectors. Throws std::invalid_argument if either input
// is off the unit sphere by more than 1e-6.
double SquaredDistanceUnit(std::span<const double> q, std::span<const double> k);

// Gradients of a head's logit with respect to q, k and its parameters. The
// incoming gradient d_logit is the derivative of the loss w.r.t. the logit.
struct HeadGrad {
  VecD d_q;
  VecD d_k;
};

HeadGrad CosineHeadBackward(const VecD& q, const VecD& k,
                            const CosineHeadParams<double>& params,
                            double d_logit, CosineHeadParams<double>& grads);
double CosineHeadLogit(const VecD& q, const VecD& k,
                       const CosineHeadParams<double>& params);

double ResidualHeadLogit(const VecD& q, const VecD& k,
                         const ResidualHeadParams<double>& params);
HeadGrad ResidualHeadBackward(const VecD& q, const VecD& k,
                              const ResidualHeadParams<double>& params,
                              double d_logit,
                              ResidualHeadParams<double>& grads);

}  // namespace twinrank

#endif  // TWINRANK_CROSSING_H_

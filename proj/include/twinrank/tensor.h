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

#ifndef TWINRANK_TENSOR_H_
#define TWINRANK_TENSOR_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace twinrank {

// Row-major dense matrix. Biases and gains are stored as 1 x n matrices so
// that every parameter has the same type.
template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

using MatD = Mat<double>;
using VecD = RowVec<double>;

template <typename S>
struct TensorRef {
  std::string name;
  Mat<S>* tensor;
  bool decay;  // subject to weight decay (weight matrices only)
};

using Rng = std::mt19937_64;

// Normal(0, std) truncated at two standard deviations.
inline double TruncatedNormal(Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, 1.0);
  for (;;) {
    const double z = dist(rng);
    if (z > -2.0 && z < 2.0) return z * stddev;
  }
}

inline MatD RandomMat(Rng& rng, int rows, int cols, double stddev) {
  MatD m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = TruncatedNormal(rng, stddev);
  }
  return m;
}

// Sums the element counts of a tensor list.
template <typename S>
int64_t CountParameters(const std::vector<TensorRef<S>>& tensors) {
  int64_t n = 0;
  for (const auto& t : tensors) n += t.tensor->size();
  return n;
}

}  // namespace twinrank

#endif  // TWINRANK_TENSOR_H_

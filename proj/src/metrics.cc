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

#include "twinrank/metrics.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace twinrank {

double RocAuc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("RocAuc: length mismatch");
  }
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // Sum of 1-based average ranks of the positives.
  double rank_sum = 0;
  size_t positives = 0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t t = i; t < j; ++t) {
      if (labels[order[t]] != 0 && labels[order[t]] != 1) {
        throw std::invalid_argument("RocAuc: labels must be 0 or 1");
      }
      if (labels[order[t]] == 1) {
        rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw std::invalid_argument("RocAuc: both classes must be present");
  }
  const double p = static_cast<double>(positives);
  return (rank_sum - p * (p + 1) / 2) / (p * static_cast<double>(negatives));
}

double Gain(int grade, GainKind kind) {
  if (grade < 0) throw std::invalid_argument("Gain: negative grade");
  return kind == GainKind::kLinear ? static_cast<double>(grade)
                                   : std::exp2(grade) - 1.0;
}

namespace {

double Dcg(std::span<const int> grades, int position, GainKind kind) {
  double dcg = 0;
  const int cut = std::min<int>(position, grades.size());
  for (int i = 0; i < cut; ++i) {
    dcg += Gain(grades[i], kind) / std::log2(static_cast<double>(i + 2));
  }
  return dcg;
}

}  // namespace

std::optional<double> NdcgAt(std::span<const int> ranked_grades, int position,
                             GainKind kind) {
  if (position < 1) throw std::invalid_argument("NdcgAt: position must be >= 1");
  if (ranked_grades.empty()) throw std::invalid_argument("NdcgAt: empty ranking");
  std::vector<int> ideal(ranked_grades.begin(), ranked_grades.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = Dcg(ideal, position, kind);
  if (idcg == 0.0) return std::nullopt;
  return Dcg(ranked_grades, position, kind) / idcg;
}

std::optional<double> MeanNdcgAt(const std::vector<std::vector<int>>& rankings,
                                 int position, GainKind kind) {
  double sum = 0;
  int counted = 0;
  for (const auto& r : rankings) {
    if (const auto v = NdcgAt(r, position, kind)) {
      sum += *v;
      ++counted;
    }
  }
  if (counted == 0) return std::nullopt;
  return sum / counted;
}

}  // namespace twinrank

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

#ifndef TWINRANK_METRICS_H_
#define TWINRANK_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace twinrank {

// Area under the ROC curve: the probability that a random positive scores
// above a random negative, ties counting one half. Computed from average
// ranks in O(n log n). Throws std::invalid_argument if either class is
// missing or the lengths differ.
double RocAuc(std::span<const double> scores, std::span<const int> labels);

enum class GainKind { kLinear, kExponential };

// Gain of a graded label (0 = bad .. 3 = excellent): the grade itself, or
// 2^grade - 1.
double Gain(int grade, GainKind kind = GainKind::kLinear);

// nDCG@position of one ranked list of graded labels (best-ranked first),
// with log2(rank + 1) discounting. Returns nullopt when the ideal DCG is 0.
// Throws std::invalid_argument if position < 1 or the list is empty.
std::optional<double> NdcgAt(std::span<const int> ranked_grades, int position,
                             GainKind kind = GainKind::kLinear);

// Mean nDCG@position over queries, skipping queries whose ideal DCG is 0.
// Returns nullopt when every query is skipped.
std::optional<double> MeanNdcgAt(
    const std::vector<std::vector<int>>& rankings, int position,
    GainKind kind = GainKind::kLinear);

}  // namespace twinrank

#endif  // TWINRANK_METRICS_H_

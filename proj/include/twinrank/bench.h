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

#ifndef TWINRANK_BENCH_H_
#define TWINRANK_BENCH_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "twinrank/model.h"

namespace twinrank {

enum class BenchMode { kTwinCosine, kTwinResidual, kCrossEncoder };

std::string_view ToString(BenchMode m);
BenchMode ParseBenchMode(std::string_view s);

struct LatencyScenario {
  BenchMode mode = BenchMode::kTwinCosine;
  int qel = 1;  // query encoding loops per query
  bool keyword_cache = true;
  int n_queries = 100;
  int n_keywords_per_query = 100;
  int repetitions = 3;

  void Validate() const;
  nlohmann::json ToJson() const;
};

// Exact invocation counts of one pass over the workload.
struct BenchCounters {
  int64_t query_encoder_calls = 0;
  int64_t keyword_encoder_calls = 0;
  int64_t cross_encoder_calls = 0;
  int64_t crossing_calls = 0;
};

struct TimingReport {
  LatencyScenario scenario;
  double mean_query_ms = 0;
  double median_query_ms = 0;
  double p95_query_ms = 0;
  double total_ms = 0;     // median over repetitions of one full pass
  double tokenize_ms = 0;  // reported separately, excluded above
  BenchCounters counters;

  nlohmann::json ToJson() const;
};

// Concatenated-input baseline: one encoder pass over
// [CLS] query [SEP] keyword, then a logistic layer on the CLS vector. Same
// depth and width as the twin model it is built from; weights are random,
// which does not affect timing.
class CrossEncoder {
 public:
  CrossEncoder(const ModelConfig& twin_config, uint64_t seed);

  TokenSequence Tokenize(std::string_view query,
                         std::string_view keyword) const;
  double Score(const TokenSequence& joint) const;
  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  TrigramVocab vocab_;
  int side_len_;
  EncoderParams<float> encoder_;
  RowVec<float> logit_weight_;
  float logit_bias_ = 0;
};

// Queries with their candidate keyword lists.
struct BenchWorkload {
  std::vector<std::string> queries;
  std::vector<std::vector<std::string>> keywords;
};

BenchWorkload MakeBenchWorkload(int n_queries, int n_keywords_per_query,
                                uint64_t seed);

// Runs `warmup` untimed passes, then scenario.repetitions timed passes in
// single precision. Twin modes with keyword_cache precompute keyword
// embeddings before timing and never call the keyword encoder inside it.
TimingReport Bench(const LatencyScenario& scenario, const TwinModel& model,
                   const BenchWorkload& workload, int warmup = 1);

struct LinearFit {
  double intercept = 0;  // alpha
  double slope = 0;      // beta, per keyword
  double rms_residual = 0;
};

// Least-squares fit of per-query time = alpha + beta * n_keywords. Throws
// std::invalid_argument with fewer than 3 points or a single distinct x.
LinearFit ComplexityFit(const std::vector<double>& n_keywords,
                        const std::vector<double>& per_query_ms);

}  // namespace twinrank

#endif  // TWINRANK_BENCH_H_

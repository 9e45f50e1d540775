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

#include "twinrank/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "twinrank/crossing.h"
#include "twinrank/training.h"

namespace twinrank {
namespace {

using Clock = std::chrono::steady_clock;

double Ms(Clock::duration d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

double Percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::string_view ToString(BenchMode m) {
  switch (m) {
    case BenchMode::kTwinCosine:
      return "twin_cosine";
    case BenchMode::kTwinResidual:
      return "twin_residual";
    case BenchMode::kCrossEncoder:
      return "cross_encoder";
  }
  return "twin_cosine";
}

BenchMode ParseBenchMode(std::string_view s) {
  if (s == "twin_cosine") return BenchMode::kTwinCosine;
  if (s == "twin_residual") return BenchMode::kTwinResidual;
  if (s == "cross_encoder") return BenchMode::kCrossEncoder;
  throw std::invalid_argument("unknown bench mode: " + std::string(s));
}

void LatencyScenario::Validate() const {
  if (qel < 1) throw std::invalid_argument("LatencyScenario: qel must be >= 1");
  if (n_keywords_per_query < 1) {
    throw std::invalid_argument(
        "LatencyScenario: n_keywords_per_query must be >= 1");
  }
  if (n_queries < 1) {
    throw std::invalid_argument("LatencyScenario: n_queries must be >= 1");
  }
  if (repetitions < 1) {
    throw std::invalid_argument("LatencyScenario: repetitions must be >= 1");
  }
}

nlohmann::json LatencyScenario::ToJson() const {
  return {{"mode", ToString(mode)},
          {"qel", qel},
          {"keyword_cache", keyword_cache},
          {"n_queries", n_queries},
          {"n_keywords_per_query", n_keywords_per_query},
          {"repetitions", repetitions}};
}

nlohmann::json TimingReport::ToJson() const {
  return {{"scenario", scenario.ToJson()},
          {"mean_query_ms", mean_query_ms},
          {"median_query_ms", median_query_ms},
          {"p95_query_ms", p95_query_ms},
          {"total_ms", total_ms},
          {"tokenize_ms", tokenize_ms},
          {"query_encoder_calls", counters.query_encoder_calls},
          {"keyword_encoder_calls", counters.keyword_encoder_calls},
          {"cross_encoder_calls", counters.cross_encoder_calls},
          {"crossing_calls", counters.crossing_calls}};
}

CrossEncoder::CrossEncoder(const ModelConfig& twin_config, uint64_t seed)
    : config_(twin_config),
      vocab_(twin_config.vocab()),
      side_len_(twin_config.max_len) {
  config_.pooling = Pooling::kClsToken;
  config_.max_len = 2 * side_len_ + 2;
  config_.Validate();
  Rng rng(seed);
  encoder_ = InitEncoder(config_, vocab_.table_rows(), config_.max_len, rng)
                 .Cast<float>();
  logit_weight_ = RandomMat(rng, 1, config_.hidden, 0.02).row(0).cast<float>();
}

TokenSequence CrossEncoder::Tokenize(std::string_view query,
                                     std::string_view keyword) const {
  return EncodePairText(query, keyword, vocab_, side_len_);
}

double CrossEncoder::Score(const TokenSequence& joint) const {
  const RowVec<float> cls = Encode<float>(joint, encoder_, config_);
  return Sigmoid(static_cast<double>(cls.dot(logit_weight_)) + logit_bias_);
}

BenchWorkload MakeBenchWorkload(int n_queries, int n_keywords_per_query,
                                uint64_t seed) {
  BenchWorkload w;
  const auto pairs = GenerateSyntheticPairs(n_queries, seed);
  const auto pool = GenerateSyntheticKeywords(
      std::max(n_keywords_per_query, 1000), seed + 1);
  Rng rng(seed + 2);
  std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
  for (const auto& p : pairs) {
    w.queries.push_back(p.query);
    std::vector<std::string> kws;
    for (int j = 0; j < n_keywords_per_query; ++j) kws.push_back(pool[pick(rng)]);
    w.keywords.push_back(std::move(kws));
  }
  return w;
}

TimingReport Bench(const LatencyScenario& scenario, const TwinModel& model,
                   const BenchWorkload& workload, int warmup) {
  scenario.Validate();
  if (static_cast<int>(workload.queries.size()) < scenario.n_queries) {
    throw std::invalid_argument("Bench: workload has too few queries");
  }
  const int nq = scenario.n_queries;
  const int nk = scenario.n_keywords_per_query;
  for (int i = 0; i < nq; ++i) {
    if (static_cast<int>(workload.keywords[i].size()) < nk) {
      throw std::invalid_argument("Bench: workload has too few keywords");
    }
  }
  TimingReport report;
  report.scenario = scenario;
  const bool cross = scenario.mode == BenchMode::kCrossEncoder;
  const FloatTwinModel twin(model);
  const CrossEncoder cross_encoder(model.config(), 0xc0ffee);

  // Tokenization, timed separately.
  const auto tok_start = Clock::now();
  std::vector<TokenSequence> query_seqs;
  std::vector<std::vector<TokenSequence>> keyword_seqs(nq);
  for (int i = 0; i < nq; ++i) {
    if (!cross) query_seqs.push_back(model.Tokenize(workload.queries[i]));
    for (int j = 0; j < nk; ++j) {
      keyword_seqs[i].push_back(
          cross ? cross_encoder.Tokenize(workload.queries[i],
                                         workload.keywords[i][j])
                : model.Tokenize(workload.keywords[i][j]));
    }
  }
  report.tokenize_ms = Ms(Clock::now() - tok_start);

  // Offline keyword embeddings for the cached twin modes.
  std::vector<std::vector<RowVec<float>>> cached(nq);
  if (!cross && scenario.keyword_cache) {
    for (int i = 0; i < nq; ++i) {
      for (int j = 0; j < nk; ++j) {
        cached[i].push_back(twin.EncodeKeyword(keyword_seqs[i][j]));
      }
    }
  }

  auto score = [&](const RowVec<float>& q, const RowVec<float>& k) {
    return scenario.mode == BenchMode::kTwinCosine
               ? CosineHead(q, k, twin.params.cosine)
               : ResidualHead(q, k, twin.params.residual);
  };

  volatile double sink = 0;
  std::vector<double> per_query;
  std::vector<double> totals;
  for (int rep = 0; rep < warmup + scenario.repetitions; ++rep) {
    BenchCounters counters;
    std::vector<double> times(nq);
    const auto pass_start = Clock::now();
    for (int i = 0; i < nq; ++i) {
      const auto t0 = Clock::now();
      double acc = 0;
      if (cross) {
        for (int j = 0; j < nk; ++j) {
          acc += cross_encoder.Score(keyword_seqs[i][j]);
          ++counters.cross_encoder_calls;
        }
      } else {
        RowVec<float> q;
        for (int l = 0; l < scenario.qel; ++l) {
          q = twin.EncodeQuery(query_seqs[i]);
          ++counters.query_encoder_calls;
        }
        for (int j = 0; j < nk; ++j) {
          if (scenario.keyword_cache) {
            acc += score(q, cached[i][j]);
          } else {
            const RowVec<float> k = twin.EncodeKeyword(keyword_seqs[i][j]);
            ++counters.keyword_encoder_calls;
            acc += score(q, k);
          }
          ++counters.crossing_calls;
        }
      }
      times[i] = Ms(Clock::now() - t0);
      sink = sink + acc;
    }
    const double total = Ms(Clock::now() - pass_start);
    report.counters = counters;
    if (rep < warmup) continue;
    per_query.insert(per_query.end(), times.begin(), times.end());
    totals.push_back(total);
  }
  report.mean_query_ms =
      std::accumulate(per_query.begin(), per_query.end(), 0.0) /
      static_cast<double>(per_query.size());
  report.median_query_ms = Percentile(per_query, 0.5);
  report.p95_query_ms = Percentile(per_query, 0.95);
  report.total_ms = Percentile(totals, 0.5);
  return report;
}

LinearFit ComplexityFit(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("ComplexityFit: length mismatch");
  }
  if (x.size() < 3) {
    throw std::invalid_argument("ComplexityFit: need at least 3 grid points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) {
    throw std::invalid_argument("ComplexityFit: grid has a single distinct x");
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace twinrank

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

#include "twinrank/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace twinrank {

std::string_view ToString(EditorialLabel l) {
  switch (l) {
    case EditorialLabel::kBad:
      return "bad";
    case EditorialLabel::kFair:
      return "fair";
    case EditorialLabel::kGood:
      return "good";
    case EditorialLabel::kExcellent:
      return "excellent";
  }
  return "bad";
}

EditorialLabel ParseEditorialLabel(std::string_view s) {
  if (s == "bad") return EditorialLabel::kBad;
  if (s == "fair") return EditorialLabel::kFair;
  if (s == "good") return EditorialLabel::kGood;
  if (s == "excellent") return EditorialLabel::kExcellent;
  throw std::invalid_argument("unknown editorial label: " + std::string(s));
}

int BinarizeLabel(EditorialLabel l) { return l == EditorialLabel::kBad ? 0 : 1; }

int PairRecord::Label() const {
  if (binary_label) return *binary_label;
  if (editorial_label) return BinarizeLabel(*editorial_label);
  throw std::logic_error("PairRecord has no label");
}

namespace {

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    const size_t end = line.find('\t', start);
    out.push_back(line.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

double ParseDouble(const std::string& s) {
  size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

}  // namespace

std::vector<PairRecord> ParsePairsTsv(std::istream& in,
                                      const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(source + ": missing header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = SplitTabs(line);
  if (header.size() < 4 || header[0] != "query" || header[1] != "keyword") {
    throw std::runtime_error(
        source + ":1: header must be query\\tkeyword\\tz_bad\\tz_nonbad"
                 "[\\tlabel]");
  }
  std::vector<PairRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const auto cols = SplitTabs(line);
      if (cols.size() < 4 || cols.size() > 5) {
        throw std::invalid_argument("expected 4 or 5 columns, found " +
                                    std::to_string(cols.size()));
      }
      PairRecord r;
      r.query = cols[0];
      r.keyword = cols[1];
      if (!cols[2].empty() || !cols[3].empty()) {
        r.teacher_logits = Logits{ParseDouble(cols[2]), ParseDouble(cols[3])};
        if (!std::isfinite((*r.teacher_logits)[0]) ||
            !std::isfinite((*r.teacher_logits)[1])) {
          throw std::invalid_argument("non-finite teacher logit");
        }
      }
      if (cols.size() == 5 && !cols[4].empty()) {
        if (cols[4] == "0" || cols[4] == "1") {
          r.binary_label = cols[4] == "1" ? 1 : 0;
        } else {
          r.editorial_label = ParseEditorialLabel(cols[4]);
        }
      }
      if (!r.teacher_logits && !r.has_label()) {
        throw std::invalid_argument("row has neither teacher logits nor label");
      }
      records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return records;
}

std::vector<PairRecord> ReadPairsTsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pair file: " + path);
  return ParsePairsTsv(in, path);
}

void WritePairsTsv(const std::string& path,
                   std::span<const PairRecord> records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(17);
  out << "query\tkeyword\tz_bad\tz_nonbad\tlabel\n";
  for (const auto& r : records) {
    out << r.query << '\t' << r.keyword << '\t';
    if (r.teacher_logits) {
      out << (*r.teacher_logits)[0] << '\t' << (*r.teacher_logits)[1];
    } else {
      out << '\t';
    }
    out << '\t';
    if (r.editorial_label) {
      out << ToString(*r.editorial_label);
    } else if (r.binary_label) {
      out << *r.binary_label;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Logits SoftLabel(const Logits& z, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("SoftLabel: temperature must be > 0");
  }
  if (!std::isfinite(z[0]) || !std::isfinite(z[1])) {
    throw std::invalid_argument("SoftLabel: non-finite logits");
  }
  const double mx = std::max(z[0], z[1]);
  const double e0 = std::exp((z[0] - mx) / temperature);
  const double e1 = std::exp((z[1] - mx) / temperature);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

double CeLoss(std::span<const double> targets,
              std::span<const double> predictions) {
  if (targets.size() != predictions.size()) {
    throw std::invalid_argument("CeLoss: length mismatch");
  }
  constexpr double kEps = 1e-12;
  double loss = 0;
  for (size_t i = 0; i < targets.size(); ++i) {
    const double y = targets[i];
    const double p = predictions[i];
    // Epsilon floors each log argument; 0 * log(.) terms are skipped so that
    // y == p in {0, 1} gives exactly 0.
    if (y > 0) loss -= y * std::log(std::max(p, kEps));
    if (y < 1) loss -= (1.0 - y) * std::log(std::max(1.0 - p, kEps));
  }
  return loss;
}

void DistillationConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("DistillationConfig: " + what);
  };
  if (!(temperature > 0)) fail("temperature must be > 0");
  if (!(learning_rate >= 0)) fail("learning_rate must be >= 0");
  if (!(finetune_learning_rate >= 0)) fail("finetune_learning_rate must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    fail("betas must be in [0, 1)");
  }
  if (!(adam_epsilon > 0)) fail("adam_epsilon must be > 0");
  if (!(weight_decay >= 0)) fail("weight_decay must be >= 0");
  if (epochs < 0 || finetune_epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (workers < 1) fail("workers must be >= 1");
}

nlohmann::json DistillationConfig::ToJson() const {
  return {{"temperature", temperature},
          {"learning_rate", learning_rate},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_epsilon", adam_epsilon},
          {"weight_decay", weight_decay},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"finetune_learning_rate", finetune_learning_rate},
          {"finetune_epochs", finetune_epochs},
          {"seed", seed},
          {"workers", workers}};
}

DistillationConfig DistillationConfig::FromJson(const nlohmann::json& j) {
  DistillationConfig c;
  c.temperature = j.value("temperature", c.temperature);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.finetune_learning_rate =
      j.value("finetune_learning_rate", c.finetune_learning_rate);
  c.finetune_epochs = j.value("finetune_epochs", c.finetune_epochs);
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  c.Validate();
  return c;
}

AdamW::AdamW(TwinModel& model, double beta1, double beta2, double epsilon,
             double weight_decay)
    : beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      weight_decay_(weight_decay) {
  for (const auto& t : model.Tensors()) {
    m_.push_back(MatD::Zero(t.tensor->rows(), t.tensor->cols()));
    v_.push_back(MatD::Zero(t.tensor->rows(), t.tensor->cols()));
  }
}

void AdamW::Step(TwinModel& model, ModelParamsD& grads, double lr) {
  ++steps_;
  auto params = model.Tensors();
  auto g = TwinModel::Tensors(grads, model.config());
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (size_t t = 0; t < params.size(); ++t) {
    double* p = params[t].tensor->data();
    const double* gr = g[t].tensor->data();
    double* m = m_[t].data();
    double* v = v_[t].data();
    const double decay = params[t].decay ? weight_decay_ : 0.0;
    for (Eigen::Index i = 0; i < params[t].tensor->size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gr[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gr[i] * gr[i];
      const double update =
          (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon_) + decay * p[i];
      p[i] -= lr * update;
    }
  }
}

namespace {

uint64_t SplitMix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr int kGradChunks = 8;

void AddInto(std::vector<TensorRef<double>>& dst,
             const std::vector<TensorRef<double>>& src) {
  for (size_t t = 0; t < dst.size(); ++t) *dst[t].tensor += *src[t].tensor;
}

}  // namespace

TrainResult Train(TwinModel& model, std::span<const TrainExample> examples,
                  const DistillationConfig& config, double learning_rate,
                  int epochs) {
  config.Validate();
  if (examples.empty()) throw std::invalid_argument("Train: empty data");
  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  result.learning_rate = learning_rate;
  AdamW opt(model, config.beta1, config.beta2, config.adam_epsilon,
            config.weight_decay);
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(SplitMix(config.seed));
  std::vector<ModelParamsD> chunk_grads(kGradChunks, model.ZeroGrads());
  std::vector<double> chunk_loss(kGradChunks);
  const double dropout_rate = model.config().dropout;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0;
    for (size_t begin = 0; begin < order.size();
         begin += static_cast<size_t>(config.batch_size)) {
      const size_t end =
          std::min(order.size(), begin + static_cast<size_t>(config.batch_size));
      const size_t batch = end - begin;
      const int chunks = static_cast<int>(std::min<size_t>(kGradChunks, batch));
      const uint64_t step_seed =
          SplitMix(config.seed ^ SplitMix(static_cast<uint64_t>(opt.steps())));

      auto run_chunk = [&](int c) {
        auto g = TwinModel::Tensors(chunk_grads[c], model.config());
        for (auto& t : g) t.tensor->setZero();
        chunk_loss[c] = 0;
        const size_t lo = begin + batch * c / chunks;
        const size_t hi = begin + batch * (c + 1) / chunks;
        for (size_t i = lo; i < hi; ++i) {
          Rng drop_rng(SplitMix(step_seed + i - begin));
          const TrainExample& ex = examples[order[i]];
          chunk_loss[c] += model.ForwardBackward(
              ex.query, ex.keyword, ex.target, Dropout{&drop_rng, dropout_rate},
              chunk_grads[c]);
        }
      };
      if (config.workers > 1 && chunks > 1) {
        std::vector<std::thread> threads;
        const int w = std::min(config.workers, chunks);
        for (int t = 0; t < w; ++t) {
          threads.emplace_back([&, t] {
            for (int c = t; c < chunks; c += w) run_chunk(c);
          });
        }
        for (auto& th : threads) th.join();
      } else {
        for (int c = 0; c < chunks; ++c) run_chunk(c);
      }

      auto total = TwinModel::Tensors(chunk_grads[0], model.config());
      double batch_loss = chunk_loss[0];
      for (int c = 1; c < chunks; ++c) {
        AddInto(total, TwinModel::Tensors(chunk_grads[c], model.config()));
        batch_loss += chunk_loss[c];
      }
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("Train: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", step " +
                                 std::to_string(opt.steps()));
      }
      for (auto& t : total) *t.tensor /= static_cast<double>(batch);
      opt.Step(model, chunk_grads[0], learning_rate);
      epoch_loss += batch_loss;
    }
    result.epoch_loss.push_back(epoch_loss /
                                static_cast<double>(examples.size()));
  }
  result.steps = opt.steps();
  result.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return result;
}

TrainResult DistillTrain(std::span<const PairRecord> data,
                         const DistillationConfig& config, TwinModel& model) {
  if (data.empty()) throw std::invalid_argument("DistillTrain: empty data");
  std::vector<TrainExample> examples;
  examples.reserve(data.size());
  for (const auto& r : data) {
    if (!r.teacher_logits) {
      throw std::invalid_argument("DistillTrain: record without teacher logits");
    }
    examples.push_back({model.Tokenize(r.query), model.Tokenize(r.keyword),
                        SoftLabel(*r.teacher_logits, config.temperature)[1]});
  }
  return Train(model, examples, config, config.learning_rate, config.epochs);
}

TrainResult Finetune(std::span<const PairRecord> data,
                     const DistillationConfig& config, TwinModel& model) {
  if (data.empty()) throw std::invalid_argument("Finetune: empty data");
  std::vector<TrainExample> examples;
  examples.reserve(data.size());
  for (const auto& r : data) {
    if (!r.has_label()) {
      throw std::invalid_argument("Finetune: record without label");
    }
    examples.push_back({model.Tokenize(r.query), model.Tokenize(r.keyword),
                        static_cast<double>(r.Label())});
  }
  return Train(model, examples, config, config.finetune_learning_rate,
               config.finetune_epochs);
}

}  // namespace twinrank

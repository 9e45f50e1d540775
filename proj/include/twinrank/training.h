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

#ifndef TWINRANK_TRAINING_H_
#define TWINRANK_TRAINING_H_

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "twinrank/model.h"

namespace twinrank {

enum class EditorialLabel { kBad = 0, kFair = 1, kGood = 2, kExcellent = 3 };

std::string_view ToString(EditorialLabel l);
EditorialLabel ParseEditorialLabel(std::string_view s);
// bad -> 0, fair/good/excellent -> 1.
int BinarizeLabel(EditorialLabel l);

// Teacher logits are ordered (z_bad, z_nonbad).
using Logits = std::array<double, 2>;

struct PairRecord {
  std::string query;
  std::string keyword;
  std::optional<Logits> teacher_logits;
  std::optional<EditorialLabel> editorial_label;
  std::optional<int> binary_label;

  // binary_label if set, else the binarized editorial label. Throws
  // std::logic_error when neither is present.
  int Label() const;
  bool has_label() const {
    return binary_label.has_value() || editorial_label.has_value();
  }
};

// UTF-8 TSV with a header row:
//   query \t keyword \t z_bad \t z_nonbad [\t label]
// z columns may be empty when a label is present; label is one of
// bad/fair/good/excellent or 0/1. Errors name the offending line number.
std::vector<PairRecord> ParsePairsTsv(std::istream& in,
                                      const std::string& source = "<input>");
std::vector<PairRecord> ReadPairsTsv(const std::string& path);
void WritePairsTsv(const std::string& path,
                   std::span<const PairRecord> records);

// Temperature softmax over the two teacher logits, stabilized by
// subtracting the max logit. Throws std::invalid_argument unless T > 0 and
// the logits are finite.
Logits SoftLabel(const Logits& z, double temperature);

// Summed binary cross-entropy with predictions clamped to
// [1e-12, 1 - 1e-12]. Throws std::invalid_argument on a length mismatch.
double CeLoss(std::span<const double> targets,
              std::span<const double> predictions);

struct DistillationConfig {
  double temperature = 2.0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-6;
  double weight_decay = 0.01;
  int epochs = 10;
  int batch_size = 64;
  double finetune_learning_rate = 2e-5;
  int finetune_epochs = 2;
  uint64_t seed = 1;
  int workers = 1;

  void Validate() const;
  nlohmann::json ToJson() const;
  static DistillationConfig FromJson(const nlohmann::json& j);
};

// Adam with decoupled weight decay. Moments are kept per tensor in the
// order of TwinModel::Tensors().
class AdamW {
 public:
  AdamW(TwinModel& model, double beta1, double beta2, double epsilon,
        double weight_decay);

  void Step(TwinModel& model, ModelParamsD& grads, double learning_rate);
  int64_t steps() const { return steps_; }

 private:
  double beta1_, beta2_, epsilon_, weight_decay_;
  int64_t steps_ = 0;
  std::vector<MatD> m_, v_;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean per-pair loss of each epoch
  int64_t steps = 0;
  double learning_rate = 0;
  double seconds = 0;
};

// One training example after tokenization: target is the probability that
// the pair is not bad.
struct TrainExample {
  TokenSequence query;
  TokenSequence keyword;
  double target = 0;
};

// Mini-batch training loop shared by distillation and fine-tuning. Each
// batch is split into fixed chunks whose gradients are reduced in order, so
// results do not depend on the worker count. Throws std::runtime_error if
// the loss becomes NaN.
TrainResult Train(TwinModel& model, std::span<const TrainExample> examples,
                  const DistillationConfig& config, double learning_rate,
                  int epochs);

// Distills from teacher logits softened at config.temperature. Throws
// std::invalid_argument on empty data or a record without teacher logits.
TrainResult DistillTrain(std::span<const PairRecord> data,
                         const DistillationConfig& config, TwinModel& model);

// Fine-tunes on hard labels at finetune_learning_rate for finetune_epochs.
TrainResult Finetune(std::span<const PairRecord> data,
                     const DistillationConfig& config, TwinModel& model);

// Lexical-overlap stand-in for a trained teacher. The logit margin
// z_nonbad - z_bad is 4 * (2J - 1) + 4J(1 - J) * u, where J is the Jaccard
// overlap of the two normalized word sets and u in [-1, 1] is a per-pair
// value hashed from (seed, query, keyword). The noise vanishes at J = 0 and
// J = 1, so identical texts get the maximal margin +4 and disjoint texts the
// minimal margin -4. Logits are (-margin / 2, margin / 2).
Logits SyntheticTeacher(std::string_view query, std::string_view keyword,
                        uint64_t seed = 0);
double WordJaccard(std::string_view a, std::string_view b);

// Deterministic synthetic query/keyword pairs labeled by SyntheticTeacher.
// Editorial labels come from the same overlap J plus independent seeded
// noise, so the teacher is informative but not perfect.
std::vector<PairRecord> GenerateSyntheticPairs(int count, uint64_t seed);

// `count` distinct keyword texts drawn from the synthetic word list.
std::vector<std::string> GenerateSyntheticKeywords(int count, uint64_t seed);

}  // namespace twinrank

#endif  // TWINRANK_TRAINING_H_

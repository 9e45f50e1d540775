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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "twinrank/model.h"

namespace twinrank {
namespace {

std::vector<PairRecord> ParseString(const std::string& s) {
  std::istringstream in(s);
  return ParsePairsTsv(in, "pairs.tsv");
}

std::string ErrorOf(const std::string& s) {
  try {
    ParseString(s);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

bool SameParams(TwinModel& a, TwinModel& b) {
  auto ta = a.Tensors();
  auto tb = b.Tensors();
  if (ta.size() != tb.size()) return false;
  for (size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].tensor->size() != tb[i].tensor->size()) return false;
    if (std::memcmp(ta[i].tensor->data(), tb[i].tensor->data(),
                    sizeof(double) * ta[i].tensor->size()) != 0) {
      return false;
    }
  }
  return true;
}

std::string ReadBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST_CASE("soft label examples") {
  for (double t : {0.5, 1.0, 2.0, 10.0}) {
    const Logits s = SoftLabel({0, 0}, t);
    CHECK(s[0] == 0.5);
    CHECK(s[1] == 0.5);
  }
  const Logits t1 = SoftLabel({2, 0}, 1.0);
  CHECK(t1[0] == doctest::Approx(0.8807970780).epsilon(1e-9));
  CHECK(t1[1] == doctest::Approx(0.1192029220).epsilon(1e-9));
  const Logits t2 = SoftLabel({2, 0}, 2.0);
  CHECK(t2[0] == doctest::Approx(0.7310585786).epsilon(1e-9));
  CHECK(t2[1] == doctest::Approx(0.2689414214).epsilon(1e-9));
  CHECK(t2[0] < t1[0]);
  CHECK(SoftLabel({1000, -1000}, 1.0)[0] == 1.0);
  CHECK_THROWS_AS(SoftLabel({1, 0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SoftLabel({1, 0}, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(SoftLabel({std::nan(""), 0}, 1.0), std::invalid_argument);
}

TEST_CASE("soft label max component strictly decreases with temperature") {
  const Logits z{0.3, -1.1};
  double prev = 1.0;
  for (double t = 0.1; t < 1000; t *= 1.5) {
    const Logits s = SoftLabel(z, t);
    CHECK(s[0] + s[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s[0] < prev);
    prev = s[0];
  }
  const Logits flat = SoftLabel(z, 1e6);
  CHECK(std::abs(flat[0] - 0.5) < 1e-6);
}

TEST_CASE("cross-entropy examples") {
  const double ln2 = std::log(2.0);
  CHECK(CeLoss(std::vector<double>{1}, std::vector<double>{0.5}) ==
        doctest::Approx(ln2).epsilon(1e-15));
  CHECK(CeLoss(std::vector<double>{0.5}, std::vector<double>{0.5}) ==
        doctest::Approx(ln2).epsilon(1e-15));
  CHECK(CeLoss(std::vector<double>{1, 0}, std::vector<double>{1, 0}) == 0.0);
  CHECK(CeLoss(std::vector<double>{1}, std::vector<double>{1 - 1e-9}) < 1e-8);
  CHECK(CeLoss(std::vector<double>{1, 0.5}, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(2 * ln2).epsilon(1e-15));
  CHECK(CeLoss(std::vector<double>{0.3}, std::vector<double>{0.9}) > 0);
  CHECK_THROWS_AS(CeLoss(std::vector<double>{1}, std::vector<double>{0.5, 0.5}),
                  std::invalid_argument);
}

TEST_CASE("cross-entropy derivative vanishes at p == y") {
  for (double y : {0.1, 0.27, 0.5, 0.73, 0.9}) {
    const double h = 1e-6;
    const double up = CeLoss(std::vector<double>{y}, std::vector<double>{y + h});
    const double dn = CeLoss(std::vector<double>{y}, std::vector<double>{y - h});
    CHECK(std::abs((up - dn) / (2 * h)) < 1e-6);
  }
}

TEST_CASE("pair TSV parsing") {
  const auto r = ParseString(
      "query\tkeyword\tz_bad\tz_nonbad\tlabel\n"
      "red shoes\tshoes\t-1\t1.5\tgood\n"
      "a\tb\t0\t0\n"
      "c\td\t\t\t0\r\n");
  REQUIRE(r.size() == 3);
  CHECK(r[0].query == "red shoes");
  CHECK((*r[0].teacher_logits)[1] == 1.5);
  CHECK(*r[0].editorial_label == EditorialLabel::kGood);
  CHECK(r[0].Label() == 1);
  CHECK_FALSE(r[1].has_label());
  CHECK_FALSE(r[2].teacher_logits.has_value());
  CHECK(r[2].Label() == 0);

  CHECK(ErrorOf("") == "pairs.tsv: missing header row");
  CHECK(ErrorOf("a\tb\n").find("pairs.tsv:1:") == 0);
  CHECK(ErrorOf("query\tkeyword\tz_bad\tz_nonbad\nx\ty\t1\n")
            .find("pairs.tsv:2:") == 0);
  CHECK(ErrorOf("query\tkeyword\tz_bad\tz_nonbad\nx\ty\t1\t2\n\nx\ty\tq\t2\n")
            .find("pairs.tsv:4:") == 0);
  CHECK(ErrorOf("query\tkeyword\tz_bad\tz_nonbad\tlabel\nx\ty\t1\t2\tgreat\n")
            .find("unknown editorial label") != std::string::npos);
  CHECK(ErrorOf("query\tkeyword\tz_bad\tz_nonbad\nx\ty\t\t\n")
            .find("neither") != std::string::npos);
}

TEST_CASE("pair TSV round trip") {
  const auto pairs = GenerateSyntheticPairs(50, 3);
  const std::string path = "training_test_pairs.tsv";
  WritePairsTsv(path, pairs);
  const auto back = ReadPairsTsv(path);
  REQUIRE(back.size() == pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    CHECK(back[i].query == pairs[i].query);
    CHECK(back[i].keyword == pairs[i].keyword);
    CHECK(*back[i].teacher_logits == *pairs[i].teacher_logits);
    CHECK(back[i].Label() == pairs[i].Label());
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(ReadPairsTsv("does/not/exist.tsv"), std::runtime_error);
}

TEST_CASE("editorial labels binarize with bad as the only negative") {
  CHECK(BinarizeLabel(EditorialLabel::kBad) == 0);
  CHECK(BinarizeLabel(EditorialLabel::kFair) == 1);
  CHECK(BinarizeLabel(EditorialLabel::kGood) == 1);
  CHECK(BinarizeLabel(EditorialLabel::kExcellent) == 1);
  for (auto l : {EditorialLabel::kBad, EditorialLabel::kFair,
                 EditorialLabel::kGood, EditorialLabel::kExcellent}) {
    CHECK(ParseEditorialLabel(ToString(l)) == l);
  }
}

TEST_CASE("synthetic teacher examples") {
  const Logits same = SyntheticTeacher("red shoes", "red shoes");
  CHECK(same[1] - same[0] == doctest::Approx(4.0).epsilon(1e-15));
  const Logits disjoint = SyntheticTeacher("red shoes", "blue hat");
  CHECK(disjoint[1] - disjoint[0] == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(WordJaccard("red shoes", "buy red shoes") == doctest::Approx(2.0 / 3));
  const Logits partial = SyntheticTeacher("red shoes", "buy red shoes");
  const double m = partial[1] - partial[0];
  // 4(2J - 1) = 4/3, noise amplitude 4J(1 - J) = 8/9.
  CHECK(m >= 4.0 / 3 - 8.0 / 9);
  CHECK(m <= 4.0 / 3 + 8.0 / 9);
  CHECK(m > 0);
  CHECK(m < 4);
  CHECK(SyntheticTeacher("red shoes", "buy red shoes") == partial);
}

TEST_CASE("synthetic data is deterministic") {
  const auto a = GenerateSyntheticPairs(20, 9);
  const auto b = GenerateSyntheticPairs(20, 9);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].query == b[i].query);
    CHECK(a[i].keyword == b[i].keyword);
    CHECK(*a[i].teacher_logits == *b[i].teacher_logits);
  }
  const auto kw = GenerateSyntheticKeywords(500, 2);
  CHECK(std::set<std::string>(kw.begin(), kw.end()).size() == 500);
}

TEST_CASE("one batch overfits") {
  // Near-hard teacher targets: with soft targets the loss floor is the
  // target entropy, not zero.
  auto pairs = GenerateSyntheticPairs(32, 17);
  for (auto& p : pairs) {
    const double m = (*p.teacher_logits)[1] - (*p.teacher_logits)[0];
    p.teacher_logits = m > 0 ? Logits{-40, 40} : Logits{40, -40};
  }
  TwinModel model = TwinModel::Init(ModelConfig::Desk(), 1);
  DistillationConfig c;
  c.batch_size = 32;
  c.epochs = 200;
  c.learning_rate = 1e-3;
  const TrainResult r = DistillTrain(pairs, c, model);
  CHECK(r.steps == 200);
  MESSAGE("final loss ", r.epoch_loss.back());
  CHECK(r.epoch_loss.back() < 0.05);
  CHECK(r.epoch_loss.back() < r.epoch_loss.front());
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  const auto pairs = GenerateSyntheticPairs(40, 5);
  TwinModel model = TwinModel::Init(ModelConfig::Desk(), 2);
  TwinModel before = model;
  DistillationConfig c;
  c.learning_rate = 0;
  c.epochs = 3;
  c.batch_size = 8;
  DistillTrain(pairs, c, model);
  CHECK(SameParams(model, before));
}

TEST_CASE("finetune with zero epochs is a no-op and echoes its rate") {
  const auto pairs = GenerateSyntheticPairs(40, 5);
  TwinModel model = TwinModel::Init(ModelConfig::Desk(), 2);
  TwinModel before = model;
  DistillationConfig c;
  c.finetune_epochs = 0;
  c.finetune_learning_rate = 3e-5;
  const TrainResult r = Finetune(pairs, c, model);
  CHECK(r.steps == 0);
  CHECK(r.learning_rate == 3e-5);
  CHECK(SameParams(model, before));
  c.finetune_epochs = 1;
  CHECK(Finetune(pairs, c, model).learning_rate == 3e-5);
  CHECK_FALSE(SameParams(model, before));
  CHECK(DistillationConfig::FromJson(c.ToJson()).finetune_learning_rate == 3e-5);
}

TEST_CASE("distillation is reproducible to the byte, with any worker count") {
  const auto pairs = GenerateSyntheticPairs(64, 8);
  DistillationConfig c;
  c.epochs = 2;
  c.batch_size = 16;
  std::vector<std::string> bytes;
  for (int workers : {1, 1, 3}) {
    c.workers = workers;
    TwinModel model = TwinModel::Init(ModelConfig::Desk(), 4);
    DistillTrain(pairs, c, model);
    const std::string path = "repro_" + std::to_string(bytes.size()) + ".ckpt";
    SaveCheckpoint(model, path);
    bytes.push_back(ReadBytes(path));
    std::filesystem::remove(path);
  }
  CHECK(bytes[0] == bytes[1]);
  CHECK(bytes[0] == bytes[2]);
}

TEST_CASE("training rejects empty data, missing fields and NaN") {
  TwinModel model = TwinModel::Init(ModelConfig::Desk(), 2);
  DistillationConfig c;
  CHECK_THROWS_AS(DistillTrain({}, c, model), std::invalid_argument);
  PairRecord unlabeled{"a", "b", Logits{0, 1}, std::nullopt, std::nullopt};
  CHECK_THROWS_AS(Finetune(std::vector<PairRecord>{unlabeled}, c, model),
                  std::invalid_argument);
  PairRecord no_teacher{"a", "b", std::nullopt, std::nullopt, 1};
  CHECK_THROWS_AS(DistillTrain(std::vector<PairRecord>{no_teacher}, c, model),
                  std::invalid_argument);
  c.temperature = 0;
  CHECK_THROWS_AS(DistillTrain(std::vector<PairRecord>{unlabeled}, c, model),
                  std::invalid_argument);

  c = DistillationConfig{};
  c.epochs = 1;
  model.params().residual.logit_bias(0, 0) =
      std::numeric_limits<double>::quiet_NaN();
  try {
    DistillTrain(std::vector<PairRecord>{unlabeled}, c, model);
    FAIL("expected abort");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("non-finite loss") != std::string::npos);
  }
}

}  // namespace
}  // namespace twinrank

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

#include "twinrank/encoder.h"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "test_util.h"
#include "twinrank/model.h"
#include "twinrank/training.h"

namespace twinrank {
namespace {

ModelConfig SmallConfig() {
  ModelConfig c = ModelConfig::Desk();
  c.hidden = 8;
  c.heads = 2;
  c.ffn = 8;
  c.vocab_buckets = 64;
  c.max_len = 6;
  c.dropout = 0.0;
  return c;
}

EncoderParamsD SmallEncoder(const ModelConfig& c, uint64_t seed) {
  Rng rng(seed);
  EncoderParamsD p = InitEncoder(c, c.vocab().table_rows(), c.max_len, rng);
  // Larger weights than the 0.02 initialization so that attention is not
  // nearly uniform and every gradient path is exercised.
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto& t : p.Tensors("")) {
    for (Eigen::Index i = 0; i < t.tensor->size(); ++i) {
      t.tensor->data()[i] += n(rng);
    }
  }
  return p;
}

MatD RandomHidden(int n, int h, uint64_t seed) {
  Rng rng(seed);
  return RandomMat(rng, n, h, 1.0);
}

TEST_CASE("EmbedInput is the sum of trigram and position embeddings") {
  const ModelConfig c = SmallConfig();
  const TrigramVocab vocab = c.vocab();
  EncoderParamsD p = SmallEncoder(c, 1);
  const TokenSequence seq = EncodeText("cat", vocab, c.max_len);

  SUBCASE("zero tables give zero output") {
    p.token_embedding.setZero();
    p.position_embedding.setZero();
    CHECK(EmbedInput(seq, p).isZero(0.0));
  }
  SUBCASE("zero position table leaves the trigram sum") {
    p.position_embedding.setZero();
    const MatD out = EmbedInput(seq, p);
    VecD expected = VecD::Zero(c.hidden);
    for (const auto& t : WordTrigrams("cat")) {
      expected += p.token_embedding.row(vocab.Bucket(t));
    }
    CHECK(out.row(0) == expected);
    CHECK(out.bottomRows(c.max_len - 1).isZero(0.0));
  }
  SUBCASE("swapping two words changes the sequence") {
    const MatD ab = EmbedInput(EncodeText("red shoes", vocab, c.max_len), p);
    const MatD ba = EmbedInput(EncodeText("shoes red", vocab, c.max_len), p);
    CHECK((ab.topRows(2) - ba.topRows(2)).norm() > 1e-6);
    // Same multiset of rows up to position terms.
    CHECK((ab.topRows(2).colwise().sum() - ba.topRows(2).colwise().sum())
              .norm() < 1e-12);
  }
  SUBCASE("position beyond the table is an error") {
    TokenSequence bad = seq;
    bad.positions[0] = c.max_len;
    CHECK_THROWS_AS(EmbedInput(bad, p), std::invalid_argument);
  }
}

TEST_CASE("TransformerLayer attention and masking") {
  const ModelConfig c = SmallConfig();
  const EncoderParamsD p = SmallEncoder(c, 2);
  const auto& layer = p.layers[0];

  SUBCASE("a single unmasked token attends only to itself") {
    const MatD x = RandomHidden(4, c.hidden, 3);
    LayerCache cache;
    TransformerLayer<double>(x, {true, false, false, false}, layer, c.heads,
                             &cache);
    for (const auto& probs : cache.probs) {
      for (int i = 0; i < 4; ++i) {
        CHECK(probs(i, 0) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(probs.row(i).tail(3).isZero(0.0));
      }
    }
  }
  SUBCASE("perturbing a masked slot leaves unmasked rows unchanged") {
    MatD x = RandomHidden(5, c.hidden, 4);
    const std::vector<bool> mask{true, true, true, false, false};
    const MatD before = TransformerLayer<double>(x, mask, layer, c.heads);
    x.row(3).setConstant(123.0);
    x.row(4) = RandomHidden(1, c.hidden, 99);
    const MatD after = TransformerLayer<double>(x, mask, layer, c.heads);
    CHECK(before.topRows(3) == after.topRows(3));
  }
  SUBCASE("non-finite input is rejected") {
    MatD x = RandomHidden(2, c.hidden, 5);
    x(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(TransformerLayer<double>(x, {true, true}, layer, c.heads),
                    std::invalid_argument);
    x(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(TransformerLayer<double>(x, {true, true}, layer, c.heads),
                    std::invalid_argument);
  }
  SUBCASE("all-masked input is rejected") {
    const MatD x = RandomHidden(2, c.hidden, 6);
    CHECK_THROWS_AS(TransformerLayer<double>(x, {false, false}, layer, c.heads),
                    std::invalid_argument);
  }
}

TEST_CASE("TransformerLayer gradients match central differences") {
  const ModelConfig c = SmallConfig();
  EncoderParamsD p = SmallEncoder(c, 7);
  auto& layer = p.layers[0];
  MatD x = RandomHidden(4, c.hidden, 8);
  const std::vector<bool> mask{true, true, true, false};
  const MatD proj = RandomHidden(4, c.hidden, 9);
  // Scalar objective sum(out .* proj) so that d_out == proj.
  auto objective = [&] {
    return (TransformerLayer<double>(x, mask, layer, c.heads).array() *
            proj.array())
        .sum();
  };
  LayerCache cache;
  TransformerLayer<double>(x, mask, layer, c.heads, &cache);
  LayerParams<double> grads = ZerosLike(p).layers[0];
  const MatD d_x = TransformerLayerBackward(cache, proj, layer, grads, c.heads);

  std::vector<TensorRef<double>> params, gparams;
  layer.Collect("", params);
  grads.Collect("", gparams);
  Rng rng(10);
  for (size_t t = 0; t < params.size(); ++t) {
    std::uniform_int_distribution<Eigen::Index> pick(
        0, params[t].tensor->size() - 1);
    for (int s = 0; s < 3; ++s) {
      const Eigen::Index i = pick(rng);
      const double numeric = testing::CentralDifference(
          objective, params[t].tensor->data()[i], 1e-5);
      INFO(params[t].name << "[" << i << "]");
      CHECK(testing::GradientError(gparams[t].tensor->data()[i], numeric) <
            1e-4);
    }
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double numeric =
        testing::CentralDifference(objective, x.data()[i], 1e-5);
    INFO("input[" << i << "]");
    CHECK(testing::GradientError(d_x.data()[i], numeric) < 1e-4);
  }
}

TEST_CASE("Pool modes") {
  const int h = 5;
  const MatD hidden = RandomHidden(4, h, 11);
  const std::vector<bool> mask{true, true, true, false};

  SUBCASE("equal scores give the plain mean") {
    const Pooled<double> p =
        Pool<double>(hidden, mask, Pooling::kWeightedAverage, MatD::Zero(1, h));
    const VecD mean = hidden.topRows(3).colwise().mean();
    CHECK((p.embedding - mean).norm() < 1e-15);
    CHECK(p.weights(3) == 0.0);
  }
  SUBCASE("weights over unmasked tokens sum to one") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
      const MatD scorer = RandomMat(rng, 1, h, 3.0);
      const Pooled<double> p =
          Pool<double>(hidden, mask, Pooling::kWeightedAverage, scorer);
      CHECK(std::abs(p.weights.sum() - 1.0) < 1e-9);
      CHECK(p.weights(3) == 0.0);
    }
  }
  SUBCASE("single unmasked token is returned in both modes") {
    const std::vector<bool> one{true, false, false, false};
    Rng rng(13);
    const MatD scorer = RandomMat(rng, 1, h, 1.0);
    CHECK(Pool<double>(hidden, one, Pooling::kWeightedAverage, scorer)
              .embedding == hidden.row(0));
    CHECK(Pool<double>(hidden, one, Pooling::kClsToken, scorer).embedding ==
          hidden.row(0));
  }
  SUBCASE("cls mode returns row zero") {
    CHECK(Pool<double>(hidden, mask, Pooling::kClsToken, MatD::Zero(1, h))
              .embedding == hidden.row(0));
  }
  SUBCASE("all-masked input is rejected") {
    const std::vector<bool> none(4, false);
    CHECK_THROWS_AS(
        Pool<double>(hidden, none, Pooling::kWeightedAverage, MatD::Zero(1, h)),
        std::invalid_argument);
    CHECK_THROWS_AS(
        Pool<double>(hidden, none, Pooling::kClsToken, MatD::Zero(1, h)),
        std::invalid_argument);
  }
}

TEST_CASE("Encode contracts on the desk preset") {
  const TwinModel model = TwinModel::Init(ModelConfig::Desk(), 21);
  const VecD a = model.EncodeQuery("buy red running shoes");
  CHECK(a.size() == 64);
  CHECK(a.allFinite());
  CHECK(model.EncodeQuery("buy red running shoes") == a);
  // Shared encoders: the keyword side is the same function.
  CHECK(model.EncodeKeyword("buy red running shoes") == a);
  CHECK(&model.keyword_encoder() == &model.query_encoder());
}

TEST_CASE("padding content never changes the sentence embedding") {
  for (Pooling pooling : {Pooling::kWeightedAverage, Pooling::kClsToken}) {
    ModelConfig c = ModelConfig::Desk();
    c.pooling = pooling;
    TwinModel model = TwinModel::Init(c, 22);
    testing::Perturb(model, 23, 0.05);
    const TokenSequence seq = model.Tokenize("cheap flights");
    TokenSequence noisy = seq;
    for (int i = seq.num_real(); i < seq.max_len(); ++i) {
      noisy.tokens[i] = {1, 2, 3, static_cast<int32_t>(i)};
    }
    CHECK(model.EncodeQuery(noisy) == model.EncodeQuery(seq));
  }
}

TEST_CASE("Encode rejects an empty or non-prefix mask") {
  const TwinModel model = TwinModel::Init(ModelConfig::Desk(), 24);
  TokenSequence seq = model.Tokenize("a b");
  TokenSequence hole = seq;
  hole.mask[0] = false;
  CHECK_THROWS_AS(model.EncodeQuery(hole), std::invalid_argument);
  TokenSequence empty = seq;
  std::fill(empty.mask.begin(), empty.mask.end(), false);
  CHECK_THROWS_AS(model.EncodeQuery(empty), std::invalid_argument);
}

TEST_CASE("single-precision encode tracks double precision") {
  TwinModel model = TwinModel::Init(ModelConfig::Desk(), 25);
  testing::Perturb(model, 26, 0.05);
  const FloatTwinModel f(model);
  const TokenSequence seq = model.Tokenize("hotel deals paris");
  const VecD d = model.EncodeQuery(seq);
  const VecD s = f.EncodeQuery(seq).cast<double>();
  CHECK((d - s).norm() / d.norm() < 1e-4);
}

TEST_CASE("dropout is active only when requested") {
  ModelConfig c = ModelConfig::Desk();
  c.dropout = 0.5;
  const TwinModel model = TwinModel::Init(c, 27);
  const TokenSequence seq = model.Tokenize("a b c");
  Rng rng(1);
  const VecD inference = model.EncodeQuery(seq);
  const VecD dropped =
      Encode<double>(seq, model.query_encoder(), c, nullptr, {&rng, 0.5});
  CHECK((inference - dropped).norm() > 0.0);
  CHECK(Encode<double>(seq, model.query_encoder(), c) == inference);
}

TEST_CASE("large preset dimensions") {
  const ModelConfig c = ModelConfig::Large();
  c.Validate();
  CHECK(c.layers == 6);
  CHECK(c.hidden == 512);
  CHECK(c.heads == 8);
  CHECK(c.head_dim() == 64);
  CHECK(c.ffn == 512);
  CHECK(ModelConfig::FromJson(c.ToJson()) == c);
}

TEST_CASE("parameter count differs by exactly one encoder when unshared") {
  ModelConfig shared = ModelConfig::Desk();
  ModelConfig split = shared;
  split.shared_encoders = false;
  TwinModel a = TwinModel::Init(shared, 1);
  TwinModel b = TwinModel::Init(split, 1);
  CHECK(b.NumParameters() - a.NumParameters() ==
        CountParameters(a.params().query_encoder.Tensors("")));
}

TEST_CASE("shared encoders move together; unshared keyword side moves only "
          "with gradient") {
  DistillationConfig dc;
  dc.weight_decay = 0.0;
  dc.learning_rate = 1e-2;
  dc.batch_size = 2;
  dc.epochs = 1;
  std::vector<PairRecord> data(2);
  data[0] = {"red shoes", "shoes", Logits{-1.0, 1.0}, {}, {}};
  data[1] = {"blue hat", "green car", Logits{-0.5, 0.5}, {}, {}};

  SUBCASE("shared") {
    ModelConfig c = ModelConfig::Desk();
    c.dropout = 0.0;
    TwinModel model = TwinModel::Init(c, 31);
    const VecD before = model.EncodeQuery("red shoes");
    DistillTrain(data, dc, model);
    CHECK(model.EncodeQuery("red shoes") != before);
    CHECK(model.EncodeQuery("red shoes") == model.EncodeKeyword("red shoes"));
  }
  SUBCASE("unshared with zero cosine scale: keyword encoder untouched") {
    ModelConfig c = ModelConfig::Desk();
    c.dropout = 0.0;
    c.shared_encoders = false;
    c.crossing = Crossing::kCosine;
    TwinModel model = TwinModel::Init(c, 32);
    model.params().cosine.scale(0, 0) = 0.0;
    const EncoderParamsD kw_before = model.params().keyword_encoder;
    const EncoderParamsD q_before = model.params().query_encoder;
    // One step on a single pair: the logit does not depend on either
    // encoder, so both have exactly zero gradient.
    DistillationConfig one = dc;
    one.batch_size = 2;
    DistillTrain(std::span(data).first(2), one, model);
    EncoderParamsD kw_after = model.params().keyword_encoder;
    EncoderParamsD q_after = model.params().query_encoder;
    auto a = kw_after.Tensors("");
    auto b = const_cast<EncoderParamsD&>(kw_before).Tensors("");
    for (size_t i = 0; i < a.size(); ++i) CHECK(*a[i].tensor == *b[i].tensor);
    auto qa = q_after.Tensors("");
    auto qb = const_cast<EncoderParamsD&>(q_before).Tensors("");
    for (size_t i = 0; i < qa.size(); ++i) CHECK(*qa[i].tensor == *qb[i].tensor);
    CHECK(model.params().cosine.bias(0, 0) != 0.0);
  }
  SUBCASE("unshared with nonzero scale: both encoders change") {
    ModelConfig c = ModelConfig::Desk();
    c.dropout = 0.0;
    c.shared_encoders = false;
    c.crossing = Crossing::kCosine;
    TwinModel model = TwinModel::Init(c, 33);
    const VecD k_before = model.EncodeKeyword("shoes");
    const VecD q_before = model.EncodeQuery("red shoes");
    DistillTrain(data, dc, model);
    CHECK(model.EncodeKeyword("shoes") != k_before);
    CHECK(model.EncodeQuery("red shoes") != q_before);
    CHECK(model.EncodeQuery("shoes") != model.EncodeKeyword("shoes"));
  }
}

}  // namespace
}  // namespace twinrank

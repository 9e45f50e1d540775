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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "doctest.h"
#include "test_util.h"
#include "twinrank/model.h"

namespace twinrank {
namespace {

std::string ReadBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void WriteBytes(const std::string& path, const std::string& bytes) {
  std::ofstream(path, std::ios::binary) << bytes;
}

std::string LoadError(const std::string& path) {
  try {
    LoadCheckpoint(path);
  } catch (const std::runtime_error& e) {
    return e.what();
  }
  return "";
}

TEST_CASE("checkpoint round trip is bit-exact for every configuration") {
  for (Crossing crossing : {Crossing::kCosine, Crossing::kResidual}) {
    for (bool shared : {true, false}) {
      for (Pooling pooling : {Pooling::kWeightedAverage, Pooling::kClsToken}) {
        ModelConfig c = ModelConfig::Desk();
        c.crossing = crossing;
        c.shared_encoders = shared;
        c.pooling = pooling;
        c.residual_blocks = 2;
        TwinModel m = TwinModel::Init(c, 21);
        testing::Perturb(m, 22, 0.1);
        SaveCheckpoint(m, "rt.ckpt");
        TwinModel back = LoadCheckpoint("rt.ckpt");
        CHECK(back.config() == c);
        auto a = m.Tensors();
        auto b = back.Tensors();
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) {
          CHECK(a[i].name == b[i].name);
          REQUIRE(a[i].tensor->rows() == b[i].tensor->rows());
          REQUIRE(a[i].tensor->cols() == b[i].tensor->cols());
          CHECK(std::memcmp(a[i].tensor->data(), b[i].tensor->data(),
                            sizeof(double) * a[i].tensor->size()) == 0);
        }
        CHECK(back.Score("red shoes", "shoe sale") ==
              m.Score("red shoes", "shoe sale"));
        SaveCheckpoint(back, "rt2.ckpt");
        CHECK(ReadBytes("rt.ckpt") == ReadBytes("rt2.ckpt"));
      }
    }
  }
  std::filesystem::remove("rt.ckpt");
  std::filesystem::remove("rt2.ckpt");
}

TEST_CASE("corrupt checkpoints are rejected with a message") {
  TwinModel m = TwinModel::Init(ModelConfig::Desk(), 1);
  SaveCheckpoint(m, "good.ckpt");
  const std::string good = ReadBytes("good.ckpt");

  CHECK(LoadError("missing.ckpt").find("missing.ckpt") != std::string::npos);

  std::string bad = good;
  bad[0] = 'X';
  WriteBytes("bad.ckpt", bad);
  CHECK(LoadError("bad.ckpt").find("bad magic") != std::string::npos);

  bad = good;
  bad[8] = 99;  // version
  WriteBytes("bad.ckpt", bad);
  CHECK(LoadError("bad.ckpt").find("version") != std::string::npos);

  WriteBytes("bad.ckpt", good.substr(0, good.size() - 5));
  CHECK(LoadError("bad.ckpt").find("end of file") != std::string::npos);

  WriteBytes("bad.ckpt", good + "x");
  CHECK(LoadError("bad.ckpt").find("trailing bytes") != std::string::npos);

  std::filesystem::remove("good.ckpt");
  std::filesystem::remove("bad.ckpt");
}

TEST_CASE("save leaves no temporary file behind") {
  TwinModel m = TwinModel::Init(ModelConfig::Desk(), 1);
  SaveCheckpoint(m, "atomic.ckpt");
  CHECK(std::filesystem::exists("atomic.ckpt"));
  CHECK_FALSE(std::filesystem::exists("atomic.ckpt.tmp"));
  std::filesystem::remove("atomic.ckpt");
}

}  // namespace
}  // namespace twinrank

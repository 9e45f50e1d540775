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

#include <stdexcept>

#include "twinrank/binary_io.h"
#include "twinrank/model.h"

namespace twinrank {
namespace {

constexpr char kMagic[9] = "TWRKCKPT";

}  // namespace

void SaveCheckpoint(TwinModel& model, const std::string& path) {
  const auto tensors = model.Tensors();
  io::AtomicWrite(path, [&](std::ostream& out) {
    out.write(kMagic, 8);
    io::PutUnsigned<uint32_t>(out, kCheckpointVersion);
    io::PutString(out, model.config().ToJson().dump());
    io::PutUnsigned<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
      io::PutString(out, t.name);
      io::PutUnsigned<uint32_t>(out, static_cast<uint32_t>(t.tensor->rows()));
      io::PutUnsigned<uint32_t>(out, static_cast<uint32_t>(t.tensor->cols()));
      const double* data = t.tensor->data();
      for (Eigen::Index i = 0; i < t.tensor->size(); ++i) {
        io::PutF64(out, data[i]);
      }
    }
  });
}

TwinModel LoadCheckpoint(const std::string& path) {
  auto in = io::OpenForRead(path);
  try {
    io::ExpectMagic(in, kMagic);
    const uint32_t version = io::GetUnsigned<uint32_t>(in);
    if (version != kCheckpointVersion) {
      throw std::runtime_error("unsupported checkpoint version " +
                               std::to_string(version));
    }
    const ModelConfig config =
        ModelConfig::FromJson(nlohmann::json::parse(io::GetString(in)));
    TwinModel model = TwinModel::Init(config, 0);
    auto tensors = model.Tensors();
    const uint32_t count = io::GetUnsigned<uint32_t>(in);
    if (count != tensors.size()) {
      throw std::runtime_error("tensor count mismatch");
    }
    for (auto& t : tensors) {
      const std::string name = io::GetString(in);
      if (name != t.name) {
        throw std::runtime_error("expected tensor " + t.name + ", found " +
                                 name);
      }
      const uint32_t rows = io::GetUnsigned<uint32_t>(in);
      const uint32_t cols = io::GetUnsigned<uint32_t>(in);
      if (rows != t.tensor->rows() || cols != t.tensor->cols()) {
        throw std::runtime_error("shape mismatch for " + name);
      }
      double* data = t.tensor->data();
      for (Eigen::Index i = 0; i < t.tensor->size(); ++i) {
        data[i] = io::GetF64(in);
      }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
      throw std::runtime_error("trailing bytes");
    }
    return model;
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint " + path + ": " + e.what());
  }
}

}  // namespace twinrank

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

#ifndef TWINRANK_BINARY_IO_H_
#define TWINRANK_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace twinrank::io {

// Little-endian primitives shared by the checkpoint and index formats.

template <typename U>
void PutUnsigned(std::ostream& out, U v) {
  char buf[sizeof(U)];
  for (size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  out.write(buf, sizeof(U));
}

template <typename U>
U GetUnsigned(std::istream& in) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw std::runtime_error("unexpected end of file");
  }
  U v = 0;
  for (size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

inline void PutF64(std::ostream& out, double d) {
  PutUnsigned<uint64_t>(out, std::bit_cast<uint64_t>(d));
}
inline double GetF64(std::istream& in) {
  return std::bit_cast<double>(GetUnsigned<uint64_t>(in));
}
inline void PutF32(std::ostream& out, float f) {
  PutUnsigned<uint32_t>(out, std::bit_cast<uint32_t>(f));
}
inline float GetF32(std::istream& in) {
  return std::bit_cast<float>(GetUnsigned<uint32_t>(in));
}

inline void PutString(std::ostream& out, const std::string& s) {
  PutUnsigned<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string GetString(std::istream& in, uint32_t max_len = 1u << 24) {
  const uint32_t n = GetUnsigned<uint32_t>(in);
  if (n > max_len) throw std::runtime_error("string length out of range");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) {
    throw std::runtime_error("unexpected end of file");
  }
  return s;
}

inline void ExpectMagic(std::istream& in, const char (&magic)[9]) {
  char buf[8];
  if (!in.read(buf, 8) || std::memcmp(buf, magic, 8) != 0) {
    throw std::runtime_error("bad magic");
  }
}

// Writes via `write` to path + ".tmp", then renames over `path`.
template <typename F>
void AtomicWrite(const std::string& path, F&& write) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    write(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::ifstream OpenForRead(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return in;
}

}  // namespace twinrank::io

#endif  // TWINRANK_BINARY_IO_H_

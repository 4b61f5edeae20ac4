// Copyright 2026 The Shardsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// QSV1 checkpoint files:
//   magic "QSV1" | version u16 = 1 | precision u8 (0 single, 1 double) | N u8 |
//   2^N amplitudes in logical order, little-endian interleaved (re, im).

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "shardsim/errors.hpp"
#include "shardsim/state.hpp"

namespace shardsim {

inline constexpr char kCheckpointMagic[4] = {'Q', 'S', 'V', '1'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::uint16_t version = kCheckpointVersion;
  Precision precision = Precision::fp64;
  int num_qubits = 0;
};

namespace detail {

template <class U>
void put_le(std::vector<char>& out, U value) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<char>((value >> (8 * b)) & 0xFF));
}

template <class U>
U get_le(const unsigned char* p) {
  U value = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) value |= static_cast<U>(p[b]) << (8 * b);
  return value;
}

template <class R>
void put_real(std::vector<char>& out, R value) {
  if constexpr (sizeof(R) == 4) {
    put_le(out, std::bit_cast<std::uint32_t>(value));
  } else {
    put_le(out, std::bit_cast<std::uint64_t>(value));
  }
}

}  // namespace detail

template <class T>
void save_checkpoint(const std::filesystem::path& path, const ShardedState<T>& state) {
  if (state.num_qubits() > 255) throw ConfigError("checkpoint: N does not fit in one byte");
  const auto dense = gather_dense(state);
  std::vector<char> bytes;
  bytes.reserve(8 + dense.size() * 2 * sizeof(T));
  bytes.insert(bytes.end(), kCheckpointMagic, kCheckpointMagic + 4);
  detail::put_le<std::uint16_t>(bytes, kCheckpointVersion);
  bytes.push_back(static_cast<char>(precision_of<T>()));
  bytes.push_back(static_cast<char>(state.num_qubits()));
  for (const auto& a : dense) {
    detail::put_real(bytes, a.real());
    detail::put_real(bytes, a.imag());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline CheckpointHeader parse_checkpoint_header(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
  CheckpointHeader h;
  h.version = detail::get_le<std::uint16_t>(bytes.data() + 4);
  if (h.version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(h.version));
  if (bytes[6] > 1) throw FormatError("checkpoint: unknown precision tag");
  h.precision = static_cast<Precision>(bytes[6]);
  h.num_qubits = bytes[7];
  if (h.num_qubits > kDenseQubitCap) throw FormatError("checkpoint: N exceeds the dense cap");
  const std::size_t real_bytes = h.precision == Precision::fp32 ? 4 : 8;
  const std::size_t expected = 8 + (std::size_t{1} << h.num_qubits) * 2 * real_bytes;
  if (bytes.size() != expected) {
    throw FormatError("checkpoint: expected " + std::to_string(expected) + " bytes, found " + std::to_string(bytes.size()));
  }
  return h;
}

inline CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  return parse_checkpoint_header(read_file_bytes(path));
}

// Loads into precision T. Single-precision files widen exactly into double;
// narrowing a double file into a single-precision state is refused.
template <class T>
ShardedState<T> load_checkpoint(const std::filesystem::path& path, Mesh& mesh, Tiling tiling = {}) {
  const auto bytes = read_file_bytes(path);
  const CheckpointHeader h = parse_checkpoint_header(bytes);
  if (h.precision == Precision::fp64 && precision_of<T>() == Precision::fp32) {
    throw FormatError("checkpoint: refusing to narrow a double-precision file to single precision");
  }
  const std::size_t count = std::size_t{1} << h.num_qubits;
  std::vector<std::complex<T>> dense(count);
  const unsigned char* p = bytes.data() + 8;
  for (std::size_t i = 0; i < count; ++i) {
    if (h.precision == Precision::fp32) {
      const float re = std::bit_cast<float>(detail::get_le<std::uint32_t>(p));
      const float im = std::bit_cast<float>(detail::get_le<std::uint32_t>(p + 4));
      dense[i] = {static_cast<T>(re), static_cast<T>(im)};
      p += 8;
    } else {
      const double re = std::bit_cast<double>(detail::get_le<std::uint64_t>(p));
      const double im = std::bit_cast<double>(detail::get_le<std::uint64_t>(p + 8));
      dense[i] = {static_cast<T>(re), static_cast<T>(im)};
      p += 16;
    }
  }
  return scatter_dense<T>(mesh, h.num_qubits, dense, tiling);
}

}  // namespace shardsim

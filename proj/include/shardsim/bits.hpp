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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "shardsim/errors.hpp"

namespace shardsim {

// Gather through a permutation of index bits: dst[i] = src[map(i)], where bit
// d of i becomes bit source_bit[d] of map(i). map is evaluated with 8-bit
// lookup tables, and runs whose low bits map to themselves are copied whole.
class BitGather {
 public:
  explicit BitGather(std::vector<int> source_bit) : source_bit_(std::move(source_bit)) {
    const int nbits = static_cast<int>(source_bit_.size());
    std::vector<bool> seen(nbits, false);
    for (int s : source_bit_) {
      if (s < 0 || s >= nbits || seen[s]) throw ContractError("BitGather: not a bit permutation");
      seen[s] = true;
    }
    while (identity_low_ < nbits && source_bit_[identity_low_] == identity_low_) ++identity_low_;
    for (int lo = identity_low_; lo < nbits; lo += kChunk) {
      const int width = std::min(kChunk, nbits - lo);
      std::vector<std::uint64_t> table(std::size_t{1} << width, 0);
      for (std::size_t v = 0; v < table.size(); ++v) {
        std::uint64_t m = 0;
        for (int b = 0; b < width; ++b) {
          if ((v >> b) & 1U) m |= std::uint64_t{1} << source_bit_[lo + b];
        }
        table[v] = m;
      }
      tables_.push_back(Table{lo, width, std::move(table)});
    }
  }

  static BitGather identity(int nbits) {
    std::vector<int> bits(nbits);
    for (int b = 0; b < nbits; ++b) bits[b] = b;
    return BitGather(std::move(bits));
  }

  int bits() const noexcept { return static_cast<int>(source_bit_.size()); }
  bool is_identity() const noexcept { return identity_low_ == bits(); }
  const std::vector<int>& source_bits() const noexcept { return source_bit_; }

  std::uint64_t map(std::uint64_t i) const noexcept {
    std::uint64_t m = i & low_mask();
    for (const Table& t : tables_) m |= t.values[(i >> t.shift) & ((std::uint64_t{1} << t.width) - 1)];
    return m;
  }

  BitGather inverse() const {
    std::vector<int> inv(source_bit_.size());
    for (std::size_t d = 0; d < source_bit_.size(); ++d) inv[source_bit_[d]] = static_cast<int>(d);
    return BitGather(std::move(inv));
  }

  // dst[i] = src[map(i)] for all i < 2^bits.
  template <class T>
  void gather(const T* src, T* dst) const {
    apply(src, dst, [](T& d, const T& s) { d = s; });
  }

  // dst[i] += src[map(i)].
  template <class T>
  void gather_add(const T* src, T* dst) const {
    apply(src, dst, [](T& d, const T& s) { d += s; });
  }

 private:
  static constexpr int kChunk = 8;

  struct Table {
    int shift;
    int width;
    std::vector<std::uint64_t> values;
  };

  std::uint64_t low_mask() const noexcept { return (std::uint64_t{1} << identity_low_) - 1; }

  template <class T, class Op>
  void apply(const T* src, T* dst, Op op) const {
    const std::uint64_t n = std::uint64_t{1} << bits();
    const std::uint64_t run = std::uint64_t{1} << identity_low_;
    if (run >= 16 || tables_.empty()) {
      for (std::uint64_t hi = 0; hi < n; hi += run) {
        const T* s = src + map(hi);
        T* d = dst + hi;
        for (std::uint64_t j = 0; j < run; ++j) op(d[j], s[j]);
      }
      return;
    }
    // Innermost table indexed directly; the rest contribute a per-block base.
    const Table& inner = tables_.front();
    const std::uint64_t block = std::uint64_t{1} << (inner.shift + inner.width);
    for (std::uint64_t hi = 0; hi < n; hi += block) {
      std::uint64_t base = 0;
      for (std::size_t t = 1; t < tables_.size(); ++t) {
        const Table& tb = tables_[t];
        base |= tb.values[(hi >> tb.shift) & ((std::uint64_t{1} << tb.width) - 1)];
      }
      for (std::uint64_t v = 0; v < (std::uint64_t{1} << inner.width); ++v) {
        const std::uint64_t sb = base | inner.values[v];
        const std::uint64_t db = hi | (v << inner.shift);
        for (std::uint64_t j = 0; j < run; ++j) op(dst[db + j], src[sb + j]);
      }
    }
  }

  std::vector<int> source_bit_;
  int identity_low_ = 0;
  std::vector<Table> tables_;
};

}  // namespace shardsim

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

// Local Hamiltonians: k-qubit terms, the XXZ and random k-local builders,
// and the blocking compiler that merges terms into B-qubit dense blocks.
// Matrices are row-major with basis states ordered big-endian in support
// order (support[0] is the most significant bit).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "shardsim/errors.hpp"
#include "shardsim/random.hpp"

namespace shardsim {

using Complex = std::complex<double>;

class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {}
  DenseMatrix(std::size_t dim, std::initializer_list<Complex> row_major) : dim_(dim), data_(row_major) {
    if (data_.size() != dim * dim) throw ContractError("DenseMatrix: wrong number of entries");
  }

  static DenseMatrix identity(std::size_t dim) {
    DenseMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t dim() const noexcept { return dim_; }
  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }
  std::span<Complex> data() noexcept { return data_; }
  std::span<const Complex> data() const noexcept { return data_; }

  DenseMatrix adjoint() const {
    DenseMatrix out(dim_);
    for (std::size_t r = 0; r < dim_; ++r) {
      for (std::size_t c = 0; c < dim_; ++c) out(c, r) = std::conj((*this)(r, c));
    }
    return out;
  }

  double frobenius_norm() const {
    double acc = 0.0;
    for (const auto& v : data_) acc += std::norm(v);
    return std::sqrt(acc);
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double max_abs_diff(const DenseMatrix& other) const {
    if (other.dim_ != dim_) throw ContractError("max_abs_diff: dimension mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::abs(data_[i] - other.data_[i]));
    return m;
  }

  // Hermitian to tol * ||A||_F (entrywise).
  bool is_hermitian(double rel_tol = 1e-12) const {
    const double bound = rel_tol * std::max(frobenius_norm(), 1e-300);
    for (std::size_t r = 0; r < dim_; ++r) {
      for (std::size_t c = r; c < dim_; ++c) {
        if (std::abs((*this)(r, c) - std::conj((*this)(c, r))) > bound) return false;
      }
    }
    return true;
  }

  DenseMatrix& operator+=(const DenseMatrix& other) {
    if (other.dim_ != dim_) throw ContractError("DenseMatrix +=: dimension mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  DenseMatrix& operator*=(Complex s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
  friend DenseMatrix operator*(Complex s, DenseMatrix a) { return a *= s; }

  friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.dim_ != b.dim_) throw ContractError("DenseMatrix *: dimension mismatch");
    DenseMatrix out(a.dim_);
    for (std::size_t i = 0; i < a.dim_; ++i) {
      for (std::size_t k = 0; k < a.dim_; ++k) {
        const Complex aik = a(i, k);
        if (aik == Complex{}) continue;
        for (std::size_t j = 0; j < a.dim_; ++j) out(i, j) += aik * b(k, j);
      }
    }
    return out;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<Complex> data_;
};

inline DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  const std::size_t n = a.dim() * b.dim();
  DenseMatrix out(n);
  for (std::size_t i = 0; i < a.dim(); ++i) {
    for (std::size_t j = 0; j < a.dim(); ++j) {
      for (std::size_t k = 0; k < b.dim(); ++k) {
        for (std::size_t l = 0; l < b.dim(); ++l) out(i * b.dim() + k, j * b.dim() + l) = a(i, j) * b(k, l);
      }
    }
  }
  return out;
}

namespace pauli {
inline DenseMatrix x() { return DenseMatrix(2, {0.0, 1.0, 1.0, 0.0}); }
inline DenseMatrix y() { return DenseMatrix(2, {0.0, Complex(0, -1), Complex(0, 1), 0.0}); }
inline DenseMatrix z() { return DenseMatrix(2, {1.0, 0.0, 0.0, -1.0}); }
}  // namespace pauli

struct LocalTerm {
  std::vector<int> support;  // sorted, distinct
  DenseMatrix matrix;        // 2^k x 2^k

  int locality() const noexcept { return static_cast<int>(support.size()); }
};

struct BlockedTerm {
  std::vector<int> support;          // exactly block_size qubits, sorted
  DenseMatrix matrix;                // 2^B x 2^B
  std::vector<std::size_t> members;  // indices into Hamiltonian::provenance
};

struct Hamiltonian {
  int num_qubits = 0;
  int block_size = 7;
  std::vector<BlockedTerm> terms;
  std::vector<LocalTerm> provenance;

  // Sum of blocked-term Frobenius norms; an upper bound on ||H||_2.
  double norm_bound() const {
    double s = 0.0;
    for (const auto& t : terms) s += t.matrix.frobenius_norm();
    return s;
  }
};

inline bool is_sorted_distinct(std::span<const int> support) {
  for (std::size_t i = 1; i < support.size(); ++i) {
    if (support[i] <= support[i - 1]) return false;
  }
  return true;
}

inline bool is_contiguous(std::span<const int> support) {
  for (std::size_t i = 1; i < support.size(); ++i) {
    if (support[i] != support[i - 1] + 1) return false;
  }
  return true;
}

inline void validate_term(const LocalTerm& term, int num_qubits) {
  const auto& s = term.support;
  if (s.empty()) throw ContractError("term with empty support");
  if (!is_sorted_distinct(s)) throw ContractError("term support must be sorted and distinct");
  if (s.front() < 0 || s.back() >= num_qubits) {
    throw ContractError("term support outside [0, " + std::to_string(num_qubits) + ")");
  }
  if (term.matrix.dim() != (std::size_t{1} << s.size())) throw ContractError("term matrix size != 2^k");
  if (!term.matrix.is_hermitian(1e-12)) throw ContractError("term matrix is not Hermitian");
}

// out += (term on `support`) embedded on the sorted qubit list `qubits`.
inline void embed_add(DenseMatrix& out, std::span<const int> support, const DenseMatrix& m, std::span<const int> qubits) {
  const int n = static_cast<int>(qubits.size());
  const int k = static_cast<int>(support.size());
  if (out.dim() != (std::size_t{1} << n)) throw ContractError("embed: output has the wrong size");
  std::vector<int> bit(k);  // bit of the big index carrying support[j]
  for (int j = 0; j < k; ++j) {
    const auto it = std::lower_bound(qubits.begin(), qubits.end(), support[j]);
    if (it == qubits.end() || *it != support[j]) throw ContractError("embed: support is not a subset of the qubit list");
    bit[j] = n - 1 - static_cast<int>(it - qubits.begin());
  }
  std::uint64_t support_mask = 0;
  for (int j = 0; j < k; ++j) support_mask |= std::uint64_t{1} << bit[j];
  std::vector<std::uint64_t> deposit(std::size_t{1} << k, 0);
  for (std::uint64_t b = 0; b < deposit.size(); ++b) {
    for (int j = 0; j < k; ++j) {
      if ((b >> (k - 1 - j)) & 1U) deposit[b] |= std::uint64_t{1} << bit[j];
    }
  }
  const std::uint64_t dim = std::uint64_t{1} << n;
  for (std::uint64_t i = 0; i < dim; ++i) {
    std::uint64_t sub = 0;
    for (int j = 0; j < k; ++j) sub |= ((i >> bit[j]) & 1U) << (k - 1 - j);
    const std::uint64_t rest = i & ~support_mask;
    for (std::uint64_t b = 0; b < deposit.size(); ++b) {
      const Complex v = m(sub, b);
      if (v != Complex{}) out(i, rest | deposit[b]) += v;
    }
  }
}

inline DenseMatrix term_to_dense_on(std::span<const int> support, const DenseMatrix& m, std::span<const int> qubits) {
  DenseMatrix out(std::size_t{1} << qubits.size());
  embed_add(out, support, m, qubits);
  return out;
}

template <class Term>
DenseMatrix term_to_dense_on(const Term& term, std::span<const int> qubits) {
  return term_to_dense_on(term.support, term.matrix, qubits);
}

inline std::vector<LocalTerm> build_xxz(int num_qubits, double coupling, double anisotropy, bool periodic) {
  if (num_qubits < 3) throw ConfigError("XXZ chain needs N >= 3");
  DenseMatrix bond = kron(pauli::x(), pauli::x()) + kron(pauli::y(), pauli::y()) +
                     Complex(anisotropy) * kron(pauli::z(), pauli::z());
  bond *= coupling;
  std::vector<LocalTerm> terms;
  for (int i = 0; i + 1 < num_qubits; ++i) terms.push_back({{i, i + 1}, bond});
  // The bond operator is symmetric under exchange, so the wrap bond (N-1, 0)
  // uses the same matrix on the sorted support {0, N-1}.
  if (periodic) terms.push_back({{0, num_qubits - 1}, bond});
  return terms;
}

// Per-term Frobenius-norm target of the random k-local ensemble.
inline constexpr double kRandomTermNorm = 2.449489742783178;  // sqrt(6)

// Random Hermitian 2^k x 2^k matrix: G with i.i.d. real and imaginary parts of
// standard deviation sigma, symmetrized as (G + G^dagger)/sqrt(2). sigma is
// chosen so that E||h||_F^2 = kRandomTermNorm^2.
inline DenseMatrix random_hermitian(int k, std::uint64_t seed, std::uint64_t stream) {
  const std::size_t dim = std::size_t{1} << k;
  const double sigma = kRandomTermNorm / std::sqrt(2.0 * static_cast<double>(dim * dim));
  const CounterRng rng(seed);
  DenseMatrix g(dim);
  for (std::size_t i = 0; i < dim * dim; ++i) g.data()[i] = sigma * rng.normal_pair(stream, i);
  DenseMatrix h = g + g.adjoint();
  h *= 1.0 / std::sqrt(2.0);
  return h;
}

// N periodic terms acting on qubits i..i+k-1 (mod N), one random Hermitian
// matrix each. The matrix is indexed in sorted-support order.
inline std::vector<LocalTerm> build_random_local(int num_qubits, int k, std::uint64_t seed) {
  if (k < 1 || num_qubits < k) throw ConfigError("random local Hamiltonian needs 1 <= k <= N");
  std::vector<LocalTerm> terms;
  terms.reserve(num_qubits);
  for (int i = 0; i < num_qubits; ++i) {
    std::vector<int> support(k);
    for (int j = 0; j < k; ++j) support[j] = (i + j) % num_qubits;
    std::sort(support.begin(), support.end());
    terms.push_back({std::move(support), random_hermitian(k, seed, static_cast<std::uint64_t>(i))});
  }
  return terms;
}

namespace detail {

// Pads a support to `size` qubits by repeatedly adding the qubit closest to
// the current set; ties go to the lower index.
inline std::vector<int> pad_support(std::vector<int> support, int size, int num_qubits) {
  while (static_cast<int>(support.size()) < size) {
    int best = -1;
    int best_distance = num_qubits + 1;
    for (int q = 0; q < num_qubits; ++q) {
      if (std::binary_search(support.begin(), support.end(), q)) continue;
      int d = num_qubits + 1;
      for (int s : support) d = std::min(d, std::abs(s - q));
      if (d < best_distance) {
        best_distance = d;
        best = q;
      }
    }
    support.insert(std::lower_bound(support.begin(), support.end(), best), best);
  }
  return support;
}

inline std::vector<int> merge_supports(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace detail

// Greedy in-order blocking. Contiguous terms are merged while the union of
// supports fits in `block_size` qubits; a non-contiguous term (periodic wrap
// or long-range) always forms its own block. Blocks narrower than
// block_size are padded with identity on nearby qubits.
inline Hamiltonian block_terms(std::vector<LocalTerm> terms, int num_qubits, int block_size = 7) {
  if (block_size < 1 || block_size > num_qubits) {
    throw ConfigError("block size must lie in [1, N]; got B=" + std::to_string(block_size));
  }
  for (const auto& t : terms) {
    validate_term(t, num_qubits);
    if (t.locality() > block_size) {
      throw UnsupportedTermError("term on " + std::to_string(t.locality()) + " qubits exceeds block size " +
                                 std::to_string(block_size));
    }
  }
  Hamiltonian h;
  h.num_qubits = num_qubits;
  h.block_size = block_size;

  std::vector<int> current;
  std::vector<std::size_t> members;
  auto close = [&] {
    if (members.empty()) return;
    BlockedTerm block;
    block.support = detail::pad_support(current, block_size, num_qubits);
    block.matrix = DenseMatrix(std::size_t{1} << block_size);
    for (std::size_t m : members) embed_add(block.matrix, terms[m].support, terms[m].matrix, block.support);
    block.members = members;
    h.terms.push_back(std::move(block));
    current.clear();
    members.clear();
  };

  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& s = terms[i].support;
    if (!is_contiguous(s)) {
      close();
      current = s;
      members = {i};
      close();
      continue;
    }
    auto merged = detail::merge_supports(current, s);
    if (static_cast<int>(merged.size()) > block_size) {
      close();
      merged = s;
    }
    current = std::move(merged);
    members.push_back(i);
  }
  close();
  h.provenance = std::move(terms);
  return h;
}

inline constexpr int kDenseHamiltonianCap = 14;

inline DenseMatrix local_terms_to_dense(std::span<const LocalTerm> terms, int num_qubits,
                                        int max_qubits = kDenseHamiltonianCap) {
  if (num_qubits > max_qubits) {
    throw RefusalError("dense Hamiltonian: N=" + std::to_string(num_qubits) + " exceeds the cap of " +
                       std::to_string(max_qubits));
  }
  std::vector<int> all(num_qubits);
  std::iota(all.begin(), all.end(), 0);
  DenseMatrix out(std::size_t{1} << num_qubits);
  for (const auto& t : terms) embed_add(out, t.support, t.matrix, all);
  return out;
}

inline DenseMatrix hamiltonian_to_dense(const Hamiltonian& h, int max_qubits = kDenseHamiltonianCap) {
  if (h.num_qubits > max_qubits) {
    throw RefusalError("dense Hamiltonian: N=" + std::to_string(h.num_qubits) + " exceeds the cap of " +
                       std::to_string(max_qubits));
  }
  std::vector<int> all(h.num_qubits);
  std::iota(all.begin(), all.end(), 0);
  DenseMatrix out(std::size_t{1} << h.num_qubits);
  for (const auto& t : h.terms) embed_add(out, t.support, t.matrix, all);
  return out;
}

}  // namespace shardsim

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

// Dense reference implementations used as test oracles. They are written
// independently of the library's embedding and blocking code: the
// Hamiltonian is assembled element by element from the definition, and all
// linear algebra goes through Eigen.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "shardsim/hamiltonian.hpp"
#include "shardsim/state.hpp"

namespace shardsim::testing {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// <i|H|j> = sum over terms of m(sub(i), sub(j)) when i and j agree off the
// term's support. Qubit q is bit (N-1-q) of the basis index.
inline CMatrix naive_dense(int num_qubits, std::span<const LocalTerm> terms) {
  const std::uint64_t dim = std::uint64_t{1} << num_qubits;
  CMatrix h = CMatrix::Zero(dim, dim);
  for (const auto& t : terms) {
    const int k = t.locality();
    std::uint64_t mask = 0;
    for (int q : t.support) mask |= std::uint64_t{1} << (num_qubits - 1 - q);
    auto sub = [&](std::uint64_t i) {
      std::uint64_t s = 0;
      for (int j = 0; j < k; ++j) s = (s << 1) | ((i >> (num_qubits - 1 - t.support[j])) & 1U);
      return s;
    };
    for (std::uint64_t i = 0; i < dim; ++i) {
      for (std::uint64_t j = 0; j < dim; ++j) {
        if ((i & ~mask) != (j & ~mask)) continue;
        h(i, j) += t.matrix(sub(i), sub(j));
      }
    }
  }
  return h;
}

inline CMatrix to_eigen(const DenseMatrix& m) {
  CMatrix out(m.dim(), m.dim());
  for (std::size_t r = 0; r < m.dim(); ++r) {
    for (std::size_t c = 0; c < m.dim(); ++c) out(r, c) = m(r, c);
  }
  return out;
}

template <class T>
CVector to_eigen(const std::vector<std::complex<T>>& v) {
  CVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out(i) = std::complex<double>(v[i]);
  return out;
}

template <class T>
CVector gather(const ShardedState<T>& s) {
  return to_eigen(gather_dense(s));
}

inline std::vector<std::complex<double>> to_std(const CVector& v) {
  return {v.data(), v.data() + v.size()};
}

// exp(-i t H) v via the eigendecomposition of the Hermitian H.
inline CVector expm_apply(const CMatrix& h, double t, const CVector& v) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const CVector phases = (es.eigenvalues().cast<std::complex<double>>() * std::complex<double>(0.0, -t)).array().exp();
  return es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * v));
}

// rho_A = Tr_{not A} |v><v| with A's qubits (sorted) as the row index,
// subsystem[0] most significant.
inline CMatrix partial_trace(const CVector& v, int num_qubits, std::span<const int> subsystem) {
  const int k = static_cast<int>(subsystem.size());
  const std::uint64_t dim = std::uint64_t{1} << num_qubits;
  CMatrix rho = CMatrix::Zero(std::int64_t{1} << k, std::int64_t{1} << k);
  std::uint64_t mask = 0;
  for (int q : subsystem) mask |= std::uint64_t{1} << (num_qubits - 1 - q);
  auto a_index = [&](std::uint64_t i) {
    std::uint64_t a = 0;
    for (int q : subsystem) a = (a << 1) | ((i >> (num_qubits - 1 - q)) & 1U);
    return a;
  };
  for (std::uint64_t i = 0; i < dim; ++i) {
    for (std::uint64_t j = 0; j < dim; ++j) {
      if ((i & ~mask) != (j & ~mask)) continue;
      rho(a_index(i), a_index(j)) += v(i) * std::conj(v(j));
    }
  }
  return rho;
}

}  // namespace shardsim::testing

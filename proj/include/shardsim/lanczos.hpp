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

// Lanczos tridiagonalization in three variants: with the full Krylov basis
// stored, with only three consecutive vectors (alpha/beta only), and the
// second pass that replays the recurrence to accumulate a Ritz vector.
// All three run the same arithmetic in the same order, so their alpha/beta
// streams agree bit for bit.
//
// An operator is any callable op(in, out) that writes A*in into out; `in`
// may be mutated during the call but must be restored on return.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "shardsim/apply.hpp"
#include "shardsim/errors.hpp"
#include "shardsim/hamiltonian.hpp"
#include "shardsim/state.hpp"
#include "shardsim/tridiag.hpp"

namespace shardsim {

struct TridiagResult {
  std::vector<double> alphas;  // alpha_0 .. alpha_j
  std::vector<double> betas;   // beta_0 .. beta_{j+1}; beta_0 is the norm of the seed
  bool terminated_early = false;
  double max_alpha_imag = 0.0;  // largest |Im <A x_n, x_n>| discarded

  std::size_t dimension() const noexcept { return alphas.size(); }
  std::vector<double> off_diagonal() const {
    if (alphas.empty()) return {};
    return {betas.begin() + 1, betas.begin() + static_cast<std::ptrdiff_t>(alphas.size())};
  }
};

inline TridiagEigen tridiag_eigen(const TridiagResult& t) {
  if (t.betas.size() != t.alphas.size() + 1) throw ContractError("tridiag_eigen: inconsistent alpha/beta lengths");
  return tridiagonal_eigen(t.alphas, t.off_diagonal());
}

namespace detail {

inline void check_lanczos_args(std::size_t krylov_dim, double delta) {
  if (krylov_dim < 1) throw ContractError("lanczos: Krylov dimension must be at least 1");
  if (!(delta > 0.0)) throw ContractError("lanczos: breakdown threshold must be positive");
}

template <class T>
ShardedState<T> zeros_like(const ShardedState<T>& x) {
  ShardedState<T> z(x.mesh(), x.num_qubits(), x.tiling());
  z.assign_layout(x.layout());
  return z;
}

// One step of the recurrence on normalized x: next = A x - alpha x - beta prev.
template <class T, class Op>
double lanczos_step(Op& op, ShardedState<T>& x, const ShardedState<T>& prev, double beta, ShardedState<T>& next,
                    TridiagResult& t) {
  op(x, next);
  const std::complex<double> a = inner_product(next, x);
  t.max_alpha_imag = std::max(t.max_alpha_imag, std::abs(a.imag()));
  const double alpha = a.real();
  axpy(-alpha, x, next);
  axpy(-beta, prev, next);
  return alpha;
}

}  // namespace detail

// Full-storage Lanczos. Returns T and the basis Q = [x_0 .. x_j].
template <class T, class Op>
std::pair<TridiagResult, std::vector<ShardedState<T>>> lanczos_full(Op&& op, const ShardedState<T>& x0,
                                                                    std::size_t krylov_dim, double delta) {
  detail::check_lanczos_args(krylov_dim, delta);
  TridiagResult t;
  std::vector<ShardedState<T>> basis;
  basis.reserve(krylov_dim);
  const ShardedState<T> zero = detail::zeros_like(x0);
  ShardedState<T> x = x0;
  for (std::size_t n = 0; n < krylov_dim; ++n) {
    const double beta = norm(x);
    if (n == 0 && beta == 0.0) throw ContractError("lanczos: zero seed vector");
    t.betas.push_back(beta);
    if (beta < delta) {  // invariant subspace found
      t.terminated_early = true;
      return {std::move(t), std::move(basis)};
    }
    scale(x, 1.0 / beta);
    basis.push_back(std::move(x));
    x = detail::zeros_like(x0);
    const ShardedState<T>& prev = n == 0 ? zero : basis[n - 1];
    t.alphas.push_back(detail::lanczos_step(op, basis[n], prev, beta, x, t));
  }
  t.betas.push_back(norm(x));
  return {std::move(t), std::move(basis)};
}

// Tridiagonal-only Lanczos holding three Krylov vectors.
template <class T, class Op>
TridiagResult lanczos_tridiag(Op&& op, const ShardedState<T>& x0, std::size_t krylov_dim, double delta) {
  detail::check_lanczos_args(krylov_dim, delta);
  TridiagResult t;
  ShardedState<T> prev = detail::zeros_like(x0);
  ShardedState<T> x = x0;
  ShardedState<T> next = detail::zeros_like(x0);
  for (std::size_t n = 0; n < krylov_dim; ++n) {
    const double beta = norm(x);
    if (n == 0 && beta == 0.0) throw ContractError("lanczos: zero seed vector");
    t.betas.push_back(beta);
    if (beta < delta) {
      t.terminated_early = true;
      return t;
    }
    scale(x, 1.0 / beta);
    t.alphas.push_back(detail::lanczos_step(op, x, prev, beta, next, t));
    std::swap(prev, x);
    std::swap(x, next);
  }
  t.betas.push_back(norm(x));
  return t;
}

// Second pass: u = sum_n v_n x_n, replaying the recurrence from the same
// seed with the stored alphas and betas. Holds four Krylov-sized vectors.
template <class T, class Op>
ShardedState<T> lanczos_ritz_vector(Op&& op, const ShardedState<T>& x0, const TridiagResult& t,
                                    std::span<const double> coeffs) {
  if (coeffs.empty() || coeffs.size() > t.alphas.size() || t.betas.size() < coeffs.size()) {
    throw ContractError("lanczos_ritz_vector: coefficient count does not match the tridiagonal matrix");
  }
  ShardedState<T> u = detail::zeros_like(x0);
  ShardedState<T> prev = detail::zeros_like(x0);
  ShardedState<T> x = x0;
  ShardedState<T> next = detail::zeros_like(x0);
  for (std::size_t n = 0; n < coeffs.size(); ++n) {
    scale(x, 1.0 / t.betas[n]);
    axpy(coeffs[n], x, u);
    if (n + 1 == coeffs.size()) break;  // the last product would not contribute
    op(x, next);
    axpy(-t.alphas[n], x, next);
    axpy(-t.betas[n], prev, next);
    std::swap(prev, x);
    std::swap(x, next);
  }
  const double nu = norm(u);
  if (nu == 0.0) throw NumericalError("lanczos_ritz_vector: Ritz vector vanished");
  scale(u, 1.0 / nu);
  return u;
}

template <class T>
struct RitzPair {
  double value = 0.0;
  std::vector<double> coeffs;
  ShardedState<T> vector;
  double residual = 0.0;
  TridiagResult tridiag;
  double shift = 0.0;
};

inline constexpr std::size_t kDefaultKrylovDim = 200;
inline constexpr double kDefaultBreakdown = 1e-12;

// Lowest eigenpair of H by two-pass Lanczos on H - s, s = sum of blocked-term
// Frobenius norms (so the ground state is the dominant eigenvalue of H - s).
template <class T>
RitzPair<T> ground_state(Mesh& mesh, const Hamiltonian& h, std::uint64_t seed,
                         std::size_t krylov_dim = kDefaultKrylovDim, double delta = kDefaultBreakdown,
                         Tiling tiling = {}) {
  const double shift = h.norm_bound();
  Applier<T> applier(mesh, h, tiling);
  auto op = [&](ShardedState<T>& in, ShardedState<T>& out) {
    applier.apply(in, out);
    axpy(-shift, in, out);
  };
  const ShardedState<T> x0 = init_random_state<T>(mesh, h.num_qubits, seed, tiling);
  TridiagResult t = lanczos_tridiag(op, x0, krylov_dim, delta);
  if (t.alphas.empty()) throw NumericalError("ground_state: seed vector below the breakdown threshold");
  TridiagEigen eig = tridiag_eigen(t);
  std::vector<double> v = std::move(eig.vectors.front());
  ShardedState<T> u = lanczos_ritz_vector(op, x0, t, v);
  const double residual = t.betas[t.alphas.size()] * std::abs(v.back());
  return RitzPair<T>{eig.values.front() + shift, std::move(v), std::move(u), residual, std::move(t), shift};
}

}  // namespace shardsim

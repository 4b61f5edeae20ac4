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

// Measurements on sharded states: energies and other Hermitian expectation
// values, connected two-point correlators, reduced density matrices of
// small subsystems and their second Renyi entropy.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <iostream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "shardsim/apply.hpp"
#include "shardsim/errors.hpp"
#include "shardsim/hamiltonian.hpp"
#include "shardsim/state.hpp"

namespace shardsim {

inline constexpr double kNormalizationTolerance = 1e-6;

// Re<psi|H psi> / <psi|psi>. A state that is not normalized to 1e-6 draws a
// warning on `warnings` (if given) and is divided by its squared norm.
template <class T>
double expectation(ShardedState<T>& psi, Applier<T>& applier, std::ostream* warnings = &std::clog) {
  ShardedState<T> hpsi(psi.mesh(), psi.num_qubits(), psi.tiling());
  applier.apply(psi, hpsi);
  const std::complex<double> num = inner_product(psi, hpsi);
  const double den = inner_product(psi, psi).real();
  if (den == 0.0) throw ContractError("expectation: zero state");
  if (std::abs(den - 1.0) > kNormalizationTolerance && warnings != nullptr) {
    *warnings << "warning: expectation of a state with squared norm " << den << "\n";
  }
  if (std::abs(num.imag()) > 1e-8 * std::max(1.0, std::abs(num.real()))) {
    throw NumericalError("expectation: imaginary part " + std::to_string(num.imag()) + " exceeds tolerance");
  }
  return num.real() / den;
}

template <class T>
double expectation(ShardedState<T>& psi, const Hamiltonian& h, std::ostream* warnings = &std::clog) {
  Applier<T> applier(psi.mesh(), h, plan_schedule(h, psi.layout()), psi.tiling());
  return expectation(psi, applier, warnings);
}

// Single-term observable padded to the state's lane width.
template <class T>
double term_expectation(ShardedState<T>& psi, LocalTerm term, std::ostream* warnings = &std::clog) {
  const Hamiltonian h = block_terms({std::move(term)}, psi.num_qubits(), psi.tiling().lane_bits);
  return expectation(psi, h, warnings);
}

// <A_i B_j> - <A_i><B_j> for 1-qubit Hermitian A, B and i != j.
template <class T>
double connected_correlator(ShardedState<T>& psi, const DenseMatrix& op_a, int site_i, const DenseMatrix& op_b,
                            int site_j) {
  if (site_i == site_j) throw ContractError("connected_correlator: sites must differ");
  if (op_a.dim() != 2 || op_b.dim() != 2) throw ContractError("connected_correlator: operators must be 2x2");
  const double a = term_expectation(psi, LocalTerm{{site_i}, op_a});
  const double b = term_expectation(psi, LocalTerm{{site_j}, op_b});
  LocalTerm pair = site_i < site_j ? LocalTerm{{site_i, site_j}, kron(op_a, op_b)}
                                   : LocalTerm{{site_j, site_i}, kron(op_b, op_a)};
  const double ab = term_expectation(psi, std::move(pair));
  return ab - a * b;
}

struct ReducedDensityMatrix {
  std::vector<int> subsystem;  // sorted; subsystem[0] is the most significant bit of the row index
  DenseMatrix matrix;

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < matrix.dim(); ++i) t += matrix(i, i).real();
    return t;
  }
};

inline constexpr int kRdmQubitCap = 14;

// rho_A = Tr_{not A} |psi><psi|. Global qubits of A are first swapped into
// a copy of the state; each shard then contributes M_s M_s^dagger with
// M_s = amplitudes arranged as (A index) x (rest), summed across shards.
template <class T>
ReducedDensityMatrix reduced_density_matrix(const ShardedState<T>& psi, std::span<const int> subsystem,
                                            int max_qubits = kRdmQubitCap) {
  const int n = psi.num_qubits();
  const int k = static_cast<int>(subsystem.size());
  if (k == 0) throw ContractError("reduced_density_matrix: empty subsystem");
  if (!is_sorted_distinct(subsystem) || subsystem.front() < 0 || subsystem.back() >= n) {
    throw ContractError("reduced_density_matrix: subsystem must be sorted, distinct and in range");
  }
  if (k > max_qubits) {
    throw RefusalError("reduced_density_matrix: |A|=" + std::to_string(k) + " exceeds the cap of " +
                       std::to_string(max_qubits));
  }
  if (k > psi.num_local()) {
    throw RefusalError("reduced_density_matrix: |A| exceeds the number of local qubits");
  }

  std::optional<ShardedState<T>> moved;
  const ShardedState<T>* src = &psi;
  const QubitLayout& layout = psi.layout();
  std::vector<std::pair<int, int>> pairs;
  {
    std::vector<int> partners;
    for (int p = layout.num_global(); p < n; ++p) {
      if (!std::binary_search(subsystem.begin(), subsystem.end(), layout.qubit_at(p))) partners.push_back(p);
    }
    std::size_t next = 0;
    for (int p = 0; p < layout.num_global(); ++p) {
      if (std::binary_search(subsystem.begin(), subsystem.end(), layout.qubit_at(p))) {
        pairs.emplace_back(p, partners.at(next++));
      }
    }
  }
  if (!pairs.empty()) {
    moved.emplace(psi);
    swap_global_local(*moved, std::span<const std::pair<int, int>>(pairs));
    src = &*moved;
  }

  // A first (most significant local bits), the rest after in current order.
  std::vector<int> order(subsystem.begin(), subsystem.end());
  for (int p = src->num_global(); p < n; ++p) {
    const int q = src->layout().qubit_at(p);
    if (!std::binary_search(subsystem.begin(), subsystem.end(), q)) order.push_back(q);
  }
  const BitGather gather = local_relayout(src->layout(), src->layout().with_local_order(order));
  const std::size_t rows = std::size_t{1} << k;
  const std::size_t cols = src->shard_size() >> k;
  Mesh& mesh = psi.mesh();
  std::vector<std::vector<std::complex<double>>> partial(psi.num_shards());
  mesh.for_each_shard([&](std::size_t s) {
    std::vector<std::complex<T>> m(src->shard_size());
    gather.gather(src->shard(s).data(), m.data());
    auto& out = partial[s];
    out.assign(rows * rows, {});
    for (std::size_t a = 0; a < rows; ++a) {
      const std::complex<T>* ra = m.data() + a * cols;
      for (std::size_t b = a; b < rows; ++b) {
        const std::complex<T>* rb = m.data() + b * cols;
        double re = 0.0, im = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          const double xr = ra[c].real(), xi = ra[c].imag();
          const double yr = rb[c].real(), yi = rb[c].imag();
          re += xr * yr + xi * yi;  // x * conj(y)
          im += xi * yr - xr * yi;
        }
        out[a * rows + b] = {re, im};
        out[b * rows + a] = {re, -im};
      }
    }
  });
  const std::vector<std::complex<double>> sum = mesh.all_reduce_sum(partial);
  ReducedDensityMatrix rdm{{subsystem.begin(), subsystem.end()}, DenseMatrix(rows)};
  std::copy(sum.begin(), sum.end(), rdm.matrix.data().begin());
  return rdm;
}

template <class T>
ReducedDensityMatrix reduced_density_matrix(const ShardedState<T>& psi, std::initializer_list<int> subsystem,
                                            int max_qubits = kRdmQubitCap) {
  return reduced_density_matrix(psi, std::span<const int>(subsystem.begin(), subsystem.size()), max_qubits);
}

// S_2 = -log2 Tr(rho^2) in bits. Rounding can push the purity slightly past
// its bounds [2^-|A|, 1]; excursions up to a relative 1e-8 are clamped.
inline double renyi2(const ReducedDensityMatrix& rdm) {
  double purity = 0.0;
  for (const auto& v : rdm.matrix.data()) purity += std::norm(v);
  const double floor = 1.0 / static_cast<double>(rdm.matrix.dim());
  if (!(purity > 0.0) || purity > 1.0 + 1e-8 || purity < floor * (1.0 - 1e-8)) {
    throw NumericalError("renyi2: purity " + std::to_string(purity) + " outside [2^-|A|, 1]");
  }
  // "+ 0.0" turns the -0 of a pure state into +0.
  return std::clamp(-std::log2(purity), 0.0, static_cast<double>(rdm.subsystem.size())) + 0.0;
}

// Subsystem-averaged second Renyi entropy of a Haar-random N-qubit state
// for a subsystem of M qubits.
inline double random_state_renyi2(int num_qubits, int subsystem_size) {
  const double num = std::exp2(subsystem_size) + std::exp2(num_qubits - subsystem_size);
  const double den = std::exp2(num_qubits) + 1.0;
  return -std::log2(num / den);
}

// One row of an observable time series or sweep.
struct SampleRow {
  double t = 0.0;
  std::string name;
  std::string subsystem;
  double value = 0.0;
};

inline std::string subsystem_label(std::span<const int> qubits) {
  std::string out;
  for (std::size_t i = 0; i < qubits.size(); ++i) {
    if (i > 0) out += ' ';
    out += std::to_string(qubits[i]);
  }
  return out;
}

inline void write_samples_csv(std::ostream& os, std::span<const SampleRow> rows) {
  os << "t,observable,subsystem,value\n";
  os.precision(17);
  for (const auto& r : rows) os << r.t << ',' << r.name << ",\"" << r.subsystem << "\"," << r.value << '\n';
}

}  // namespace shardsim

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


#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "shardsim/lanczos.hpp"
#include "support/dense_oracle.hpp"
#include "support/xxz_oracle_values.hpp"

namespace shardsim {
namespace {

using testing::gather;

const Tiling kSmall{1, 7};

// H psi through an Applier constructed up front (its scratch state is
// allocated before any census measurement).
struct HamiltonianOp {
  HamiltonianOp(Mesh& mesh, const Hamiltonian& h, double shift = 0.0) : applier(mesh, h, kSmall), shift(shift) {}
  void operator()(ShardedState<double>& in, ShardedState<double>& out) {
    applier.apply(in, out);
    if (shift != 0.0) axpy(-shift, in, out);
  }
  Applier<double> applier;
  double shift;
};

TEST(Tridiag, DiagonalOnlyGivesSortedAlphas) {
  const TridiagEigen e = tridiagonal_eigen({3.0, -1.0, 2.0}, {0.0, 0.0});
  EXPECT_EQ(e.values, (std::vector<double>{-1.0, 2.0, 3.0}));
  EXPECT_EQ(e.vectors[0], (std::vector<double>{0.0, 1.0, 0.0}));
}

TEST(Tridiag, TwoByTwo) {
  const TridiagEigen e = tridiagonal_eigen({0.0, 0.0}, {1.0});
  EXPECT_NEAR(e.values[0], -1.0, 1e-15);
  EXPECT_NEAR(e.values[1], 1.0, 1e-15);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(e.vectors[0][0]), r, 1e-15);
  EXPECT_NEAR(e.vectors[0][0], -e.vectors[0][1], 1e-15);
  EXPECT_NEAR(e.vectors[1][0], e.vectors[1][1], 1e-15);
}

TEST(Tridiag, RandomMatchesDenseSolver) {
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  const int n = 50;
  std::vector<double> d(n), off(n - 1);
  for (auto& x : d) x = nd(rng);
  for (auto& x : off) x = nd(rng);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = d[i];
  for (int i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = off[i];
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const TridiagEigen e = tridiagonal_eigen(d, off);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(e.values[i], es.eigenvalues()(i), 1e-12);
    const Eigen::Map<const Eigen::VectorXd> v(e.vectors[i].data(), n);
    EXPECT_NEAR((m * v - e.values[i] * v).norm(), 0.0, 1e-12);
    for (int j = 0; j <= i; ++j) {
      const Eigen::Map<const Eigen::VectorXd> w(e.vectors[j].data(), n);
      EXPECT_NEAR(v.dot(w), i == j ? 1.0 : 0.0, 1e-12);
    }
  }
  EXPECT_THROW(tridiagonal_eigen({1.0, 2.0}, {}), ContractError);
}

TEST(Lanczos, PauliXFromBasisState) {
  Mesh mesh(1);
  const Hamiltonian h = block_terms({{{0}, pauli::x()}}, 8, 7);
  HamiltonianOp op(mesh, h);
  const auto x0 = init_product_state<double>(mesh, 8, "00000000", kSmall);
  const TridiagResult t = lanczos_tridiag(op, x0, 2, 1e-12);
  ASSERT_EQ(t.alphas.size(), 2u);
  EXPECT_EQ(t.alphas[0], 0.0);
  EXPECT_EQ(t.alphas[1], 0.0);
  EXPECT_EQ(t.betas[0], 1.0);
  EXPECT_EQ(t.betas[1], 1.0);
  EXPECT_EQ(t.betas[2], 0.0);
  const TridiagEigen e = tridiag_eigen(t);
  EXPECT_DOUBLE_EQ(e.values[0], -1.0);
  EXPECT_DOUBLE_EQ(e.values[1], 1.0);
}

TEST(Lanczos, EigenvectorSeedTerminatesEarly) {
  Mesh mesh(1);
  const Hamiltonian h = block_terms({{{0}, pauli::z()}}, 8, 7);
  HamiltonianOp op(mesh, h);
  const auto x0 = init_product_state<double>(mesh, 8, "10000000", kSmall);
  const auto [t, basis] = lanczos_full(op, x0, 10, 1e-12);
  EXPECT_TRUE(t.terminated_early);
  ASSERT_EQ(t.alphas.size(), 1u);
  EXPECT_EQ(basis.size(), 1u);
  EXPECT_EQ(t.alphas[0], -1.0);
  EXPECT_EQ(t.betas[1], 0.0);  // residual beta_K |v_1| = 0
}

TEST(Lanczos, ZeroSeedAndBadArgumentsAreRejected) {
  Mesh mesh(1);
  const Hamiltonian h = block_terms({{{0}, pauli::z()}}, 8, 7);
  HamiltonianOp op(mesh, h);
  const ShardedState<double> zero(mesh, 8, kSmall);
  EXPECT_THROW(lanczos_tridiag(op, zero, 5, 1e-12), ContractError);
  const auto x0 = init_random_state<double>(mesh, 8, 1, kSmall);
  EXPECT_THROW(lanczos_tridiag(op, x0, 0, 1e-12), ContractError);
  EXPECT_THROW(lanczos_tridiag(op, x0, 5, 0.0), ContractError);
  const TridiagResult t = lanczos_tridiag(op, x0, 2, 1e-12);
  const std::vector<double> too_long(5, 0.1);
  EXPECT_THROW(lanczos_ritz_vector(op, x0, t, too_long), ContractError);
}

TEST(Lanczos, FullStorageBasisIsOrthonormalAndSatisfiesTheRelation) {
  Mesh mesh(2);
  const int n = 10;
  const auto terms = build_xxz(n, -1.0, 0.5, true);
  HamiltonianOp op(mesh, block_terms(terms, n, 7));
  const auto x0 = init_random_state<double>(mesh, n, 4, kSmall);
  const std::size_t k = 30;
  const auto [t, basis] = lanczos_full(op, x0, k, 1e-12);
  ASSERT_EQ(basis.size(), k);
  EXPECT_LE(t.max_alpha_imag, 1e-10);
  testing::CMatrix q(std::int64_t{1} << n, k);
  for (std::size_t j = 0; j < k; ++j) q.col(j) = gather(basis[j]);
  const testing::CMatrix gram = q.adjoint() * q;
  EXPECT_LT((gram - testing::CMatrix::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-6);

  // H Q - Q T = beta_{K} x_{K} e_K^T, with x_K = H q_K - alpha_K q_K - beta_{K-1} q_{K-1}.
  const testing::CMatrix hd = testing::naive_dense(n, terms);
  testing::CMatrix tm = testing::CMatrix::Zero(k, k);
  for (std::size_t j = 0; j < k; ++j) {
    tm(j, j) = t.alphas[j];
    if (j + 1 < k) tm(j, j + 1) = tm(j + 1, j) = t.betas[j + 1];
  }
  testing::CMatrix r = hd * q - q * tm;
  const testing::CVector last = hd * q.col(k - 1) - t.alphas[k - 1] * q.col(k - 1) - t.betas[k - 1] * q.col(k - 2);
  EXPECT_NEAR(last.norm(), t.betas[k], 1e-10);
  r.col(k - 1) -= last;
  EXPECT_LE(r.norm(), 1e-8);
}

TEST(Lanczos, TwoPassStreamsAreBitIdentical) {
  Mesh mesh(4);
  const int n = 10;
  HamiltonianOp op(mesh, block_terms(build_random_local(n, 6, 2), n, 7));
  const auto x0 = init_random_state<double>(mesh, n, 11, kSmall);
  const auto [full, basis] = lanczos_full(op, x0, 25, 1e-12);
  const TridiagResult lean = lanczos_tridiag(op, x0, 25, 1e-12);
  EXPECT_EQ(full.alphas, lean.alphas);
  EXPECT_EQ(full.betas, lean.betas);

  // Ritz vector: two-pass replay equals the stored-basis combination.
  const TridiagEigen e = tridiag_eigen(lean);
  const auto u = lanczos_ritz_vector(op, x0, lean, e.vectors.front());
  EXPECT_NEAR(norm(u), 1.0, 1e-12);
  testing::CVector direct = testing::CVector::Zero(std::int64_t{1} << n);
  for (std::size_t j = 0; j < basis.size(); ++j) direct += e.vectors.front()[j] * gather(basis[j]);
  EXPECT_GE(std::abs(gather(u).dot(direct)) / direct.norm(), 1.0 - 1e-10);

  // v = e_1 recovers the normalized seed.
  std::vector<double> e1(lean.alphas.size(), 0.0);
  e1[0] = 1.0;
  const auto seed = lanczos_ritz_vector(op, x0, lean, e1);
  EXPECT_LT((gather(seed) - gather(x0) / norm(x0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Lanczos, WorkingSetCensus) {
  Mesh mesh(2);
  const int n = 9;
  HamiltonianOp op(mesh, block_terms(build_xxz(n, -1.0, 0.5, true), n, 7));
  const auto x0 = init_random_state<double>(mesh, n, 3, kSmall);
  const long base = StateCensus::live();
  StateCensus::reset_peak();
  const TridiagResult t = lanczos_tridiag(op, x0, 12, 1e-12);
  EXPECT_EQ(StateCensus::peak() - base, 3);
  const TridiagEigen e = tridiag_eigen(t);
  StateCensus::reset_peak();
  const auto u = lanczos_ritz_vector(op, x0, t, e.vectors.front());
  EXPECT_EQ(StateCensus::peak() - base, 4);
}

TEST(Lanczos, ShiftLeavesTheGroundVectorUnchanged) {
  Mesh mesh(1);
  const int n = 9;
  const Hamiltonian h = block_terms(build_random_local(n, 3, 6), n, 7);
  HamiltonianOp plain(mesh, h);
  HamiltonianOp shifted(mesh, h, 7.5);
  const auto x0 = init_random_state<double>(mesh, n, 2, kSmall);
  const TridiagResult a = lanczos_tridiag(plain, x0, 20, 1e-12);
  const TridiagResult b = lanczos_tridiag(shifted, x0, 20, 1e-12);
  const auto ea = tridiag_eigen(a);
  const auto eb = tridiag_eigen(b);
  EXPECT_NEAR(ea.values.front() - 7.5, eb.values.front(), 1e-8);
  const double sign = ea.vectors.front()[0] * eb.vectors.front()[0] > 0 ? 1.0 : -1.0;
  for (std::size_t j = 0; j < ea.vectors.front().size(); ++j) {
    EXPECT_NEAR(ea.vectors.front()[j], sign * eb.vectors.front()[j], 1e-8);
  }
}

TEST(GroundState, MinusZHasEnergyMinusOne) {
  Mesh mesh(2);
  const Hamiltonian h = block_terms({{{0}, -1.0 * pauli::z()}}, 9, 7);
  const RitzPair<double> gs = ground_state<double>(mesh, h, 5, 10, 1e-12, kSmall);
  EXPECT_NEAR(gs.value, -1.0, 1e-12);
  EXPECT_LE(gs.residual, 1e-10);
  // All weight on qubit 0 = 0.
  const testing::CVector v = gather(gs.vector);
  EXPECT_NEAR(v.head(v.size() / 2).squaredNorm(), 1.0, 1e-12);
}

TEST(GroundState, XxzTwelveSitesMatchesExactDiagonalization) {
  Mesh mesh(1);
  const int n = 12;
  const Hamiltonian h = block_terms(build_xxz(n, -1.0, 0.5, true), n, 7);
  RitzPair<double> gs = ground_state<double>(mesh, h, 1, 100, 1e-12);
  EXPECT_NEAR(gs.value, testing::kXxzGroundEnergyN12, 1e-10 * std::abs(testing::kXxzGroundEnergyN12));
  EXPECT_NEAR(norm(gs.vector), 1.0, 1e-6);
  // Direct residual agrees with beta_K |v_K|.
  Applier<double> applier(mesh, h);
  ShardedState<double> hu(mesh, n);
  applier.apply(gs.vector, hu);
  axpy(-gs.value, gs.vector, hu);
  EXPECT_NEAR(norm(hu), gs.residual, 1e-8);
  EXPECT_EQ(gs.shift, h.norm_bound());
}

}  // namespace
}  // namespace shardsim

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


// Acceptance runner: evaluates the ten end-to-end criteria and prints one
// PASS/FAIL line per criterion.
//
//   acceptance              run every criterion
//   acceptance --only 6     run a single criterion
//
// Exit status: 0 when every criterion passes, 1 when any fails, and 77 when
// the only failures are measurements this machine cannot make (too few
// hardware threads); ctest reports that last case as skipped.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "shardsim.hpp"
#include "support/dense_oracle.hpp"
#include "support/xxz_oracle_values.hpp"

namespace {

using namespace shardsim;
using testing::gather;

struct Outcome {
  bool pass = true;
  bool environmental = false;  // failed only because the hardware cannot run the measurement
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

const Tiling kSmall{1, 7};

// --- 1 --------------------------------------------------------------------
Outcome oracle_matvec() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 10;
  double worst = 0.0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto terms = build_random_local(n, 2, 1000 + r);
    const Hamiltonian h = block_terms(terms, n, 7);
    const testing::CMatrix dense = testing::naive_dense(n, terms);
    for (std::size_t shards : {1u, 2u, 4u}) {
      Mesh mesh(shards);
      auto psi = init_random_state<double>(mesh, n, 500 + r, kSmall);
      ShardedState<double> out(mesh, n, kSmall);
      apply_hamiltonian(h, psi, out);
      const testing::CVector expect = dense * gather(psi);
      worst = std::max(worst, (gather(out) - expect).cwiseAbs().maxCoeff());
    }
  }
  const double secs = seconds_since(t0);
  o.require(worst <= 1e-12, "max error " + fmt("%.2e", worst) + " > 1e-12");
  o.require(secs < 30.0, "runtime " + fmt("%.1f", secs) + " s >= 30 s");
  o.note("max |err| " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s");
  return o;
}

// --- 2 --------------------------------------------------------------------
Outcome blocking_exactness() {
  Outcome o;
  const int n = 10;
  const auto terms = build_xxz(n, -1.0, 0.5, true);
  const Hamiltonian h = block_terms(terms, n, 7);
  const double err = (testing::to_eigen(hamiltonian_to_dense(h)) - testing::naive_dense(n, terms)).cwiseAbs().maxCoeff();
  o.require(err <= 1e-12, "dense mismatch " + fmt("%.2e", err));

  // Window pattern: consecutive 7-qubit windows overlapping by one qubit,
  // each holding six bonds; the leftover bonds form a padded tail block and
  // the periodic wrap bond its own padded block.
  auto range = [](int lo, int hi) {
    std::vector<int> v;
    for (int q = lo; q <= hi; ++q) v.push_back(q);
    return v;
  };
  std::ostringstream pattern;
  for (const auto& b : h.terms) pattern << "[" << b.support.front() << ".." << b.support.back() << "]";
  o.require(h.terms.size() == 3, "expected 3 blocks, got " + std::to_string(h.terms.size()));
  if (h.terms.size() == 3) {
    o.require(h.terms[0].support == range(0, 6) && h.terms[0].members == std::vector<std::size_t>{0, 1, 2, 3, 4, 5},
              "first window is not bonds 0-5 on [0..6]");
    o.require(h.terms[1].support == range(3, 9) && h.terms[1].members == std::vector<std::size_t>{6, 7, 8},
              "tail block is not bonds 6-8 padded to [3..9]");
    o.require(h.terms[2].members == std::vector<std::size_t>{9} && h.terms[2].support.size() == 7,
              "wrap bond is not its own padded block");
  }
  // The same rule on a longer open chain: [0..6], [6..12], [12..18], tail.
  const Hamiltonian longer = block_terms(build_xxz(20, -1.0, 0.5, false), 20, 7);
  o.require(longer.terms.size() == 4 && longer.terms[1].support == range(6, 12) &&
                longer.terms[2].support == range(12, 18) && longer.terms[3].support == range(13, 19),
            "N=20 open chain windows differ");
  o.note("dense err " + fmt("%.1e", err) + ", blocks " + pattern.str());
  return o;
}

// --- 3 --------------------------------------------------------------------
Outcome ground_state_energy() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 12;
  Mesh mesh(1);
  const Hamiltonian h = block_terms(build_xxz(n, -1.0, 0.5, true), n, 7);
  RitzPair<double> gs = ground_state<double>(mesh, h, 1, 100, 1e-12);
  const double rel = std::abs(gs.value - testing::kXxzGroundEnergyN12) / std::abs(testing::kXxzGroundEnergyN12);
  ShardedState<double> r(mesh, n);
  apply_hamiltonian(h, gs.vector, r);
  axpy(-gs.value, gs.vector, r);
  const double direct = norm(r);
  const double secs = seconds_since(t0);
  o.require(rel <= 1e-10, "relative energy error " + fmt("%.2e", rel));
  o.require(std::abs(direct - gs.residual) <= 1e-8, "residuals disagree");
  o.require(secs < 120.0, "runtime " + fmt("%.1f", secs) + " s");
  o.note("E=" + fmt("%.12f", gs.value) + " rel err " + fmt("%.1e", rel) + ", residual " + fmt("%.1e", gs.residual) +
         " vs direct " + fmt("%.1e", direct) + ", " + fmt("%.2f", secs) + " s");
  return o;
}

// --- 4 --------------------------------------------------------------------
Outcome two_pass_lanczos() {
  Outcome o;
  const int n = 10;
  Mesh mesh(2);
  const Hamiltonian h = block_terms(build_xxz(n, -1.0, 0.5, true), n, 7);
  Applier<double> applier(mesh, h, kSmall);
  auto op = [&](ShardedState<double>& in, ShardedState<double>& out) { applier.apply(in, out); };
  const auto x0 = init_random_state<double>(mesh, n, 7, kSmall);
  const std::size_t k = 40;
  const auto [full, basis] = lanczos_full(op, x0, k, 1e-12);

  const long base = StateCensus::live();
  StateCensus::reset_peak();
  const TridiagResult lean = lanczos_tridiag(op, x0, k, 1e-12);
  const long peak_tridiag = StateCensus::peak() - base;
  o.require(full.alphas == lean.alphas && full.betas == lean.betas, "alpha/beta streams differ");

  const TridiagEigen e = tridiag_eigen(lean);
  StateCensus::reset_peak();
  const auto u = lanczos_ritz_vector(op, x0, lean, e.vectors.front());
  const long peak_ritz = StateCensus::peak() - base;

  testing::CVector direct = testing::CVector::Zero(std::int64_t{1} << n);
  for (std::size_t j = 0; j < basis.size(); ++j) direct += e.vectors.front()[j] * gather(basis[j]);
  const double overlap = std::abs(gather(u).dot(direct)) / direct.norm();
  o.require(overlap >= 1.0 - 1e-10, "Ritz overlap " + fmt("%.12f", overlap));
  o.require(peak_tridiag == 3, "tridiagonal pass peak " + std::to_string(peak_tridiag) + " states");
  o.require(peak_ritz == 4, "Ritz pass peak " + std::to_string(peak_ritz) + " states");
  o.note("streams bit-identical, 1-overlap " + fmt("%.1e", 1.0 - overlap) + ", peak states " +
         std::to_string(peak_tridiag) + "/" + std::to_string(peak_ritz));
  return o;
}

// --- 5 --------------------------------------------------------------------
Outcome propagator_order() {
  Outcome o;
  const auto a = taylor_roots(6);
  const std::complex<double> printed[3] = {{0.37602583, 0.13347447}, {-0.05612287, 0.25824122}, {0.18009704, 0.30409897}};
  for (const auto& p : printed) {
    int hits = 0;
    for (const auto& r : a) hits += std::abs(r - p) <= 1e-7 ? 1 : 0;
    for (const auto& r : a) hits += std::abs(r - std::conj(p)) <= 1e-7 ? 1 : 0;
    o.require(hits == 2, "root pair near " + fmt("%.8f", p.real()) + " not matched");
  }
  const auto poly = expand_product(a);
  double coeff_err = 0.0;
  for (int m = 0; m <= 6; ++m) coeff_err = std::max(coeff_err, std::abs(poly[m] - 1.0 / factorial(m)));
  o.require(coeff_err <= 1e-7, "coefficient error " + fmt("%.2e", coeff_err));

  const int n = 8;
  const auto terms = build_random_local(n, 2, 41);
  const testing::CMatrix dense = testing::naive_dense(n, terms);
  const Hamiltonian h = block_terms(terms, n, 7);
  Mesh mesh(1);
  const auto psi0 = init_random_state<double>(mesh, n, 12, kSmall);
  std::vector<double> x, y;
  for (double dt : {0.05, 0.025, 0.0125}) {
    auto psi = psi0;
    step(psi, h, EvolutionPlan::for_duration(dt, dt));
    x.push_back(std::log(dt));
    y.push_back(std::log((gather(psi) - testing::expm_apply(dense, dt, gather(psi0))).norm()));
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / 3.0;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / 3.0;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < 3; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  o.require(std::abs(slope - 7.0) <= 0.3, "fitted slope " + fmt("%.3f", slope));
  o.note("coeff err " + fmt("%.1e", coeff_err) + ", slope " + fmt("%.3f", slope));
  return o;
}

// --- 6 --------------------------------------------------------------------
Outcome entropy_dynamics() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 16;
  const std::vector<int> sizes{1, 2, 4, 8};
  Mesh mesh(4);
  const Hamiltonian h = block_terms(build_random_local(n, 6, 1234), n, 7);
  auto psi = init_product_state<double>(mesh, n, std::string(n, '0'));
  bool bounds_ok = true;
  bool start_zero = true;
  double late_sum = 0.0;
  int late_count = 0;
  const Observer<double> obs{25, [&](std::size_t, double t, ShardedState<double>& s) {
                               for (int m : sizes) {
                                 std::vector<int> a(m);
                                 std::iota(a.begin(), a.end(), 0);
                                 const double s2 = renyi2(reduced_density_matrix(s, a));
                                 bounds_ok = bounds_ok && s2 >= 0.0 && s2 <= m;
                                 if (t == 0.0) start_zero = start_zero && s2 == 0.0;
                                 if (m == 4 && t >= 8.0 - 1e-9) {
                                   late_sum += s2;
                                   ++late_count;
                                 }
                               }
                             }};
  evolve(psi, h, EvolutionPlan::for_duration(10.0, 0.02), {obs});
  const double secs = seconds_since(t0);
  const double late = late_sum / late_count;
  const double target = random_state_renyi2(n, 4);
  o.require(start_zero, "S2(t=0) is not zero for every subsystem");
  o.require(bounds_ok, "S2 left [0, |A|]");
  o.require(std::abs(late - target) <= 0.3, "late-time S2(M=4) " + fmt("%.4f", late));
  o.require(secs < 600.0, "runtime " + fmt("%.0f", secs) + " s");
  o.note("S2(M=4) over t in [8,10]: " + fmt("%.4f", late) + " vs random-state " + fmt("%.4f", target) + " (" +
         std::to_string(late_count) + " samples), " + fmt("%.0f", secs) + " s on " + std::to_string(mesh.num_threads()) +
         " thread(s)");
  return o;
}

// --- 7 --------------------------------------------------------------------
Outcome correlators() {
  Outcome o;
  const int n = 12;
  Mesh mesh(1);
  const Hamiltonian h = block_terms(build_xxz(n, -1.0, 0.5, true), n, 7);
  RitzPair<double> gs = ground_state<double>(mesh, h, 1, 100, 1e-12);
  double worst = 0.0;
  for (int d = 1; d < n; ++d) {
    const double c = connected_correlator(gs.vector, pauli::x(), 0, pauli::x(), d);
    worst = std::max(worst, std::abs(c - testing::kCorrelatorN12[d - 1]));
  }
  o.require(worst <= 1e-10, "max correlator error " + fmt("%.2e", worst));
  o.note("11 distances, max |err| " + fmt("%.1e", worst));
  return o;
}

// --- 8 --------------------------------------------------------------------
Outcome cost_model() {
  Outcome o;
  const int n = 12;
  const QubitLayout layout(n, 0);
  auto cost_of = [&](const std::vector<LocalTerm>& terms) {
    return count_cost(plan_schedule(block_terms(terms, n, 7), layout));
  };
  const DenseMatrix zz = kron(pauli::z(), pauli::z());
  const CostReport one = cost_of({{{3, 4}, zz}});
  std::vector<LocalTerm> six;
  for (int i = 0; i < 6; ++i) six.push_back({{i, i + 1}, zz});
  const CostReport merged = cost_of(six);
  const CostReport native = cost_of({{{0, 1, 2, 3, 4, 5, 6}, random_hermitian(7, 1, 1)}});
  o.require(one.naive_ratio() == 1024.0, "naive ratio " + fmt("%g", one.naive_ratio()));
  o.require(one.padding_ratio() == 32.0, "single-term ratio " + fmt("%g", one.padding_ratio()));
  o.require(merged.padding_ratio() == 32.0 / 6.0, "merged ratio " + fmt("%g", merged.padding_ratio()));
  o.require(native.padding_ratio() == 1.0, "native ratio " + fmt("%g", native.padding_ratio()));
  o.note("ratios " + fmt("%g", one.naive_ratio()) + ", " + fmt("%g", one.padding_ratio()) + ", " +
         fmt("%.6g", merged.padding_ratio()) + ", " + fmt("%g", native.padding_ratio()));
  return o;
}

// --- 9 --------------------------------------------------------------------
// Minimum over repeated applications; small sizes repeat until about two
// seconds have been timed so that scheduler noise does not dominate.
double time_apply(Mesh& mesh, int n) {
  const Hamiltonian h = block_terms(build_xxz(n, -1.0, 0.5, true), n, 7);
  auto psi = init_random_state<float>(mesh, n, 7);
  ShardedState<float> out(mesh, n);
  Applier<float> applier(mesh, h);
  applier.apply(psi, out);  // warm-up
  double best = 1e300;
  double total = 0.0;
  for (int r = 0; r < 3 || (total < 2.0 && r < 50); ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    applier.apply(psi, out);
    const double t = seconds_since(t0);
    best = std::min(best, t);
    total += t;
  }
  return best;
}

Outcome benchmark_shape() {
  Outcome o;
  std::string ratios;
  {
    Mesh mesh(1);
    double previous = 0.0;
    for (int n = 20; n <= 26; ++n) {
      const double t = time_apply(mesh, n);
      if (n > 20) {
        const double ratio = t / previous;
        ratios += (ratios.empty() ? "" : " ") + fmt("%.2f", ratio);
        o.require(ratio >= 1.6 && ratio <= 3.0, "N=" + std::to_string(n - 1) + "->" + std::to_string(n) + " ratio " +
                                                    fmt("%.2f", ratio));
      }
      previous = t;
    }
  }
  o.note("per-qubit time ratios N=20..26: " + ratios);
  const unsigned hw = std::thread::hardware_concurrency();
  if (hw >= 4) {
    Mesh one(1, 1);
    Mesh four(4, 4);
    const double speedup = time_apply(one, 24) / time_apply(four, 24);
    o.require(speedup >= 2.0, "1->4 shard speedup " + fmt("%.2f", speedup));
    o.note("1->4 shard speedup " + fmt("%.2f", speedup));
  } else {
    const bool ratios_ok = o.pass;
    o.require(false, "1->4 shard speedup not measurable: " + std::to_string(hw) +
                         " hardware thread(s), the criterion needs 4 cores");
    o.environmental = ratios_ok;
  }
  return o;
}

// --- 10 -------------------------------------------------------------------
Outcome property_suites() {
  Outcome o;
  // Shard-count independence of a short evolution.
  {
    const int n = 10;
    const Hamiltonian h = block_terms(build_random_local(n, 6, 77), n, 7);
    testing::CVector reference;
    double worst = 0.0;
    for (std::size_t shards : {1u, 2u, 4u}) {
      Mesh mesh(shards);
      auto psi = init_random_state<double>(mesh, n, 15, kSmall);
      evolve(psi, h, EvolutionPlan::for_duration(0.2, 0.02));
      if (shards == 1) {
        reference = gather(psi);
      } else {
        worst = std::max(worst, (gather(psi) - reference).cwiseAbs().maxCoeff());
      }
    }
    o.require(worst <= 1e-10, "shard dependence " + fmt("%.2e", worst));
  }
  // Swap and permute involutions, bit-exact.
  {
    Mesh mesh(4);
    auto psi = init_random_state<double>(mesh, 12, 3, kSmall);
    const auto before = gather_dense(psi);
    const QubitLayout layout = psi.layout();
    swap_global_local(psi, {{0, 5}, {1, 11}});
    swap_global_local(psi, {{0, 5}, {1, 11}});
    o.require(psi.layout() == layout && gather_dense(psi) == before, "swap is not an involution");
    const std::vector<int> targets{4, 9, 2};
    permute_local(psi, targets);
    o.require(gather_dense(psi) == before, "permutation changed the logical state");
    reorder_local(psi, layout);
    o.require(psi.layout() == layout && gather_dense(psi) == before, "permutation is not reversible");
  }
  // Lanczos relation at N = 10.
  {
    const int n = 10;
    const auto terms = build_xxz(n, -1.0, 0.5, true);
    Mesh mesh(2);
    Applier<double> applier(mesh, block_terms(terms, n, 7), kSmall);
    auto op = [&](ShardedState<double>& in, ShardedState<double>& out) { applier.apply(in, out); };
    const std::size_t k = 30;
    const auto [t, basis] = lanczos_full(op, init_random_state<double>(mesh, n, 4, kSmall), k, 1e-12);
    testing::CMatrix q(std::int64_t{1} << n, k);
    for (std::size_t j = 0; j < k; ++j) q.col(j) = gather(basis[j]);
    testing::CMatrix tm = testing::CMatrix::Zero(k, k);
    for (std::size_t j = 0; j < k; ++j) {
      tm(j, j) = t.alphas[j];
      if (j + 1 < k) tm(j, j + 1) = tm(j + 1, j) = t.betas[j + 1];
    }
    const testing::CMatrix hd = testing::naive_dense(n, terms);
    testing::CMatrix r = hd * q - q * tm;
    r.col(k - 1) -= hd * q.col(k - 1) - t.alphas[k - 1] * q.col(k - 1) - t.betas[k - 1] * q.col(k - 2);
    o.require(r.norm() <= 1e-8, "Lanczos relation residual " + fmt("%.2e", r.norm()));
  }
  // Entropy bounds and complementarity on a pure state.
  {
    const int n = 12;
    Mesh mesh(4);
    const auto psi = init_random_state<double>(mesh, n, 29, kSmall);
    double worst = 0.0;
    for (int m = 2; m <= 6; ++m) {
      std::vector<int> a(m), rest(n - m);
      std::iota(a.begin(), a.end(), 0);
      std::iota(rest.begin(), rest.end(), m);
      const double s = renyi2(reduced_density_matrix(psi, a));
      const double sc = renyi2(reduced_density_matrix(psi, rest));
      o.require(s >= 0.0 && s <= m && sc >= 0.0 && sc <= n - m, "S2 outside [0, |A|]");
      worst = std::max(worst, std::abs(s - sc));
    }
    o.require(worst <= 1e-8, "complementarity gap " + fmt("%.2e", worst));
  }
  // Checkpoint round trip.
  {
    Mesh mesh(2);
    const auto psi = init_random_state<double>(mesh, 11, 8, kSmall);
    const auto path = std::filesystem::temp_directory_path() / ("shardsim_acceptance_" + std::to_string(::getpid()) + ".qsv");
    save_checkpoint(path, psi);
    Mesh other(4);
    const auto back = load_checkpoint<double>(path, other, kSmall);
    std::filesystem::remove(path);
    o.require(gather_dense(back) == gather_dense(psi), "checkpoint round trip is not bit-exact");
  }
  o.note("shard independence, swap/permute involution, Lanczos relation, S2 bounds, complementarity, checkpoint");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "oracle matvec equivalence", oracle_matvec},
      {2, "blocking exactness", blocking_exactness},
      {3, "ground state energy", ground_state_energy},
      {4, "two-pass Lanczos", two_pass_lanczos},
      {5, "propagator order", propagator_order},
      {6, "entropy dynamics", entropy_dynamics},
      {7, "correlators", correlators},
      {8, "cost model", cost_model},
      {9, "benchmark shape", benchmark_shape},
      {10, "property suites", property_suites},
  };
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--only N]\n");
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  bool any_fail = false;
  bool only_environmental = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::printf("AC%-2d %s  %s: %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) {
      any_fail = true;
      only_environmental = only_environmental && o.environmental;
    }
  }
  if (!any_fail) return 0;
  return only_environmental ? 77 : 1;
}

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

// Distributed wavefunction. The 2^N amplitudes are split over the mesh's
// 2^{N_g} shards: the first N_g physical qubit positions select the shard and
// the remaining N_l = N - N_g positions index the amplitude inside it. Qubit
// 0 is the most significant bit. A QubitLayout records which logical qubit
// currently sits at each physical position, so relayouts only move data and
// never change the represented vector.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "shardsim/bits.hpp"
#include "shardsim/errors.hpp"
#include "shardsim/fabric.hpp"
#include "shardsim/random.hpp"

namespace shardsim {

// Trailing-dimension rule: every shard array is viewed with its last two
// dimensions spanning at least 2^sublane_bits and 2^lane_bits entries.
struct Tiling {
  int sublane_bits = 3;
  int lane_bits = 7;

  int min_local_qubits() const noexcept { return sublane_bits + lane_bits; }
  friend bool operator==(const Tiling&, const Tiling&) = default;
};

// Throws if a materialized shape (log2 of each dimension) breaks the tiling rule.
inline void check_tiled(std::span<const int> log2_dims, const Tiling& tiling) {
  const std::size_t n = log2_dims.size();
  if (n < 2 || log2_dims[n - 1] < tiling.lane_bits || log2_dims[n - 2] < tiling.sublane_bits) {
    throw ContractError("tiling rule violated by a materialized shard shape");
  }
}

// Shape of a shard as materialized by relayouts: (2^{N_l-sub-lane}, 2^sub, 2^lane).
inline std::array<int, 3> shard_shape(int num_local, const Tiling& tiling) {
  return {num_local - tiling.min_local_qubits(), tiling.sublane_bits, tiling.lane_bits};
}

class QubitLayout {
 public:
  QubitLayout() = default;

  QubitLayout(int num_qubits, int num_global) : num_global_(num_global), qubit_at_(num_qubits), position_of_(num_qubits) {
    if (num_global < 0 || num_global > num_qubits) throw ConfigError("layout: more global qubits than qubits");
    for (int q = 0; q < num_qubits; ++q) qubit_at_[q] = position_of_[q] = q;
  }

  int num_qubits() const noexcept { return static_cast<int>(qubit_at_.size()); }
  int num_global() const noexcept { return num_global_; }
  int num_local() const noexcept { return num_qubits() - num_global_; }

  int position_of(int qubit) const { return position_of_.at(qubit); }
  int qubit_at(int position) const { return qubit_at_.at(position); }
  bool is_global(int qubit) const { return position_of(qubit) < num_global_; }

  // Logical qubits in physical order.
  std::span<const int> order() const noexcept { return qubit_at_; }

  std::vector<int> global_qubits() const { return {qubit_at_.begin(), qubit_at_.begin() + num_global_}; }
  std::vector<int> local_qubits() const { return {qubit_at_.begin() + num_global_, qubit_at_.end()}; }

  // Bit index inside a local offset for a local position (0 = least significant).
  int local_bit(int position) const noexcept { return num_qubits() - 1 - position; }
  // Bit index inside a shard id for a global position.
  int shard_bit(int position) const noexcept { return num_global_ - 1 - position; }

  bool is_identity() const noexcept {
    for (int p = 0; p < num_qubits(); ++p) {
      if (qubit_at_[p] != p) return false;
    }
    return true;
  }

  void swap_positions(int p, int q) {
    std::swap(qubit_at_.at(p), qubit_at_.at(q));
    position_of_[qubit_at_[p]] = p;
    position_of_[qubit_at_[q]] = q;
  }

  // Same global positions; local positions follow `local_qubits` in order.
  QubitLayout with_local_order(std::span<const int> local_qubits) const {
    if (static_cast<int>(local_qubits.size()) != num_local()) throw ContractError("layout: wrong local qubit count");
    QubitLayout out = *this;
    for (int i = 0; i < num_local(); ++i) {
      const int q = local_qubits[i];
      if (q < 0 || q >= num_qubits() || is_global(q)) throw ContractError("layout: local order names a global qubit");
      out.qubit_at_[num_global_ + i] = q;
      out.position_of_[q] = num_global_ + i;
    }
    std::vector<bool> seen(num_qubits(), false);
    for (int q : out.qubit_at_) {
      if (seen[q]) throw ContractError("layout: repeated qubit");
      seen[q] = true;
    }
    return out;
  }

  // Moves `targets` to the last positions in the given order; the remaining
  // local qubits keep their relative order in front of them.
  QubitLayout with_targets_last(std::span<const int> targets) const {
    std::vector<bool> is_target(num_qubits(), false);
    for (int q : targets) {
      if (q < 0 || q >= num_qubits()) throw ContractError("layout: target out of range");
      if (is_global(q)) throw ContractError("layout: target qubit " + std::to_string(q) + " is global");
      if (is_target[q]) throw ContractError("layout: repeated target");
      is_target[q] = true;
    }
    std::vector<int> order;
    order.reserve(num_local());
    for (int p = num_global_; p < num_qubits(); ++p) {
      if (!is_target[qubit_at_[p]]) order.push_back(qubit_at_[p]);
    }
    order.insert(order.end(), targets.begin(), targets.end());
    return with_local_order(order);
  }

  bool same_globals(const QubitLayout& other) const {
    return num_qubits() == other.num_qubits() && num_global_ == other.num_global_ &&
           std::equal(qubit_at_.begin(), qubit_at_.begin() + num_global_, other.qubit_at_.begin());
  }

  friend bool operator==(const QubitLayout& a, const QubitLayout& b) {
    return a.num_global_ == b.num_global_ && a.qubit_at_ == b.qubit_at_;
  }

 private:
  int num_global_ = 0;
  std::vector<int> qubit_at_;
  std::vector<int> position_of_;
};

// Local-offset gather that converts a shard from layout `from` to layout `to`
// (both must share the same global positions).
inline BitGather local_relayout(const QubitLayout& from, const QubitLayout& to) {
  if (!from.same_globals(to)) throw ContractError("local relayout between different distributions");
  const int nl = from.num_local();
  std::vector<int> source(nl);
  for (int d = 0; d < nl; ++d) {
    const int qubit = to.qubit_at(to.num_qubits() - 1 - d);
    source[d] = from.local_bit(from.position_of(qubit));
  }
  return BitGather(std::move(source));
}

enum class Precision : std::uint8_t { fp32 = 0, fp64 = 1 };

template <class T>
constexpr Precision precision_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>, "amplitudes are float or double");
  return std::is_same_v<T, float> ? Precision::fp32 : Precision::fp64;
}

inline const char* to_string(Precision p) { return p == Precision::fp32 ? "single" : "double"; }

// Counts ShardedState objects that own amplitude storage.
class StateCensus {
 public:
  static long live() noexcept { return live_.load(); }
  static long peak() noexcept { return peak_.load(); }
  static void reset_peak() noexcept { peak_.store(live_.load()); }

  static void acquire() noexcept {
    const long now = live_.fetch_add(1) + 1;
    long seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
  }
  static void release() noexcept { live_.fetch_sub(1); }

 private:
  static inline std::atomic<long> live_{0};
  static inline std::atomic<long> peak_{0};
};

namespace detail {

class CensusToken {
 public:
  CensusToken() noexcept { StateCensus::acquire(); }
  CensusToken(const CensusToken&) noexcept { StateCensus::acquire(); }
  CensusToken(CensusToken&& other) noexcept : active_(std::exchange(other.active_, false)) {}
  CensusToken& operator=(const CensusToken&) noexcept {
    if (!active_) {
      StateCensus::acquire();
      active_ = true;
    }
    return *this;
  }
  CensusToken& operator=(CensusToken&& other) noexcept {
    if (this != &other) {
      if (active_) StateCensus::release();
      active_ = std::exchange(other.active_, false);
    }
    return *this;
  }
  ~CensusToken() {
    if (active_) StateCensus::release();
  }

 private:
  bool active_ = true;
};

}  // namespace detail

template <class T>
class ShardedState {
 public:
  using real_type = T;
  using value_type = std::complex<T>;
  static constexpr Precision precision = precision_of<T>();

  ShardedState(Mesh& mesh, int num_qubits, Tiling tiling = {})
      : mesh_(&mesh), tiling_(tiling), layout_(num_qubits, mesh.global_qubits()), shards_(mesh.num_shards()) {
    if (tiling.sublane_bits < 0 || tiling.lane_bits < 0) throw ConfigError("tiling exponents must be non-negative");
    if (layout_.num_local() < tiling.min_local_qubits()) {
      throw ConfigError("N=" + std::to_string(num_qubits) + " on " + std::to_string(mesh.num_shards()) +
                        " shards leaves " + std::to_string(layout_.num_local()) + " local qubits; tiling needs " +
                        std::to_string(tiling.min_local_qubits()));
    }
    if (layout_.num_local() > 40) throw ConfigError("shard too large");
    const std::size_t n = shard_size();
    mesh.for_each_shard([&](std::size_t s) { shards_[s].assign(n, value_type{}); });
  }

  Mesh& mesh() const noexcept { return *mesh_; }
  int num_qubits() const noexcept { return layout_.num_qubits(); }
  int num_global() const noexcept { return layout_.num_global(); }
  int num_local() const noexcept { return layout_.num_local(); }
  std::size_t num_shards() const noexcept { return shards_.size(); }
  std::size_t shard_size() const noexcept { return std::size_t{1} << num_local(); }
  const Tiling& tiling() const noexcept { return tiling_; }
  const QubitLayout& layout() const noexcept { return layout_; }

  std::span<value_type> shard(std::size_t s) { return shards_[s]; }
  std::span<const value_type> shard(std::size_t s) const { return shards_[s]; }

  // Raw storage, for algorithms that double-buffer a shard.
  std::vector<value_type>& storage(std::size_t s) { return shards_[s]; }

  // Replaces the layout metadata without touching amplitudes.
  void assign_layout(QubitLayout layout) {
    if (layout.num_qubits() != num_qubits() || layout.num_global() != num_global()) {
      throw ContractError("assign_layout: incompatible layout");
    }
    layout_ = std::move(layout);
  }

 private:
  Mesh* mesh_;
  Tiling tiling_;
  QubitLayout layout_;
  std::vector<std::vector<value_type>> shards_;
  detail::CensusToken census_;
};

template <class T>
void require_same_layout(const ShardedState<T>& a, const ShardedState<T>& b, const char* op) {
  if (&a.mesh() != &b.mesh() || a.num_qubits() != b.num_qubits() || !(a.layout() == b.layout())) {
    throw ContractError(std::string(op) + ": states have different layouts");
  }
}

// Reusable per-shard scratch buffers for relayouts and redistributions.
template <class T>
class ShardWorkspace {
 public:
  std::vector<std::complex<T>>& buffer(std::size_t shard, std::size_t size) {
    if (buffers_.size() <= shard) buffers_.resize(shard + 1);
    auto& b = buffers_[shard];
    if (b.size() != size) b.resize(size);
    return b;
  }
  void release() { buffers_.clear(); }

 private:
  std::vector<std::vector<std::complex<T>>> buffers_;
};

template <class T>
void set_zero(ShardedState<T>& state) {
  state.mesh().for_each_shard([&](std::size_t s) {
    auto sh = state.shard(s);
    std::fill(sh.begin(), sh.end(), std::complex<T>{});
  });
}

// Computational basis state |bits>, bits[q] in {'0','1'} for qubit q.
template <class T>
ShardedState<T> init_product_state(Mesh& mesh, int num_qubits, std::string_view bits, Tiling tiling = {}) {
  if (static_cast<int>(bits.size()) != num_qubits) throw ConfigError("product state: bit string length != N");
  std::uint64_t index = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw ConfigError("product state: bits must be '0' or '1'");
    index = (index << 1) | static_cast<std::uint64_t>(c == '1');
  }
  ShardedState<T> state(mesh, num_qubits, tiling);
  const int nl = state.num_local();
  state.shard(index >> nl)[index & ((std::uint64_t{1} << nl) - 1)] = std::complex<T>{1, 0};
  return state;
}

// Normalized i.i.d. complex Gaussian amplitudes. Amplitude i is a function of
// (seed, i) only, and the normalization sums fixed-size chunks in logical
// order, so the result is identical for every shard count with N_l >= 8.
template <class T>
ShardedState<T> init_random_state(Mesh& mesh, int num_qubits, std::uint64_t seed, Tiling tiling = {}) {
  ShardedState<T> state(mesh, num_qubits, tiling);
  const CounterRng rng(seed);
  const int nl = state.num_local();
  const int chunk_bits = std::min(nl, 8);
  const std::size_t chunks_per_shard = std::size_t{1} << (nl - chunk_bits);
  std::vector<double> chunk_sums(chunks_per_shard * state.num_shards(), 0.0);
  std::vector<std::vector<std::complex<double>>> raw(state.num_shards());
  mesh.for_each_shard([&](std::size_t s) {
    auto& r = raw[s];
    r.resize(state.shard_size());
    const std::uint64_t base = static_cast<std::uint64_t>(s) << nl;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = rng.normal_pair(0, base + i);
    for (std::size_t c = 0; c < chunks_per_shard; ++c) {
      double acc = 0.0;
      for (std::size_t i = c << chunk_bits; i < ((c + 1) << chunk_bits); ++i) acc += std::norm(r[i]);
      chunk_sums[s * chunks_per_shard + c] = acc;
    }
  });
  double total = 0.0;
  for (double c : chunk_sums) total += c;
  const double inv = 1.0 / std::sqrt(total);
  mesh.for_each_shard([&](std::size_t s) {
    auto sh = state.shard(s);
    for (std::size_t i = 0; i < sh.size(); ++i) {
      sh[i] = std::complex<T>(static_cast<T>(raw[s][i].real() * inv), static_cast<T>(raw[s][i].imag() * inv));
    }
    raw[s] = {};
  });
  return state;
}

template <class T>
void scale(ShardedState<T>& x, std::complex<double> factor) {
  const T fr = static_cast<T>(factor.real());
  const T fi = static_cast<T>(factor.imag());
  x.mesh().for_each_shard([&](std::size_t s) {
    auto sh = x.shard(s);
    T* p = reinterpret_cast<T*>(sh.data());
    for (std::size_t i = 0; i < sh.size(); ++i) {
      const T re = p[2 * i];
      const T im = p[2 * i + 1];
      p[2 * i] = fr * re - fi * im;
      p[2 * i + 1] = fr * im + fi * re;
    }
  });
}

// y <- y + alpha * x, shard-local.
template <class T>
void axpy(std::complex<double> alpha, const ShardedState<T>& x, ShardedState<T>& y) {
  require_same_layout(x, y, "axpy");
  const T ar = static_cast<T>(alpha.real());
  const T ai = static_cast<T>(alpha.imag());
  x.mesh().for_each_shard([&](std::size_t s) {
    const auto xs = x.shard(s);
    auto ys = y.shard(s);
    const T* xp = reinterpret_cast<const T*>(xs.data());
    T* yp = reinterpret_cast<T*>(ys.data());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const T xr = xp[2 * i];
      const T xi = xp[2 * i + 1];
      yp[2 * i] += ar * xr - ai * xi;
      yp[2 * i + 1] += ar * xi + ai * xr;
    }
  });
}

// <x|y> = sum conj(x_i) y_i, accumulated in double per shard and reduced in
// ascending shard order.
template <class T>
std::complex<double> inner_product(const ShardedState<T>& x, const ShardedState<T>& y) {
  require_same_layout(x, y, "inner_product");
  std::vector<std::complex<double>> partial(x.num_shards());
  x.mesh().for_each_shard([&](std::size_t s) {
    const auto xs = x.shard(s);
    const auto ys = y.shard(s);
    const T* xp = reinterpret_cast<const T*>(xs.data());
    const T* yp = reinterpret_cast<const T*>(ys.data());
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double xr = xp[2 * i];
      const double xi = xp[2 * i + 1];
      const double yr = yp[2 * i];
      const double yi = yp[2 * i + 1];
      re += xr * yr + xi * yi;
      im += xr * yi - xi * yr;
    }
    partial[s] = {re, im};
  });
  return x.mesh().all_reduce_sum(std::span<const std::complex<double>>(partial));
}

template <class T>
double norm(const ShardedState<T>& x) {
  return std::sqrt(std::max(0.0, inner_product(x, x).real()));
}

// Moves every shard to `target` (same distribution) through one gather per shard.
template <class T>
void reorder_local(ShardedState<T>& state, const QubitLayout& target, ShardWorkspace<T>* workspace = nullptr) {
  if (state.layout() == target) return;
  const BitGather gather = local_relayout(state.layout(), target);
  const auto shape = shard_shape(state.num_local(), state.tiling());
  check_tiled(shape, state.tiling());
  ShardWorkspace<T> local;
  ShardWorkspace<T>& ws = workspace != nullptr ? *workspace : local;
  // Grow buffers serially; the superstep only touches preallocated storage.
  for (std::size_t s = 0; s < state.num_shards(); ++s) ws.buffer(s, state.shard_size());
  state.mesh().for_each_shard([&](std::size_t s) {
    auto& buf = ws.buffer(s, state.shard_size());
    gather.gather(state.storage(s).data(), buf.data());
    std::swap(buf, state.storage(s));
  });
  state.assign_layout(target);
}

// Places the local qubits `targets` in the last positions (targets[0] first).
// Shard-local; the targets must already be local.
template <class T>
void permute_local(ShardedState<T>& state, std::span<const int> targets, ShardWorkspace<T>* workspace = nullptr) {
  const Tiling& t = state.tiling();
  if (static_cast<int>(targets.size()) > t.lane_bits + t.sublane_bits) {
    throw ContractError("permute_local: at most lane+sublane targets may be moved at once");
  }
  reorder_local(state, state.layout().with_targets_last(targets), workspace);
}

// Exchanges the roles of global and local positions pairwise with a single
// all_to_all. pairs = {(global position, local position), ...}.
template <class T>
void swap_global_local(ShardedState<T>& state, std::span<const std::pair<int, int>> pairs,
                       ShardWorkspace<T>* workspace = nullptr) {
  const QubitLayout& layout = state.layout();
  const int n = state.num_qubits();
  const int ng = state.num_global();
  const int nl = state.num_local();
  const int m = static_cast<int>(pairs.size());
  if (m == 0) return;
  if (m > ng) throw ContractError("swap_global_local: more pairs than global qubits");
  std::vector<bool> used(n, false);
  for (const auto& [g, l] : pairs) {
    if (g < 0 || g >= ng) throw ContractError("swap_global_local: first position of a pair must be global");
    if (l < ng || l >= n) throw ContractError("swap_global_local: second position of a pair must be local");
    if (used[g] || used[l]) throw ContractError("swap_global_local: overlapping pairs");
    used[g] = used[l] = true;
  }

  // Pack: the m exchanged local bits become the top bits of the offset, the
  // remaining bits keep their order below them.
  std::vector<int> pack_source;
  pack_source.reserve(nl);
  std::vector<bool> exchanged_bit(nl, false);
  for (const auto& pr : pairs) exchanged_bit[layout.local_bit(pr.second)] = true;
  for (int b = 0; b < nl; ++b) {
    if (!exchanged_bit[b]) pack_source.push_back(b);
  }
  for (const auto& pr : pairs) pack_source.push_back(layout.local_bit(pr.second));
  const BitGather pack(pack_source);
  const BitGather unpack = pack.inverse();

  const std::size_t slots = std::size_t{1} << m;
  const Routing routing = Routing::from_function(state.num_shards(), slots, [&](std::size_t s, std::size_t v) {
    std::size_t dest = s;
    std::size_t u = 0;
    for (int j = 0; j < m; ++j) {
      const int sb = layout.shard_bit(pairs[j].first);
      u |= ((s >> sb) & 1U) << j;
      dest = (dest & ~(std::size_t{1} << sb)) | (((v >> j) & 1U) << sb);
    }
    return SlotAddress{dest, u};
  });

  ShardWorkspace<T> local;
  ShardWorkspace<T>& ws = workspace != nullptr ? *workspace : local;
  for (std::size_t s = 0; s < state.num_shards(); ++s) ws.buffer(s, state.shard_size());
  Mesh& mesh = state.mesh();
  mesh.for_each_shard([&](std::size_t s) { pack.gather(state.storage(s).data(), ws.buffer(s, state.shard_size()).data()); });
  {
    std::vector<std::span<const std::complex<T>>> send;
    std::vector<std::span<std::complex<T>>> recv;
    for (std::size_t s = 0; s < state.num_shards(); ++s) {
      send.emplace_back(ws.buffer(s, state.shard_size()));
      recv.emplace_back(state.storage(s));
    }
    mesh.all_to_all<std::complex<T>>(send, recv, routing);
  }
  mesh.for_each_shard([&](std::size_t s) {
    auto& buf = ws.buffer(s, state.shard_size());
    unpack.gather(state.storage(s).data(), buf.data());
    std::swap(buf, state.storage(s));
  });
  QubitLayout next = layout;
  for (const auto& [g, l] : pairs) next.swap_positions(g, l);
  state.assign_layout(std::move(next));
}

template <class T>
void swap_global_local(ShardedState<T>& state, std::initializer_list<std::pair<int, int>> pairs,
                       ShardWorkspace<T>* workspace = nullptr) {
  swap_global_local(state, std::span<const std::pair<int, int>>(pairs.begin(), pairs.size()), workspace);
}

inline constexpr int kDenseQubitCap = 28;

// Amplitudes in logical big-endian order, whatever the current layout.
template <class T>
std::vector<std::complex<T>> gather_dense(const ShardedState<T>& state, int max_qubits = kDenseQubitCap) {
  const int n = state.num_qubits();
  if (n > max_qubits) {
    throw RefusalError("gather_dense: N=" + std::to_string(n) + " exceeds the cap of " + std::to_string(max_qubits));
  }
  const QubitLayout& layout = state.layout();
  std::vector<int> source(n);
  for (int q = 0; q < n; ++q) source[n - 1 - q] = n - 1 - layout.position_of(q);
  const BitGather to_physical(std::move(source));
  const int nl = state.num_local();
  const std::uint64_t mask = (std::uint64_t{1} << nl) - 1;
  std::vector<std::complex<T>> dense(std::size_t{1} << n);
  for (std::uint64_t i = 0; i < dense.size(); ++i) {
    const std::uint64_t p = to_physical.map(i);
    dense[i] = state.shard(p >> nl)[p & mask];
  }
  return dense;
}

template <class T>
ShardedState<T> scatter_dense(Mesh& mesh, int num_qubits, std::span<const std::complex<T>> dense, Tiling tiling = {}) {
  if (dense.size() != (std::size_t{1} << num_qubits)) throw ContractError("scatter_dense: size != 2^N");
  ShardedState<T> state(mesh, num_qubits, tiling);
  const std::size_t n = state.shard_size();
  mesh.for_each_shard([&](std::size_t s) {
    std::copy(dense.begin() + s * n, dense.begin() + (s + 1) * n, state.shard(s).begin());
  });
  return state;
}

}  // namespace shardsim

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

// Applying a blocked Hamiltonian to a sharded state.
//
// A plan is a list of steps over three registers: the input state (which is
// temporarily redistributed and always restored bit-exactly), the output
// accumulator, and a scratch state owned by the Applier. Blocks whose
// support is local are multiplied directly; blocks that touch global qubits
// are grouped by the global<->local swap that makes them local, so that one
// redistribution serves a whole group.

#include <algorithm>
#include <bit>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "shardsim/errors.hpp"
#include "shardsim/fabric.hpp"
#include "shardsim/hamiltonian.hpp"
#include "shardsim/kernel.hpp"
#include "shardsim/state.hpp"

namespace shardsim {

namespace operand {
inline constexpr std::uint8_t input = 1;
inline constexpr std::uint8_t accumulator = 2;
inline constexpr std::uint8_t scratch = 4;
}  // namespace operand

// Exchanges the listed qubits: each pair is (logical qubit that is currently
// global, logical qubit that is currently local). Operands in `operands` are
// redistributed; with relabel_accumulator the accumulator is still zero and
// only its layout changes.
struct SwapStep {
  std::vector<std::pair<int, int>> qubits;
  std::uint8_t operands = 0;
  bool relabel_accumulator = false;
};

// scratch <- input, with `targets` moved to the last local positions
// (an empty list is a plain copy).
struct LoadStep {
  std::vector<int> targets;
};

// In-place local reorder of scratch placing `targets` last.
struct PermuteStep {
  std::vector<int> targets;
};

enum class Source : std::uint8_t { input, scratch };

// Multiplies block `block` on the lane qubits (physical order). From scratch
// the product is in place; from input it is added into the accumulator.
struct MultiplyStep {
  std::size_t block = 0;
  Source source = Source::scratch;
  std::vector<int> lane_qubits;
  std::vector<int> member_localities;
};

// accumulator += scratch (scratch is relaid out to the accumulator's order).
struct AccumulateStep {};

using PlanStep = std::variant<SwapStep, LoadStep, PermuteStep, MultiplyStep, AccumulateStep>;

struct ApplyPlan {
  int num_qubits = 0;
  int block_size = 0;
  QubitLayout initial_layout;
  std::vector<PlanStep> steps;

  template <class Step>
  std::size_t count() const {
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [](const PlanStep& s) { return std::holds_alternative<Step>(s); }));
  }

  std::size_t swap_count() const { return count<SwapStep>(); }
  std::size_t multiply_count() const { return count<MultiplyStep>(); }

  // Local permutations issued (loads that reorder plus explicit permutes).
  std::size_t permutation_count() const {
    std::size_t n = count<PermuteStep>();
    for (const auto& s : steps) {
      if (const auto* load = std::get_if<LoadStep>(&s); load != nullptr && !load->targets.empty()) ++n;
    }
    return n;
  }

  std::size_t all_to_all_count() const {
    std::size_t n = 0;
    for (const auto& s : steps) {
      if (const auto* sw = std::get_if<SwapStep>(&s)) n += static_cast<std::size_t>(std::popcount(sw->operands));
    }
    return n;
  }
};

namespace detail {

inline std::vector<int> lane_qubits(const QubitLayout& layout, int lanes) {
  const auto order = layout.order();
  return {order.end() - lanes, order.end()};
}

inline bool same_set(std::vector<int> a, std::vector<int> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

inline bool contains(std::span<const int> sorted, int q) { return std::binary_search(sorted.begin(), sorted.end(), q); }

class Planner {
 public:
  Planner(const Hamiltonian& h, const QubitLayout& layout)
      : h_(h), input_(layout), accumulator_(layout), scratch_(layout) {
    plan_.num_qubits = h.num_qubits;
    plan_.block_size = h.block_size;
    plan_.initial_layout = layout;
  }

  ApplyPlan run() {
    struct Group {
      std::vector<std::pair<int, int>> pairs;
      std::vector<std::size_t> blocks;
    };
    std::vector<std::size_t> remaining;
    std::vector<std::size_t> home;
    for (std::size_t b = 0; b < h_.terms.size(); ++b) {
      const auto& s = h_.terms[b].support;
      const bool global = std::any_of(s.begin(), s.end(), [&](int q) { return input_.is_global(q); });
      (global ? remaining : home).push_back(b);
    }

    std::vector<Group> groups;
    while (!remaining.empty()) {
      std::vector<int> avoid;
      for (std::size_t b : remaining) avoid = merge_supports(avoid, h_.terms[b].support);
      Group g;
      g.pairs = choose_partners(h_.terms[remaining.front()].support, avoid);
      std::vector<int> out_q, in_q;
      for (const auto& [gq, lq] : g.pairs) {
        out_q.push_back(gq);
        in_q.push_back(lq);
      }
      std::sort(out_q.begin(), out_q.end());
      std::sort(in_q.begin(), in_q.end());
      std::vector<std::size_t> rest;
      for (std::size_t b : remaining) {
        const auto& s = h_.terms[b].support;
        const bool fits = std::all_of(s.begin(), s.end(), [&](int q) {
          return contains(in_q, q) ? false : (!input_.is_global(q) || contains(out_q, q));
        });
        (fits ? g.blocks : rest).push_back(b);
      }
      remaining = std::move(rest);
      groups.push_back(std::move(g));
    }
    std::stable_sort(groups.begin(), groups.end(),
                     [](const Group& a, const Group& b) { return a.blocks.size() > b.blocks.size(); });

    for (const auto& g : groups) {
      // In place: 2 redistributions of the input, plus 2 of the accumulator
      // unless it is still zero. Out of place: 2 per block.
      const std::size_t in_place_cost = accumulator_zero_ ? 3 : 4;
      if (g.blocks.size() >= 2 && in_place_cost < 2 * g.blocks.size()) {
        swap(g.pairs, operand::input | operand::accumulator);
        for (std::size_t b : g.blocks) multiply_local(b);
        swap(reversed(g.pairs), operand::input | operand::accumulator);
      } else {
        for (std::size_t b : g.blocks) multiply_out_of_place(b, g.pairs);
      }
    }
    for (std::size_t b : home) multiply_local(b);
    if (!(input_ == plan_.initial_layout) || !(accumulator_ == plan_.initial_layout)) {
      throw ContractError("planner: plan does not restore the initial layout");
    }
    return std::move(plan_);
  }

 private:
  static std::vector<std::pair<int, int>> reversed(const std::vector<std::pair<int, int>>& pairs) {
    std::vector<std::pair<int, int>> out;
    for (const auto& [g, l] : pairs) out.emplace_back(l, g);
    return out;
  }

  // Pairs each global qubit of `support` with a local qubit outside the
  // support, preferring qubits outside `avoid`, then the most significant.
  std::vector<std::pair<int, int>> choose_partners(std::span<const int> support, std::span<const int> avoid) const {
    std::vector<int> globals;
    for (int p = 0; p < input_.num_global(); ++p) {
      if (contains(support, input_.qubit_at(p))) globals.push_back(input_.qubit_at(p));
    }
    std::vector<int> preferred, fallback;
    for (int p = input_.num_global(); p < input_.num_qubits(); ++p) {
      const int q = input_.qubit_at(p);
      if (contains(support, q)) continue;
      (contains(avoid, q) ? fallback : preferred).push_back(q);
    }
    preferred.insert(preferred.end(), fallback.begin(), fallback.end());
    if (preferred.size() < globals.size()) throw ContractError("planner: not enough local qubits to swap with");
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < globals.size(); ++i) pairs.emplace_back(globals[i], preferred[i]);
    return pairs;
  }

  static void swap_layout(QubitLayout& layout, const std::vector<std::pair<int, int>>& pairs) {
    for (const auto& [g, l] : pairs) {
      const int pg = layout.position_of(g);
      const int pl = layout.position_of(l);
      if (pg >= layout.num_global() || pl < layout.num_global()) throw ContractError("planner: invalid swap pair");
      layout.swap_positions(pg, pl);
    }
  }

  void swap(const std::vector<std::pair<int, int>>& pairs, std::uint8_t operands) {
    SwapStep step{pairs, 0, false};
    if (operands & operand::input) {
      swap_layout(input_, pairs);
      step.operands |= operand::input;
    }
    if (operands & operand::accumulator) {
      swap_layout(accumulator_, pairs);
      if (accumulator_zero_) {
        step.relabel_accumulator = true;
      } else {
        step.operands |= operand::accumulator;
      }
    }
    if (operands & operand::scratch) {
      swap_layout(scratch_, pairs);
      step.operands |= operand::scratch;
    }
    plan_.steps.emplace_back(std::move(step));
  }

  std::vector<int> localities(std::size_t b) const {
    std::vector<int> out;
    for (std::size_t m : h_.terms[b].members) out.push_back(h_.provenance.at(m).locality());
    return out;
  }

  void multiply_local(std::size_t b) {
    const auto& support = h_.terms[b].support;
    const auto lanes = lane_qubits(input_, h_.block_size);
    if (same_set(lanes, support)) {
      plan_.steps.emplace_back(MultiplyStep{b, Source::input, lanes, localities(b)});
    } else {
      plan_.steps.emplace_back(LoadStep{support});
      scratch_ = input_.with_targets_last(support);
      plan_.steps.emplace_back(MultiplyStep{b, Source::scratch, support, localities(b)});
      plan_.steps.emplace_back(AccumulateStep{});
    }
    accumulator_zero_ = false;
  }

  void multiply_out_of_place(std::size_t b, const std::vector<std::pair<int, int>>& pairs) {
    const auto& support = h_.terms[b].support;
    plan_.steps.emplace_back(LoadStep{});
    scratch_ = input_;
    swap(pairs, operand::scratch);
    auto lanes = lane_qubits(scratch_, h_.block_size);
    if (!same_set(lanes, support)) {
      plan_.steps.emplace_back(PermuteStep{support});
      scratch_ = scratch_.with_targets_last(support);
      lanes = support;
    }
    plan_.steps.emplace_back(MultiplyStep{b, Source::scratch, lanes, localities(b)});
    swap(reversed(pairs), operand::scratch);
    plan_.steps.emplace_back(AccumulateStep{});
    accumulator_zero_ = false;
  }

  const Hamiltonian& h_;
  QubitLayout input_;
  QubitLayout accumulator_;
  QubitLayout scratch_;
  bool accumulator_zero_ = true;
  ApplyPlan plan_;
};

// Block matrix re-indexed from sorted-support order to the given lane order.
inline DenseMatrix lane_ordered(const BlockedTerm& block, std::span<const int> lanes) {
  const int k = static_cast<int>(lanes.size());
  if (static_cast<std::size_t>(k) != block.support.size()) throw ContractError("lane order: wrong qubit count");
  std::vector<int> support_bit(k);
  for (int j = 0; j < k; ++j) {
    const auto it = std::lower_bound(block.support.begin(), block.support.end(), lanes[j]);
    if (it == block.support.end() || *it != lanes[j]) throw ContractError("lane order: qubit outside the block");
    support_bit[j] = k - 1 - static_cast<int>(it - block.support.begin());
  }
  const std::size_t dim = std::size_t{1} << k;
  std::vector<std::size_t> to_support(dim, 0);
  for (std::size_t a = 0; a < dim; ++a) {
    for (int j = 0; j < k; ++j) {
      if ((a >> (k - 1 - j)) & 1U) to_support[a] |= std::size_t{1} << support_bit[j];
    }
  }
  DenseMatrix out(dim);
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = 0; b < dim; ++b) out(a, b) = block.matrix(to_support[a], to_support[b]);
  }
  return out;
}

}  // namespace detail

// Plans H|psi> for a state currently in `layout`.
inline ApplyPlan plan_schedule(const Hamiltonian& h, const QubitLayout& layout) {
  if (layout.num_qubits() != h.num_qubits) throw ConfigError("plan: layout and Hamiltonian disagree on N");
  if (layout.num_local() < h.block_size) throw ConfigError("plan: fewer local qubits than the block size");
  return detail::Planner(h, layout).run();
}

struct CostReport {
  std::uint64_t padded_flops = 0;        // complex multiply-adds actually issued
  std::uint64_t unpadded_flops = 0;      // sum over terms of 2^(N+k)
  std::uint64_t naive_padded_flops = 0;  // each term padded alone to the full lane
  std::uint64_t swaps = 0;
  std::uint64_t all_to_all_calls = 0;
  std::uint64_t bytes_moved = 0;

  double padding_ratio() const { return static_cast<double>(padded_flops) / static_cast<double>(unpadded_flops); }
  double naive_ratio() const { return static_cast<double>(naive_padded_flops) / static_cast<double>(unpadded_flops); }
};

// Static cost of one application of `plan` to an N-qubit state.
inline CostReport count_cost(const ApplyPlan& plan, int num_qubits, std::size_t amplitude_bytes = 16) {
  CostReport r;
  const int b = plan.block_size;
  for (const auto& step : plan.steps) {
    if (const auto* m = std::get_if<MultiplyStep>(&step)) {
      r.padded_flops += std::uint64_t{1} << (num_qubits + b);
      for (int k : m->member_localities) {
        r.unpadded_flops += std::uint64_t{1} << (num_qubits + k);
        r.naive_padded_flops += std::uint64_t{1} << (num_qubits - k + 2 * b);
      }
    } else if (const auto* s = std::get_if<SwapStep>(&step)) {
      ++r.swaps;
      const auto moved = static_cast<std::uint64_t>(std::popcount(s->operands));
      r.all_to_all_calls += moved;
      // Each exchanged qubit pair keeps half of the amplitudes at home;
      // m pairs keep 2^-m of them.
      const std::uint64_t total = std::uint64_t{1} << num_qubits;
      const std::uint64_t kept = total >> s->qubits.size();
      r.bytes_moved += moved * (total - kept) * amplitude_bytes;
    }
  }
  return r;
}

inline CostReport count_cost(const ApplyPlan& plan) { return count_cost(plan, plan.num_qubits); }

template <class T>
class Applier {
 public:
  Applier(Mesh& mesh, const Hamiltonian& h, Tiling tiling = {})
      : Applier(mesh, h, plan_schedule(h, QubitLayout(h.num_qubits, mesh.global_qubits())), tiling) {}

  Applier(Mesh& mesh, const Hamiltonian& h, ApplyPlan plan, Tiling tiling = {})
      : mesh_(&mesh), plan_(std::move(plan)), scratch_(mesh, h.num_qubits, tiling) {
    if (h.block_size != tiling.lane_bits) {
      throw ConfigError("block size " + std::to_string(h.block_size) + " must equal the lane width " +
                        std::to_string(tiling.lane_bits));
    }
    if (plan_.num_qubits != h.num_qubits || plan_.block_size != h.block_size) {
      throw ContractError("Applier: plan was made for a different Hamiltonian");
    }
    // Each worker gets its own copy of every block matrix in lane order.
    for (const auto& step : plan_.steps) {
      const auto* m = std::get_if<MultiplyStep>(&step);
      if (m == nullptr) continue;
      const DenseMatrix lane = detail::lane_ordered(h.terms.at(m->block), m->lane_qubits);
      const std::vector<Complex> entries(lane.data().begin(), lane.data().end());
      const auto copies = mesh.broadcast(entries);
      std::vector<KernelMatrix<T>> per_worker;
      per_worker.reserve(copies.size());
      for (const auto& c : copies) {
        DenseMatrix w(lane.dim());
        std::copy(c.begin(), c.end(), w.data().begin());
        per_worker.emplace_back(w);
      }
      kernels_.push_back(std::move(per_worker));
    }
    for (std::size_t s = 0; s < scratch_.num_shards(); ++s) workspace_.buffer(s, scratch_.shard_size());
  }

  const ApplyPlan& plan() const noexcept { return plan_; }

  // out = H psi. psi is redistributed during the call and restored exactly.
  void apply(ShardedState<T>& psi, ShardedState<T>& out) {
    if (&psi == &out) throw ContractError("apply: input and output must be distinct states");
    if (&psi.mesh() != mesh_ || &out.mesh() != mesh_) throw ContractError("apply: state lives on another mesh");
    if (psi.num_qubits() != plan_.num_qubits || out.num_qubits() != plan_.num_qubits) {
      throw ContractError("apply: qubit count mismatch");
    }
    if (!(psi.layout() == plan_.initial_layout)) throw ContractError("apply: state layout differs from the plan's");
    out.assign_layout(psi.layout());
    set_zero(out);
    const std::size_t rows = psi.shard_size() >> plan_.block_size;
    std::size_t multiply_index = 0;
    for (const auto& step : plan_.steps) {
      std::visit(
          [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, SwapStep>) {
              if (s.operands & operand::input) swap(psi, s.qubits);
              if (s.operands & operand::accumulator) swap(out, s.qubits);
              if (s.operands & operand::scratch) swap(scratch_, s.qubits);
              if (s.relabel_accumulator) {
                QubitLayout next = out.layout();
                for (const auto& [g, l] : s.qubits) next.swap_positions(next.position_of(g), next.position_of(l));
                out.assign_layout(std::move(next));
              }
            } else if constexpr (std::is_same_v<S, LoadStep>) {
              const QubitLayout target = psi.layout().with_targets_last(s.targets);
              const BitGather gather = local_relayout(psi.layout(), target);
              mesh_->for_each_shard([&](std::size_t sh) { gather.gather(psi.shard(sh).data(), scratch_.shard(sh).data()); });
              scratch_.assign_layout(target);
            } else if constexpr (std::is_same_v<S, PermuteStep>) {
              permute_local(scratch_, s.targets, &workspace_);
            } else if constexpr (std::is_same_v<S, MultiplyStep>) {
              const auto& k = kernels_.at(multiply_index++);
              if (s.source == Source::input) {
                if (!(out.layout() == psi.layout())) throw ContractError("apply: fused multiply needs equal layouts");
                check_lanes(psi.layout(), s.lane_qubits);
                mesh_->for_each_shard([&](std::size_t sh) {
                  multiply_rows(k[sh], psi.shard(sh).data(), out.shard(sh).data(), rows, true);
                });
              } else {
                check_lanes(scratch_.layout(), s.lane_qubits);
                mesh_->for_each_shard([&](std::size_t sh) {
                  multiply_rows(k[sh], scratch_.shard(sh).data(), scratch_.shard(sh).data(), rows, false);
                });
              }
            } else if constexpr (std::is_same_v<S, AccumulateStep>) {
              const BitGather gather = local_relayout(scratch_.layout(), out.layout());
              mesh_->for_each_shard(
                  [&](std::size_t sh) { gather.gather_add(scratch_.shard(sh).data(), out.shard(sh).data()); });
            }
          },
          step);
    }
  }

 private:
  void swap(ShardedState<T>& state, const std::vector<std::pair<int, int>>& qubits) {
    std::vector<std::pair<int, int>> positions;
    for (const auto& [g, l] : qubits) positions.emplace_back(state.layout().position_of(g), state.layout().position_of(l));
    swap_global_local(state, std::span<const std::pair<int, int>>(positions), &workspace_);
  }

  void check_lanes(const QubitLayout& layout, const std::vector<int>& lanes) const {
    if (detail::lane_qubits(layout, plan_.block_size) != lanes) throw ContractError("apply: lane qubits out of place");
  }

  Mesh* mesh_;
  ApplyPlan plan_;
  ShardedState<T> scratch_;
  ShardWorkspace<T> workspace_;
  std::vector<std::vector<KernelMatrix<T>>> kernels_;
};

// out = H psi through a temporary Applier.
template <class T>
void apply_hamiltonian(const Hamiltonian& h, ShardedState<T>& psi, ShardedState<T>& out) {
  Applier<T> applier(psi.mesh(), h, plan_schedule(h, psi.layout()), psi.tiling());
  applier.apply(psi, out);
}

// state <- (single term) state; the term is padded to a block of the lane width.
template <class T>
void apply_term(ShardedState<T>& state, const LocalTerm& term) {
  const Hamiltonian h = block_terms({term}, state.num_qubits(), state.tiling().lane_bits);
  ShardedState<T> out(state.mesh(), state.num_qubits(), state.tiling());
  apply_hamiltonian(h, state, out);
  state = std::move(out);
}

// Multiplies the block held by the last lane positions, in place:
// every row of 2^lane amplitudes becomes h * row (h in lane order).
template <class T>
void multiply_last_block(ShardedState<T>& state, const DenseMatrix& h) {
  if (h.dim() != (std::size_t{1} << state.tiling().lane_bits)) {
    throw ConfigError("multiply_last_block: matrix size must be 2^lane");
  }
  const auto copies = state.mesh().broadcast(std::vector<Complex>(h.data().begin(), h.data().end()));
  const std::size_t rows = state.shard_size() >> state.tiling().lane_bits;
  state.mesh().for_each_shard([&](std::size_t s) {
    DenseMatrix local(h.dim());
    std::copy(copies[s].begin(), copies[s].end(), local.data().begin());
    const KernelMatrix<T> k(local);
    multiply_rows(k, state.shard(s).data(), state.shard(s).data(), rows, false);
  });
}

}  // namespace shardsim

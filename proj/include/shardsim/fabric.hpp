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

// Virtual core mesh: a fixed set of lockstep workers, one logical worker per
// shard, exchanging data only through the collectives below. Work is issued
// in supersteps (for_each_shard); every superstep and every collective is a
// full barrier, and all collectives reduce or route in a fixed order so their
// results do not depend on thread scheduling.

#include <algorithm>
#include <complex>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "shardsim/errors.hpp"

namespace shardsim {

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

constexpr int log2_exact(std::size_t n) noexcept {
  int bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  return bits;
}

// Worker parallelism cap: QSV_THREADS if set, otherwise the hardware thread count.
inline std::size_t default_thread_count() {
  if (const char* env = std::getenv("QSV_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && value > 0) return static_cast<std::size_t>(value);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

struct SlotAddress {
  std::size_t worker = 0;
  std::size_t slot = 0;
  friend bool operator==(const SlotAddress&, const SlotAddress&) = default;
};

// Bijection (sender, slot) -> (receiver, slot) for all_to_all.
class Routing {
 public:
  Routing(std::size_t workers, std::size_t slots, std::vector<SlotAddress> destinations)
      : workers_(workers), slots_(slots), dest_(std::move(destinations)) {
    if (dest_.size() != workers_ * slots_) {
      throw ContractError("routing: expected " + std::to_string(workers_ * slots_) + " destinations, got " +
                          std::to_string(dest_.size()));
    }
    src_.assign(dest_.size(), SlotAddress{workers_, slots_});
    for (std::size_t w = 0; w < workers_; ++w) {
      for (std::size_t k = 0; k < slots_; ++k) {
        const SlotAddress& d = dest_[w * slots_ + k];
        if (d.worker >= workers_ || d.slot >= slots_) throw ContractError("routing: destination out of range");
        SlotAddress& back = src_[d.worker * slots_ + d.slot];
        if (back.worker != workers_) throw ContractError("routing: not a bijection");
        back = SlotAddress{w, k};
      }
    }
  }

  template <class F>
  static Routing from_function(std::size_t workers, std::size_t slots, F&& destination_of) {
    std::vector<SlotAddress> dest;
    dest.reserve(workers * slots);
    for (std::size_t w = 0; w < workers; ++w) {
      for (std::size_t k = 0; k < slots; ++k) dest.push_back(destination_of(w, k));
    }
    return Routing(workers, slots, std::move(dest));
  }

  static Routing identity(std::size_t workers, std::size_t slots) {
    return from_function(workers, slots, [](std::size_t w, std::size_t k) { return SlotAddress{w, k}; });
  }

  // Classic all-to-all: slot k of worker w lands in slot w of worker k.
  static Routing transpose(std::size_t workers) {
    return from_function(workers, workers, [](std::size_t w, std::size_t k) { return SlotAddress{k, w}; });
  }

  Routing inverse() const { return Routing(workers_, slots_, src_); }

  std::size_t workers() const noexcept { return workers_; }
  std::size_t slots() const noexcept { return slots_; }
  const SlotAddress& destination(std::size_t worker, std::size_t slot) const { return dest_[worker * slots_ + slot]; }
  const SlotAddress& source(std::size_t worker, std::size_t slot) const { return src_[worker * slots_ + slot]; }

 private:
  std::size_t workers_;
  std::size_t slots_;
  std::vector<SlotAddress> dest_;
  std::vector<SlotAddress> src_;
};

struct CollectiveCounters {
  std::size_t supersteps = 0;
  std::size_t all_to_all_calls = 0;
  std::size_t bytes_moved = 0;  // bytes that crossed worker boundaries
  std::size_t all_reduce_calls = 0;
  std::size_t broadcast_calls = 0;
};

class Mesh {
 public:
  explicit Mesh(std::size_t num_shards, std::size_t max_threads = default_thread_count())
      : num_shards_(num_shards) {
    if (!is_power_of_two(num_shards)) {
      throw ConfigError("mesh size must be a power of two, got " + std::to_string(num_shards));
    }
    if (max_threads == 0) max_threads = 1;
    num_threads_ = std::min(num_shards_, max_threads);
    threads_.reserve(num_threads_ - 1);
    for (std::size_t t = 1; t < num_threads_; ++t) {
      threads_.emplace_back([this, t] { worker_loop(t); });
    }
  }

  ~Mesh() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    start_cv_.notify_all();
    threads_.clear();
  }

  Mesh(const Mesh&) = delete;
  Mesh& operator=(const Mesh&) = delete;

  std::size_t num_shards() const noexcept { return num_shards_; }
  int global_qubits() const noexcept { return log2_exact(num_shards_); }
  std::size_t num_threads() const noexcept { return num_threads_; }

  // Runs fn(shard) for every shard, each shard on its owning worker, and
  // returns once all have finished. The first exception thrown is rethrown.
  template <class F>
  void for_each_shard(F&& fn) {
    if (in_superstep()) throw ContractError("for_each_shard: nested supersteps are not allowed");
    ++counters_.supersteps;
    using Fn = std::remove_reference_t<F>;
    Task task{const_cast<void*>(static_cast<const void*>(&fn)),
              [](void* ctx, std::size_t shard) { (*static_cast<Fn*>(ctx))(shard); }};
    run(task);
  }

  // Moves segment `slot` of send[w] to the slot given by the routing. Every
  // buffer is split into routing.slots() equal segments.
  template <class T>
  void all_to_all(std::span<const std::span<const T>> send, std::span<const std::span<T>> recv,
                  const Routing& routing) {
    if (send.size() != num_shards_ || recv.size() != num_shards_ || routing.workers() != num_shards_) {
      throw ContractError("all_to_all: one buffer per worker required");
    }
    const std::size_t slots = routing.slots();
    const std::size_t total = send[0].size();
    if (slots == 0 || total % slots != 0) throw ContractError("all_to_all: buffer size not divisible by slot count");
    for (std::size_t w = 0; w < num_shards_; ++w) {
      if (send[w].size() != total || recv[w].size() != total) {
        throw ContractError("all_to_all: mismatched buffer sizes");
      }
    }
    const std::size_t seg = total / slots;
    for_each_shard([&](std::size_t r) {
      for (std::size_t k = 0; k < slots; ++k) {
        const SlotAddress& from = routing.source(r, k);
        const T* src = send[from.worker].data() + from.slot * seg;
        std::copy(src, src + seg, recv[r].data() + k * seg);
      }
    });
    std::size_t crossing = 0;
    for (std::size_t w = 0; w < num_shards_; ++w) {
      for (std::size_t k = 0; k < slots; ++k) crossing += routing.destination(w, k).worker != w;
    }
    ++counters_.all_to_all_calls;
    counters_.bytes_moved += crossing * seg * sizeof(T);
  }

  template <class T>
  void all_to_all(const std::vector<std::vector<T>>& send, std::vector<std::vector<T>>& recv, const Routing& routing) {
    std::vector<std::span<const T>> s(send.begin(), send.end());
    std::vector<std::span<T>> r(recv.begin(), recv.end());
    all_to_all<T>(std::span<const std::span<const T>>(s), std::span<const std::span<T>>(r), routing);
  }

  // Sum of one contribution per worker, accumulated in ascending shard order.
  std::complex<double> all_reduce_sum(std::span<const std::complex<double>> contributions) {
    if (contributions.size() != num_shards_) throw ContractError("all_reduce_sum: one contribution per worker required");
    std::complex<double> sum{0.0, 0.0};
    for (const auto& c : contributions) sum += c;
    ++counters_.all_reduce_calls;
    return sum;
  }

  // Elementwise sum of equally sized per-worker buffers. Each element is
  // reduced in ascending shard order; the index range is split into chunks
  // that are reduced in parallel.
  template <class T>
  std::vector<T> all_reduce_sum(const std::vector<std::vector<T>>& per_worker) {
    if (per_worker.size() != num_shards_) throw ContractError("all_reduce_sum: one buffer per worker required");
    const std::size_t n = per_worker[0].size();
    for (const auto& b : per_worker) {
      if (b.size() != n) throw ContractError("all_reduce_sum: mismatched buffer sizes");
    }
    std::vector<T> out(n, T{});
    const std::size_t chunk = (n + num_shards_ - 1) / num_shards_;
    for_each_shard([&](std::size_t s) {
      const std::size_t lo = std::min(n, s * chunk);
      const std::size_t hi = std::min(n, lo + chunk);
      for (std::size_t w = 0; w < num_shards_; ++w) {
        const T* src = per_worker[w].data();
        for (std::size_t i = lo; i < hi; ++i) out[i] += src[i];
      }
    });
    ++counters_.all_reduce_calls;
    return out;
  }

  // Copies buffers[root] into every other worker's buffer.
  template <class T>
  void broadcast(std::vector<std::vector<T>>& buffers, std::size_t root) {
    if (root >= num_shards_) throw ConfigError("broadcast: invalid root " + std::to_string(root));
    if (buffers.size() != num_shards_) throw ContractError("broadcast: one buffer per worker required");
    for_each_shard([&](std::size_t s) {
      if (s != root) buffers[s] = buffers[root];
    });
    ++counters_.broadcast_calls;
  }

  template <class T>
  std::vector<std::vector<T>> broadcast(const std::vector<T>& value) {
    std::vector<std::vector<T>> buffers(num_shards_);
    buffers[0] = value;
    broadcast(buffers, 0);
    return buffers;
  }

  const CollectiveCounters& counters() const noexcept { return counters_; }
  void reset_counters() noexcept { counters_ = {}; }

 private:
  struct Task {
    void* ctx = nullptr;
    void (*invoke)(void*, std::size_t) = nullptr;
  };

  static bool& in_superstep() {
    thread_local bool flag = false;
    return flag;
  }

  void run_share(const Task& task, std::size_t thread_index) {
    in_superstep() = true;
    try {
      for (std::size_t s = thread_index; s < num_shards_; s += num_threads_) task.invoke(task.ctx, s);
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
    in_superstep() = false;
  }

  void run(const Task& task) {
    if (threads_.empty()) {
      run_share(task, 0);
    } else {
      {
        std::lock_guard lock(mu_);
        task_ = task;
        pending_ = threads_.size();
        ++generation_;
      }
      start_cv_.notify_all();
      run_share(task, 0);
      std::unique_lock lock(mu_);
      done_cv_.wait(lock, [&] { return pending_ == 0; });
    }
    std::exception_ptr err;
    {
      std::lock_guard lock(mu_);
      std::swap(err, error_);
    }
    if (err) std::rethrow_exception(err);
  }

  void worker_loop(std::size_t thread_index) {
    std::uint64_t seen = 0;
    for (;;) {
      Task task;
      {
        std::unique_lock lock(mu_);
        start_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
        if (stopping_) return;
        seen = generation_;
        task = task_;
      }
      run_share(task, thread_index);
      {
        std::lock_guard lock(mu_);
        if (--pending_ == 0) done_cv_.notify_one();
      }
    }
  }

  std::size_t num_shards_;
  std::size_t num_threads_ = 1;
  CollectiveCounters counters_;

  std::mutex mu_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  std::uint64_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stopping_ = false;
  Task task_;
  std::exception_ptr error_;
  std::vector<std::jthread> threads_;
};

}  // namespace shardsim

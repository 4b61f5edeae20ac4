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

// Batch pipelines behind the command-line driver: configuration resolution,
// the ground-state, evolution and apply-benchmark experiments, and their
// JSON/CSV outputs. Every run writes a manifest with the resolved
// configuration, seeds, precision, shard and thread counts and wall times.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <unistd.h>
#include <vector>

#include "json.hpp"
#include "shardsim/apply.hpp"
#include "shardsim/checkpoint.hpp"
#include "shardsim/errors.hpp"
#include "shardsim/evolve.hpp"
#include "shardsim/hamiltonian.hpp"
#include "shardsim/hamiltonian_file.hpp"
#include "shardsim/lanczos.hpp"
#include "shardsim/observables.hpp"
#include "shardsim/state.hpp"

namespace shardsim {

using Json = nlohmann::ordered_json;

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Configuration

inline Json common_defaults() {
  return Json{{"shards", 1},       {"threads", 0},       {"precision", "double"}, {"sublane_bits", 3},
              {"lane_bits", 7},    {"output_dir", "."}, {"hamiltonian", ""},      {"checkpoint_out", ""}};
}

inline Json ground_state_defaults() {
  Json d = common_defaults();
  d.update(Json{{"N", 12},
                {"J", -1.0},
                {"Delta", 0.5},
                {"periodic", true},
                {"krylov_dim", 100},
                {"breakdown", 1e-12},
                {"seed", 1},
                {"correlator", "X"},
                {"max_subsystem", 0}});
  return d;
}

inline Json evolve_defaults() {
  Json d = common_defaults();
  d.update(Json{{"N", 16},
                {"locality", 6},
                {"seed", 1234},
                {"t", 10.0},
                {"dt", kDefaultTimeStep},
                {"order", 6},
                {"sample_every", 25},
                {"subsystems", Json::array({1, 2, 4, 8})},
                {"initial_state", ""},
                {"initial_checkpoint", ""},
                {"renormalize", false}});
  return d;
}

inline Json bench_defaults() {
  Json d = common_defaults();
  d["precision"] = "single";
  d.update(Json{{"N_min", 20},
                {"N_max", 26},
                {"shard_counts", Json::array({1, 4})},
                {"repetitions", 3},
                {"warmup", 1},
                {"seed", 7},
                {"memory_limit_mb", 0}});
  d.erase("shards");
  d.erase("checkpoint_out");
  return d;
}

namespace detail {

inline bool same_kind(const Json& expected, const Json& given) {
  if (expected.is_number_integer()) return given.is_number_integer();
  if (expected.is_number()) return given.is_number();
  if (expected.is_array()) return given.is_array();
  return expected.type() == given.type();
}

inline void set_key(Json& cfg, const std::string& key, const Json& value) {
  if (!cfg.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  if (!same_kind(cfg[key], value)) {
    throw ConfigError("config key '" + key + "' expects " + std::string(cfg[key].type_name()) + ", got " +
                      value.dump());
  }
  cfg[key] = value;
}

}  // namespace detail

// defaults <- document <- overrides ("key=value"; the value is parsed as JSON
// when possible and taken as a string otherwise).
inline Json resolve_config(Json defaults, const Json& document, const std::vector<std::string>& overrides = {}) {
  if (!document.is_null()) {
    if (!document.is_object()) throw ConfigError("config document must be a JSON object");
    for (const auto& [key, value] : document.items()) detail::set_key(defaults, key, value);
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not of the form key=value");
    const std::string key = o.substr(0, eq);
    const std::string text = o.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    detail::set_key(defaults, key, value);
  }
  return defaults;
}

inline Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file " + path + " is not valid JSON");
  return doc;
}

namespace detail {

inline Tiling tiling_of(const Json& cfg) { return Tiling{cfg["sublane_bits"].get<int>(), cfg["lane_bits"].get<int>()}; }

inline std::size_t threads_of(const Json& cfg) {
  const int t = cfg["threads"].get<int>();
  if (t < 0) throw ConfigError("threads must be non-negative");
  return t == 0 ? default_thread_count() : static_cast<std::size_t>(t);
}

inline std::size_t positive_size(const Json& cfg, const char* key) {
  const auto v = cfg[key].get<long long>();
  if (v <= 0) throw ConfigError(std::string("config key '") + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

inline bool is_double_precision(const Json& cfg) {
  const auto p = cfg["precision"].get<std::string>();
  if (p == "double") return true;
  if (p == "single") return false;
  throw ConfigError("precision must be 'single' or 'double', got '" + p + "'");
}

inline DenseMatrix pauli_by_name(const std::string& name) {
  if (name == "X") return pauli::x();
  if (name == "Y") return pauli::y();
  if (name == "Z") return pauli::z();
  throw ConfigError("correlator must be X, Y or Z, got '" + name + "'");
}

inline std::filesystem::path output_path(const Json& cfg, const std::string& name) {
  const std::filesystem::path dir = cfg["output_dir"].get<std::string>();
  std::filesystem::create_directories(dir);
  return dir / name;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Terms from the configured file, or from `fallback` when no file is set.
inline HamiltonianSpec hamiltonian_from(const Json& cfg, const std::function<HamiltonianSpec(int)>& fallback) {
  const int n = cfg["N"].get<int>();
  const auto path = cfg["hamiltonian"].get<std::string>();
  if (path.empty()) return fallback(n);
  HamiltonianSpec spec = read_hamiltonian_file(path);
  if (spec.num_qubits != n) {
    throw ConfigError("Hamiltonian file has N=" + std::to_string(spec.num_qubits) + " but config N=" + std::to_string(n));
  }
  return spec;
}

inline Json manifest(const std::string& command, const Json& cfg, std::size_t shards, std::size_t threads,
                     const Json& wall_times, const Json& outputs) {
  return Json{{"schema_version", kManifestSchemaVersion},
              {"tool", "shardsim"},
              {"version", kVersion},
              {"command", command},
              {"config", cfg},
              {"precision", cfg.value("precision", "double")},
              {"shards", shards},
              {"threads", threads},
              {"wall_time_seconds", wall_times},
              {"outputs", outputs}};
}

template <class T>
Json ground_state_impl(const Json& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Tiling tiling = tiling_of(cfg);
  const std::size_t shards = positive_size(cfg, "shards");
  const std::size_t threads = threads_of(cfg);
  const auto spec = hamiltonian_from(cfg, [&](int n) {
    return HamiltonianSpec{n, build_xxz(n, cfg["J"].get<double>(), cfg["Delta"].get<double>(), cfg["periodic"].get<bool>())};
  });
  const int n = spec.num_qubits;
  const Hamiltonian h = block_terms(spec.terms, n, tiling.lane_bits);
  Mesh mesh(shards, threads);

  const auto t_solve = std::chrono::steady_clock::now();
  RitzPair<T> gs = ground_state<T>(mesh, h, cfg["seed"].get<std::uint64_t>(), positive_size(cfg, "krylov_dim"),
                                   cfg["breakdown"].get<double>(), tiling);
  const double solve_seconds = seconds_since(t_solve);

  ShardedState<T> residual_vec(mesh, n, tiling);
  apply_hamiltonian(h, gs.vector, residual_vec);
  axpy(-gs.value, gs.vector, residual_vec);
  const double residual_direct = norm(residual_vec);

  const auto t_obs = std::chrono::steady_clock::now();
  const DenseMatrix op = pauli_by_name(cfg["correlator"].get<std::string>());
  const auto corr_path = output_path(cfg, "correlators.csv");
  {
    std::ofstream out(corr_path);
    out.precision(17);
    out << "distance,connected_correlator\n";
    for (int j = 1; j < n; ++j) out << j << ',' << connected_correlator(gs.vector, op, 0, op, j) << '\n';
  }
  int max_m = cfg["max_subsystem"].get<int>();
  if (max_m <= 0) max_m = std::min({n / 2, kRdmQubitCap, gs.vector.num_local()});
  const auto entropy_path = output_path(cfg, "entropy.csv");
  {
    std::ofstream out(entropy_path);
    out.precision(17);
    out << "subsystem_size,renyi2\n";
    for (int m = 1; m <= max_m; ++m) {
      std::vector<int> a(m);
      std::iota(a.begin(), a.end(), 0);
      out << m << ',' << renyi2(reduced_density_matrix(gs.vector, a)) << '\n';
    }
  }
  const double observable_seconds = seconds_since(t_obs);

  Json outputs = Json::array({corr_path.string(), entropy_path.string()});
  if (const auto ck = cfg["checkpoint_out"].get<std::string>(); !ck.empty()) {
    save_checkpoint(ck, gs.vector);
    outputs.push_back(ck);
  }
  const Json energy{{"energy", gs.value},
                    {"residual", gs.residual},
                    {"residual_direct", residual_direct},
                    {"iterations", gs.tridiag.alphas.size()},
                    {"terminated_early", gs.tridiag.terminated_early},
                    {"shift", gs.shift},
                    {"wall_time", solve_seconds}};
  const auto energy_path = output_path(cfg, "energy.json");
  write_json(energy_path, energy);
  outputs.push_back(energy_path.string());
  const auto manifest_path = output_path(cfg, "manifest.json");
  outputs.push_back(manifest_path.string());
  Json m = manifest("ground-state", cfg, shards, mesh.num_threads(),
                    Json{{"lanczos", solve_seconds}, {"observables", observable_seconds}, {"total", seconds_since(start)}},
                    outputs);
  m["result"] = energy;
  write_json(manifest_path, m);
  return m;
}

template <class T>
Json evolve_impl(const Json& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Tiling tiling = tiling_of(cfg);
  const std::size_t shards = positive_size(cfg, "shards");
  const std::size_t threads = threads_of(cfg);
  const auto plan = EvolutionPlan::for_duration(cfg["t"].get<double>(), cfg["dt"].get<double>(), cfg["order"].get<int>(),
                                                cfg["renormalize"].get<bool>());
  const std::size_t sample_every = positive_size(cfg, "sample_every");
  const auto spec = hamiltonian_from(cfg, [&](int n) {
    return HamiltonianSpec{n, build_random_local(n, cfg["locality"].get<int>(), cfg["seed"].get<std::uint64_t>())};
  });
  const int n = spec.num_qubits;
  std::vector<int> sizes;
  for (const auto& m : cfg["subsystems"]) {
    if (!m.is_number_integer() || m.get<int>() < 1 || m.get<int>() > n) {
      throw ConfigError("subsystems must be sizes in [1, N]");
    }
    sizes.push_back(m.get<int>());
  }
  const Hamiltonian h = block_terms(spec.terms, n, tiling.lane_bits);
  Mesh mesh(shards, threads);

  ShardedState<T> psi = [&] {
    if (const auto ck = cfg["initial_checkpoint"].get<std::string>(); !ck.empty()) {
      ShardedState<T> s = load_checkpoint<T>(ck, mesh, tiling);
      if (s.num_qubits() != n) throw ConfigError("initial checkpoint has the wrong qubit count");
      return s;
    }
    std::string bits = cfg["initial_state"].get<std::string>();
    if (bits.empty()) bits.assign(n, '0');
    return init_product_state<T>(mesh, n, bits, tiling);
  }();

  std::vector<SampleRow> rows;
  std::vector<Observer<T>> observers{{sample_every, [&](std::size_t, double t, ShardedState<T>& s) {
                                        for (int m : sizes) {
                                          std::vector<int> a(m);
                                          std::iota(a.begin(), a.end(), 0);
                                          rows.push_back({t, "S2", "0-" + std::to_string(m - 1),
                                                          renyi2(reduced_density_matrix(s, a))});
                                        }
                                        rows.push_back({t, "norm", "all", norm(s)});
                                      }}};
  const auto t_evolve = std::chrono::steady_clock::now();
  evolve(psi, h, plan, observers);
  const double evolve_seconds = seconds_since(t_evolve);

  const auto series_path = output_path(cfg, "time_series.csv");
  {
    std::ofstream out(series_path);
    write_samples_csv(out, rows);
    if (!out) throw std::runtime_error("cannot write " + series_path.string());
  }
  Json outputs = Json::array({series_path.string()});
  if (const auto ck = cfg["checkpoint_out"].get<std::string>(); !ck.empty()) {
    save_checkpoint(ck, psi);
    outputs.push_back(ck);
  }
  const auto manifest_path = output_path(cfg, "manifest.json");
  outputs.push_back(manifest_path.string());
  Json m = manifest("evolve", cfg, shards, mesh.num_threads(),
                    Json{{"evolve", evolve_seconds}, {"total", seconds_since(start)}}, outputs);
  m["result"] = Json{{"steps", plan.steps}, {"final_norm", norm(psi)}, {"samples", rows.size()}};
  write_json(manifest_path, m);
  return m;
}

inline std::size_t physical_memory_bytes() {
  const long pages = sysconf(_SC_PHYS_PAGES);
  const long page = sysconf(_SC_PAGE_SIZE);
  return pages > 0 && page > 0 ? static_cast<std::size_t>(pages) * static_cast<std::size_t>(page) : 0;
}

template <class T>
Json bench_impl(const Json& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Tiling tiling = tiling_of(cfg);
  const std::size_t threads = threads_of(cfg);
  const int n_min = cfg["N_min"].get<int>();
  const int n_max = cfg["N_max"].get<int>();
  const long long reps = cfg["repetitions"].get<long long>();
  const long long warmup = cfg["warmup"].get<long long>();
  if (reps <= 0) throw ConfigError("repetitions must be positive");
  if (warmup < 0) throw ConfigError("warmup must be non-negative");
  if (n_min < 1 || n_max < n_min) throw ConfigError("need 1 <= N_min <= N_max");
  std::vector<std::size_t> shard_counts;
  for (const auto& s : cfg["shard_counts"]) {
    if (!s.is_number_integer() || s.get<long long>() <= 0) throw ConfigError("shard_counts must be positive integers");
    shard_counts.push_back(s.get<std::size_t>());
  }
  if (shard_counts.empty()) throw ConfigError("shard_counts must not be empty");

  // Input, output, scratch and one relayout buffer, plus a state of headroom.
  const std::size_t limit = cfg["memory_limit_mb"].get<long long>() > 0
                                ? static_cast<std::size_t>(cfg["memory_limit_mb"].get<long long>()) << 20
                                : physical_memory_bytes() / 10 * 8;
  const std::size_t estimate = 5 * (std::size_t{1} << n_max) * sizeof(std::complex<T>);
  if (estimate > limit) {
    throw RefusalError("benchmark at N=" + std::to_string(n_max) + " needs about " + std::to_string(estimate >> 20) +
                       " MiB; the limit is " + std::to_string(limit >> 20) + " MiB");
  }

  Json points = Json::array();
  for (std::size_t shards : shard_counts) {
    Mesh mesh(shards, threads);
    for (int n = n_min; n <= n_max; ++n) {
      const Hamiltonian h = block_terms(build_xxz(n, -1.0, 0.5, true), n, tiling.lane_bits);
      ShardedState<T> psi = init_random_state<T>(mesh, n, cfg["seed"].get<std::uint64_t>(), tiling);
      ShardedState<T> out(mesh, n, tiling);
      Applier<T> applier(mesh, h, tiling);
      for (long long w = 0; w < warmup; ++w) applier.apply(psi, out);
      std::vector<double> times;
      for (long long r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        applier.apply(psi, out);
        times.push_back(seconds_since(t0));
      }
      const CostReport c = count_cost(applier.plan(), n, sizeof(std::complex<T>));
      points.push_back(Json{{"N", n},
                            {"shards", shards},
                            {"threads", mesh.num_threads()},
                            {"mean_seconds", std::accumulate(times.begin(), times.end(), 0.0) / times.size()},
                            {"min_seconds", *std::min_element(times.begin(), times.end())},
                            {"repetitions", reps},
                            {"cost", Json{{"padded_flops", c.padded_flops},
                                          {"unpadded_flops", c.unpadded_flops},
                                          {"naive_padded_flops", c.naive_padded_flops},
                                          {"swaps", c.swaps},
                                          {"all_to_all_calls", c.all_to_all_calls},
                                          {"bytes_moved", c.bytes_moved}}}});
    }
  }
  const auto bench_path = output_path(cfg, "bench.json");
  write_json(bench_path, Json{{"points", points}});
  const auto manifest_path = output_path(cfg, "manifest.json");
  Json m = manifest("bench", cfg, shard_counts.back(), threads, Json{{"total", seconds_since(start)}},
                    Json::array({bench_path.string(), manifest_path.string()}));
  m["result"] = Json{{"points", points}};
  write_json(manifest_path, m);
  return m;
}

}  // namespace detail

inline Json run_ground_state(const Json& cfg) {
  return detail::is_double_precision(cfg) ? detail::ground_state_impl<double>(cfg) : detail::ground_state_impl<float>(cfg);
}

inline Json run_evolve(const Json& cfg) {
  return detail::is_double_precision(cfg) ? detail::evolve_impl<double>(cfg) : detail::evolve_impl<float>(cfg);
}

inline Json run_apply_benchmark(const Json& cfg) {
  return detail::is_double_precision(cfg) ? detail::bench_impl<double>(cfg) : detail::bench_impl<float>(cfg);
}

// Header summary of a checkpoint file plus its squared norm.
inline Json inspect_checkpoint(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  const CheckpointHeader h = parse_checkpoint_header(bytes);
  Mesh mesh(1, 1);
  const Tiling tiling{0, 0};
  double norm2 = 0.0;
  if (h.precision == Precision::fp64) {
    const auto s = load_checkpoint<double>(path, mesh, tiling);
    norm2 = inner_product(s, s).real();
  } else {
    const auto s = load_checkpoint<float>(path, mesh, tiling);
    norm2 = inner_product(s, s).real();
  }
  return Json{{"path", path},
              {"version", h.version},
              {"precision", to_string(h.precision)},
              {"num_qubits", h.num_qubits},
              {"bytes", bytes.size()},
              {"norm_squared", norm2}};
}

// Loads `in` and writes it to `out` at the requested precision (widening
// only).
inline Json convert_checkpoint(const std::string& in, const std::string& out, const std::string& precision) {
  Mesh mesh(1, 1);
  const Tiling tiling{0, 0};
  if (precision == "double") {
    save_checkpoint(out, load_checkpoint<double>(in, mesh, tiling));
  } else if (precision == "single") {
    save_checkpoint(out, load_checkpoint<float>(in, mesh, tiling));
  } else {
    throw ConfigError("precision must be 'single' or 'double'");
  }
  return inspect_checkpoint(out);
}

}  // namespace shardsim

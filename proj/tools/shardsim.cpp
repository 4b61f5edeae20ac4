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


// Command-line driver: ground-state, evolve, bench and checkpoint.
//
//   shardsim ground-state --config run.json --set N=12 --set shards=4
//   shardsim evolve --set t=10 --set dt=0.02
//   shardsim bench --set N_min=20 --set N_max=24
//   shardsim checkpoint inspect state.qsv
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error,
// 3 refused (over a resource cap).

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shardsim/pipelines.hpp"

namespace {

struct PipelineOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  bool print_config = false;
};

void add_pipeline_options(CLI::App* cmd, PipelineOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON configuration document")->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.overrides, "Override a configuration key (key=value); repeatable");
  cmd->add_flag("--print-config", opts.print_config, "Print the resolved configuration and exit");
}

shardsim::Json resolve(const shardsim::Json& defaults, const PipelineOptions& opts) {
  const shardsim::Json doc = opts.config_path.empty() ? shardsim::Json() : shardsim::load_config_file(opts.config_path);
  return shardsim::resolve_config(defaults, doc, opts.overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sharded state-vector simulator for local Hamiltonians"};
  app.require_subcommand(1);

  PipelineOptions gs_opts, ev_opts, bench_opts;
  auto* gs = app.add_subcommand("ground-state", "Lanczos ground state, correlators and entanglement");
  add_pipeline_options(gs, gs_opts);
  auto* ev = app.add_subcommand("evolve", "Time evolution with Renyi-entropy sampling");
  add_pipeline_options(ev, ev_opts);
  auto* bench = app.add_subcommand("bench", "Time H|psi> across qubit and shard counts");
  add_pipeline_options(bench, bench_opts);

  auto* ck = app.add_subcommand("checkpoint", "Inspect or convert state checkpoints");
  ck->require_subcommand(1);
  std::string ck_in, ck_out, ck_precision = "double";
  auto* ck_inspect = ck->add_subcommand("inspect", "Print the header and norm of a checkpoint");
  ck_inspect->add_option("file", ck_in, "Checkpoint file")->required();
  auto* ck_convert = ck->add_subcommand("convert", "Rewrite a checkpoint at another precision (widening only)");
  ck_convert->add_option("input", ck_in, "Source checkpoint")->required();
  ck_convert->add_option("output", ck_out, "Destination checkpoint")->required();
  ck_convert->add_option("--precision", ck_precision, "single or double")->check(CLI::IsMember({"single", "double"}));

  CLI11_PARSE(app, argc, argv);

  try {
    shardsim::Json result;
    auto run = [&](const PipelineOptions& opts, const shardsim::Json& defaults, auto pipeline) {
      const shardsim::Json cfg = resolve(defaults, opts);
      if (opts.print_config) return cfg;
      return pipeline(cfg);
    };
    if (*gs) {
      result = run(gs_opts, shardsim::ground_state_defaults(), shardsim::run_ground_state);
    } else if (*ev) {
      result = run(ev_opts, shardsim::evolve_defaults(), shardsim::run_evolve);
    } else if (*bench) {
      result = run(bench_opts, shardsim::bench_defaults(), shardsim::run_apply_benchmark);
    } else if (*ck_inspect) {
      result = shardsim::inspect_checkpoint(ck_in);
    } else if (*ck_convert) {
      result = shardsim::convert_checkpoint(ck_in, ck_out, ck_precision);
    }
    std::cout << result.dump(2) << '\n';
    return 0;
  } catch (const shardsim::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const shardsim::RefusalError& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

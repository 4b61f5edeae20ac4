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

// Umbrella header for the sharded state-vector simulator.

#include "shardsim/apply.hpp"
#include "shardsim/bits.hpp"
#include "shardsim/checkpoint.hpp"
#include "shardsim/errors.hpp"
#include "shardsim/evolve.hpp"
#include "shardsim/fabric.hpp"
#include "shardsim/hamiltonian.hpp"
#include "shardsim/hamiltonian_file.hpp"
#include "shardsim/kernel.hpp"
#include "shardsim/lanczos.hpp"
#include "shardsim/observables.hpp"
#include "shardsim/random.hpp"
#include "shardsim/state.hpp"
#include "shardsim/tridiag.hpp"

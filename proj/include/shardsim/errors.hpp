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

#include <stdexcept>
#include <string>

namespace shardsim {

// Invalid sizes, counts or parameters supplied when building an object.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A caller broke an operation's precondition (mismatched layouts, bad routing, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A request that would exceed a configured memory cap.
class RefusalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed checkpoint or Hamiltonian file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computed quantity fell outside its mathematically valid range.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A Hamiltonian term too wide for the block size.
class UnsupportedTermError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace shardsim

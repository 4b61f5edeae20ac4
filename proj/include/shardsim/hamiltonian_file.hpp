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

// Text format for Hamiltonians:
//
//   # comment
//   12                                   <- number of qubits, first line
//   support=[0,1] matrix=<base64>         <- explicit term
//   xxz(-1, 0.5, true)                    <- XXZ chain terms
//   random6(1234)                         <- periodic random 6-local terms
//
// Qubits are 0-based. The matrix payload is the 2^k x 2^k matrix, row-major,
// as little-endian IEEE doubles interleaved (real, imag).

#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/beast/core/detail/base64.hpp>

#include "shardsim/errors.hpp"
#include "shardsim/hamiltonian.hpp"

namespace shardsim {

struct HamiltonianSpec {
  int num_qubits = 0;
  std::vector<LocalTerm> terms;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_args(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

template <class Num>
Num parse_number(std::string_view s, const std::string& where) {
  Num value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError(where + ": cannot parse number '" + std::string(s) + "'");
  }
  return value;
}

inline bool parse_bool(std::string_view s, const std::string& where) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw FormatError(where + ": expected true/false, got '" + std::string(s) + "'");
}

// Arguments of "name(...)" if `line` has that form.
inline bool call_args(std::string_view line, std::string_view name, std::vector<std::string_view>& args) {
  if (line.substr(0, name.size()) != name) return false;
  std::string_view rest = trim(line.substr(name.size()));
  if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')') return false;
  args = split_args(rest.substr(1, rest.size() - 2));
  return true;
}

inline std::vector<unsigned char> decode_base64(std::string_view text, const std::string& where) {
  namespace b64 = boost::beast::detail::base64;
  std::vector<unsigned char> out(b64::decoded_size(text.size()));
  const auto [written, read] = b64::decode(out.data(), text.data(), text.size());
  std::size_t padding = 0;
  while (padding < text.size() && padding < 2 && text[text.size() - 1 - padding] == '=') ++padding;
  if (text.size() % 4 != 0 || read + padding != text.size()) throw FormatError(where + ": invalid base64 payload");
  out.resize(written);
  return out;
}

inline std::string encode_base64(const std::vector<unsigned char>& bytes) {
  namespace b64 = boost::beast::detail::base64;
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

inline LocalTerm parse_explicit_term(std::string_view line, const std::string& where) {
  constexpr std::string_view kSupport = "support=[";
  constexpr std::string_view kMatrix = "matrix=";
  if (line.substr(0, kSupport.size()) != kSupport) throw FormatError(where + ": unrecognized line");
  const std::size_t close = line.find(']');
  if (close == std::string_view::npos) throw FormatError(where + ": unterminated support list");
  LocalTerm term;
  for (auto item : split_args(line.substr(kSupport.size(), close - kSupport.size()))) {
    term.support.push_back(parse_number<int>(item, where));
  }
  std::string_view rest = trim(line.substr(close + 1));
  if (rest.substr(0, kMatrix.size()) != kMatrix) throw FormatError(where + ": missing matrix=");
  const auto bytes = decode_base64(trim(rest.substr(kMatrix.size())), where);
  const std::size_t dim = std::size_t{1} << term.support.size();
  if (term.support.empty() || term.support.size() > 20 || bytes.size() != dim * dim * 16) {
    throw FormatError(where + ": matrix payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(dim * dim * 16));
  }
  term.matrix = DenseMatrix(dim);
  for (std::size_t i = 0; i < dim * dim; ++i) {
    std::uint64_t re = 0, im = 0;
    for (int b = 7; b >= 0; --b) {
      re = (re << 8) | bytes[16 * i + b];
      im = (im << 8) | bytes[16 * i + 8 + b];
    }
    term.matrix.data()[i] = {std::bit_cast<double>(re), std::bit_cast<double>(im)};
  }
  return term;
}

}  // namespace detail

inline HamiltonianSpec parse_hamiltonian(std::istream& in, const std::string& source = "hamiltonian") {
  HamiltonianSpec spec;
  bool have_n = false;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (!have_n) {
      spec.num_qubits = detail::parse_number<int>(line, where);
      if (spec.num_qubits < 1 || spec.num_qubits > 64) throw FormatError(where + ": N out of range");
      have_n = true;
      continue;
    }
    std::vector<std::string_view> args;
    std::vector<LocalTerm> built;
    if (detail::call_args(line, "xxz", args)) {
      if (args.size() != 3) throw FormatError(where + ": xxz takes (J, Delta, periodic)");
      built = build_xxz(spec.num_qubits, detail::parse_number<double>(args[0], where),
                        detail::parse_number<double>(args[1], where), detail::parse_bool(args[2], where));
    } else if (detail::call_args(line, "random6", args)) {
      if (args.size() != 1) throw FormatError(where + ": random6 takes (seed)");
      built = build_random_local(spec.num_qubits, 6, detail::parse_number<std::uint64_t>(args[0], where));
    } else {
      LocalTerm term = detail::parse_explicit_term(line, where);
      try {
        validate_term(term, spec.num_qubits);
      } catch (const ContractError& e) {
        throw FormatError(where + ": " + e.what());
      }
      built.push_back(std::move(term));
    }
    for (auto& t : built) spec.terms.push_back(std::move(t));
  }
  if (!have_n) throw FormatError(source + ": missing qubit count");
  return spec;
}

inline HamiltonianSpec read_hamiltonian_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open Hamiltonian file " + path);
  return parse_hamiltonian(in, path);
}

inline void write_hamiltonian(std::ostream& os, int num_qubits, std::span<const LocalTerm> terms) {
  os << num_qubits << '\n';
  for (const auto& t : terms) {
    os << "support=[";
    for (std::size_t i = 0; i < t.support.size(); ++i) os << (i ? "," : "") << t.support[i];
    os << "] matrix=";
    std::vector<unsigned char> bytes;
    bytes.reserve(t.matrix.data().size() * 16);
    for (const auto& v : t.matrix.data()) {
      for (double part : {v.real(), v.imag()}) {
        const auto bits = std::bit_cast<std::uint64_t>(part);
        for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(bits >> (8 * b)));
      }
    }
    os << detail::encode_base64(bytes) << '\n';
  }
}

}  // namespace shardsim

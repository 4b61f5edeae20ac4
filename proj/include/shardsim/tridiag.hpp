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

// Symmetric tridiagonal eigensolver: implicit-shift QL (tql2) with
// eigenvector accumulation, eigenpairs returned in ascending order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "shardsim/errors.hpp"

namespace shardsim {

struct TridiagEigen {
  std::vector<double> values;                // ascending
  std::vector<std::vector<double>> vectors;  // vectors[k] is the eigenvector of values[k]
};

// diagonal d[0..n-1], off-diagonal e[0..n-2] (e[i] couples i and i+1).
inline TridiagEigen tridiagonal_eigen(std::vector<double> d, std::vector<double> off) {
  const std::size_t n = d.size();
  if (n == 0) return {};
  if (off.size() + 1 != n) throw ContractError("tridiagonal_eigen: off-diagonal must have n-1 entries");
  std::vector<double> e(n, 0.0);
  std::copy(off.begin(), off.end(), e.begin());  // e[i] couples i, i+1; e[n-1] = 0
  // z[row][col], identity initially; column k holds eigenvector k.
  std::vector<std::vector<double>> z(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) z[i][i] = 1.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m == n) m = n - 1;
    if (m > l) {
      int iterations = 0;
      do {
        if (++iterations > 60) throw NumericalError("tridiagonal_eigen: QL iteration did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          for (std::size_t k = 0; k < n; ++k) {
            h = z[k][ii + 1];
            z[k][ii + 1] = s * z[k][ii] + c * h;
            z[k][ii] = c * z[k][ii] - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  TridiagEigen out;
  out.values.reserve(n);
  out.vectors.reserve(n);
  for (std::size_t k : order) {
    out.values.push_back(d[k]);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = z[i][k];
    out.vectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace shardsim

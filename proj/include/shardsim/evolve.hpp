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

// Time evolution with the product form of the truncated exponential:
// exp(-i dt H) ~ prod_n (1 - i a_n dt H), where the a_n = -1/r_n come from
// the roots r_n of sum_{m<=order} x^m / m!. Each factor costs one H apply.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "shardsim/apply.hpp"
#include "shardsim/errors.hpp"
#include "shardsim/state.hpp"

namespace shardsim {

namespace detail {

// Roots of the truncated exponential series via simultaneous (Aberth)
// iteration in extended precision, followed by Newton polishing.
inline std::vector<std::complex<long double>> exp_series_roots(int order) {
  using C = std::complex<long double>;
  // Monic coefficients: order! * sum x^m/m!, highest degree first.
  std::vector<long double> c(order + 1);
  long double fact = 1.0L;
  for (int m = 1; m <= order; ++m) fact *= m;
  long double term = fact;  // order!/m! for m = 0
  std::vector<long double> ascending(order + 1);
  for (int m = 0; m <= order; ++m) {
    ascending[m] = term;
    if (m < order) term /= (m + 1);
  }
  for (int m = 0; m <= order; ++m) c[order - m] = ascending[m];

  auto eval = [&](C x, C& dp) {
    C p = c[0];
    dp = 0;
    for (int i = 1; i <= order; ++i) {
      dp = dp * x + p;
      p = p * x + c[i];
    }
    return p;
  };

  std::vector<C> z(order);
  const long double radius = std::pow(ascending[0], 1.0L / order);
  for (int k = 0; k < order; ++k) {
    const long double angle = 2.0L * 3.14159265358979323846L * (k + 0.25L) / order;
    z[k] = radius * C(std::cos(angle), std::sin(angle));
  }
  for (int iter = 0; iter < 500; ++iter) {
    long double change = 0.0L;
    for (int k = 0; k < order; ++k) {
      C dp;
      const C p = eval(z[k], dp);
      if (p == C(0)) continue;
      const C ratio = p / dp;
      C repulsion = 0;
      for (int j = 0; j < order; ++j) {
        if (j != k) repulsion += C(1) / (z[k] - z[j]);
      }
      const C w = ratio / (C(1) - ratio * repulsion);
      z[k] -= w;
      change = std::max(change, std::abs(w) / std::max(1.0L, std::abs(z[k])));
    }
    if (change < 1e-18L) break;
  }
  for (auto& x : z) {
    for (int i = 0; i < 3; ++i) {
      C dp;
      const C p = eval(x, dp);
      if (dp != C(0)) x -= p / dp;
    }
  }
  return z;
}

}  // namespace detail

// Product-form coefficients a_n (prod (1 + a_n x) = sum_{m<=order} x^m/m!),
// with conjugate pairs made exact and sorted by (real, imag).
inline std::vector<std::complex<double>> taylor_roots(int order = 6) {
  if (order < 1) throw ConfigError("taylor_roots: order must be at least 1");
  const auto roots = detail::exp_series_roots(order);
  std::vector<std::complex<long double>> a;
  for (const auto& r : roots) a.push_back(-1.0L / r);
  // Snap to exact conjugate pairs (the series has real coefficients).
  std::vector<bool> used(a.size(), false);
  std::vector<std::complex<double>> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    if (std::abs(a[i].imag()) < 1e-15L) {
      out.emplace_back(static_cast<double>(a[i].real()), 0.0);
      continue;
    }
    std::size_t best = i;
    long double best_d = 1e300L;
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (used[j]) continue;
      const long double d = std::abs(a[j] - std::conj(a[i]));
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best == i) throw NumericalError("taylor_roots: unpaired complex root");
    used[best] = true;
    const std::complex<long double> mean = 0.5L * (a[i] + std::conj(a[best]));
    const std::complex<double> m(static_cast<double>(mean.real()), static_cast<double>(std::abs(mean.imag())));
    out.push_back(m);
    out.push_back(std::conj(m));
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return out;
}

// Coefficients of prod_n (1 + a_n x), lowest degree first.
inline std::vector<std::complex<double>> expand_product(const std::vector<std::complex<double>>& a) {
  std::vector<std::complex<double>> poly{1.0};
  for (const auto& an : a) {
    std::vector<std::complex<double>> next(poly.size() + 1);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + 1] += an * poly[i];
    }
    poly = std::move(next);
  }
  return poly;
}

inline constexpr double kDefaultTimeStep = 0.02;

struct EvolutionPlan {
  double delta_t = kDefaultTimeStep;
  std::size_t steps = 0;
  std::vector<std::complex<double>> roots = taylor_roots(6);
  bool renormalize_each_step = false;

  double total_time() const noexcept { return delta_t * static_cast<double>(steps); }

  // Splits t into q = t/dt steps; t/dt must be integral.
  static EvolutionPlan for_duration(double t, double delta_t, int order = 6, bool renormalize = false) {
    if (!(delta_t > 0.0)) throw ConfigError("time step must be positive");
    if (t < 0.0) throw ConfigError("evolution time must be non-negative");
    const double q = std::round(t / delta_t);
    if (std::abs(q * delta_t - t) > 1e-9 * std::max(1.0, std::abs(t))) {
      throw ConfigError("t / dt must be an integer (t=" + std::to_string(t) + ", dt=" + std::to_string(delta_t) + ")");
    }
    EvolutionPlan plan;
    plan.delta_t = delta_t;
    plan.steps = static_cast<std::size_t>(q);
    plan.roots = taylor_roots(order);
    plan.renormalize_each_step = renormalize;
    return plan;
  }
};

// Applies the product factors a_1 first. `hpsi` is a work state on the same
// mesh; together with the Applier's scratch the step holds three states.
template <class T>
void step(ShardedState<T>& psi, Applier<T>& applier, const EvolutionPlan& plan, ShardedState<T>& hpsi) {
  for (const auto& a : plan.roots) {
    applier.apply(psi, hpsi);
    axpy(std::complex<double>(0.0, -1.0) * a * plan.delta_t, hpsi, psi);
  }
  if (plan.renormalize_each_step) {
    const double n = norm(psi);
    if (n == 0.0) throw NumericalError("evolve: state norm vanished");
    scale(psi, 1.0 / n);
  }
}

template <class T>
void step(ShardedState<T>& psi, const Hamiltonian& h, const EvolutionPlan& plan) {
  Applier<T> applier(psi.mesh(), h, plan_schedule(h, psi.layout()), psi.tiling());
  ShardedState<T> hpsi(psi.mesh(), psi.num_qubits(), psi.tiling());
  step(psi, applier, plan, hpsi);
}

// Observer invoked at step 0 and then every `interval` steps (and at the
// final step). It receives the step index, the time and the current state.
template <class T>
struct Observer {
  std::size_t interval = 1;
  std::function<void(std::size_t, double, ShardedState<T>&)> callback;
};

template <class T>
void evolve(ShardedState<T>& psi, const Hamiltonian& h, const EvolutionPlan& plan,
            const std::vector<Observer<T>>& observers = {}) {
  for (const auto& o : observers) {
    if (o.interval == 0) throw ConfigError("observer interval must be positive");
  }
  Applier<T> applier(psi.mesh(), h, plan_schedule(h, psi.layout()), psi.tiling());
  ShardedState<T> hpsi(psi.mesh(), psi.num_qubits(), psi.tiling());
  auto observe = [&](std::size_t n) {
    for (const auto& o : observers) {
      if (n % o.interval == 0 || n == plan.steps) o.callback(n, plan.delta_t * static_cast<double>(n), psi);
    }
  };
  observe(0);
  for (std::size_t n = 1; n <= plan.steps; ++n) {
    step(psi, applier, plan, hpsi);
    observe(n);
  }
}

}  // namespace shardsim

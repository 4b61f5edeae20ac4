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

// Dense lane multiply: every row of 2^lane contiguous amplitudes is replaced
// by h * row. The matrix is stored transposed and split into real and
// imaginary planes so the inner loop is a broadcast-FMA over output lanes.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <vector>

#include "shardsim/errors.hpp"
#include "shardsim/hamiltonian.hpp"

namespace shardsim {

template <class T>
class KernelMatrix {
 public:
  KernelMatrix() = default;
  explicit KernelMatrix(const DenseMatrix& m) : dim_(m.dim()), re_(dim_ * dim_), im_(dim_ * dim_) {
    for (std::size_t a = 0; a < dim_; ++a) {
      for (std::size_t b = 0; b < dim_; ++b) {
        re_[b * dim_ + a] = static_cast<T>(m(a, b).real());
        im_[b * dim_ + a] = static_cast<T>(m(a, b).imag());
      }
    }
  }

  std::size_t dim() const noexcept { return dim_; }
  // Column b of h, i.e. h(., b), contiguous over output lanes.
  const T* re_column(std::size_t b) const noexcept { return re_.data() + b * dim_; }
  const T* im_column(std::size_t b) const noexcept { return im_.data() + b * dim_; }

 private:
  std::size_t dim_ = 0;
  std::vector<T> re_;
  std::vector<T> im_;
};

namespace detail {

inline constexpr std::size_t kRowsPerTile = 4;
inline constexpr std::size_t kMaxTiledLanes = 256;

template <class T>
void multiply_rows_generic(const KernelMatrix<T>& h, const std::complex<T>* in, std::complex<T>* out,
                           std::size_t rows, bool accumulate) {
  const std::size_t L = h.dim();
  std::vector<T> acc_re(L), acc_im(L);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::complex<T>* x = in + r * L;
    std::fill(acc_re.begin(), acc_re.end(), T(0));
    std::fill(acc_im.begin(), acc_im.end(), T(0));
    for (std::size_t b = 0; b < L; ++b) {
      const T xr = x[b].real();
      const T xi = x[b].imag();
      const T* hr = h.re_column(b);
      const T* hi = h.im_column(b);
      for (std::size_t a = 0; a < L; ++a) {
        acc_re[a] += xr * hr[a] - xi * hi[a];
        acc_im[a] += xr * hi[a] + xi * hr[a];
      }
    }
    std::complex<T>* y = out + r * L;
    for (std::size_t a = 0; a < L; ++a) {
      const std::complex<T> v(acc_re[a], acc_im[a]);
      y[a] = accumulate ? y[a] + v : v;
    }
  }
}

}  // namespace detail

// out[r] (=|+=) h * in[r] for `rows` consecutive rows of h.dim() amplitudes.
// in == out is allowed when not accumulating.
template <class T>
void multiply_rows(const KernelMatrix<T>& h, const std::complex<T>* in, std::complex<T>* out, std::size_t rows,
                   bool accumulate) {
  constexpr std::size_t W = 64 / sizeof(T);  // output lanes per register block
  constexpr std::size_t R = detail::kRowsPerTile;
  const std::size_t L = h.dim();
  if (accumulate && in == out) throw ContractError("multiply_rows: accumulate requires distinct buffers");
  if (L % W != 0 || rows % R != 0 || L > detail::kMaxTiledLanes) {
    detail::multiply_rows_generic(h, in, out, rows, accumulate);
    return;
  }
  alignas(64) T tile_re[R][detail::kMaxTiledLanes];
  alignas(64) T tile_im[R][detail::kMaxTiledLanes];
  for (std::size_t r0 = 0; r0 < rows; r0 += R) {
    const T* x = reinterpret_cast<const T*>(in + r0 * L);
    for (std::size_t a0 = 0; a0 < L; a0 += W) {
      alignas(64) T acc_re[R][W] = {};
      alignas(64) T acc_im[R][W] = {};
      for (std::size_t b = 0; b < L; ++b) {
        const T* hr = h.re_column(b) + a0;
        const T* hi = h.im_column(b) + a0;
        for (std::size_t r = 0; r < R; ++r) {
          const T xr = x[2 * (r * L + b)];
          const T xi = x[2 * (r * L + b) + 1];
#pragma GCC unroll 16
          for (std::size_t w = 0; w < W; ++w) {
            acc_re[r][w] += xr * hr[w] - xi * hi[w];
            acc_im[r][w] += xr * hi[w] + xi * hr[w];
          }
        }
      }
      for (std::size_t r = 0; r < R; ++r) {
        std::copy_n(acc_re[r], W, tile_re[r] + a0);
        std::copy_n(acc_im[r], W, tile_im[r] + a0);
      }
    }
    for (std::size_t r = 0; r < R; ++r) {
      std::complex<T>* y = out + (r0 + r) * L;
      for (std::size_t a = 0; a < L; ++a) {
        const std::complex<T> v(tile_re[r][a], tile_im[r][a]);
        y[a] = accumulate ? y[a] + v : v;
      }
    }
  }
}

}  // namespace shardsim

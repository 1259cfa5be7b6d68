// Copyright 2026 The mpc3 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mpc3/ring.h"

namespace mpc3 {

inline constexpr int kLimbs = 4;
inline constexpr int kLimbBits = 16;
inline constexpr size_t kMaxAccumulation = size_t{1} << 20;

// Four little-endian 16-bit limbs, each held as doubles.
struct LimbSet {
  Shape shape;
  std::array<std::vector<double>, kLimbs> limbs;
};

LimbSet limb_decompose(const RingTensor& a);
RingTensor limb_recompose(const LimbSet& l);

// NCHW input, OIHW kernel.
struct Conv2dGeometry {
  size_t batch = 1;
  size_t in_c = 1, in_h = 1, in_w = 1;
  size_t out_c = 1;
  size_t kh = 1, kw = 1;
  size_t stride = 1;
  size_t pad = 0;

  size_t out_h() const { return (in_h + 2 * pad - kh) / stride + 1; }
  size_t out_w() const { return (in_w + 2 * pad - kw) / stride + 1; }
  size_t patch() const { return in_c * kh * kw; }
  size_t positions() const { return batch * out_h() * out_w(); }
  Shape input_shape() const { return {batch, in_c, in_h, in_w}; }
  Shape kernel_shape() const { return {out_c, in_c, kh, kw}; }
  Shape output_shape() const { return {batch, out_c, out_h(), out_w()}; }
  void validate() const;
};

enum class BilinearKind { kMatmul, kConv2d, kSumPool };

struct BilinearOpSpec {
  BilinearKind kind = BilinearKind::kMatmul;
  // matmul: a is [m, k], b is [k, n].
  size_t m = 0, k = 0, n = 0;
  // conv2d: a is input, b is kernel. sum-pool: a is input, b is a [kh, kw]
  // window applied per channel; out_c must equal in_c.
  Conv2dGeometry conv;

  static BilinearOpSpec matmul(size_t m, size_t k, size_t n);
  static BilinearOpSpec conv2d(const Conv2dGeometry& g);
  static BilinearOpSpec sum_pool(const Conv2dGeometry& g);

  size_t accumulation_count() const;
  Shape a_shape() const;
  Shape b_shape() const;
  Shape out_shape() const;
};

enum class LimbSchedule { kTen, kSixteen };

struct BilinearStats {
  double max_intermediate = 0;
  int products = 0;
};

// Exact op over Z_2^64 through double limb products. Throws ExactnessError
// when accumulation_count exceeds 2^20.
RingTensor bilinear_exact(const RingTensor& a, const RingTensor& b,
                          const BilinearOpSpec& spec,
                          LimbSchedule schedule = LimbSchedule::kTen,
                          BilinearStats* stats = nullptr);

// Same op with wrapping integer loops. Used by the plaintext fixed-point path.
RingTensor bilinear_direct(const RingTensor& a, const RingTensor& b,
                           const BilinearOpSpec& spec);

// Patch matrix [in_c*kh*kw, batch*out_h*out_w] with zero padding.
template <class T>
std::vector<T> im2col(const T* x, const Conv2dGeometry& g);
// Adjoint of im2col: scatter-add columns back into an NCHW tensor.
template <class T>
std::vector<T> col2im(const T* cols, const Conv2dGeometry& g);

RingTensor im2col(const RingTensor& x, const Conv2dGeometry& g);
RingTensor col2im(const RingTensor& cols, const Conv2dGeometry& g);

// [out_c, batch*P] <-> [batch, out_c, P] where P = out_h*out_w.
template <class T>
std::vector<T> ocols_to_nchw(const T* y, size_t out_c, size_t batch, size_t p);
template <class T>
std::vector<T> nchw_to_ocols(const T* y, size_t out_c, size_t batch, size_t p);

RingTensor ocols_to_nchw(const RingTensor& y, const Conv2dGeometry& g);
RingTensor nchw_to_ocols(const RingTensor& y, const Conv2dGeometry& g);

}  // namespace mpc3

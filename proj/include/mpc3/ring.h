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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mpc3 {

using Shape = std::vector<size_t>;

size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Tensor over Z_2^64, row-major. Signed semantics use the two's-complement
// view of each word.
struct RingTensor {
  Shape shape;
  std::vector<uint64_t> data;

  RingTensor() = default;
  explicit RingTensor(Shape s);
  RingTensor(Shape s, std::vector<uint64_t> d);

  static RingTensor zeros(Shape s) { return RingTensor(std::move(s)); }
  static RingTensor filled(Shape s, uint64_t v);

  size_t size() const { return data.size(); }
  uint64_t& operator[](size_t i) { return data[i]; }
  uint64_t operator[](size_t i) const { return data[i]; }

  RingTensor reshaped(Shape s) const;
  bool operator==(const RingTensor& o) const = default;
};

RingTensor ring_add(const RingTensor& a, const RingTensor& b);
RingTensor ring_sub(const RingTensor& a, const RingTensor& b);
RingTensor ring_neg(const RingTensor& a);
RingTensor ring_scalar_mul(const RingTensor& a, uint64_t c);
RingTensor ring_mul(const RingTensor& a, const RingTensor& b);
RingTensor ring_add_scalar(const RingTensor& a, uint64_t c);
// Sign-extending right shift of the two's-complement view.
RingTensor ring_shift_arith(const RingTensor& a, int bits);

void ring_add_inplace(RingTensor& a, const RingTensor& b);
void ring_sub_inplace(RingTensor& a, const RingTensor& b);

RingTensor ring_xor(const RingTensor& a, const RingTensor& b);
RingTensor ring_and(const RingTensor& a, const RingTensor& b);
RingTensor ring_shl(const RingTensor& a, int bits);
RingTensor ring_shr(const RingTensor& a, int bits);

// Shape-only helpers. All are permutations or gathers, so they commute with
// additive sharing.
RingTensor transpose2d(const RingTensor& a);
RingTensor concat_rows(std::span<const RingTensor> parts);
RingTensor slice_rows(const RingTensor& a, size_t begin, size_t end);

inline int64_t as_signed(uint64_t v) { return static_cast<int64_t>(v); }

struct FixedPointConfig {
  int t = 20;

  void validate() const;
  double scale() const { return static_cast<double>(uint64_t{1} << t); }
};

// Round half away from zero. Throws RangeError when |x| >= 2^(63-t).
uint64_t fx_encode(double x, const FixedPointConfig& cfg);
double fx_decode(uint64_t v, const FixedPointConfig& cfg);

RingTensor fx_encode(std::span<const double> xs, Shape shape,
                     const FixedPointConfig& cfg);
std::vector<double> fx_decode(const RingTensor& a, const FixedPointConfig& cfg);

}  // namespace mpc3

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

#include "mpc3/ring.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mpc3/errors.h"

namespace mpc3 {

size_t numel(const Shape& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

RingTensor::RingTensor(Shape s) : shape(std::move(s)), data(numel(shape), 0) {}

RingTensor::RingTensor(Shape s, std::vector<uint64_t> d)
    : shape(std::move(s)), data(std::move(d)) {
  MPC3_ENFORCE(numel(shape) == data.size(), ShapeError,
               "shape " + shape_str(shape) + " does not match " +
                   std::to_string(data.size()) + " elements");
}

RingTensor RingTensor::filled(Shape s, uint64_t v) {
  RingTensor r(std::move(s));
  std::fill(r.data.begin(), r.data.end(), v);
  return r;
}

RingTensor RingTensor::reshaped(Shape s) const {
  MPC3_ENFORCE(numel(s) == data.size(), ShapeError,
               "cannot reshape " + shape_str(shape) + " to " + shape_str(s));
  return RingTensor(std::move(s), data);
}

namespace {

void check_same(const RingTensor& a, const RingTensor& b, const char* op) {
  MPC3_ENFORCE(a.shape == b.shape, ShapeError,
               std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                   " vs " + shape_str(b.shape));
}

template <class F>
RingTensor zip(const RingTensor& a, const RingTensor& b, const char* op, F f) {
  check_same(a, b, op);
  RingTensor r(a.shape);
  const size_t n = a.size();
  for (size_t i = 0; i < n; ++i) r.data[i] = f(a.data[i], b.data[i]);
  return r;
}

template <class F>
RingTensor map(const RingTensor& a, F f) {
  RingTensor r(a.shape);
  const size_t n = a.size();
  for (size_t i = 0; i < n; ++i) r.data[i] = f(a.data[i]);
  return r;
}

}  // namespace

RingTensor ring_add(const RingTensor& a, const RingTensor& b) {
  return zip(a, b, "ring_add", [](uint64_t x, uint64_t y) { return x + y; });
}
RingTensor ring_sub(const RingTensor& a, const RingTensor& b) {
  return zip(a, b, "ring_sub", [](uint64_t x, uint64_t y) { return x - y; });
}
RingTensor ring_mul(const RingTensor& a, const RingTensor& b) {
  return zip(a, b, "ring_mul", [](uint64_t x, uint64_t y) { return x * y; });
}
RingTensor ring_xor(const RingTensor& a, const RingTensor& b) {
  return zip(a, b, "ring_xor", [](uint64_t x, uint64_t y) { return x ^ y; });
}
RingTensor ring_and(const RingTensor& a, const RingTensor& b) {
  return zip(a, b, "ring_and", [](uint64_t x, uint64_t y) { return x & y; });
}
RingTensor ring_neg(const RingTensor& a) {
  return map(a, [](uint64_t x) { return uint64_t{0} - x; });
}
RingTensor ring_scalar_mul(const RingTensor& a, uint64_t c) {
  return map(a, [c](uint64_t x) { return x * c; });
}
RingTensor ring_add_scalar(const RingTensor& a, uint64_t c) {
  return map(a, [c](uint64_t x) { return x + c; });
}
RingTensor ring_shift_arith(const RingTensor& a, int bits) {
  return map(a, [bits](uint64_t x) {
    return static_cast<uint64_t>(static_cast<int64_t>(x) >> bits);
  });
}
RingTensor ring_shl(const RingTensor& a, int bits) {
  return map(a, [bits](uint64_t x) { return bits >= 64 ? 0 : x << bits; });
}
RingTensor ring_shr(const RingTensor& a, int bits) {
  return map(a, [bits](uint64_t x) { return bits >= 64 ? 0 : x >> bits; });
}

void ring_add_inplace(RingTensor& a, const RingTensor& b) {
  check_same(a, b, "ring_add");
  for (size_t i = 0; i < a.size(); ++i) a.data[i] += b.data[i];
}
void ring_sub_inplace(RingTensor& a, const RingTensor& b) {
  check_same(a, b, "ring_sub");
  for (size_t i = 0; i < a.size(); ++i) a.data[i] -= b.data[i];
}

RingTensor transpose2d(const RingTensor& a) {
  MPC3_ENFORCE(a.shape.size() == 2, ShapeError, "transpose2d needs a matrix");
  const size_t r = a.shape[0], c = a.shape[1];
  RingTensor out({c, r});
  // Blocked to stay cache friendly on the large im2col matrices.
  constexpr size_t kB = 32;
  for (size_t i0 = 0; i0 < r; i0 += kB)
    for (size_t j0 = 0; j0 < c; j0 += kB)
      for (size_t i = i0; i < std::min(r, i0 + kB); ++i)
        for (size_t j = j0; j < std::min(c, j0 + kB); ++j)
          out.data[j * r + i] = a.data[i * c + j];
  return out;
}

RingTensor concat_rows(std::span<const RingTensor> parts) {
  MPC3_ENFORCE(!parts.empty(), ShapeError, "concat of nothing");
  Shape s = parts[0].shape;
  MPC3_ENFORCE(!s.empty(), ShapeError, "concat needs rank >= 1");
  size_t rows = 0;
  for (const auto& p : parts) {
    MPC3_ENFORCE(p.shape.size() == s.size() &&
                     std::equal(p.shape.begin() + 1, p.shape.end(),
                                s.begin() + 1),
                 ShapeError, "concat: trailing dims differ");
    rows += p.shape[0];
  }
  s[0] = rows;
  RingTensor out(s);
  size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.data.begin(), p.data.end(), out.data.begin() + off);
    off += p.size();
  }
  return out;
}

RingTensor slice_rows(const RingTensor& a, size_t begin, size_t end) {
  MPC3_ENFORCE(!a.shape.empty() && begin <= end && end <= a.shape[0],
               ShapeError, "slice_rows out of range");
  Shape s = a.shape;
  s[0] = end - begin;
  const size_t inner = a.shape[0] ? a.size() / a.shape[0] : 0;
  return RingTensor(s, std::vector<uint64_t>(a.data.begin() + begin * inner,
                                             a.data.begin() + end * inner));
}

void FixedPointConfig::validate() const {
  MPC3_ENFORCE(t > 0 && t < 32, ConfigError,
               "fractional bits must be in (0, 32), got " + std::to_string(t));
}

uint64_t fx_encode(double x, const FixedPointConfig& cfg) {
  const double limit = std::ldexp(1.0, 63 - cfg.t);
  if (!(std::fabs(x) < limit))
    throw RangeError("fx_encode: |" + std::to_string(x) + "| >= 2^" +
                     std::to_string(63 - cfg.t));
  // std::round rounds half away from zero.
  const double v = std::round(std::ldexp(x, cfg.t));
  return static_cast<uint64_t>(static_cast<int64_t>(v));
}

double fx_decode(uint64_t v, const FixedPointConfig& cfg) {
  return std::ldexp(static_cast<double>(static_cast<int64_t>(v)), -cfg.t);
}

RingTensor fx_encode(std::span<const double> xs, Shape shape,
                     const FixedPointConfig& cfg) {
  RingTensor r(std::move(shape));
  MPC3_ENFORCE(r.size() == xs.size(), ShapeError, "fx_encode: size mismatch");
  for (size_t i = 0; i < xs.size(); ++i) r.data[i] = fx_encode(xs[i], cfg);
  return r;
}

std::vector<double> fx_decode(const RingTensor& a, const FixedPointConfig& cfg) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = fx_decode(a.data[i], cfg);
  return out;
}

}  // namespace mpc3

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

#include "mpc3/bilinear.h"

#include <Eigen/Core>
#include <algorithm>

#include "mpc3/errors.h"

namespace mpc3 {

namespace {

using MatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr uint64_t kLimbMask = 0xFFFF;

inline double limb_of(uint64_t v, int i) {
  return static_cast<double>((v >> (kLimbBits * i)) & kLimbMask);
}

// Limb i of a row-major [rows, cols] matrix, written into dst at row offset.
void fill_limb(const uint64_t* src, size_t rows, size_t cols, int limb,
               MatD& dst, size_t row_off, size_t col_off) {
  for (size_t r = 0; r < rows; ++r) {
    const uint64_t* s = src + r * cols;
    double* d = dst.data() + (row_off + r) * dst.cols() + col_off;
    for (size_t c = 0; c < cols; ++c) d[c] = limb_of(s[c], limb);
  }
}

void accumulate(const MatD& p, size_t row_off, size_t col_off, size_t m,
                size_t n, int shift, uint64_t* out, BilinearStats* stats) {
  // 2^shift reduced mod 2^64; products with shift >= 64 vanish.
  const uint64_t mult = shift >= 64 ? 0 : uint64_t{1} << shift;
  double mx = 0;
  for (size_t r = 0; r < m; ++r) {
    const double* s = p.data() + (row_off + r) * p.cols() + col_off;
    uint64_t* o = out + r * n;
    for (size_t c = 0; c < n; ++c) {
      if (stats) mx = std::max(mx, s[c]);
      o[c] += static_cast<uint64_t>(s[c]) * mult;
    }
  }
  if (stats) stats->max_intermediate = std::max(stats->max_intermediate, mx);
}

// out[m, n] = a[m, k] * b[k, n] over Z_2^64.
void limb_matmul(const uint64_t* a, const uint64_t* b, size_t m, size_t k,
                 size_t n, LimbSchedule schedule, uint64_t* out,
                 BilinearStats* stats) {
  std::fill(out, out + m * n, 0);
  if (m == 0 || n == 0) return;
  const bool ten = schedule == LimbSchedule::kTen;
  auto width = [&](int fixed) { return ten ? kLimbs - fixed : kLimbs; };
  MatD prod;
  if (m <= n) {
    // Stack the four limbs of a vertically; one GEMM per limb of b.
    MatD as(kLimbs * m, k);
    for (int i = 0; i < kLimbs; ++i) fill_limb(a, m, k, i, as, i * m, 0);
    MatD bj(k, n);
    for (int j = 0; j < kLimbs; ++j) {
      const int rows = width(j);
      fill_limb(b, k, n, j, bj, 0, 0);
      prod.resize(rows * m, n);
      prod.noalias() = as.topRows(rows * m) * bj;
      for (int i = 0; i < rows; ++i) {
        if (stats) ++stats->products;
        const int shift = kLimbBits * (i + j);
        accumulate(prod, i * m, 0, m, n, shift, out, stats);
      }
    }
  } else {
    // Stack the limbs of b horizontally; one GEMM per limb of a.
    MatD bs(k, kLimbs * n);
    for (int j = 0; j < kLimbs; ++j) fill_limb(b, k, n, j, bs, 0, j * n);
    MatD ai(m, k);
    for (int i = 0; i < kLimbs; ++i) {
      const int cols = width(i);
      fill_limb(a, m, k, i, ai, 0, 0);
      prod.resize(m, cols * n);
      prod.noalias() = ai * bs.leftCols(cols * n);
      for (int j = 0; j < cols; ++j) {
        if (stats) ++stats->products;
        const int shift = kLimbBits * (i + j);
        accumulate(prod, 0, j * n, m, n, shift, out, stats);
      }
    }
  }
}

void direct_matmul(const uint64_t* a, const uint64_t* b, size_t m, size_t k,
                   size_t n, uint64_t* out) {
  std::fill(out, out + m * n, 0);
  for (size_t i = 0; i < m; ++i) {
    uint64_t* o = out + i * n;
    for (size_t p = 0; p < k; ++p) {
      const uint64_t av = a[i * k + p];
      if (av == 0) continue;
      const uint64_t* br = b + p * n;
      for (size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
}

Conv2dGeometry pool_as_conv(const Conv2dGeometry& g) {
  Conv2dGeometry c = g;
  c.batch = g.batch * g.in_c;
  c.in_c = 1;
  c.out_c = 1;
  return c;
}

void check_operands(const RingTensor& a, const RingTensor& b,
                    const BilinearOpSpec& spec) {
  MPC3_ENFORCE(a.shape == spec.a_shape(), ShapeError,
               "bilinear: left operand " + shape_str(a.shape) + ", expected " +
                   shape_str(spec.a_shape()));
  MPC3_ENFORCE(b.shape == spec.b_shape(), ShapeError,
               "bilinear: right operand " + shape_str(b.shape) +
                   ", expected " + shape_str(spec.b_shape()));
}

template <class MatmulFn>
RingTensor run_bilinear(const RingTensor& a, const RingTensor& b,
                        const BilinearOpSpec& spec, MatmulFn mm) {
  check_operands(a, b, spec);
  RingTensor out(spec.out_shape());
  switch (spec.kind) {
    case BilinearKind::kMatmul:
      mm(a.data.data(), b.data.data(), spec.m, spec.k, spec.n, out.data.data());
      break;
    case BilinearKind::kConv2d: {
      const auto& g = spec.conv;
      auto cols = im2col(a.data.data(), g);
      std::vector<uint64_t> y(g.out_c * g.positions());
      mm(b.data.data(), cols.data(), g.out_c, g.patch(), g.positions(),
         y.data());
      out.data = ocols_to_nchw(y.data(), g.out_c, g.batch,
                               g.out_h() * g.out_w());
      break;
    }
    case BilinearKind::kSumPool: {
      const auto g = pool_as_conv(spec.conv);
      auto cols = im2col(a.data.data(), g);
      // Result row [1, batch*in_c*P] is already NCHW.
      mm(b.data.data(), cols.data(), 1, g.patch(), g.positions(),
         out.data.data());
      break;
    }
  }
  return out;
}

}  // namespace

LimbSet limb_decompose(const RingTensor& a) {
  LimbSet l;
  l.shape = a.shape;
  for (int i = 0; i < kLimbs; ++i) {
    l.limbs[i].resize(a.size());
    for (size_t e = 0; e < a.size(); ++e) l.limbs[i][e] = limb_of(a.data[e], i);
  }
  return l;
}

RingTensor limb_recompose(const LimbSet& l) {
  RingTensor r(l.shape);
  for (int i = 0; i < kLimbs; ++i) {
    MPC3_ENFORCE(l.limbs[i].size() == r.size(), ShapeError,
                 "limb size mismatch");
    for (size_t e = 0; e < r.size(); ++e)
      r.data[e] += static_cast<uint64_t>(l.limbs[i][e]) << (kLimbBits * i);
  }
  return r;
}

void Conv2dGeometry::validate() const {
  MPC3_ENFORCE(stride >= 1 && kh >= 1 && kw >= 1, GeometryError,
               "conv geometry: stride and kernel must be positive");
  MPC3_ENFORCE(kh <= in_h + 2 * pad && kw <= in_w + 2 * pad, GeometryError,
               "conv geometry: kernel larger than padded input");
  MPC3_ENFORCE(batch >= 1 && in_c >= 1 && out_c >= 1, GeometryError,
               "conv geometry: empty dimension");
}

BilinearOpSpec BilinearOpSpec::matmul(size_t m, size_t k, size_t n) {
  BilinearOpSpec s;
  s.kind = BilinearKind::kMatmul;
  s.m = m;
  s.k = k;
  s.n = n;
  return s;
}

BilinearOpSpec BilinearOpSpec::conv2d(const Conv2dGeometry& g) {
  g.validate();
  BilinearOpSpec s;
  s.kind = BilinearKind::kConv2d;
  s.conv = g;
  return s;
}

BilinearOpSpec BilinearOpSpec::sum_pool(const Conv2dGeometry& g) {
  g.validate();
  MPC3_ENFORCE(g.out_c == g.in_c, GeometryError,
               "sum-pool keeps the channel count");
  BilinearOpSpec s;
  s.kind = BilinearKind::kSumPool;
  s.conv = g;
  return s;
}

size_t BilinearOpSpec::accumulation_count() const {
  switch (kind) {
    case BilinearKind::kMatmul:
      return k;
    case BilinearKind::kConv2d:
      return conv.patch();
    case BilinearKind::kSumPool:
      return conv.kh * conv.kw;
  }
  return 0;
}

Shape BilinearOpSpec::a_shape() const {
  if (kind == BilinearKind::kMatmul) return {m, k};
  return conv.input_shape();
}

Shape BilinearOpSpec::b_shape() const {
  switch (kind) {
    case BilinearKind::kMatmul:
      return {k, n};
    case BilinearKind::kConv2d:
      return conv.kernel_shape();
    case BilinearKind::kSumPool:
      return {conv.kh, conv.kw};
  }
  return {};
}

Shape BilinearOpSpec::out_shape() const {
  if (kind == BilinearKind::kMatmul) return {m, n};
  return conv.output_shape();
}

RingTensor bilinear_exact(const RingTensor& a, const RingTensor& b,
                          const BilinearOpSpec& spec, LimbSchedule schedule,
                          BilinearStats* stats) {
  const size_t acc = spec.accumulation_count();
  if (acc > kMaxAccumulation)
    throw ExactnessError("bilinear_exact: " + std::to_string(acc) +
                         " accumulated products exceed 2^20");
  return run_bilinear(a, b, spec,
                      [&](const uint64_t* x, const uint64_t* y, size_t m,
                          size_t k, size_t n, uint64_t* out) {
                        limb_matmul(x, y, m, k, n, schedule, out, stats);
                      });
}

RingTensor bilinear_direct(const RingTensor& a, const RingTensor& b,
                           const BilinearOpSpec& spec) {
  return run_bilinear(a, b, spec,
                      [](const uint64_t* x, const uint64_t* y, size_t m,
                         size_t k, size_t n, uint64_t* out) {
                        direct_matmul(x, y, m, k, n, out);
                      });
}

template <class T>
std::vector<T> im2col(const T* x, const Conv2dGeometry& g) {
  const size_t oh = g.out_h(), ow = g.out_w(), p = oh * ow;
  const size_t ncols = g.batch * p;
  std::vector<T> cols(g.patch() * ncols, T{});
  for (size_t c = 0; c < g.in_c; ++c)
    for (size_t i = 0; i < g.kh; ++i)
      for (size_t j = 0; j < g.kw; ++j) {
        T* row = cols.data() + ((c * g.kh + i) * g.kw + j) * ncols;
        for (size_t n = 0; n < g.batch; ++n) {
          const T* plane = x + (n * g.in_c + c) * g.in_h * g.in_w;
          for (size_t oy = 0; oy < oh; ++oy) {
            const long iy = static_cast<long>(oy * g.stride + i) -
                            static_cast<long>(g.pad);
            if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
            T* dst = row + n * p + oy * ow;
            const T* src = plane + iy * g.in_w;
            for (size_t ox = 0; ox < ow; ++ox) {
              const long ix = static_cast<long>(ox * g.stride + j) -
                              static_cast<long>(g.pad);
              if (ix >= 0 && ix < static_cast<long>(g.in_w)) dst[ox] = src[ix];
            }
          }
        }
      }
  return cols;
}

template <class T>
std::vector<T> col2im(const T* cols, const Conv2dGeometry& g) {
  const size_t oh = g.out_h(), ow = g.out_w(), p = oh * ow;
  const size_t ncols = g.batch * p;
  std::vector<T> x(g.batch * g.in_c * g.in_h * g.in_w, T{});
  for (size_t c = 0; c < g.in_c; ++c)
    for (size_t i = 0; i < g.kh; ++i)
      for (size_t j = 0; j < g.kw; ++j) {
        const T* row = cols + ((c * g.kh + i) * g.kw + j) * ncols;
        for (size_t n = 0; n < g.batch; ++n) {
          T* plane = x.data() + (n * g.in_c + c) * g.in_h * g.in_w;
          for (size_t oy = 0; oy < oh; ++oy) {
            const long iy = static_cast<long>(oy * g.stride + i) -
                            static_cast<long>(g.pad);
            if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
            const T* src = row + n * p + oy * ow;
            T* dst = plane + iy * g.in_w;
            for (size_t ox = 0; ox < ow; ++ox) {
              const long ix = static_cast<long>(ox * g.stride + j) -
                              static_cast<long>(g.pad);
              if (ix >= 0 && ix < static_cast<long>(g.in_w)) dst[ix] += src[ox];
            }
          }
        }
      }
  return x;
}

template <class T>
std::vector<T> ocols_to_nchw(const T* y, size_t out_c, size_t batch,
                             size_t p) {
  std::vector<T> out(out_c * batch * p);
  for (size_t o = 0; o < out_c; ++o)
    for (size_t n = 0; n < batch; ++n)
      std::copy(y + o * batch * p + n * p, y + o * batch * p + (n + 1) * p,
                out.begin() + (n * out_c + o) * p);
  return out;
}

template <class T>
std::vector<T> nchw_to_ocols(const T* y, size_t out_c, size_t batch,
                             size_t p) {
  std::vector<T> out(out_c * batch * p);
  for (size_t o = 0; o < out_c; ++o)
    for (size_t n = 0; n < batch; ++n)
      std::copy(y + (n * out_c + o) * p, y + (n * out_c + o + 1) * p,
                out.begin() + o * batch * p + n * p);
  return out;
}

template std::vector<uint64_t> im2col(const uint64_t*, const Conv2dGeometry&);
template std::vector<double> im2col(const double*, const Conv2dGeometry&);
template std::vector<uint64_t> col2im(const uint64_t*, const Conv2dGeometry&);
template std::vector<double> col2im(const double*, const Conv2dGeometry&);
template std::vector<uint64_t> ocols_to_nchw(const uint64_t*, size_t, size_t,
                                             size_t);
template std::vector<double> ocols_to_nchw(const double*, size_t, size_t,
                                           size_t);
template std::vector<uint64_t> nchw_to_ocols(const uint64_t*, size_t, size_t,
                                             size_t);
template std::vector<double> nchw_to_ocols(const double*, size_t, size_t,
                                           size_t);

RingTensor im2col(const RingTensor& x, const Conv2dGeometry& g) {
  MPC3_ENFORCE(x.shape == g.input_shape(), ShapeError,
               "im2col: input " + shape_str(x.shape));
  return RingTensor({g.patch(), g.positions()}, im2col(x.data.data(), g));
}

RingTensor col2im(const RingTensor& cols, const Conv2dGeometry& g) {
  MPC3_ENFORCE(cols.shape == Shape({g.patch(), g.positions()}), ShapeError,
               "col2im: columns " + shape_str(cols.shape));
  return RingTensor(g.input_shape(), col2im(cols.data.data(), g));
}

RingTensor ocols_to_nchw(const RingTensor& y, const Conv2dGeometry& g) {
  const size_t p = g.out_h() * g.out_w();
  MPC3_ENFORCE(y.size() == g.out_c * g.batch * p, ShapeError,
               "ocols_to_nchw: size mismatch");
  return RingTensor(g.output_shape(),
                    ocols_to_nchw(y.data.data(), g.out_c, g.batch, p));
}

RingTensor nchw_to_ocols(const RingTensor& y, const Conv2dGeometry& g) {
  const size_t p = g.out_h() * g.out_w();
  MPC3_ENFORCE(y.shape == g.output_shape(), ShapeError,
               "nchw_to_ocols: shape " + shape_str(y.shape));
  return RingTensor({g.out_c, g.batch * p},
                    nchw_to_ocols(y.data.data(), g.out_c, g.batch, p));
}

}  // namespace mpc3

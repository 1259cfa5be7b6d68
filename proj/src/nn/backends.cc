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

#include "mpc3/nn/backends.h"

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>

#include "mpc3/errors.h"

namespace mpc3::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

Conv2dGeometry pool_geometry(const Conv2dGeometry& g) {
  Conv2dGeometry c = g;
  c.batch = g.batch * g.in_c;
  c.in_c = 1;
  c.out_c = 1;
  return c;
}

// [m,k] x [k,n]
std::vector<double> gemm(const double* a, const double* b, size_t m, size_t k,
                         size_t n) {
  std::vector<double> out(m * n);
  MMap(out.data(), m, n).noalias() = CMap(a, m, k) * CMap(b, k, n);
  return out;
}

template <class T>
std::vector<T> transpose(const T* a, size_t rows, size_t cols) {
  std::vector<T> out(rows * cols);
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c) out[c * rows + r] = a[r * cols + c];
  return out;
}

RingTensor transpose_r(const RingTensor& a) {
  return transpose2d(a);
}

// Per-channel bias broadcast over [N, C, P].
template <class T>
std::vector<T> channel_broadcast(const T* b, size_t n, size_t c, size_t p) {
  std::vector<T> out(n * c * p);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < c; ++j)
      std::fill_n(out.begin() + (i * c + j) * p, p, b[j]);
  return out;
}

// Row broadcast of a [d] vector to [rows, d].
template <class T>
std::vector<T> row_broadcast(const T* b, size_t rows, size_t d) {
  std::vector<T> out(rows * d);
  for (size_t r = 0; r < rows; ++r) std::copy_n(b, d, out.begin() + r * d);
  return out;
}

// Sum of [rows, d] over rows.
template <class T>
std::vector<T> col_sums(const T* a, size_t rows, size_t d) {
  std::vector<T> out(d, T{});
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < d; ++c) out[c] += a[r * d + c];
  return out;
}

// Sum of [rows, d] over columns.
template <class T>
std::vector<T> row_sums(const T* a, size_t rows, size_t d) {
  std::vector<T> out(rows, T{});
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < d; ++c) out[r] += a[r * d + c];
  return out;
}

// Pooled gradient [N*C*P] spread over the window columns, then scattered
// back to the input. Window weights are all one.
template <class T>
std::vector<T> pool_scatter(const T* gy, const Conv2dGeometry& g) {
  const auto pg = pool_geometry(g);
  const size_t area = g.kh * g.kw, pos = pg.positions();
  std::vector<T> cols(area * pos);
  for (size_t r = 0; r < area; ++r) std::copy_n(gy, pos, cols.begin() + r * pos);
  return col2im(cols.data(), pg);
}

void check_pool(const Conv2dGeometry& g) {
  MPC3_ENFORCE(g.out_c == g.in_c, GeometryError,
               "avgpool: out channels must equal in channels");
}

void check_batch(const Shape& x, size_t batch, const char* op) {
  MPC3_ENFORCE(!x.empty() && x[0] == batch, ShapeError,
               std::string(op) + ": batch mismatch, got " + shape_str(x));
}

RingTensor rt(Shape s, std::vector<uint64_t> d) {
  RingTensor t;
  t.shape = std::move(s);
  t.data = std::move(d);
  return t;
}

inline uint64_t round_shift(uint64_t v, int bits) {
  if (bits == 0) return v;
  return static_cast<uint64_t>(
      static_cast<int64_t>(v + (uint64_t{1} << (bits - 1))) >> bits);
}

}  // namespace

FloatTensor::FloatTensor(Shape s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  MPC3_ENFORCE(data.size() == numel(shape), ShapeError,
               "float tensor: data does not match shape " + shape_str(shape));
}

SgdScale sgd_scale(double lr, size_t batch, const FixedPointConfig& fx) {
  MPC3_ENFORCE(batch >= 1, ConfigError, "sgd: batch must be positive");
  if (std::has_single_bit(batch))
    return {fx_encode(lr, fx), fx.t + std::countr_zero(batch)};
  return {fx_encode(lr / static_cast<double>(batch), fx), fx.t};
}

// ---------------------------------------------------------------- float

FloatTensor FloatBackend::reshape(const Tensor& x, Shape s) const {
  return FloatTensor(std::move(s), x.data);
}

FloatTensor FloatBackend::conv2d(const Tensor& x, const Tensor& w,
                                 const Tensor& b, const Conv2dGeometry& g) {
  check_batch(x.shape, g.batch, "conv2d");
  const auto cols = im2col(x.data.data(), g);
  const size_t p = g.out_h() * g.out_w();
  auto y = gemm(w.data.data(), cols.data(), g.out_c, g.patch(), g.positions());
  auto out = ocols_to_nchw(y.data(), g.out_c, g.batch, p);
  const auto bb = channel_broadcast(b.data.data(), g.batch, g.out_c, p);
  for (size_t i = 0; i < out.size(); ++i) out[i] += bb[i];
  return FloatTensor(g.output_shape(), std::move(out));
}

FloatTensor FloatBackend::fc(const Tensor& x, const Tensor& w, const Tensor& b) {
  const size_t rows = x.shape[0], in = w.shape[1], out = w.shape[0];
  MPC3_ENFORCE(x.size() == rows * in, ShapeError, "fc: input width mismatch");
  const auto wt = transpose(w.data.data(), out, in);
  auto y = gemm(x.data.data(), wt.data(), rows, in, out);
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < out; ++c) y[r * out + c] += b.data[c];
  return FloatTensor({rows, out}, std::move(y));
}

std::pair<FloatTensor, FloatTensor> FloatBackend::relu(const Tensor& x) {
  FloatTensor y(x.shape), m(x.shape);
  for (size_t i = 0; i < x.size(); ++i) {
    m.data[i] = x.data[i] >= 0 ? 1.0 : 0.0;
    y.data[i] = x.data[i] * m.data[i];
  }
  return {std::move(y), std::move(m)};
}

FloatTensor FloatBackend::avgpool(const Tensor& x, const Conv2dGeometry& g) {
  check_pool(g);
  const auto pg = pool_geometry(g);
  const auto cols = im2col(x.data.data(), pg);
  const size_t area = g.kh * g.kw, pos = pg.positions();
  std::vector<double> out(pos, 0.0);
  for (size_t r = 0; r < area; ++r)
    for (size_t j = 0; j < pos; ++j) out[j] += cols[r * pos + j];
  for (auto& v : out) v /= static_cast<double>(area);
  return FloatTensor(g.output_shape(), std::move(out));
}

ParamGrads<FloatTensor> FloatBackend::conv2d_backward(const Tensor& x,
                                                      const Tensor& w,
                                                      const Tensor& gy,
                                                      const Conv2dGeometry& g,
                                                      bool need_dx) {
  const size_t p = g.out_h() * g.out_w(), pos = g.positions(), k = g.patch();
  const auto gm = nchw_to_ocols(gy.data.data(), g.out_c, g.batch, p);
  const auto cols = im2col(x.data.data(), g);
  const auto colst = transpose(cols.data(), k, pos);
  ParamGrads<FloatTensor> r;
  r.dw = FloatTensor(g.kernel_shape(), gemm(gm.data(), colst.data(), g.out_c, pos, k));
  r.db = FloatTensor({g.out_c}, row_sums(gm.data(), g.out_c, pos));
  if (need_dx) {
    const auto wt = transpose(w.data.data(), g.out_c, k);
    const auto dcols = gemm(wt.data(), gm.data(), k, g.out_c, pos);
    r.dx = FloatTensor(g.input_shape(), col2im(dcols.data(), g));
  }
  return r;
}

ParamGrads<FloatTensor> FloatBackend::fc_backward(const Tensor& x,
                                                  const Tensor& w,
                                                  const Tensor& gy,
                                                  bool need_dx) {
  const size_t rows = x.shape[0], in = w.shape[1], out = w.shape[0];
  const auto gt = transpose(gy.data.data(), rows, out);
  ParamGrads<FloatTensor> r;
  r.dw = FloatTensor({out, in}, gemm(gt.data(), x.data.data(), out, rows, in));
  r.db = FloatTensor({out}, col_sums(gy.data.data(), rows, out));
  if (need_dx)
    r.dx = FloatTensor({rows, in}, gemm(gy.data.data(), w.data.data(), rows, out, in));
  return r;
}

FloatTensor FloatBackend::relu_backward(const Tensor& gy, const Tensor& mask) {
  FloatTensor out(gy.shape);
  for (size_t i = 0; i < gy.size(); ++i) out.data[i] = gy.data[i] * mask.data[i];
  return out;
}

FloatTensor FloatBackend::avgpool_backward(const Tensor& gy,
                                           const Conv2dGeometry& g) {
  check_pool(g);
  auto dx = pool_scatter(gy.data.data(), g);
  for (auto& v : dx) v /= static_cast<double>(g.kh * g.kw);
  return FloatTensor(g.input_shape(), std::move(dx));
}

FloatTensor FloatBackend::loss_grad(const Tensor& logits, const Tensor& onehot) {
  MPC3_ENFORCE(logits.shape == onehot.shape && logits.shape.size() == 2,
               ShapeError, "loss_grad: length mismatch");
  const size_t rows = logits.shape[0], d = logits.shape[1];
  FloatTensor g(logits.shape);
  for (size_t r = 0; r < rows; ++r) {
    const double* z = logits.data.data() + r * d;
    const double mx = *std::max_element(z, z + d);
    double s = 0;
    for (size_t c = 0; c < d; ++c) s += std::exp(z[c] - mx);
    for (size_t c = 0; c < d; ++c)
      g.data[r * d + c] = std::exp(z[c] - mx) / s - onehot.data[r * d + c];
  }
  return g;
}

FloatTensor FloatBackend::sgd(const Tensor& w, const Tensor& dw, double lr,
                              size_t batch) {
  MPC3_ENFORCE(w.shape == dw.shape, ShapeError, "sgd: shape mismatch");
  FloatTensor out = w;
  const double c = lr / static_cast<double>(batch);
  for (size_t i = 0; i < w.size(); ++i) out.data[i] -= c * dw.data[i];
  return out;
}

// ---------------------------------------------------------------- fixed

FixedBackend::FixedBackend(FixedPointConfig fx, ExpConfig ecfg,
                           ReciprocalConfig rcfg)
    : fx_(fx), ecfg_(ecfg), rcfg_(rcfg) {
  fx_.validate();
}

RingTensor FixedBackend::trunc(const Tensor& x, int bits) const {
  RingTensor out(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i)
    out.data[i] = round_shift(x.data[i], bits);
  return out;
}

RingTensor FixedBackend::mul_fx(const Tensor& a, const Tensor& b) const {
  return trunc(ring_mul(a, b), fx_.t);
}

RingTensor FixedBackend::exp_approx(const Tensor& x) const {
  const int s = ecfg_.squarings(), t = fx_.t;
  const int e = std::max(0, std::min(s, 31 - t));
  RingTensor b = e < s ? trunc(x, s - e) : x;
  b = ring_add_scalar(b, uint64_t{1} << (t + e));
  for (int i = 0; i < s; ++i) b = trunc(ring_mul(b, b), t + e);
  if (e > 0) b = trunc(b, e);
  return b;
}

RingTensor FixedBackend::reciprocal(const Tensor& y) const {
  RingTensor z = RingTensor::filled(y.shape, fx_encode(1.0 / rcfg_.Y, fx_));
  for (int i = 0; i < rcfg_.iterations; ++i)
    z = ring_sub(ring_scalar_mul(z, 2), mul_fx(y, mul_fx(z, z)));
  return z;
}

RingTensor FixedBackend::row_max(const Tensor& z) const {
  const size_t rows = z.shape[0], d = z.shape[1];
  RingTensor out({rows, 1});
  for (size_t r = 0; r < rows; ++r) {
    int64_t m = static_cast<int64_t>(z.data[r * d]);
    for (size_t c = 1; c < d; ++c)
      m = std::max(m, static_cast<int64_t>(z.data[r * d + c]));
    out.data[r] = static_cast<uint64_t>(m);
  }
  return out;
}

RingTensor FixedBackend::softmax(const Tensor& z) const {
  MPC3_ENFORCE(z.shape.size() == 2, ShapeError, "softmax expects [rows, d]");
  const size_t rows = z.shape[0], d = z.shape[1];
  if (static_cast<double>(d) > rcfg_.Y)
    throw ConfigError("softmax: length exceeds reciprocal bound Y");
  const RingTensor mx = row_max(z);
  RingTensor sh(z.shape);
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < d; ++c)
      sh.data[r * d + c] = z.data[r * d + c] - mx.data[r];
  const RingTensor e = exp_approx(sh);
  const RingTensor rec = reciprocal(rt({rows, 1}, row_sums(e.data.data(), rows, d)));
  return mul_fx(e, rt(z.shape, [&] {
                  std::vector<uint64_t> v(rows * d);
                  for (size_t r = 0; r < rows; ++r)
                    std::fill_n(v.begin() + r * d, d, rec.data[r]);
                  return v;
                }()));
}

RingTensor FixedBackend::reshape(const Tensor& x, Shape s) const {
  return x.reshaped(std::move(s));
}

RingTensor FixedBackend::conv2d(const Tensor& x, const Tensor& w,
                                const Tensor& b, const Conv2dGeometry& g) {
  check_batch(x.shape, g.batch, "conv2d");
  RingTensor y = trunc(bilinear_direct(x, w, BilinearOpSpec::conv2d(g)), fx_.t);
  const size_t p = g.out_h() * g.out_w();
  ring_add_inplace(y, rt(y.shape, channel_broadcast(b.data.data(), g.batch, g.out_c, p)));
  return y;
}

RingTensor FixedBackend::fc(const Tensor& x, const Tensor& w, const Tensor& b) {
  const size_t rows = x.shape[0], in = w.shape[1], out = w.shape[0];
  MPC3_ENFORCE(x.size() == rows * in, ShapeError, "fc: input width mismatch");
  RingTensor y = trunc(bilinear_direct(x.reshaped({rows, in}), transpose_r(w),
                                       BilinearOpSpec::matmul(rows, in, out)),
                       fx_.t);
  ring_add_inplace(y, rt(y.shape, row_broadcast(b.data.data(), rows, out)));
  return y;
}

std::pair<RingTensor, RingTensor> FixedBackend::relu(const Tensor& x) {
  RingTensor y(x.shape), m(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i) {
    const bool pos = static_cast<int64_t>(x.data[i]) >= 0;
    m.data[i] = pos ? 1 : 0;
    y.data[i] = pos ? x.data[i] : 0;
  }
  return {std::move(y), std::move(m)};
}

RingTensor FixedBackend::avgpool(const Tensor& x, const Conv2dGeometry& g) {
  check_pool(g);
  const RingTensor s = bilinear_direct(x, RingTensor::filled({g.kh, g.kw}, 1),
                                       BilinearOpSpec::sum_pool(g));
  const PoolScale ps = avgpool_scale(g.kh * g.kw, fx_);
  return trunc(ring_scalar_mul(s, ps.factor), ps.shift);
}

ParamGrads<RingTensor> FixedBackend::conv2d_backward(const Tensor& x,
                                                     const Tensor& w,
                                                     const Tensor& gy,
                                                     const Conv2dGeometry& g,
                                                     bool need_dx) {
  const size_t pos = g.positions(), k = g.patch();
  const RingTensor gm = nchw_to_ocols(gy, g);
  const RingTensor colst = transpose_r(im2col(x, g));
  ParamGrads<RingTensor> r;
  r.dw = trunc(bilinear_direct(gm, colst, BilinearOpSpec::matmul(g.out_c, pos, k)),
               fx_.t)
             .reshaped(g.kernel_shape());
  r.db = rt({g.out_c}, row_sums(gm.data.data(), g.out_c, pos));
  if (need_dx) {
    const RingTensor wt = transpose_r(w.reshaped({g.out_c, k}));
    const RingTensor dcols = trunc(
        bilinear_direct(wt, gm, BilinearOpSpec::matmul(k, g.out_c, pos)), fx_.t);
    r.dx = col2im(dcols, g);
  }
  return r;
}

ParamGrads<RingTensor> FixedBackend::fc_backward(const Tensor& x,
                                                 const Tensor& w,
                                                 const Tensor& gy,
                                                 bool need_dx) {
  const size_t rows = x.shape[0], in = w.shape[1], out = w.shape[0];
  ParamGrads<RingTensor> r;
  r.dw = trunc(bilinear_direct(transpose_r(gy), x.reshaped({rows, in}),
                               BilinearOpSpec::matmul(out, rows, in)),
               fx_.t);
  r.db = rt({out}, col_sums(gy.data.data(), rows, out));
  if (need_dx)
    r.dx = trunc(bilinear_direct(gy, w, BilinearOpSpec::matmul(rows, out, in)), fx_.t);
  return r;
}

RingTensor FixedBackend::relu_backward(const Tensor& gy, const Tensor& mask) {
  return ring_mul(gy, mask);
}

RingTensor FixedBackend::avgpool_backward(const Tensor& gy,
                                          const Conv2dGeometry& g) {
  check_pool(g);
  RingTensor s = rt(g.input_shape(), pool_scatter(gy.data.data(), g));
  const PoolScale ps = avgpool_scale(g.kh * g.kw, fx_);
  return trunc(ring_scalar_mul(s, ps.factor), ps.shift);
}

RingTensor FixedBackend::loss_grad(const Tensor& logits, const Tensor& onehot) {
  MPC3_ENFORCE(logits.shape == onehot.shape && logits.shape.size() == 2,
               ShapeError, "loss_grad: length mismatch");
  return ring_sub(softmax(logits), onehot);
}

RingTensor FixedBackend::sgd(const Tensor& w, const Tensor& dw, double lr,
                             size_t batch) {
  MPC3_ENFORCE(w.shape == dw.shape, ShapeError, "sgd: shape mismatch");
  const SgdScale sc = sgd_scale(lr, batch, fx_);
  return ring_sub(w, trunc(ring_scalar_mul(dw, sc.factor), sc.shift));
}

// ---------------------------------------------------------------- private

ArithmeticShare PrivateBackend::reshape(const Tensor& x, Shape s) const {
  return x.reshaped(std::move(s));
}

ArithmeticShare PrivateBackend::conv2d(const Tensor& x, const Tensor& w,
                                       const Tensor& b, const Conv2dGeometry& g) {
  check_batch(x.shape(), g.batch, "conv2d");
  ArithmeticShare y = conv2d_shares(ctx_, x, w, BilinearOpSpec::conv2d(g));
  const size_t p = g.out_h() * g.out_w();
  return add(y, map_linear(b, [&](const RingTensor& t) {
               return rt(y.shape(), channel_broadcast(t.data.data(), g.batch, g.out_c, p));
             }));
}

ArithmeticShare PrivateBackend::fc(const Tensor& x, const Tensor& w,
                                   const Tensor& b) {
  const size_t rows = x.shape()[0], in = w.shape()[1], out = w.shape()[0];
  MPC3_ENFORCE(x.size() == rows * in, ShapeError, "fc: input width mismatch");
  ArithmeticShare y = matmul_shares(ctx_, x.reshaped({rows, in}),
                                    map_linear(w, transpose_r),
                                    BilinearOpSpec::matmul(rows, in, out));
  return add(y, map_linear(b, [&](const RingTensor& t) {
               return rt(y.shape(), row_broadcast(t.data.data(), rows, out));
             }));
}

std::pair<ArithmeticShare, ArithmeticShare> PrivateBackend::relu(const Tensor& x) {
  return relu_with_mask(ctx_, x);
}

ArithmeticShare PrivateBackend::avgpool(const Tensor& x, const Conv2dGeometry& g) {
  check_pool(g);
  return avgpool_shares(ctx_, x, g);
}

ParamGrads<ArithmeticShare> PrivateBackend::conv2d_backward(
    const Tensor& x, const Tensor& w, const Tensor& gy, const Conv2dGeometry& g,
    bool need_dx) {
  const size_t pos = g.positions(), k = g.patch();
  const ArithmeticShare gm =
      map_linear(gy, [&](const RingTensor& t) { return nchw_to_ocols(t, g); });
  const ArithmeticShare colst = map_linear(
      x, [&](const RingTensor& t) { return transpose_r(im2col(t, g)); });
  ParamGrads<ArithmeticShare> r;
  r.dw = matmul_shares(ctx_, gm, colst, BilinearOpSpec::matmul(g.out_c, pos, k))
             .reshaped(g.kernel_shape());
  r.db = map_linear(gm, [&](const RingTensor& t) {
    return rt({g.out_c}, row_sums(t.data.data(), g.out_c, pos));
  });
  if (need_dx) {
    const ArithmeticShare wt = map_linear(w, [&](const RingTensor& t) {
      return transpose_r(t.reshaped({g.out_c, k}));
    });
    const ArithmeticShare dcols =
        matmul_shares(ctx_, wt, gm, BilinearOpSpec::matmul(k, g.out_c, pos));
    r.dx = map_linear(dcols, [&](const RingTensor& t) { return col2im(t, g); });
  }
  return r;
}

ParamGrads<ArithmeticShare> PrivateBackend::fc_backward(const Tensor& x,
                                                        const Tensor& w,
                                                        const Tensor& gy,
                                                        bool need_dx) {
  const size_t rows = x.shape()[0], in = w.shape()[1], out = w.shape()[0];
  ParamGrads<ArithmeticShare> r;
  r.dw = matmul_shares(ctx_, map_linear(gy, transpose_r), x.reshaped({rows, in}),
                       BilinearOpSpec::matmul(out, rows, in));
  r.db = map_linear(gy, [&](const RingTensor& t) {
    return rt({out}, col_sums(t.data.data(), rows, out));
  });
  if (need_dx)
    r.dx = matmul_shares(ctx_, gy, w, BilinearOpSpec::matmul(rows, out, in));
  return r;
}

ArithmeticShare PrivateBackend::relu_backward(const Tensor& gy,
                                              const Tensor& mask) {
  ArithmeticShare out = mul(ctx_, gy, mask);
  out.cfg = gy.cfg;
  return out;
}

ArithmeticShare PrivateBackend::avgpool_backward(const Tensor& gy,
                                                 const Conv2dGeometry& g) {
  check_pool(g);
  const ArithmeticShare s = map_linear(gy, [&](const RingTensor& t) {
    return rt(g.input_shape(), pool_scatter(t.data.data(), g));
  });
  const PoolScale ps = avgpool_scale(g.kh * g.kw, gy.cfg);
  return truncate(ctx_, ps.factor == 1 ? s : scale(s, ps.factor), ps.shift);
}

ArithmeticShare PrivateBackend::loss_grad(const Tensor& logits,
                                          const Tensor& onehot) {
  MPC3_ENFORCE(logits.shape() == onehot.shape() && logits.shape().size() == 2,
               ShapeError, "loss_grad: length mismatch");
  return sub(softmax(ctx_, logits, ecfg_, rcfg_), onehot);
}

ArithmeticShare PrivateBackend::sgd(const Tensor& w, const Tensor& dw,
                                    double lr, size_t batch) {
  MPC3_ENFORCE(w.shape() == dw.shape(), ShapeError, "sgd: shape mismatch");
  const SgdScale sc = sgd_scale(lr, batch, w.cfg);
  return sub(w, truncate(ctx_, scale(dw, sc.factor), sc.shift));
}

}  // namespace mpc3::nn

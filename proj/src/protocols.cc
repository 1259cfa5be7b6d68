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

#include "mpc3/protocols.h"

#include <bit>
#include <cmath>

#include "mpc3/errors.h"

namespace mpc3 {

namespace {

constexpr PartyId P1{1}, P2{2}, P3{3};
constexpr uint64_t kHalfRing = uint64_t{1} << 63;
constexpr int64_t kWrapGuard = int64_t{1} << 62;

inline uint64_t sra(uint64_t v, int bits) {
  return static_cast<uint64_t>(static_cast<int64_t>(v) >> bits);
}

void check_same_shape(const ArithmeticShare& a, const ArithmeticShare& b,
                      const char* op) {
  MPC3_ENFORCE(a.shape() == b.shape(), ShapeError,
               std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                   " vs " + shape_str(b.shape()));
}

ArithmeticShare mul_impl(PartyContext& ctx, const ArithmeticShare& x,
                         const ArithmeticShare& y, const char* label) {
  check_same_shape(x, y, "mul");
  const size_t n = x.size();
  RingTensor z(x.shape());
  for (size_t i = 0; i < n; ++i)
    z.data[i] = (x.lo.data[i] + x.hi.data[i]) * y.lo.data[i] +
                x.lo.data[i] * y.hi.data[i];
  auto r = reshare(ctx, z, Purpose::kMulReshare);
  ctx.round(label);
  r.cfg = x.cfg;
  return r;
}

// Value of replicated slot s as seen by `self` (zero if not held).
RingTensor slot_value(const BinaryShare& b, PartyId self, PartyId s) {
  if (self == s) return b.lo;
  if (self.next() == s) return b.hi;
  return RingTensor(b.shape());
}

// Columns [idx...] of a [rows, k] tensor.
RingTensor gather_cols(const RingTensor& t, const std::vector<size_t>& idx) {
  const size_t rows = t.shape[0], k = t.shape[1];
  RingTensor out({rows, idx.size()});
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < idx.size(); ++c)
      out.data[r * idx.size() + c] = t.data[r * k + idx[c]];
  return out;
}

RingTensor concat_cols(const RingTensor& a, const RingTensor& b) {
  const size_t rows = a.shape[0], ka = a.shape[1], kb = b.shape[1];
  RingTensor out({rows, ka + kb});
  for (size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data.begin() + r * ka, ka, out.data.begin() + r * (ka + kb));
    std::copy_n(b.data.begin() + r * kb, kb,
                out.data.begin() + r * (ka + kb) + ka);
  }
  return out;
}

RingTensor broadcast_cols(const RingTensor& col, size_t d) {
  const size_t rows = col.shape[0];
  RingTensor out({rows, d});
  for (size_t r = 0; r < rows; ++r)
    std::fill_n(out.data.begin() + r * d, d, col.data[r]);
  return out;
}

RingTensor row_sum(const RingTensor& t) {
  const size_t rows = t.shape[0], d = t.shape[1];
  RingTensor out({rows, 1});
  for (size_t r = 0; r < rows; ++r) {
    uint64_t s = 0;
    for (size_t c = 0; c < d; ++c) s += t.data[r * d + c];
    out.data[r] = s;
  }
  return out;
}

ArithmeticShare as_matrix(const ArithmeticShare& x) {
  if (x.shape().size() == 2) return x;
  MPC3_ENFORCE(x.shape().size() == 1, ShapeError,
               "expected a vector or a [rows, d] matrix");
  return x.reshaped({1, x.size()});
}

}  // namespace

int ExpConfig::squarings() const {
  MPC3_ENFORCE(m >= 1 && std::has_single_bit(static_cast<unsigned>(m)),
               ConfigError, "exp degree m must be a power of two");
  return std::countr_zero(static_cast<unsigned>(m));
}

ArithmeticShare input(PartyContext& ctx, PartyId owner,
                      const RingTensor* value, const Shape& shape) {
  const PartyId me = ctx.id();
  ArithmeticShare out{me, {}, {}, ctx.fx()};
  if (me == owner) {
    MPC3_ENFORCE(value != nullptr && value->shape == shape, ShapeError,
                 "input owner must supply a tensor of shape " +
                     shape_str(shape));
    out.lo = ctx.pairwise_random(owner.prev(), Purpose::kInput, shape);
    out.hi = ctx.pairwise_random(owner.next(), Purpose::kInput, shape);
    RingTensor rest = ring_sub(ring_sub(*value, out.lo), out.hi);
    ctx.send(owner.next(), rest);
    ctx.send(owner.prev(), rest);
  } else if (me == owner.next()) {
    out.lo = ctx.pairwise_random(owner, Purpose::kInput, shape);
    out.hi = ctx.recv(owner, shape);
  } else {
    out.hi = ctx.pairwise_random(owner, Purpose::kInput, shape);
    out.lo = ctx.recv(owner, shape);
  }
  ctx.round("input");
  return out;
}

RingTensor open(PartyContext& ctx, const ArithmeticShare& x) {
  ctx.send(ctx.id().next(), x.lo);
  RingTensor missing = ctx.recv(ctx.id().prev(), x.shape());
  ctx.round("open");
  return ring_add(ring_add(x.lo, x.hi), missing);
}

std::optional<RingTensor> open_to(PartyContext& ctx, const ArithmeticShare& x,
                                  PartyId to) {
  const PartyId me = ctx.id();
  std::optional<RingTensor> out;
  if (me == to.prev()) ctx.send(to, x.lo);
  if (me == to) {
    RingTensor missing = ctx.recv(to.prev(), x.shape());
    out = ring_add(ring_add(x.lo, x.hi), missing);
  }
  ctx.round("open");
  return out;
}

RingTensor open_binary(PartyContext& ctx, const BinaryShare& x) {
  ctx.send(ctx.id().next(), x.lo);
  RingTensor missing = ctx.recv(ctx.id().prev(), x.shape());
  ctx.round("open");
  return ring_xor(ring_xor(x.lo, x.hi), missing);
}

ArithmeticShare reshare(PartyContext& ctx, const RingTensor& z, Purpose p) {
  RingTensor v = ring_add(z, ctx.zero_share(p, z.shape));
  ctx.send(ctx.id().prev(), v);
  RingTensor hi = ctx.recv(ctx.id().next(), z.shape);
  return {ctx.id(), std::move(v), std::move(hi), ctx.fx()};
}

ArithmeticShare mul(PartyContext& ctx, const ArithmeticShare& x,
                    const ArithmeticShare& y) {
  return mul_impl(ctx, x, y, "mul");
}

ArithmeticShare truncate(PartyContext& ctx, const ArithmeticShare& x,
                         int bits) {
  MPC3_ENFORCE(bits >= 0 && bits < 62, ConfigError,
               "truncation width out of range");
  if (bits == 0) return x;
  const PartyId me = ctx.id();
  const Shape& shape = x.shape();
  const size_t n = x.size();
  // Additive split x = A + B with A = x_1 (P1, P3) and B = x_2 + x_3 (P2).
  // If |A| > 2^62 both halves are moved by 2^63 so that neither wraps; P2
  // prepares both candidates and P1 picks one through an OT helped by P3.
  auto flag = [](uint64_t a) {
    const int64_t s = static_cast<int64_t>(a);
    return s > kWrapGuard || s < -kWrapGuard;
  };
  RingTensor u(shape);
  const uint64_t low_mask = (uint64_t{1} << bits) - 1;
  if (me == P1) {
    RingTensor e = ctx.recv(P2, {2 * n});
    RingTensor wf = ctx.recv(P3, shape);
    for (size_t i = 0; i < n; ++i) {
      const uint64_t a = x.lo.data[i];
      const bool f = flag(a);
      const uint64_t mf = e.data[(f ? n : 0) + i] - wf.data[i];
      // P2 adds 1 to round up; skip it when A has no fractional part, so
      // exact inputs such as public zeros stay exact.
      const uint64_t exact = (a & low_mask) == 0 ? 1 : 0;
      u.data[i] = sra(f ? a + kHalfRing : a, bits) + mf - exact;
    }
  } else if (me == P2) {
    RingTensor r = ctx.pairwise_random(P3, Purpose::kTruncOt, {3 * n});
    RingTensor e({2 * n});
    for (size_t i = 0; i < n; ++i) {
      const uint64_t b = x.lo.data[i] + x.hi.data[i];
      const uint64_t t0 = sra(b, bits);
      const uint64_t t1 = sra(b + kHalfRing, bits);
      const uint64_t w0 = r.data[i], w1 = r.data[n + i], rho = r.data[2 * n + i];
      e.data[i] = w0 - rho;
      e.data[n + i] = w1 + (t1 - t0) - rho;
      u.data[i] = t0 + rho + 1;
    }
    ctx.send(P1, e);
  } else {
    RingTensor r = ctx.pairwise_random(P2, Purpose::kTruncOt, {3 * n});
    RingTensor wf(shape);
    for (size_t i = 0; i < n; ++i)
      wf.data[i] = flag(x.hi.data[i]) ? r.data[n + i] : r.data[i];
    ctx.send(P1, wf);
  }
  ctx.round("trunc");
  auto out = reshare(ctx, u, Purpose::kTruncReshare);
  ctx.round("trunc");
  out.cfg = x.cfg;
  return out;
}

ArithmeticShare mul_fx(PartyContext& ctx, const ArithmeticShare& x,
                       const ArithmeticShare& y) {
  return truncate(ctx, mul(ctx, x, y), x.cfg.t);
}

ArithmeticShare mul_public_fx(PartyContext& ctx, const ArithmeticShare& x,
                              double c) {
  return truncate(ctx, scale(x, fx_encode(c, x.cfg)), x.cfg.t);
}

ArithmeticShare bilinear_raw(PartyContext& ctx, const ArithmeticShare& a,
                             const ArithmeticShare& b,
                             const BilinearOpSpec& spec) {
  RingTensor z = bilinear_exact(ring_add(a.lo, a.hi), b.lo, spec);
  ring_add_inplace(z, bilinear_exact(a.lo, b.hi, spec));
  auto r = reshare(ctx, z, Purpose::kMulReshare);
  ctx.round("mul");
  r.cfg = a.cfg;
  return r;
}

ArithmeticShare matmul_shares(PartyContext& ctx, const ArithmeticShare& a,
                              const ArithmeticShare& b,
                              const BilinearOpSpec& spec) {
  return truncate(ctx, bilinear_raw(ctx, a, b, spec), a.cfg.t);
}

ArithmeticShare conv2d_shares(PartyContext& ctx, const ArithmeticShare& x,
                              const ArithmeticShare& w,
                              const BilinearOpSpec& spec) {
  MPC3_ENFORCE(spec.kind == BilinearKind::kConv2d, ConfigError,
               "conv2d_shares needs a conv2d spec");
  return truncate(ctx, bilinear_raw(ctx, x, w, spec), x.cfg.t);
}

ArithmeticShare sum_pool_local(const ArithmeticShare& x,
                               const Conv2dGeometry& g) {
  const auto spec = BilinearOpSpec::sum_pool(g);
  const RingTensor ones = RingTensor::filled({g.kh, g.kw}, 1);
  return map_linear(x, [&](const RingTensor& t) {
    return bilinear_exact(t, ones, spec);
  });
}

ArithmeticShare avgpool_shares(PartyContext& ctx, const ArithmeticShare& x,
                               const Conv2dGeometry& g) {
  const PoolScale ps = avgpool_scale(g.kh * g.kw, x.cfg);
  const ArithmeticShare s = sum_pool_local(x, g);
  return truncate(ctx, ps.factor == 1 ? s : scale(s, ps.factor), ps.shift);
}

PoolScale avgpool_scale(size_t area, const FixedPointConfig& fx) {
  MPC3_ENFORCE(area >= 1, GeometryError, "pooling window is empty");
  if (std::has_single_bit(area)) return {1, std::countr_zero(area)};
  const int shift = fx.t + 10;
  const double c = std::ldexp(1.0, shift) / static_cast<double>(area);
  return {static_cast<uint64_t>(std::llround(c)), shift};
}

BinaryShare and_shares(PartyContext& ctx, const BinaryShare& a,
                       const BinaryShare& b) {
  MPC3_ENFORCE(a.shape() == b.shape(), ShapeError, "and: shape mismatch");
  const size_t n = a.size();
  RingTensor z = ctx.xor_zero_share(Purpose::kAndReshare, a.shape());
  for (size_t i = 0; i < n; ++i)
    z.data[i] ^= (a.lo.data[i] & b.lo.data[i]) ^ (a.hi.data[i] & b.lo.data[i]) ^
                 (a.lo.data[i] & b.hi.data[i]);
  ctx.send(ctx.id().prev(), z);
  RingTensor hi = ctx.recv(ctx.id().next(), a.shape());
  ctx.round("and");
  return {ctx.id(), std::move(z), std::move(hi)};
}

BinaryShare a2b(PartyContext& ctx, const ArithmeticShare& x) {
  // Two addends: a = x_1 (P1, P3) and y = x_2 + x_3 (P2). One round gives
  // replicated XOR sharings of g = a & y and p = a ^ y; then six
  // Kogge-Stone levels.
  const PartyId me = ctx.id();
  const Shape& shape = x.shape();
  const size_t n = x.size();
  BinaryShare g{me, RingTensor(shape), RingTensor(shape)};
  BinaryShare p = g;
  if (me == P1) {
    const RingTensor& a = x.lo;
    RingTensor cr = ctx.pairwise_random(P2, Purpose::kA2bMask, {2 * n});
    RingTensor nmsg(shape);
    for (size_t i = 0; i < n; ++i)
      nmsg.data[i] = (a.data[i] & cr.data[i]) ^ cr.data[n + i];
    ctx.send(P3, nmsg);
    RingTensor y1 = ctx.recv(P2, shape);
    RingTensor mm = ctx.recv(P3, shape);
    for (size_t i = 0; i < n; ++i) {
      g.lo.data[i] = (a.data[i] & y1.data[i]) ^ mm.data[i] ^ cr.data[n + i];
      g.hi.data[i] = cr.data[n + i];
      p.lo.data[i] = a.data[i];
      p.hi.data[i] = cr.data[i];
    }
  } else if (me == P2) {
    RingTensor bb = ctx.pairwise_random(P3, Purpose::kA2bMask, {2 * n});
    RingTensor cr = ctx.pairwise_random(P1, Purpose::kA2bMask, {2 * n});
    RingTensor y1(shape), y2(shape);
    for (size_t i = 0; i < n; ++i) {
      const uint64_t y = x.lo.data[i] + x.hi.data[i];
      y1.data[i] = y ^ bb.data[i];
      y2.data[i] = y ^ cr.data[i];
    }
    ctx.send(P1, y1);
    ctx.send(P3, y2);
    for (size_t i = 0; i < n; ++i) {
      g.lo.data[i] = cr.data[n + i];
      g.hi.data[i] = bb.data[n + i];
      p.lo.data[i] = cr.data[i];
      p.hi.data[i] = y2.data[i];
    }
  } else {
    const RingTensor& a = x.hi;
    RingTensor bb = ctx.pairwise_random(P2, Purpose::kA2bMask, {2 * n});
    RingTensor mm(shape);
    for (size_t i = 0; i < n; ++i)
      mm.data[i] = (a.data[i] & bb.data[i]) ^ bb.data[n + i];
    ctx.send(P1, mm);
    RingTensor y2 = ctx.recv(P2, shape);
    RingTensor nmsg = ctx.recv(P1, shape);
    for (size_t i = 0; i < n; ++i) {
      g.lo.data[i] = bb.data[n + i];
      g.hi.data[i] = (a.data[i] & y2.data[i]) ^ nmsg.data[i] ^ bb.data[n + i];
      p.lo.data[i] = y2.data[i];
      p.hi.data[i] = a.data[i];
    }
  }
  ctx.round("and");

  const BinaryShare p0 = p;
  for (int d = 1; d < 64; d *= 2) {
    const BinaryShare gs = shl(g, d);
    if (d < 32) {
      // One AND round for both the generate and propagate updates.
      const BinaryShare ps = shl(p, d);
      const std::array<RingTensor, 2> lhs_lo = {p.lo, p.lo},
                                      lhs_hi = {p.hi, p.hi};
      const std::array<RingTensor, 2> rhs_lo = {gs.lo, ps.lo},
                                      rhs_hi = {gs.hi, ps.hi};
      const Shape flat{n};
      auto flat_rows = [&](const std::array<RingTensor, 2>& v) {
        const std::array<RingTensor, 2> f = {v[0].reshaped(flat),
                                             v[1].reshaped(flat)};
        return concat_rows(f);
      };
      BinaryShare lhs{me, flat_rows(lhs_lo), flat_rows(lhs_hi)};
      BinaryShare rhs{me, flat_rows(rhs_lo), flat_rows(rhs_hi)};
      BinaryShare r = and_shares(ctx, lhs, rhs);
      BinaryShare rg{me, slice_rows(r.lo, 0, n).reshaped(shape),
                     slice_rows(r.hi, 0, n).reshaped(shape)};
      p = {me, slice_rows(r.lo, n, 2 * n).reshaped(shape),
           slice_rows(r.hi, n, 2 * n).reshaped(shape)};
      g = xor_shares(g, rg);
    } else {
      g = xor_shares(g, and_shares(ctx, p, gs));
    }
  }
  return xor_shares(p0, shl(g, 1));
}

BinaryShare msb(PartyContext& ctx, const ArithmeticShare& x) {
  BinaryShare s = a2b(ctx, x);
  return {s.owner, ring_shr(s.lo, 63), ring_shr(s.hi, 63)};
}

ArithmeticShare bit_inject(PartyContext& ctx, const BinaryShare& b) {
  auto is_bit = [](const RingTensor& t) {
    return std::all_of(t.data.begin(), t.data.end(),
                       [](uint64_t v) { return v <= 1; });
  };
  MPC3_ENFORCE(is_bit(b.lo) && is_bit(b.hi), DomainError,
               "bit_inject: share words must be 0 or 1");
  const PartyId me = ctx.id();
  const FixedPointConfig cfg = ctx.fx();
  std::array<ArithmeticShare, 3> s;
  for (PartyId slot : kParties)
    s[slot.idx()] = arith_embed(me, slot, slot_value(b, me, slot), cfg);
  // x ^ y = x + y - 2xy, applied twice.
  auto xor_arith = [&](const ArithmeticShare& u, const ArithmeticShare& v) {
    return sub(add(u, v), scale(mul_impl(ctx, u, v, "inject"), 2));
  };
  return xor_arith(xor_arith(s[0], s[1]), s[2]);
}

std::pair<ArithmeticShare, ArithmeticShare> relu_with_mask(
    PartyContext& ctx, const ArithmeticShare& x) {
  ArithmeticShare mask = drelu(ctx, x);
  ArithmeticShare y = mul(ctx, x, mask);
  y.cfg = x.cfg;
  return {std::move(y), std::move(mask)};
}

ArithmeticShare relu(PartyContext& ctx, const ArithmeticShare& x) {
  return relu_with_mask(ctx, x).first;
}

ArithmeticShare drelu(PartyContext& ctx, const ArithmeticShare& x) {
  ArithmeticShare m = bit_inject(ctx, msb(ctx, x));
  ArithmeticShare d = add_public(neg(m), 1);
  d.cfg = x.cfg;
  return d;
}

ArithmeticShare compare(PartyContext& ctx, const ArithmeticShare& x,
                        const ArithmeticShare& y) {
  check_same_shape(x, y, "compare");
  return drelu(ctx, sub(x, y));
}

ArithmeticShare max_tree(PartyContext& ctx, const ArithmeticShare& v) {
  MPC3_ENFORCE(v.shape().size() == 2, ShapeError,
               "max_tree expects a [rows, m] tensor");
  MPC3_ENFORCE(v.shape()[1] >= 1, ShapeError, "max_tree of an empty vector");
  ArithmeticShare cur = v;
  while (cur.shape()[1] > 1) {
    const size_t k = cur.shape()[1], pairs = k / 2;
    std::vector<size_t> ia(pairs), ib(pairs);
    for (size_t j = 0; j < pairs; ++j) {
      ia[j] = 2 * j;
      ib[j] = 2 * j + 1;
    }
    auto pick = [&](const std::vector<size_t>& idx) {
      return map_linear(cur, [&](const RingTensor& t) { return gather_cols(t, idx); });
    };
    const ArithmeticShare a = pick(ia), b = pick(ib);
    ArithmeticShare m = add(b, relu(ctx, sub(a, b)));
    if (k % 2) {
      const ArithmeticShare last = pick({k - 1});
      m = {m.owner, concat_cols(m.lo, last.lo), concat_cols(m.hi, last.hi), m.cfg};
    }
    cur = m;
  }
  return cur;
}

ArithmeticShare exp_approx(PartyContext& ctx, const ArithmeticShare& x,
                           const ExpConfig& cfg) {
  const int s = cfg.squarings();
  const int t = x.cfg.t;
  // Work at scale 2^(t+e); x/m at that scale is x * 2^(e-s).
  const int e = std::max(0, std::min(s, 31 - t));
  ArithmeticShare b = e < s ? truncate(ctx, x, s - e) : x;
  b = add_public(b, uint64_t{1} << (t + e));
  for (int i = 0; i < s; ++i) b = truncate(ctx, mul(ctx, b, b), t + e);
  if (e > 0) b = truncate(ctx, b, e);
  b.cfg = x.cfg;
  return b;
}

ArithmeticShare reciprocal(PartyContext& ctx, const ArithmeticShare& y,
                           const ReciprocalConfig& cfg) {
  MPC3_ENFORCE(cfg.Y >= 1 && cfg.iterations >= 0, ConfigError,
               "reciprocal: need Y >= 1");
  ArithmeticShare z{y.owner, RingTensor(y.shape()), RingTensor(y.shape()), y.cfg};
  z = add_public(z, fx_encode(1.0 / cfg.Y, y.cfg));
  for (int i = 0; i < cfg.iterations; ++i) {
    ArithmeticShare yz2 = mul_fx(ctx, y, mul_fx(ctx, z, z));
    z = sub(scale(z, 2), yz2);
  }
  return z;
}

ArithmeticShare division(PartyContext& ctx, const ArithmeticShare& x,
                         const ArithmeticShare& y,
                         const ReciprocalConfig& cfg) {
  check_same_shape(x, y, "division");
  return mul_fx(ctx, x, reciprocal(ctx, y, cfg));
}

ArithmeticShare softmax(PartyContext& ctx, const ArithmeticShare& z,
                        const ExpConfig& ecfg, const ReciprocalConfig& rcfg) {
  const ArithmeticShare zm = as_matrix(z);
  const size_t d = zm.shape()[1];
  if (static_cast<double>(d) > rcfg.Y)
    throw ConfigError("softmax: length " + std::to_string(d) +
                      " exceeds reciprocal bound Y");
  const ArithmeticShare mx = max_tree(ctx, zm);
  const ArithmeticShare shifted = sub(zm, map_linear(mx, [&](const RingTensor& t) {
                                        return broadcast_cols(t, d);
                                      }));
  const ArithmeticShare e = exp_approx(ctx, shifted, ecfg);
  const ArithmeticShare s = map_linear(e, [](const RingTensor& t) { return row_sum(t); });
  const ArithmeticShare r = reciprocal(ctx, s, rcfg);
  ArithmeticShare out = mul_fx(ctx, e, map_linear(r, [&](const RingTensor& t) {
                                 return broadcast_cols(t, d);
                               }));
  return out.reshaped(z.shape());
}

}  // namespace mpc3

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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "mpc3/errors.h"
#include "mpc3/protocols.h"
#include "test_util.h"

using namespace mpc3;
using test::dealt;
using test::reveal;

namespace {

constexpr PartyId P1{1}, P2{2};
const FixedPointConfig kFx{};

double dec(uint64_t v) { return fx_decode(v, kFx); }

// Runs fn on the three parties over dealer shares of `xs` and reveals.
template <class F>
RingTensor run_unary(const RingTensor& x, F&& fn) {
  return reveal(simulate(test::seeded(), [&](PartyContext& ctx) {
    return fn(ctx, dealt(ctx, x));
  }));
}

RingTensor fx_tensor(std::vector<double> v) {
  const size_t n = v.size();
  return fx_encode(v, {n}, kFx);
}

// Per-party communication delta of fn.
template <class F>
std::array<CommStats, 3> comm_of(F&& fn) {
  return simulate(test::seeded(), [&](PartyContext& ctx) {
    const CommStats before = ctx.stats();
    fn(ctx);
    return ctx.stats().minus(before);
  });
}

}  // namespace

TEST_SUITE("protocols") {

TEST_CASE("input and open") {
  const RingTensor x = test::random_ring({2, 3}, 1);
  const auto r = simulate(test::seeded(), [&](PartyContext& ctx) {
    const ArithmeticShare s = input(ctx, P2, ctx.id() == P2 ? &x : nullptr, {2, 3});
    const RingTensor all = open(ctx, s);
    const auto to1 = open_to(ctx, s, P1);
    return std::make_pair(all, to1);
  });
  for (const auto& [all, to1] : r) CHECK(all == x);
  CHECK(r[0].second.has_value());
  CHECK(*r[0].second == x);
  CHECK(!r[1].second.has_value());
  CHECK(!r[2].second.has_value());
}

TEST_CASE("input owner must supply the tensor") {
  CHECK_THROWS_AS(simulate(test::seeded(), [](PartyContext& ctx) {
                    input(ctx, P1, nullptr, {2});
                  }),
                  ShapeError);
}

TEST_CASE("multiplication is exact in the ring") {
  const RingTensor a = test::random_ring({500}, 2), b = test::random_ring({500}, 3);
  const auto r = reveal(simulate(test::seeded(), [&](PartyContext& ctx) {
    return mul(ctx, dealt(ctx, a, 1), dealt(ctx, b, 2));
  }));
  CHECK(r == ring_mul(a, b));
  const auto z = reveal(simulate(test::seeded(), [&](PartyContext& ctx) {
    return mul(ctx, dealt(ctx, a, 1), dealt(ctx, RingTensor::zeros({500}), 2));
  }));
  CHECK(z == RingTensor::zeros({500}));
}

TEST_CASE("multiplication communication") {
  const size_t n = 1000;
  const RingTensor a = test::random_ring({n}, 4);
  const auto st = comm_of([&](PartyContext& ctx) {
    mul(ctx, dealt(ctx, a), dealt(ctx, a, 9));
  });
  for (const auto& s : st) {
    CHECK(s.rounds == 1);
    CHECK(s.total_sent() - kFrameHeaderBytes * s.messages_sent == 8 * n);
  }
}

TEST_CASE("truncation") {
  const RingTensor p = ring_mul(fx_tensor({2.5}), fx_tensor({2.0}));
  const RingTensor r = run_unary(p, [](PartyContext& ctx, const ArithmeticShare& s) {
    return truncate(ctx, s, 20);
  });
  CHECK(std::abs(dec(r.data[0]) - 5.0) <= std::ldexp(1.0, -20));
  const RingTensor z = run_unary(RingTensor::zeros({100}), [](PartyContext& ctx,
                                                             const ArithmeticShare& s) {
    return truncate(ctx, s, 20);
  });
  // floor(a) + floor(-a) + 1 = 0 unless a is a multiple of 2^20.
  CHECK(z == RingTensor::zeros({100}));
  const auto st = comm_of([&](PartyContext& ctx) { truncate(ctx, dealt(ctx, p), 20); });
  for (const auto& s : st) CHECK(s.rounds == 2);
}

TEST_CASE("truncation error over random products") {
  const size_t n = 100000;
  const RingTensor a = test::random_fixed({n}, -16, 16, 5);
  const RingTensor b = test::random_fixed({n}, -16, 16, 6);
  const RingTensor prod = ring_mul(a, b);
  const RingTensor r = run_unary(prod, [](PartyContext& ctx, const ArithmeticShare& s) {
    return truncate(ctx, s, 20);
  });
  double worst = 0, mean = 0;
  for (size_t i = 0; i < n; ++i) {
    const double exact = std::ldexp(static_cast<double>(as_signed(prod.data[i])), -40);
    const double err = dec(r.data[i]) - exact;
    worst = std::max(worst, std::abs(err));
    mean += err;
  }
  CHECK(worst <= std::ldexp(1.0, -20));
  // stochastic rounding is unbiased
  CHECK(std::abs(mean / n) < std::ldexp(1.0, -24));
}

TEST_CASE("truncation near the guard band") {
  // Values around +-2^61 exercise both branches of the wrap guard.
  RingTensor x({4}, {uint64_t{1} << 61, 0u - (uint64_t{1} << 61), (uint64_t{3} << 59),
                     0u - (uint64_t{3} << 59)});
  for (uint64_t seed = 1; seed < 30; ++seed) {
    const RingTensor r = reveal(simulate(test::seeded(seed), [&](PartyContext& ctx) {
      return truncate(ctx, dealt(ctx, x, seed), 20);
    }));
    for (size_t i = 0; i < 4; ++i) {
      const int64_t want = as_signed(x.data[i]) >> 20;
      CHECK(std::abs(as_signed(r.data[i]) - want) <= 1);
    }
  }
}

TEST_CASE("fixed point multiply and public constant") {
  const RingTensor a = fx_tensor({1.5, -2.25, 0.125}), b = fx_tensor({-4.0, 3.0, 8.0});
  const auto r = reveal(simulate(test::seeded(), [&](PartyContext& ctx) {
    return mul_fx(ctx, dealt(ctx, a, 1), dealt(ctx, b, 2));
  }));
  const double want[] = {-6.0, -6.75, 1.0};
  for (int i = 0; i < 3; ++i) CHECK(std::abs(dec(r.data[i]) - want[i]) <= std::ldexp(1.0, -20));
  const RingTensor c = run_unary(a, [](PartyContext& ctx, const ArithmeticShare& s) {
    return mul_public_fx(ctx, s, 0.5);
  });
  CHECK(std::abs(dec(c.data[1]) + 1.125) <= std::ldexp(1.0, -20));
}

TEST_CASE("private conv2d matches fixed point oracle") {
  Conv2dGeometry g;
  g.in_c = 3;
  g.in_h = g.in_w = 8;
  g.out_c = 2;
  g.kh = g.kw = 3;
  g.pad = 1;
  const RingTensor x = test::random_fixed(g.input_shape(), -1, 1, 7);
  const RingTensor w = test::random_fixed(g.kernel_shape(), -1, 1, 8);
  const auto spec = BilinearOpSpec::conv2d(g);
  const RingTensor r = reveal(simulate(test::seeded(), [&](PartyContext& ctx) {
    return conv2d_shares(ctx, dealt(ctx, x, 1), dealt(ctx, w, 2), spec);
  }));
  const RingTensor want = ring_shift_arith(bilinear_direct(x, w, spec), 20);
  for (size_t i = 0; i < want.size(); ++i)
    CHECK(std::abs(as_signed(r.data[i]) - as_signed(want.data[i])) <= 1);
  const RingTensor zero = reveal(simulate(test::seeded(), [&](PartyContext& ctx) {
    return conv2d_shares(ctx, dealt(ctx, x, 1), dealt(ctx, RingTensor(g.kernel_shape()), 2),
                         spec);
  }));
  for (uint64_t v : zero.data) CHECK(std::abs(as_signed(v)) <= 1);
}

TEST_CASE("identity matmul") {
  const RingTensor x = test::random_fixed({3, 4}, -5, 5, 9);
  RingTensor eye({4, 4});
  for (size_t i = 0; i < 4; ++i) eye.data[i * 5] = fx_encode(1.0, kFx);
  const RingTensor r = reveal(simulate(test::seeded(), [&](PartyContext& ctx) {
    return matmul_shares(ctx, dealt(ctx, x, 1), dealt(ctx, eye, 2),
                         BilinearOpSpec::matmul(3, 4, 4));
  }));
  for (size_t i = 0; i < x.size(); ++i)
    CHECK(std::abs(as_signed(r.data[i]) - as_signed(x.data[i])) <= 1);
}

TEST_CASE("average pooling") {
  Conv2dGeometry g;
  g.batch = 2;
  g.in_c = g.out_c = 2;
  g.in_h = g.in_w = 6;
  g.kh = g.kw = 2;
  g.stride = 2;
  const RingTensor c = RingTensor::filled(g.input_shape(), fx_encode(1.75, kFx));
  const RingTensor r = run_unary(c, [&](PartyContext& ctx, const ArithmeticShare& s) {
    return avgpool_shares(ctx, s, g);
  });
  for (uint64_t v : r.data) CHECK(std::abs(dec(v) - 1.75) <= std::ldexp(1.0, -20));

  g.kh = g.kw = 3;
  g.stride = 3;
  const RingTensor x = test::random_fixed(g.input_shape(), -3, 3, 10);
  const RingTensor p = run_unary(x, [&](PartyContext& ctx, const ArithmeticShare& s) {
    return avgpool_shares(ctx, s, g);
  });
  for (size_t b = 0; b < 2; ++b)
    for (size_t ch = 0; ch < 2; ++ch)
      for (size_t i = 0; i < 2; ++i)
        for (size_t j = 0; j < 2; ++j) {
          double s = 0;
          for (size_t u = 0; u < 3; ++u)
            for (size_t v = 0; v < 3; ++v)
              s += dec(x.data[((b * 2 + ch) * 6 + 3 * i + u) * 6 + 3 * j + v]);
          CHECK(std::abs(dec(p.data[((b * 2 + ch) * 2 + i) * 2 + j]) - s / 9) <=
                2 * std::ldexp(1.0, -20));
        }
}

TEST_CASE("a2b") {
  const RingTensor v = test::random_ring({100000}, 11);
  const auto r = simulate(test::seeded(), [&](PartyContext& ctx) {
    const CommStats before = ctx.stats();
    BinaryShare b = a2b(ctx, dealt(ctx, v));
    return std::make_pair(b, ctx.stats().minus(before));
  });
  CHECK(xor_reconstruct(std::array<BinaryShare, 3>{r[0].first, r[1].first, r[2].first}) == v);
  CHECK(r[0].second.rounds == 7);
  CHECK(r[0].second.rounds_by_label.at("and") == 7);
  const auto z = simulate(test::seeded(), [&](PartyContext& ctx) {
    return a2b(ctx, dealt(ctx, RingTensor::zeros({8})));
  });
  CHECK(test::reveal(z) == RingTensor::zeros({8}));
}

TEST_CASE("and of binary shares") {
  const RingTensor a = test::random_ring({64}, 12), b = test::random_ring({64}, 13);
  const auto r = simulate(test::seeded(), [&](PartyContext& ctx) {
    return and_shares(ctx, test::dealt_binary(ctx, a, 1), test::dealt_binary(ctx, b, 2));
  });
  CHECK(test::reveal(r) == ring_and(a, b));
}

TEST_CASE("msb and sign") {
  const RingTensor x = fx_tensor({3.5, -2.0, 0.0, -1e-6});
  const auto r = simulate(test::seeded(), [&](PartyContext& ctx) {
    return msb(ctx, dealt(ctx, x));
  });
  const RingTensor m = test::reveal(r);
  CHECK(m.data[0] == 0u);
  CHECK(m.data[1] == 1u);
  CHECK(m.data[2] == 0u);
  CHECK(m.data[3] == 1u);
}

// XOR sharing of single bits: every share word is 0 or 1.
BinaryShare dealt_bits(PartyContext& ctx, const RingTensor& bits) {
  BinaryShare b = test::dealt_binary(ctx, bits);
  const RingTensor one = RingTensor::filled(bits.shape, 1);
  return {b.owner, ring_and(b.lo, one), ring_and(b.hi, one)};
}

TEST_CASE("bit injection") {
  const RingTensor bits = ring_and(test::random_ring({1000}, 14), RingTensor::filled({1000}, 1));
  const auto r = reveal(simulate(test::seeded(), [&](PartyContext& ctx) {
    return bit_inject(ctx, dealt_bits(ctx, bits));
  }));
  CHECK(r == bits);
  const auto zero = reveal(simulate(test::seeded(), [&](PartyContext& ctx) {
    return bit_inject(ctx, dealt_bits(ctx, RingTensor::zeros({4})));
  }));
  CHECK(zero == RingTensor::zeros({4}));
  const auto one = reveal(simulate(test::seeded(), [&](PartyContext& ctx) {
    return bit_inject(ctx, dealt_bits(ctx, RingTensor::filled({4}, 1)));
  }));
  CHECK(one == RingTensor::filled({4}, 1));
  CHECK_THROWS_AS(simulate(test::seeded(), [](PartyContext& ctx) {
                    bit_inject(ctx, test::dealt_binary(ctx, RingTensor::filled({4}, 1)));
                  }),
                  DomainError);
}

TEST_CASE("relu drelu compare") {
  const RingTensor x = fx_tensor({-1.25, 2.5, 0.0, -3.0, 1.0});
  const RingTensor y = run_unary(x, [](PartyContext& ctx, const ArithmeticShare& s) {
    return relu(ctx, s);
  });
  CHECK(dec(y.data[0]) == 0.0);
  CHECK(dec(y.data[1]) == 2.5);
  CHECK(dec(y.data[2]) == 0.0);
  CHECK(dec(y.data[4]) == 1.0);
  const RingTensor d = run_unary(x, [](PartyContext& ctx, const ArithmeticShare& s) {
    return drelu(ctx, s);
  });
  CHECK(d.data[0] == 0u);
  CHECK(d.data[1] == 1u);
  CHECK(d.data[3] == 0u);
  const RingTensor a = fx_tensor({2, 1, 5, -3}), b = fx_tensor({1, 2, -5, 7});
  const auto c = reveal(simulate(test::seeded(), [&](PartyContext& ctx) {
    return std::array{compare(ctx, dealt(ctx, a, 1), dealt(ctx, b, 2)),
                      compare(ctx, dealt(ctx, b, 3), dealt(ctx, a, 4))}[0];
  }));
  CHECK(c == RingTensor({4}, {1, 0, 1, 0}));
  const auto rr = simulate(test::seeded(), [&](PartyContext& ctx) {
    const auto sa = dealt(ctx, a, 1), sb = dealt(ctx, b, 2);
    return add(compare(ctx, sa, sb), compare(ctx, sb, sa));
  });
  CHECK(reveal(rr) == RingTensor::filled({4}, 1));
}

TEST_CASE("relu exact against oracle") {
  const size_t n = 100000;
  Rng rng(15);
  RingTensor x({n});
  for (auto& v : x.data) v = static_cast<uint64_t>(static_cast<int64_t>(rng() % (uint64_t{1} << 41)) - (int64_t{1} << 40));
  const RingTensor y = run_unary(x, [](PartyContext& ctx, const ArithmeticShare& s) {
    return relu(ctx, s);
  });
  size_t bad = 0;
  for (size_t i = 0; i < n; ++i) bad += y.data[i] != (as_signed(x.data[i]) >= 0 ? x.data[i] : 0);
  CHECK(bad == 0);
  const auto st = comm_of([&](PartyContext& ctx) { relu(ctx, dealt(ctx, x)); });
  CHECK(st[0].rounds == 10);
  CHECK(st[0].rounds_by_label.at("and") == 7);
}

TEST_CASE("max tree") {
  const RingTensor v = fx_tensor({1, 2, 3, 4});
  const RingTensor m = run_unary(v.reshaped({1, 4}), [](PartyContext& ctx,
                                                        const ArithmeticShare& s) {
    return max_tree(ctx, s);
  });
  CHECK(dec(m.data[0]) == 4.0);
  const RingTensor one = run_unary(fx_tensor({-7}).reshaped({1, 1}),
                                   [](PartyContext& ctx, const ArithmeticShare& s) {
                                     return max_tree(ctx, s);
                                   });
  CHECK(dec(one.data[0]) == -7.0);
  const RingTensor r = test::random_fixed({10000, 10}, -100, 100, 16);
  const RingTensor got = run_unary(r, [](PartyContext& ctx, const ArithmeticShare& s) {
    return max_tree(ctx, s);
  });
  size_t bad = 0;
  for (size_t i = 0; i < 10000; ++i) {
    int64_t best = as_signed(r.data[i * 10]);
    for (size_t j = 1; j < 10; ++j) best = std::max(best, as_signed(r.data[i * 10 + j]));
    bad += as_signed(got.data[i]) != best;
  }
  CHECK(bad == 0);
}

TEST_CASE("exp approximation") {
  const RingTensor x = fx_tensor({0.0, -1.0});
  const RingTensor e = run_unary(x, [](PartyContext& ctx, const ArithmeticShare& s) {
    return exp_approx(ctx, s);
  });
  CHECK(std::abs(dec(e.data[0]) - 1.0) <= 9 * std::ldexp(1.0, -20));
  // (1 - 1/512)^512 computed in long double
  const long double want = std::pow(1.0L - 1.0L / 512, 512);
  CHECK(std::abs(dec(e.data[1]) - static_cast<double>(want)) <= 1e-5);
  const auto st = comm_of([&](PartyContext& ctx) { exp_approx(ctx, dealt(ctx, x)); });
  CHECK(st[0].rounds == 29);
}

TEST_CASE("reciprocal and division") {
  ReciprocalConfig unit;
  unit.Y = 1;
  const RingTensor one = run_unary(fx_tensor({1.0}), [&](PartyContext& ctx,
                                                         const ArithmeticShare& s) {
    return reciprocal(ctx, s, unit);
  });
  CHECK(std::abs(dec(one.data[0]) - 1.0) <= 1e-5);
  const RingTensor half = run_unary(fx_tensor({2.0}), [](PartyContext& ctx,
                                                         const ArithmeticShare& s) {
    return reciprocal(ctx, s);
  });
  // Exact iteration in long double as oracle.
  long double z = 1.0L / 200;
  for (int i = 0; i < 13; ++i) z = 2 * z - 2.0L * z * z;
  CHECK(std::abs(dec(half.data[0]) - static_cast<double>(z)) <= 2e-4);
  CHECK(std::abs(dec(half.data[0]) - 0.5) <= 2e-4);
  const RingTensor num = fx_tensor({1.0, 3.0, 0.0}), den = fx_tensor({1.0, 2.0, 5.0});
  const auto q = reveal(simulate(test::seeded(), [&](PartyContext& ctx) {
    return division(ctx, dealt(ctx, num, 1), dealt(ctx, den, 2));
  }));
  CHECK(std::abs(dec(q.data[0]) - 1.0) <= 3e-4);
  CHECK(std::abs(dec(q.data[1]) - 1.5) <= 3e-4);
  CHECK(std::abs(dec(q.data[2])) <= 3e-4);
}

TEST_CASE("softmax") {
  const RingTensor c = RingTensor::filled({1, 4}, fx_encode(0.7, kFx));
  const RingTensor s = run_unary(c, [](PartyContext& ctx, const ArithmeticShare& x) {
    return softmax(ctx, x);
  });
  for (uint64_t v : s.data) CHECK(std::abs(dec(v) - 0.25) <= 1e-3);

  RingTensor far({1, 2}, {0, 0u - 1000u * (uint64_t{1} << 20)});
  const RingTensor f = run_unary(far, [](PartyContext& ctx, const ArithmeticShare& x) {
    return softmax(ctx, x);
  });
  CHECK(std::abs(dec(f.data[0]) + dec(f.data[1]) - 1.0) <= 1e-3);

  const RingTensor r = test::random_fixed({50, 10}, -5, 5, 17);
  const RingTensor p = run_unary(r, [](PartyContext& ctx, const ArithmeticShare& x) {
    return softmax(ctx, x);
  });
  // Two oracles: softmax built on the same (1 + x/512)^512 in double, and the
  // exact softmax. The limit form alone is up to ~1.8e-3 from the exact one
  // on this input range, so the second bound is looser.
  double worst_fm = 0, worst_exact = 0;
  for (size_t i = 0; i < 50; ++i) {
    double mx = -1e9, sum_fm = 0, sum = 0;
    for (size_t j = 0; j < 10; ++j) mx = std::max(mx, dec(r.data[i * 10 + j]));
    auto fm = [&](size_t j) { return std::pow(1 + (dec(r.data[i * 10 + j]) - mx) / 512, 512); };
    for (size_t j = 0; j < 10; ++j) {
      sum_fm += fm(j);
      sum += std::exp(dec(r.data[i * 10 + j]) - mx);
    }
    for (size_t j = 0; j < 10; ++j) {
      const double got = dec(p.data[i * 10 + j]);
      worst_fm = std::max(worst_fm, std::abs(got - fm(j) / sum_fm));
      worst_exact = std::max(worst_exact,
                             std::abs(got - std::exp(dec(r.data[i * 10 + j]) - mx) / sum));
    }
  }
  CHECK(worst_fm <= 1e-3);
  CHECK(worst_exact <= 2e-3);

  CHECK_THROWS_AS(simulate(test::seeded(), [](PartyContext& ctx) {
                    softmax(ctx, dealt(ctx, RingTensor({1, 201})));
                  }),
                  ConfigError);
}

TEST_CASE("transcripts are deterministic per seed") {
  const RingTensor x = test::random_fixed({64}, -4, 4, 18);
  auto digest = [&](uint64_t seed) {
    return simulate(test::seeded(seed), [&](PartyContext& ctx) {
      relu(ctx, dealt(ctx, x));
      return ctx.stats().sent_digest;
    });
  };
  CHECK(digest(1) == digest(1));
  CHECK(digest(1) != digest(2));
}

TEST_CASE("input sharing costs one round") {
  const auto st = comm_of([](PartyContext& ctx) {
    RingTensor v({10});
    input(ctx, P2, ctx.id() == P2 ? &v : nullptr, {10});
  });
  CHECK(st[1].messages_sent == 2);
  CHECK(st[0].messages_sent == 0);
  CHECK(st[0].rounds == 1);
}

}  // TEST_SUITE

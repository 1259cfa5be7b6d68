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

// Acceptance checks. One criterion per invocation:
//   mpc3_acceptance --criterion N [--cli PATH]
// prints "criterion N PASS: ..." or "criterion N FAIL: ..." and exits 0 / 1.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "../test_util.h"
#include "mpc3/nn/tasks.h"
#include "mpc3/protocols.h"
#include "mpc3/session.h"

namespace {

using namespace mpc3;
using namespace mpc3::nn;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string src(const std::string& rel) {
  return std::string(MPC3_SOURCE_DIR) + "/" + rel;
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(4);
  o << v;
  return o.str();
}

// Runs fn on dealt shares of x and returns the revealed result.
template <class F>
RingTensor run_unary(const RingTensor& x, F&& fn, int t = 20) {
  auto out = simulate(test::seeded(42, t), [&](PartyContext& ctx) {
    return fn(ctx, test::dealt(ctx, x));
  });
  return reconstruct(out);
}

// --- 1: lossless embedding --------------------------------------------------

RingTensor naive_matmul(const RingTensor& a, const RingTensor& b, size_t m,
                        size_t k, size_t n) {
  RingTensor c({m, n});
  for (size_t i = 0; i < m; ++i)
    for (size_t p = 0; p < k; ++p) {
      const uint64_t av = a.data[i * k + p];
      const uint64_t* brow = &b.data[p * n];
      uint64_t* crow = &c.data[i * n];
      for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  return c;
}

RingTensor naive_conv(const RingTensor& x, const RingTensor& w,
                      const Conv2dGeometry& g) {
  RingTensor y(g.output_shape());
  const size_t oh = g.out_h(), ow = g.out_w();
  for (size_t b = 0; b < g.batch; ++b)
    for (size_t o = 0; o < g.out_c; ++o)
      for (size_t r = 0; r < oh; ++r)
        for (size_t c = 0; c < ow; ++c) {
          uint64_t acc = 0;
          for (size_t ci = 0; ci < g.in_c; ++ci)
            for (size_t i = 0; i < g.kh; ++i)
              for (size_t j = 0; j < g.kw; ++j) {
                const long yy = static_cast<long>(r * g.stride + i) - static_cast<long>(g.pad);
                const long xx = static_cast<long>(c * g.stride + j) - static_cast<long>(g.pad);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(g.in_h) ||
                    xx >= static_cast<long>(g.in_w))
                  continue;
                acc += x.data[((b * g.in_c + ci) * g.in_h + yy) * g.in_w + xx] *
                       w.data[((o * g.in_c + ci) * g.kh + i) * g.kw + j];
              }
          y.data[((b * g.out_c + o) * oh + r) * ow + c] = acc;
        }
  return y;
}

Verdict criterion1() {
  Rng rng(2026);
  auto pick = [&](size_t lo, size_t hi) { return lo + rng() % (hi - lo + 1); };
  size_t mm_bad = 0, conv_bad = 0, micro = 0;
  for (int it = 0; it < 100; ++it) {
    const size_t m = pick(1, 128), n = pick(1, 128);
    // A quarter of the cases use the largest inner dimension.
    const size_t k = it % 4 == 0 ? 4096 : pick(1, 4096);
    const auto spec = BilinearOpSpec::matmul(m, k, n);
    const RingTensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
    mm_bad += bilinear_exact(a, b, spec) != naive_matmul(a, b, m, k, n);
  }
  for (int it = 0; it < 100; ++it) {
    Conv2dGeometry g;
    if (it % 2 == 0) {
      g.in_c = 3;
      g.in_h = g.in_w = pick(11, 64);
      g.out_c = 64;
      g.kh = g.kw = 11;
      g.stride = 4;
      ++micro;
    } else {
      g.batch = pick(1, 2);
      g.in_c = pick(1, 8);
      g.kh = pick(1, 5);
      g.kw = pick(1, 5);
      g.pad = pick(0, 2);
      g.in_h = pick(g.kh, 24);
      g.in_w = pick(g.kw, 24);
      g.out_c = pick(1, 32);
      g.stride = pick(1, 3);
    }
    const auto spec = BilinearOpSpec::conv2d(g);
    const RingTensor x = random_tensor(g.input_shape(), rng);
    const RingTensor w = random_tensor(g.kernel_shape(), rng);
    conv_bad += bilinear_exact(x, w, spec) != naive_conv(x, w, g);
  }
  return {mm_bad == 0 && conv_bad == 0,
          "lossless embedding: matmul mismatches " + std::to_string(mm_bad) +
              "/100, conv2d mismatches " + std::to_string(conv_bad) + "/100 (" +
              std::to_string(micro) + " with 11x11 stride 4, 64 out)"};
}

// --- 2, 3: exp and reciprocal ---------------------------------------------

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> v;
  const long steps = std::lround((hi - lo) / step);
  for (long i = 0; i <= steps; ++i) v.push_back(lo + step * static_cast<double>(i));
  return v;
}

Verdict criterion2() {
  const FixedPointConfig fx;
  const auto xs = grid(-45, 0, 0.01);
  const RingTensor x = fx_encode(xs, {xs.size()}, fx);
  const auto y = fx_decode(run_unary(x, [](PartyContext& ctx, const ArithmeticShare& s) {
                             ExpConfig c;
                             c.m = 512;
                             return exp_approx(ctx, s, c);
                           }),
                           fx);
  double worst = 0, at = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double e = std::abs(y[i] - std::exp(xs[i]));
    if (e > worst) worst = e, at = xs[i];
  }
  return {worst <= 6e-4, "exp_approx t=20 m=512 on [-45,0] step 0.01 (" +
                             std::to_string(xs.size()) + " points): max error " +
                             fmt(worst) + " at x=" + fmt(at) + ", bound 6e-4"};
}

Verdict criterion3() {
  const FixedPointConfig fx;
  const auto xs = grid(1, 200, 0.1);
  const RingTensor x = fx_encode(xs, {xs.size()}, fx);
  const auto y = fx_decode(run_unary(x, [](PartyContext& ctx, const ArithmeticShare& s) {
                             ReciprocalConfig c;
                             c.Y = 200;
                             c.iterations = 13;
                             return reciprocal(ctx, s, c);
                           }),
                           fx);
  double worst = 0, at = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double e = std::abs(y[i] - 1.0 / xs[i]);
    if (e > worst) worst = e, at = xs[i];
  }
  return {worst <= 2e-4, "reciprocal 13 iterations z0=1/200 on [1,200] step 0.1: max error " +
                             fmt(worst) + " at y=" + fmt(at) + ", bound 2e-4"};
}

// --- 4, 5: truncation, msb/relu -------------------------------------------

Verdict criterion4() {
  const size_t n = 1000000;
  const RingTensor a = test::random_fixed({n}, -16, 16, 41);
  const RingTensor b = test::random_fixed({n}, -16, 16, 42);
  auto out = simulate(test::seeded(), [&](PartyContext& ctx) {
    ArithmeticShare p = mul(ctx, test::dealt(ctx, a, 1), test::dealt(ctx, b, 2));
    return truncate(ctx, p, 20);
  });
  const RingTensor r = reconstruct(out);
  // Error in units of 2^-40: r * 2^20 - a * b, exact in 128 bits.
  const __int128 bound = __int128{1} << 20;
  __int128 worst = 0;
  size_t bad = 0;
  for (size_t i = 0; i < n; ++i) {
    const __int128 prod = static_cast<__int128>(as_signed(a.data[i])) * as_signed(b.data[i]);
    __int128 d = (static_cast<__int128>(as_signed(r.data[i])) << 20) - prod;
    if (d < 0) d = -d;
    worst = std::max(worst, d);
    bad += d > bound;
  }
  const double worst_real = std::ldexp(static_cast<double>(worst), -40);
  return {bad == 0, "truncate on 10^6 products in [-16,16]^2: max error " + fmt(worst_real) +
                        " (2^-20 = " + fmt(std::ldexp(1.0, -20)) + "), violations " +
                        std::to_string(bad)};
}

Verdict criterion5() {
  const size_t n = 1000000;
  Rng rng(55);
  RingTensor x({n});
  const uint64_t span = (uint64_t{1} << 41) - 1;  // (-2^40, 2^40) exclusive
  for (auto& v : x.data)
    v = static_cast<uint64_t>(static_cast<int64_t>(rng() % span) - ((int64_t{1} << 40) - 1));
  // Edge values.
  const int64_t edges[] = {0, 1, -1, (int64_t{1} << 40) - 1, -(int64_t{1} << 40) + 1};
  for (size_t i = 0; i < std::size(edges); ++i) x.data[i] = static_cast<uint64_t>(edges[i]);
  auto out = simulate(test::seeded(), [&](PartyContext& ctx) {
    const ArithmeticShare s = test::dealt(ctx, x);
    RingTensor sign = open_binary(ctx, msb(ctx, s));
    RingTensor y = open(ctx, relu(ctx, s));
    return std::make_pair(std::move(sign), std::move(y));
  });
  const auto& [sign, y] = out[0];
  size_t msb_bad = 0, relu_bad = 0;
  for (size_t i = 0; i < n; ++i) {
    const bool neg = as_signed(x.data[i]) < 0;
    msb_bad += sign.data[i] != (neg ? 1u : 0u);
    relu_bad += y.data[i] != (neg ? 0 : x.data[i]);
  }
  return {msb_bad == 0 && relu_bad == 0,
          "10^6 encodings in (-2^40, 2^40): msb mismatches " + std::to_string(msb_bad) +
              ", relu mismatches " + std::to_string(relu_bad)};
}

// --- 6: communication counters ----------------------------------------------

template <class F>
std::array<CommStats, 3> comm_of(F&& fn) {
  return simulate(test::seeded(), [&](PartyContext& ctx) {
    const CommStats before = ctx.stats();
    fn(ctx);
    return ctx.stats().minus(before);
  });
}

uint64_t label(const CommStats& s, const std::string& l) {
  auto it = s.rounds_by_label.find(l);
  return it == s.rounds_by_label.end() ? 0 : it->second;
}

Verdict criterion6() {
  const size_t n = 4096;
  const RingTensor a = test::random_ring({n}, 61);
  const RingTensor x = test::random_fixed({n}, -100, 100, 62);
  const auto ms = comm_of([&](PartyContext& ctx) {
    mul(ctx, test::dealt(ctx, a, 1), test::dealt(ctx, a, 2));
  });
  const auto ts = comm_of([&](PartyContext& ctx) { truncate(ctx, test::dealt(ctx, x), 20); });
  const auto rs = comm_of([&](PartyContext& ctx) { relu(ctx, test::dealt(ctx, x)); });
  bool ok = true;
  std::string mul_payload;
  for (const auto& s : ms) {
    const uint64_t payload = s.total_sent() - kFrameHeaderBytes * s.messages_sent;
    ok &= payload == 8 * n && s.rounds == 1;
    mul_payload += (mul_payload.empty() ? "" : "/") + std::to_string(payload);
  }
  for (const auto& s : ts) ok &= s.rounds == 2;
  for (const auto& s : rs)
    ok &= label(s, "and") == 7 && label(s, "inject") == 2 && label(s, "mul") == 1 &&
          s.rounds == 10;
  return {ok, "mul n=" + std::to_string(n) + " payload bytes per party " + mul_payload +
                  " (8n=" + std::to_string(8 * n) + ") rounds " +
                  std::to_string(ms[0].rounds) + "; truncate rounds " +
                  std::to_string(ts[0].rounds) + "; relu rounds " +
                  std::to_string(rs[0].rounds) + " = and " +
                  std::to_string(label(rs[0], "and")) + " + inject " +
                  std::to_string(label(rs[0], "inject")) + " + mul " +
                  std::to_string(label(rs[0], "mul"))};
}

// --- 7, 8: private inference, precision sweep -----------------------------

struct Workload {
  ModelSpec spec;
  PlainParams params;
  Dataset data;
};

Workload inference_workload() {
  Workload w;
  w.spec = ModelSpec::load(src("fixtures/lenet_trained.json"));
  w.params = initial_params(w.spec, 1);
  w.data = load_mnist(src("data/mnist"), "t10k");
  return w;
}

Verdict criterion7() {
  const size_t n = 100;
  const Workload w = inference_workload();
  const auto imgs = w.data.images(0, n);
  const auto ref = float_inference(w.spec, w.params, imgs, n);
  auto out = simulate(test::seeded(), [&](PartyContext& ctx) {
    const bool owner = ctx.id() == PartyId{1};
    return private_inference(ctx, w.spec, owner ? &w.params : nullptr,
                             owner ? &imgs : nullptr, n, n);
  });
  const auto z = fx_decode(*out[0], FixedPointConfig{});
  const auto pa = argmax_rows(z, n, w.spec.classes);
  const auto fa = argmax_rows(ref, n, w.spec.classes);
  size_t agree = 0, correct = 0;
  for (size_t i = 0; i < n; ++i) {
    agree += pa[i] == fa[i];
    correct += pa[i] == w.data.labels[i];
  }
  const double rel = mean_relative_error(z, ref, n, w.spec.classes);
  return {agree >= 99 && rel < 0.01,
          "LeNet private inference on 100 images: argmax agreement " + std::to_string(agree) +
              "/100 (need 99), mean relative logit error " + fmt(100 * rel) +
              "% (need < 1%), accuracy " + std::to_string(correct) + "/100"};
}

Verdict criterion8() {
  const size_t n = 100;
  const Workload w = inference_workload();
  const auto imgs = w.data.images(0, n);
  const std::vector<int> ts = {10, 12, 14, 16, 18, 20};
  auto out = simulate(test::seeded(), [&](PartyContext& ctx) {
    const bool owner = ctx.id() == PartyId{1};
    return precision_sweep(ctx, w.spec, owner ? &w.params : nullptr,
                           owner ? &imgs : nullptr, n, ts, n);
  });
  const auto& rows = out[0];
  bool ok = rows.size() == ts.size();
  std::string curve;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) ok &= rows[i].rel_error <= rows[i - 1].rel_error;
    curve += (i ? " " : "") + std::string("t=") + std::to_string(rows[i].t) + ":" +
             fmt(rows[i].rel_error);
  }
  return {ok, "mean relative error by t (100 images): " + curve};
}

// --- 9: private training ---------------------------------------------------

// Mean cross-entropy over a trailing window of iterations.
double window_mean(const std::vector<double>& ce, size_t end, size_t width) {
  const size_t begin = end >= width ? end - width : 0;
  return std::accumulate(ce.begin() + begin, ce.begin() + end, 0.0) /
         static_cast<double>(end - begin);
}

Verdict criterion9() {
  const ModelSpec spec = ModelSpec::load(src("fixtures/lenet.json"));
  const PlainParams init = initial_params(spec, 1);
  const Dataset data = load_mnist(src("data/mnist"), "train");
  TrainConfig cfg;
  cfg.iterations = 100;
  cfg.batch = 128;
  cfg.samples = 1280;
  cfg.lr = 0.003;
  cfg.track_logits = true;
  const FixedPointConfig fx;
  const auto ref = fixed_train(spec, init, data, cfg, fx);

  std::vector<double> ce;
  LogitsHook hook = [&](size_t, const std::vector<double>& z,
                        const std::vector<uint8_t>& labels) {
    ce.push_back(cross_entropy(z, labels, labels.size(), spec.classes));
  };
  auto out = simulate(test::seeded(), [&](PartyContext& ctx) {
    const bool owner = ctx.id() == PartyId{1};
    return private_train(ctx, spec, owner ? &init : nullptr, owner ? &data : nullptr, cfg,
                         owner ? hook : LogitsHook{});
  });
  const auto& got = *out[0];

  double worst = 0;
  for (size_t i = 0; i < got.size(); ++i)
    for (size_t j = 0; j < got[i].size(); ++j)
      worst = std::max(worst, std::ldexp(std::abs(static_cast<double>(
                                             as_signed(got[i].data[j] - ref[i].data[j]))),
                                         -fx.t));
  const double tol = 100 * std::ldexp(1.0, -19);
  const double start = window_mean(ce, 10, 10), end = window_mean(ce, ce.size(), 10);
  const bool a = worst <= tol;
  const bool b = ce.size() == cfg.iterations && std::abs(start - std::log(10.0)) < 0.1 &&
                 start - end >= 0.05;
  return {a && b, "100 iterations, batch 128, 1280 samples, lr 0.003: max weight deviation " +
                      fmt(worst) + " (bound " + fmt(tol) +
                      "); moving-average cross-entropy (10 iterations) " + fmt(start) +
                      " -> " + fmt(end) + ", drop " + fmt(start - end) + " (need 0.05)"};
}

// --- 10: TCP mode against simulate ----------------------------------------

uint16_t free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  sa.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa));
  socklen_t len = sizeof(sa);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  ::close(fd);
  return ntohs(sa.sin_port);
}

struct Run {
  int code = -1;
  std::vector<std::string> lines;
};

FILE* start(const std::string& cmd) { return popen((cmd + " 2>&1").c_str(), "r"); }

Run finish(FILE* p) {
  Run r;
  std::string all;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), p)) > 0) all.append(buf, n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  std::istringstream in(all);
  for (std::string line; std::getline(in, line);) {
    // Wall-clock time is the only field allowed to differ.
    const auto pos = line.find(",time_ms=");
    if (pos != std::string::npos) {
      const auto next = line.find(',', pos + 1);
      line.erase(pos, next == std::string::npos ? std::string::npos : next - pos);
    }
    r.lines.push_back(line);
  }
  return r;
}

std::vector<std::string> with_prefix(const std::vector<std::string>& ls, const std::string& p) {
  std::vector<std::string> out;
  for (const auto& l : ls)
    if (l.rfind(p, 0) == 0) out.push_back(l);
  return out;
}

Verdict criterion10(const std::string& cli) {
  if (cli.empty()) return {false, "no --cli binary given"};
  const std::string common = " --task infer --count 100 --seed 7 --model " +
                             src("fixtures/lenet_trained.json") + " --data " +
                             src("data/mnist");
  const Run sim = finish(start(cli + " --mode simulate" + common));

  std::array<uint16_t, 3> port{};
  for (auto& p : port) p = free_port();
  std::array<FILE*, 3> procs{};
  for (int i = 0; i < 3; ++i) {
    std::string peers;
    for (int j = 0; j < 3; ++j)
      if (j != i) peers += (peers.empty() ? "" : ",") + std::string("127.0.0.1:") +
                           std::to_string(port[j]);
    procs[i] = start(cli + " --mode party --party " + std::to_string(i + 1) + " --peers " +
                     peers + " --listen 127.0.0.1:" + std::to_string(port[i]) +
                     " --timeout-ms 60000" + common);
  }
  std::array<Run, 3> party;
  for (int i = 0; i < 3; ++i) party[i] = finish(procs[i]);

  bool ok = sim.code == 0;
  for (const auto& r : party) ok &= r.code == 0;
  // P1 prints the outputs; every party prints its own counters.
  std::vector<std::string> tcp;
  for (const auto& r : party)
    for (const auto& l : r.lines)
      if (l.rfind("stats,", 0) != 0) tcp.push_back(l);
  std::vector<std::string> sim_out;
  for (const auto& l : sim.lines)
    if (l.rfind("stats,", 0) != 0) sim_out.push_back(l);
  const bool outputs = sim_out == tcp && !with_prefix(tcp, "output,digest=").empty();
  std::vector<std::string> tcp_stats;
  for (const auto& r : party) {
    const auto s = with_prefix(r.lines, "stats,");
    tcp_stats.insert(tcp_stats.end(), s.begin(), s.end());
  }
  const auto sim_stats = with_prefix(sim.lines, "stats,");
  const bool counters = sim_stats.size() == 3 && sim_stats == tcp_stats;
  ok &= outputs && counters;
  const auto digest = with_prefix(sim.lines, "output,");
  return {ok, "LeNet 100-image inference, 3 processes on loopback vs simulate: outputs " +
                  std::string(outputs ? "identical" : "differ") + " (" +
                  (digest.empty() ? "no digest" : digest[0]) + "), counters " +
                  (counters ? "identical" : "differ") + " for " +
                  std::to_string(tcp_stats.size()) + " parties"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mpc3 acceptance checks"};
  int criterion = 0;
  std::string cli;
  app.add_option("--criterion", criterion, "1..10")->required()->check(CLI::Range(1, 10));
  app.add_option("--cli", cli, "path to the mpc3 binary (criterion 10)");
  CLI11_PARSE(app, argc, argv);

  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    switch (criterion) {
      case 1: v = criterion1(); break;
      case 2: v = criterion2(); break;
      case 3: v = criterion3(); break;
      case 4: v = criterion4(); break;
      case 5: v = criterion5(); break;
      case 6: v = criterion6(); break;
      case 7: v = criterion7(); break;
      case 8: v = criterion8(); break;
      case 9: v = criterion9(); break;
      case 10: v = criterion10(cli); break;
    }
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "criterion " << criterion << (v.pass ? " PASS: " : " FAIL: ") << v.detail
            << " [" << fmt(s) << " s]" << std::endl;
  return v.pass ? 0 : 1;
}

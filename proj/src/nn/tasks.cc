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

#include "mpc3/nn/tasks.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "mpc3/errors.h"
#include "mpc3/nn/network.h"
#include "mpc3/protocols.h"

namespace mpc3::nn {

namespace {

constexpr PartyId P1{1};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Shape image_shape(const ModelSpec& spec, size_t n) { return batched(n, spec.input); }

RingTensor gather_rows(const RingTensor& t, const std::vector<size_t>& rows) {
  const size_t w = t.shape.empty() ? 0 : t.size() / t.shape[0];
  Shape s = t.shape;
  s[0] = rows.size();
  RingTensor out(s);
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy_n(t.data.begin() + rows[i] * w, w, out.data.begin() + i * w);
  return out;
}

std::vector<double> gather_rows(const std::vector<double>& v, size_t w,
                                const std::vector<size_t>& rows) {
  std::vector<double> out(rows.size() * w);
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy_n(v.begin() + rows[i] * w, w, out.begin() + i * w);
  return out;
}

std::vector<uint8_t> gather_labels(const Dataset& d, const std::vector<size_t>& rows) {
  std::vector<uint8_t> out;
  for (size_t r : rows) out.push_back(d.labels[r]);
  return out;
}

std::vector<FloatTensor> to_float(const ModelSpec& spec, const PlainParams& ps) {
  const auto shapes = spec.param_shapes();
  MPC3_ENFORCE(shapes.size() == ps.size(), ShapeError,
               "parameter count does not match the model");
  std::vector<FloatTensor> out;
  for (size_t i = 0; i < ps.size(); ++i) out.emplace_back(shapes[i], ps[i]);
  return out;
}

void check_training_data(const Dataset& d, const TrainConfig& cfg) {
  MPC3_ENFORCE(cfg.samples >= 1 && cfg.samples <= d.count, ConfigError,
               "training samples exceed the dataset");
  MPC3_ENFORCE(cfg.batch >= 1, ConfigError, "batch must be positive");
}

}  // namespace

std::vector<double> decode(const RingTensor& t, const FixedPointConfig& fx) {
  return fx_decode(t, fx);
}

std::vector<ArithmeticShare> share_params(PartyContext& ctx, const ModelSpec& spec,
                                          const PlainParams* params) {
  // All tensors go out in one flat input so sharing costs a single round.
  const auto shapes = spec.param_shapes();
  const size_t total = spec.param_count();
  std::optional<RingTensor> flat;
  if (ctx.id() == P1) {
    MPC3_ENFORCE(params && params->size() == shapes.size(), ShapeError,
                 "P1 must supply parameters matching the model");
    std::vector<double> all;
    all.reserve(total);
    for (size_t i = 0; i < shapes.size(); ++i) {
      MPC3_ENFORCE((*params)[i].size() == numel(shapes[i]), ShapeError,
                   "parameter tensor size mismatch");
      all.insert(all.end(), (*params)[i].begin(), (*params)[i].end());
    }
    flat = fx_encode(all, {total}, ctx.fx());
  }
  const ArithmeticShare s = input(ctx, P1, flat ? &*flat : nullptr, {total});
  std::vector<ArithmeticShare> out;
  size_t off = 0;
  for (const auto& sh : shapes) {
    const size_t n = numel(sh);
    auto cut = [&](const RingTensor& t) {
      return RingTensor(sh, {t.data.begin() + off, t.data.begin() + off + n});
    };
    out.push_back(map_linear(s, cut));
    off += n;
  }
  return out;
}

ArithmeticShare share_plain(PartyContext& ctx, const std::vector<double>* values,
                            const Shape& shape) {
  std::optional<RingTensor> enc;
  if (ctx.id() == P1) {
    MPC3_ENFORCE(values && values->size() == numel(shape), ShapeError,
                 "P1 must supply " + shape_str(shape) + " values");
    enc = fx_encode(*values, shape, ctx.fx());
  }
  return input(ctx, P1, enc ? &*enc : nullptr, shape);
}

std::optional<RingTensor> private_inference(PartyContext& ctx,
                                            const ModelSpec& spec,
                                            const PlainParams* params,
                                            const std::vector<double>* images,
                                            size_t n, size_t batch) {
  MPC3_ENFORCE(n >= 1, ConfigError, "inference needs at least one image");
  batch = std::clamp<size_t>(batch, 1, n);
  const auto ps = share_params(ctx, spec, params);
  const ArithmeticShare x = share_plain(ctx, images, image_shape(spec, n));
  PrivateBackend be(ctx);
  std::vector<RingTensor> lo, hi;
  for (size_t b = 0; b < n; b += batch) {
    const size_t m = std::min(batch, n - b);
    auto part = map_linear(x, [&](const RingTensor& t) { return slice_rows(t, b, b + m); });
    const ArithmeticShare z = forward(be, spec, ps, part, m);
    lo.push_back(z.lo);
    hi.push_back(z.hi);
  }
  ArithmeticShare all{ctx.id(), concat_rows(lo), concat_rows(hi), ctx.fx()};
  return open_to(ctx, all, P1);
}

std::vector<double> float_inference(const ModelSpec& spec, const PlainParams& params,
                                    const std::vector<double>& images, size_t n) {
  FloatBackend be;
  const auto ps = to_float(spec, params);
  return forward(be, spec, ps, FloatTensor(image_shape(spec, n), images), n).data;
}

RingTensor fixed_inference(const ModelSpec& spec, const PlainParams& params,
                           const std::vector<double>& images, size_t n,
                           const FixedPointConfig& fx) {
  FixedBackend be(fx);
  const auto ps = encode_params(spec, params, fx);
  return forward(be, spec, ps, fx_encode(images, image_shape(spec, n), fx), n);
}

std::vector<size_t> batch_rows(size_t it, size_t batch, size_t samples) {
  std::vector<size_t> rows(batch);
  for (size_t j = 0; j < batch; ++j) rows[j] = (it * batch + j) % samples;
  return rows;
}

std::optional<std::vector<RingTensor>> private_train(
    PartyContext& ctx, const ModelSpec& spec, const PlainParams* params,
    const Dataset* data, const TrainConfig& cfg, const LogitsHook& hook) {
  const bool owner = ctx.id() == P1;
  if (owner) {
    MPC3_ENFORCE(data != nullptr, ConfigError, "P1 must supply the dataset");
    check_training_data(*data, cfg);
  }
  const size_t n = cfg.samples, d = spec.classes;
  auto ps = share_params(ctx, spec, params);
  std::optional<std::vector<double>> imgs, hot;
  if (owner) {
    imgs = data->images(0, n);
    hot = data->one_hot(0, n, d);
  }
  const ArithmeticShare x = share_plain(ctx, imgs ? &*imgs : nullptr, image_shape(spec, n));
  const ArithmeticShare y = share_plain(ctx, hot ? &*hot : nullptr, {n, d});

  PrivateBackend be(ctx);
  for (size_t it = 0; it < cfg.iterations; ++it) {
    const auto rows = batch_rows(it, cfg.batch, n);
    auto pick = [&](const RingTensor& t) { return gather_rows(t, rows); };
    const ArithmeticShare z =
        train_step(be, spec, ps, map_linear(x, pick), map_linear(y, pick), cfg.batch, cfg.lr);
    if (cfg.track_logits) {
      auto opened = open_to(ctx, z, P1);
      if (owner && hook) hook(it, fx_decode(*opened, ctx.fx()), gather_labels(*data, rows));
    }
  }
  std::vector<RingTensor> out;
  for (const auto& p : ps) {
    auto v = open_to(ctx, p, P1);
    if (v) out.push_back(std::move(*v));
  }
  if (!owner) return std::nullopt;
  return out;
}

std::vector<RingTensor> fixed_train(const ModelSpec& spec, const PlainParams& params,
                                    const Dataset& data, const TrainConfig& cfg,
                                    const FixedPointConfig& fx, const LogitsHook& hook) {
  check_training_data(data, cfg);
  const size_t n = cfg.samples, d = spec.classes;
  FixedBackend be(fx);
  auto ps = encode_params(spec, params, fx);
  const RingTensor x = fx_encode(data.images(0, n), image_shape(spec, n), fx);
  const RingTensor y = fx_encode(data.one_hot(0, n, d), {n, d}, fx);
  for (size_t it = 0; it < cfg.iterations; ++it) {
    const auto rows = batch_rows(it, cfg.batch, n);
    const RingTensor z =
        train_step(be, spec, ps, gather_rows(x, rows), gather_rows(y, rows), cfg.batch, cfg.lr);
    if (hook) hook(it, fx_decode(z, fx), gather_labels(data, rows));
  }
  return ps;
}

PlainParams float_train(const ModelSpec& spec, const PlainParams& params,
                        const Dataset& data, const TrainConfig& cfg,
                        const LogitsHook& hook) {
  check_training_data(data, cfg);
  const size_t n = cfg.samples, d = spec.classes;
  FloatBackend be;
  auto ps = to_float(spec, params);
  const auto x = data.images(0, n);
  const auto y = data.one_hot(0, n, d);
  const size_t w = numel(spec.input);
  for (size_t it = 0; it < cfg.iterations; ++it) {
    const auto rows = batch_rows(it, cfg.batch, n);
    const FloatTensor z = train_step(
        be, spec, ps, FloatTensor(image_shape(spec, cfg.batch), gather_rows(x, w, rows)),
        FloatTensor({cfg.batch, d}, gather_rows(y, d, rows)), cfg.batch, cfg.lr);
    if (hook) hook(it, z.data, gather_labels(data, rows));
  }
  PlainParams out;
  for (auto& p : ps) out.push_back(std::move(p.data));
  return out;
}

std::vector<size_t> argmax_rows(const std::vector<double>& z, size_t n, size_t d) {
  std::vector<size_t> out(n);
  for (size_t r = 0; r < n; ++r)
    out[r] = static_cast<size_t>(
        std::max_element(z.begin() + r * d, z.begin() + (r + 1) * d) - (z.begin() + r * d));
  return out;
}

double mean_relative_error(const std::vector<double>& z, const std::vector<double>& ref,
                           size_t n, size_t d) {
  MPC3_ENFORCE(z.size() == n * d && ref.size() == n * d, ShapeError,
               "relative error: size mismatch");
  if (n == 0) return 0;
  double acc = 0;
  for (size_t r = 0; r < n; ++r) {
    double num = 0, den = 0;
    for (size_t c = 0; c < d; ++c) {
      num += std::abs(z[r * d + c] - ref[r * d + c]);
      den += std::abs(ref[r * d + c]);
    }
    acc += den > 0 ? num / den : num;
  }
  return acc / static_cast<double>(n);
}

double cross_entropy(const std::vector<double>& z, const std::vector<uint8_t>& labels,
                     size_t n, size_t d) {
  double acc = 0;
  for (size_t r = 0; r < n; ++r) {
    const double* row = z.data() + r * d;
    const double mx = *std::max_element(row, row + d);
    double s = 0;
    for (size_t c = 0; c < d; ++c) s += std::exp(row[c] - mx);
    acc += std::log(s) + mx - row[labels[r]];
  }
  return n ? acc / static_cast<double>(n) : 0;
}

std::string BenchRow::line() const {
  std::ostringstream o;
  o << op << ",n=" << n << ",time_ms=" << time_ms << ",bytes=" << bytes
    << ",rounds=" << rounds;
  return o.str();
}

std::string SweepRow::line() const {
  std::ostringstream o;
  o << "sweep,t=" << t << ",n=" << n << ",rel_error=" << rel_error;
  return o.str();
}

BenchRow bench_conv(PartyContext& ctx, size_t n) {
  Conv2dGeometry g;
  g.batch = 1;
  g.in_c = 3;
  g.in_h = g.in_w = n;
  g.out_c = 64;
  g.kh = g.kw = 11;
  g.stride = 4;
  g.validate();
  std::optional<RingTensor> xv, wv;
  if (ctx.id() == P1) {
    Rng rng(n);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> a(numel(g.input_shape())), b(numel(g.kernel_shape()));
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng) * 0.1;
    xv = fx_encode(a, g.input_shape(), ctx.fx());
    wv = fx_encode(b, g.kernel_shape(), ctx.fx());
  }
  const CommStats before = ctx.stats();
  const auto t0 = Clock::now();
  // Image and kernel travel in a single input.
  const size_t nx = numel(g.input_shape()), nw = numel(g.kernel_shape());
  std::optional<RingTensor> both;
  if (xv) {
    both = RingTensor({nx + nw});
    std::copy(xv->data.begin(), xv->data.end(), both->data.begin());
    std::copy(wv->data.begin(), wv->data.end(), both->data.begin() + nx);
  }
  const ArithmeticShare s = input(ctx, P1, both ? &*both : nullptr, {nx + nw});
  auto part = [&](size_t off, size_t len, Shape sh) {
    return map_linear(s, [&](const RingTensor& t) {
      return RingTensor(sh, {t.data.begin() + off, t.data.begin() + off + len});
    });
  };
  conv2d_shares(ctx, part(0, nx, g.input_shape()), part(nx, nw, g.kernel_shape()),
                BilinearOpSpec::conv2d(g));
  BenchRow r{"conv", n, ms_since(t0), 0, 0};
  const CommStats diff = ctx.stats().minus(before);
  r.bytes = diff.total_sent();
  r.rounds = diff.rounds;
  return r;
}

BenchRow bench_relu(PartyContext& ctx, size_t elements) {
  std::optional<RingTensor> xv;
  if (ctx.id() == P1) {
    Rng rng(elements);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    std::vector<double> a(elements);
    for (auto& v : a) v = u(rng);
    xv = fx_encode(a, {elements}, ctx.fx());
  }
  const CommStats before = ctx.stats();
  const auto t0 = Clock::now();
  const ArithmeticShare x = input(ctx, P1, xv ? &*xv : nullptr, {elements});
  relu(ctx, x);
  BenchRow r{"relu", elements, ms_since(t0), 0, 0};
  const CommStats diff = ctx.stats().minus(before);
  r.bytes = diff.total_sent();
  r.rounds = diff.rounds;
  return r;
}

std::vector<SweepRow> precision_sweep(PartyContext& ctx, const ModelSpec& spec,
                                      const PlainParams* params,
                                      const std::vector<double>* images, size_t n,
                                      const std::vector<int>& ts, size_t batch) {
  std::vector<SweepRow> rows;
  if (n == 0) return rows;
  std::vector<double> ref;
  if (ctx.id() == P1) ref = float_inference(spec, *params, *images, n);
  const FixedPointConfig saved = ctx.fx();
  for (int t : ts) {
    FixedPointConfig fx;
    fx.t = t;
    fx.validate();
    ctx.set_fx(fx);
    auto z = private_inference(ctx, spec, params, images, n, batch);
    SweepRow r{t, n, 0};
    if (z) r.rel_error = mean_relative_error(fx_decode(*z, fx), ref, n, spec.classes);
    rows.push_back(r);
  }
  ctx.set_fx(saved);
  return rows;
}

}  // namespace mpc3::nn

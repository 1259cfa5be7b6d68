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

// mpc3: run three-party private inference, training, benchmarks and
// precision sweeps, either in one process or as one party over TCP.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mpc3/errors.h"
#include "mpc3/nn/mnist.h"
#include "mpc3/nn/model.h"
#include "mpc3/nn/tasks.h"
#include "mpc3/session.h"

namespace {

using namespace mpc3;
using namespace mpc3::nn;

constexpr PartyId P1{1};

// Bad flags or inputs; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string mode = "simulate";
  int party = 0;
  std::vector<std::string> peers;
  std::string listen;
  std::string session;
  std::string model;
  std::string data;
  int t = 20;
  std::optional<uint64_t> seed;
  std::string task = "infer";
  size_t iterations = 100;
  size_t batch = 0;
  double lr = 0.05;
  std::string log;
  size_t count = 10;
  size_t samples = 1280;
  std::string out;
  std::string plaintext;
  bool track_loss = false;
  std::vector<size_t> conv_sizes{16, 32, 64};
  std::vector<size_t> relu_sizes{50000, 100000, 200000};
  std::vector<int> sweep_t{10, 12, 14, 16, 18, 20};
  int timeout_ms = 30000;
};

struct Report {
  std::vector<std::string> lines;
  CommStats stats;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string hex64(uint64_t v) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << v;
  return o.str();
}

uint64_t words_digest(const std::vector<uint64_t>& w) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (uint64_t v : w) {
    h ^= v;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string stats_line(PartyId p, const CommStats& s) {
  std::ostringstream o;
  o << "stats,party=" << p.id << ",bytes_sent=" << s.total_sent()
    << ",bytes_received=" << s.total_received()
    << ",messages_sent=" << s.messages_sent << ",rounds=" << s.rounds
    << ",digest=" << hex64(s.sent_digest[0] ^ (s.sent_digest[1] * 3) ^
                           (s.sent_digest[2] * 5));
  return o.str();
}

SessionId parse_session(const std::string& hex) {
  if (hex.size() != 32) throw UsageError("--session needs 32 hex digits");
  SessionId s{};
  for (size_t i = 0; i < 16; ++i) {
    unsigned v = 0;
    if (std::sscanf(hex.c_str() + 2 * i, "%2x", &v) != 1)
      throw UsageError("--session is not hex");
    s[i] = static_cast<uint8_t>(v);
  }
  return s;
}

// Inputs held by P1. Other parties only need the model spec.
struct Inputs {
  ModelSpec spec;
  PlainParams params;
  Dataset data;
  bool have_data = false;
};

Dataset load_split(const std::string& path, const std::string& prefix) {
  if (path.empty()) throw UsageError("--data is required for this task");
  Dataset d = load_mnist(path, prefix);
  if (d.count == 0) throw UsageError("dataset " + path + " is empty");
  return d;
}

Inputs load_inputs(const Options& o, bool owner) {
  Inputs in;
  if (o.model.empty()) throw UsageError("--model is required for this task");
  in.spec = ModelSpec::load(o.model);
  if (!owner) return in;
  in.params = initial_params(in.spec, o.seed.value_or(1));
  if (o.task == "train") {
    in.data = load_split(o.data, "train");
    if (o.samples > in.data.count)
      throw UsageError("--samples exceeds the dataset size");
  } else {
    in.data = load_split(o.data, "t10k");
    if (o.count > in.data.count) throw UsageError("--count exceeds the dataset size");
  }
  if (numel(in.spec.input) != in.data.image_size())
    throw UsageError("model input does not match the dataset images");
  in.have_data = true;
  return in;
}

void write_tensors(const std::string& path, const std::vector<RingTensor>& ts, int t) {
  if (!path.empty()) save_weights(path, ts, t);
}

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  c.iterations = o.iterations;
  c.batch = o.batch ? o.batch : 128;
  c.lr = o.lr;
  c.samples = o.samples;
  c.track_logits = o.track_loss;
  return c;
}

// Moving average of the batch cross-entropy, printed as it goes.
class LossTracker {
 public:
  explicit LossTracker(std::vector<std::string>& lines) : lines_(lines) {}
  void operator()(size_t it, const std::vector<double>& z,
                  const std::vector<uint8_t>& labels) {
    const double ce = cross_entropy(z, labels, labels.size(), z.size() / labels.size());
    avg_ = it == 0 ? ce : 0.9 * avg_ + 0.1 * ce;
    std::ostringstream o;
    o << "loss,iter=" << it << ",ce=" << ce << ",avg=" << avg_;
    lines_.push_back(o.str());
  }

 private:
  std::vector<std::string>& lines_;
  double avg_ = 0;
};

void infer_lines(std::vector<std::string>& lines, const Inputs& in, size_t n,
                 const std::vector<double>& logits) {
  const auto pred = argmax_rows(logits, n, in.spec.classes);
  size_t correct = 0;
  for (size_t i = 0; i < n; ++i) {
    lines.push_back("pred,i=" + std::to_string(i) + ",label=" +
                    std::to_string(in.data.labels[i]) + ",class=" +
                    std::to_string(pred[i]));
    correct += pred[i] == in.data.labels[i];
  }
  lines.push_back("accuracy,n=" + std::to_string(n) + ",correct=" + std::to_string(correct));
}

// Work run by each party; P1 fills in the output lines.
Report run_party(PartyContext& ctx, const Options& o, const Inputs& in) {
  Report r;
  const bool owner = ctx.id() == P1;
  const CommStats start = ctx.stats();
  auto summary = [&](const std::string& head, double ms) {
    const CommStats d = ctx.stats().minus(start);
    std::ostringstream s;
    s << head << ",time_ms=" << ms << ",bytes=" << d.total_sent()
      << ",rounds=" << d.rounds;
    r.lines.push_back(s.str());
  };
  if (o.task == "infer") {
    const auto t0 = Clock::now();
    std::vector<double> imgs;
    if (owner) imgs = in.data.images(0, o.count);
    auto z = private_inference(ctx, in.spec, owner ? &in.params : nullptr,
                               owner ? &imgs : nullptr, o.count,
                               o.batch ? o.batch : o.count);
    if (z) {
      infer_lines(r.lines, in, o.count, fx_decode(*z, ctx.fx()));
      r.lines.push_back("output,digest=" + hex64(words_digest(z->data)));
      write_tensors(o.out, {*z}, ctx.fx().t);
    }
    summary("infer,n=" + std::to_string(o.count), ms_since(t0));
  } else if (o.task == "train") {
    const TrainConfig cfg = train_config(o);
    LossTracker tracker(r.lines);
    const auto t0 = Clock::now();
    auto ps = private_train(ctx, in.spec, owner ? &in.params : nullptr,
                            owner ? &in.data : nullptr, cfg,
                            [&](size_t it, const std::vector<double>& z,
                                const std::vector<uint8_t>& l) { tracker(it, z, l); });
    if (ps) {
      std::vector<uint64_t> all;
      for (const auto& p : *ps) all.insert(all.end(), p.data.begin(), p.data.end());
      r.lines.push_back("output,digest=" + hex64(words_digest(all)));
      write_tensors(o.out, *ps, ctx.fx().t);
    }
    summary("train,iterations=" + std::to_string(cfg.iterations), ms_since(t0));
  } else if (o.task == "bench") {
    for (size_t n : o.conv_sizes) r.lines.push_back(bench_conv(ctx, n).line());
    for (size_t n : o.relu_sizes) r.lines.push_back(bench_relu(ctx, n).line());
  } else if (o.task == "sweep") {
    std::vector<double> imgs;
    if (owner) imgs = in.data.images(0, o.count);
    const auto rows = precision_sweep(ctx, in.spec, owner ? &in.params : nullptr,
                                      owner ? &imgs : nullptr, o.count, o.sweep_t,
                                      o.batch ? o.batch : o.count);
    for (const auto& row : rows) r.lines.push_back(row.line());
  }
  if (!owner) r.lines.clear();
  r.stats = ctx.stats();
  return r;
}

void run_plaintext(const Options& o, const FixedPointConfig& fx) {
  const Inputs in = load_inputs(o, true);
  std::vector<std::string> lines;
  if (o.task == "infer") {
    const auto imgs = in.data.images(0, o.count);
    std::vector<double> z;
    if (o.plaintext == "float") {
      z = float_inference(in.spec, in.params, imgs, o.count);
    } else {
      z = fx_decode(fixed_inference(in.spec, in.params, imgs, o.count, fx), fx);
    }
    infer_lines(lines, in, o.count, z);
  } else if (o.task == "train") {
    const TrainConfig cfg = train_config(o);
    LossTracker tracker(lines);
    LogitsHook hook = [&](size_t it, const std::vector<double>& z,
                          const std::vector<uint8_t>& l) {
      if (o.track_loss) tracker(it, z, l);
    };
    std::vector<RingTensor> ps;
    if (o.plaintext == "float") {
      ps = encode_params(in.spec, float_train(in.spec, in.params, in.data, cfg, hook), fx);
    } else {
      ps = fixed_train(in.spec, in.params, in.data, cfg, fx, hook);
    }
    write_tensors(o.out, ps, fx.t);
    lines.push_back("train,iterations=" + std::to_string(cfg.iterations));
  } else {
    throw UsageError("--plaintext supports the infer and train tasks");
  }
  for (const auto& l : lines) std::cout << l << "\n";
}

void write_log(const Options& o, const std::vector<std::pair<PartyId, Report>>& reps) {
  if (o.log.empty()) return;
  nlohmann::json j;
  j["mode"] = o.mode;
  j["task"] = o.task;
  j["t"] = o.t;
  for (const auto& [p, r] : reps) {
    nlohmann::json s;
    s["party"] = p.id;
    s["bytes_sent"] = r.stats.total_sent();
    s["bytes_received"] = r.stats.total_received();
    s["messages_sent"] = r.stats.messages_sent;
    s["rounds"] = r.stats.rounds;
    s["rounds_by_label"] = r.stats.rounds_by_label;
    j["parties"].push_back(s);
    if (!r.lines.empty()) j["lines"] = r.lines;
  }
  std::ofstream f(o.log);
  if (!f) throw UsageError("cannot write " + o.log);
  f << j.dump(2) << "\n";
}

int run(const Options& o) {
  FixedPointConfig fx;
  fx.t = o.t;
  try {
    fx.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (o.task == "infer" && o.count == 0) throw UsageError("--count must be positive");
  if (o.task == "train" && (o.samples == 0 || o.batch > o.samples))
    throw UsageError("--samples must be positive and at least --batch");
  if (!o.plaintext.empty()) {
    if (o.plaintext != "float" && o.plaintext != "fixed")
      throw UsageError("--plaintext must be float or fixed");
    run_plaintext(o, fx);
    return 0;
  }
  SessionParams sp = make_session(o.seed, fx);
  if (!o.session.empty()) sp.session = parse_session(o.session);
  const bool needs_model = o.task != "bench";
  std::vector<std::pair<PartyId, Report>> reps;

  if (o.mode == "simulate") {
    if (o.party || !o.peers.empty() || !o.listen.empty())
      throw UsageError("simulate mode takes no --party, --peers or --listen");
    Inputs in;
    if (needs_model) in = load_inputs(o, true);
    auto out = simulate(sp, [&](PartyContext& ctx) { return run_party(ctx, o, in); });
    for (PartyId p : kParties) reps.emplace_back(p, std::move(out[p.idx()]));
  } else {
    if (o.party < 1 || o.party > 3) throw UsageError("party mode needs --party 1..3");
    if (o.peers.size() != 2) throw UsageError("--peers needs two host:port entries");
    if (o.listen.empty()) throw UsageError("party mode needs --listen host:port");
    if (o.session.empty() && !o.seed)
      throw UsageError("party mode needs --session or --seed");
    const PartyId me{o.party};
    TcpOptions topt;
    topt.self = me;
    topt.session = sp.session;
    topt.timeout_ms = o.timeout_ms;
    try {
      topt.listen = HostPort::parse(o.listen);
      size_t k = 0;
      for (PartyId p : kParties)
        if (p != me) topt.peers[p.idx()] = HostPort::parse(o.peers[k++]);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    Inputs in;
    if (needs_model) in = load_inputs(o, me == P1);
    auto ep = tcp_connect(topt);
    PartyContext ctx = open_context(*ep, sp);
    reps.emplace_back(me, run_party(ctx, o, in));
  }
  for (const auto& [p, r] : reps)
    for (const auto& l : r.lines) std::cout << l << "\n";
  for (const auto& [p, r] : reps) std::cout << stats_line(p, r.stats) << "\n";
  write_log(o, reps);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-party replicated secret sharing for neural networks"};
  Options o;
  app.add_option("--mode", o.mode, "simulate or party")
      ->check(CLI::IsMember({"simulate", "party"}));
  app.add_option("--party", o.party, "party id 1..3 (party mode)");
  app.add_option("--peers", o.peers, "the two other parties, ascending id")
      ->delimiter(',');
  app.add_option("--listen", o.listen, "own host:port (party mode)");
  app.add_option("--session", o.session, "16-byte session id in hex");
  app.add_option("--model", o.model, "model spec (JSON)");
  app.add_option("--data", o.data, "MNIST IDX directory or image file");
  app.add_option("--t", o.t, "fractional bits")->capture_default_str();
  app.add_option("--seed", o.seed, "seed for keys and initial weights");
  app.add_option("--task", o.task, "infer, train, bench or sweep")
      ->check(CLI::IsMember({"infer", "train", "bench", "sweep"}));
  app.add_option("--iterations", o.iterations, "SGD iterations")->capture_default_str();
  app.add_option("--batch", o.batch, "batch size");
  app.add_option("--lr", o.lr, "learning rate")->capture_default_str();
  app.add_option("--log", o.log, "write a JSON log");
  app.add_option("--count", o.count, "images for infer and sweep")->capture_default_str();
  app.add_option("--samples", o.samples, "training samples")->capture_default_str();
  app.add_option("--out", o.out, "write weights (train) or logits (infer)");
  app.add_option("--plaintext", o.plaintext, "run without MPC: float or fixed");
  app.add_flag("--track-loss", o.track_loss, "reveal logits to P1 to print the loss");
  app.add_option("--conv-sizes", o.conv_sizes, "bench input sizes")->delimiter(',');
  app.add_option("--relu-sizes", o.relu_sizes, "bench element counts")->delimiter(',');
  app.add_option("--sweep-t", o.sweep_t, "sweep precisions")->delimiter(',');
  app.add_option("--timeout-ms", o.timeout_ms, "connection timeout")->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    return run(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const GeometryError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

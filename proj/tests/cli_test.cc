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

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const char* cli = std::getenv("MPC3_CLI");
  REQUIRE(cli != nullptr);
  const std::string cmd = std::string(cli) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string src(const std::string& rel) { return std::string(MPC3_SOURCE_DIR) + "/" + rel; }

size_t count_prefix(const std::string& out, const std::string& prefix) {
  std::istringstream in(out);
  size_t n = 0;
  for (std::string line; std::getline(in, line);) n += line.rfind(prefix, 0) == 0;
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate inference on ten images") {
  const Result r = run("--task infer --seed 1 --count 10 --model " +
                       src("fixtures/lenet_trained.json") + " --data " + src("data/mnist"));
  CHECK(r.code == 0);
  CHECK(count_prefix(r.out, "pred,") == 10);
  CHECK(count_prefix(r.out, "stats,party=") == 3);
  CHECK(count_prefix(r.out, "infer,n=10,") == 1);
}

TEST_CASE("bench rows") {
  const Result r = run("--task bench --seed 1 --conv-sizes 32 --relu-sizes 1000,4000");
  CHECK(r.code == 0);
  CHECK(r.out.find("conv,n=32,time_ms=") != std::string::npos);
  CHECK(r.out.find(",rounds=4\n") != std::string::npos);
  CHECK(count_prefix(r.out, "relu,n=") == 2);
}

TEST_CASE("usage errors") {
  CHECK(run("--task nope").code == 2);
  CHECK(run("--task infer --model " + src("fixtures/lenet.json")).code == 2);
  CHECK(run("--mode party --task bench").code == 2);
  CHECK(run("--task infer --count 0 --model " + src("fixtures/lenet.json") + " --data " +
            src("data/mnist")).code == 2);
  CHECK(run("--t 40 --task bench").code == 2);
}

TEST_CASE("empty sweep") {
  const Result r = run("--task sweep --seed 1 --count 0 --model " +
                       src("fixtures/lenet_trained.json") + " --data " + src("data/mnist"));
  CHECK(r.code == 0);
  CHECK(count_prefix(r.out, "sweep,") == 0);
}

}  // TEST_SUITE

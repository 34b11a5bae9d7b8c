/*
 * Copyright 2026 The hetbo Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("hetbo_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(HETBO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string first_line(const std::string& file) {
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  return line;
}

std::string slurp(const std::string& file) {
  std::ifstream in(file);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Trace contents without the timing column.
std::string strip_wall(const std::string& file) {
  std::ifstream in(file);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

void write(const std::string& file, const std::string& text) { std::ofstream(file) << text; }

std::string sin_data() {
  std::string s = "x0,y\n";
  for (int i = 0; i < 30; ++i) {
    const double x = 10.0 * i / 29.0;
    s += std::to_string(x) + "," + std::to_string(std::sin(x) + 0.01 * ((i * 7) % 5)) + "\n";
  }
  return s;
}

}  // namespace

TEST_CASE("fit and predict") {
  Sandbox box;
  write(box.path("d.csv"), sin_data());
  write(box.path("t.csv"), "x0\n1.0\n2.0\n");
  REQUIRE(run("fit --data " + box.path("d.csv") + " --restarts 2 --out " + box.path("m.json")) == 0);
  REQUIRE(run("predict --model " + box.path("m.json") + " --test " + box.path("t.csv") + " --out " +
              box.path("p.csv")) == 0);
  CHECK(first_line(box.path("p.csv")) == "mean,variance");
  REQUIRE(run("fit --data " + box.path("d.csv") +
              " --mlhgp true --mlhgp-iterations 1 --samples 10 --restarts 1 --out " + box.path("h.json")) == 0);
  REQUIRE(run("predict --model " + box.path("h.json") + " --test " + box.path("t.csv") + " --out " +
              box.path("q.csv")) == 0);
  CHECK(first_line(box.path("q.csv")) == "mean,variance,epistemic,aleatoric");
}

TEST_CASE("exit codes") {
  Sandbox box;
  CHECK(run("fit --data " + box.path("missing.csv")) == 2);
  CHECK(run("fit") == 2);
  CHECK(run("no-such-command") == 2);
  write(box.path("flat.csv"), "x0,y\n0,1\n1,1\n2,1\n");
  CHECK(run("fit --data " + box.path("flat.csv")) == 2);
  CHECK(run("bo --objective branin-het --acq nope") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("bo trace header and config replay") {
  Sandbox box;
  const std::string common = " --init 6 --iterations 2 --restarts 1 --refit-restarts 1 --seed 5";
  REQUIRE(run("bo --objective branin-het --acq ei" + common + " --trace " + box.path("a.csv") + " --summary " +
              box.path("s.json") + " --write-config " + box.path("c.json")) == 0);
  CHECK(first_line(box.path("a.csv")) == "seed,iter,phase,x0,x1,y,f_true,g_true,best_h,lowest_g,acq_value,wall_ms");
  REQUIRE(run("bo --config " + box.path("c.json") + " --trace " + box.path("b.csv")) == 0);
  CHECK(strip_wall(box.path("a.csv")) == strip_wall(box.path("b.csv")));
  const std::string summary = slurp(box.path("s.json"));
  CHECK(summary.find("\"best_h\"") != std::string::npos);
  CHECK(summary.find("\"lowest_g\"") != std::string::npos);
  CHECK(summary.find("\"se\"") != std::string::npos);
}

TEST_CASE("lightcurve commands") {
  Sandbox box;
  REQUIRE(run("simulate-lc --n 300 --beta 2 --seed 1 --out " + box.path("lc.csv") + " --keep 80 --gapped-out " +
              box.path("g.csv")) == 0);
  CHECK(first_line(box.path("lc.csv")) == "mjd,value,error");
  REQUIRE(run("structfunc --lc " + box.path("g.csv") + " --delta 5 --out " + box.path("sf.csv") + " --fit " +
              box.path("f.json")) == 0);
  CHECK(first_line(box.path("sf.csv")) == "tau,sf,count,stderr");
  REQUIRE(run("lagspec --lc-a " + box.path("g.csv") + " --lc-b " + box.path("g.csv") +
              " --pairs 20 --restarts 1 --bins 4 --out " + box.path("lag.csv")) == 0);
  CHECK(first_line(box.path("lag.csv")) == "freq,coherence,coh_err,lag_days,lag_err");
  const std::string a = slurp(box.path("lc.csv"));
  REQUIRE(run("simulate-lc --n 300 --beta 2 --seed 1 --out " + box.path("lc2.csv")) == 0);
  CHECK(a == slurp(box.path("lc2.csv")));
}

TEST_CASE("dataset commands") {
  Sandbox box;
  write(box.path("d.csv"), sin_data());
  REQUIRE(run("noise-oracle --data " + box.path("d.csv") + " --bandwidth 1 --restarts 1 --out " +
              box.path("o.csv")) == 0);
  CHECK(first_line(box.path("o.csv")) == "x0,y,noise_std");
  REQUIRE(run("pca-reduce --data " + box.path("d.csv") + " --components 1 --out " + box.path("p.csv")) == 0);
  CHECK(first_line(box.path("p.csv")) == "x0,y");
  CHECK(run("pca-reduce --data " + box.path("d.csv") + " --components 3") == 2);
  REQUIRE(run("regress-bench --data " + box.path("d.csv") + " --splits 2 --restarts 1 --out " +
              box.path("b.json")) == 0);
  const std::string first = slurp(box.path("b.json"));
  REQUIRE(run("regress-bench --data " + box.path("d.csv") + " --splits 2 --restarts 1 --out " +
              box.path("b2.json")) == 0);
  CHECK(first == slurp(box.path("b2.json")));
  CHECK(first.find("\"summary\"") != std::string::npos);
}

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

#include "hetbo/bo.hpp"
#include "hetbo/errors.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace hetbo;
using namespace hetbo::bo;

namespace {

BOConfig quick_config(AcquisitionKind kind) {
  BOConfig c;
  c.acquisition.kind = kind;
  c.surrogate = default_surrogate(kind);
  c.init_size = 8;
  c.iterations = 3;
  c.n_restarts = 2;
  c.refit_restarts = 1;
  c.mlhgp_iterations = 2;
  c.mlhgp_samples = 20;
  c.mlhgp_restarts = 2;
  c.mlhgp_refit_restarts = 1;
  return c;
}

gp::GPModel two_point_model() {
  MatrixXd x(2, 1);
  x << 0.2, 0.7;
  VectorXd y(2);
  y << 1.0, -0.5;
  auto k = kernels::KernelSpec::continuous(kernels::KernelFamily::SQE, 1);
  k.lengthscales[0] = 0.15;
  return gp::GPModel::assemble({kernels::Inputs::real(x), y, std::nullopt}, k, 0.01);
}

}  // namespace

TEST_CASE("zero iterations returns the initial design") {
  BOConfig c = quick_config(AcquisitionKind::EI);
  c.iterations = 0;
  const auto o = objectives::SyntheticObjective::make("branin-het");
  const BOTrace t = run_bo(o, c);
  REQUIRE(t.records.size() == 8);
  double best = INFINITY;
  for (const auto& r : t.records) {
    CHECK(r.phase == "init");
    best = std::min(best, *r.h);
  }
  CHECK(*t.records.back().best_h == best);
}

TEST_CASE("random search is deterministic for a fixed seed") {
  BOConfig c = quick_config(AcquisitionKind::Random);
  c.seed = 12;
  const auto o = objectives::SyntheticObjective::make("hosaki-het");
  const BOTrace a = run_bo(o, c), b = run_bo(o, c);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].x == b.records[i].x);
    CHECK(a.records[i].y == b.records[i].y);
  }
}

TEST_CASE("full traces are a pure function of objective and config") {
  for (auto kind : {AcquisitionKind::EI, AcquisitionKind::ANPEI}) {
    BOConfig c = quick_config(kind);
    c.seed = 3;
    const auto o = objectives::SyntheticObjective::make("sin-het");
    const BOTrace a = run_bo(o, c), b = run_bo(o, c);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].x == b.records[i].x);
      CHECK(a.records[i].y == b.records[i].y);
      CHECK(a.records[i].acq_value == b.records[i].acq_value);
    }
  }
}

TEST_CASE("running bests are monotone") {
  for (auto name : {"sin-het", "branin-het"}) {
    BOConfig c = quick_config(AcquisitionKind::HAEI);
    const auto o = objectives::SyntheticObjective::make(name);
    const BOTrace t = run_bo(o, c);
    for (std::size_t i = 1; i < t.records.size(); ++i) {
      if (o.direction() == Direction::Maximise) {
        CHECK(*t.records[i].best_h >= *t.records[i - 1].best_h);
      } else {
        CHECK(*t.records[i].best_h <= *t.records[i - 1].best_h);
      }
      CHECK(*t.records[i].lowest_g <= *t.records[i - 1].lowest_g);
    }
  }
}

TEST_CASE("expected improvement finds the grid minimiser of a noiseless quadratic") {
  const Index n = 50;
  MatrixXd f(n, 1);
  VectorXd t(n);
  for (Index i = 0; i < n; ++i) {
    f(i, 0) = double(i) / double(n - 1);
    t[i] = (f(i, 0) - 0.37) * (f(i, 0) - 0.37);
  }
  const Index best = std::min_element(t.data(), t.data() + n) - t.data();
  objectives::TabularObjective tab(f, t);
  BOConfig c = quick_config(AcquisitionKind::EI);
  c.init_size = 5;
  c.iterations = 10;
  c.n_restarts = 5;
  c.refit_restarts = 2;
  const BOTrace trace = run_bo(tab, c);
  bool found = false;
  std::set<Index> rows;
  for (const auto& r : trace.records) {
    found = found || *r.row == best;
    CHECK(rows.insert(*r.row).second);
  }
  CHECK(found);
}

TEST_CASE("candidate proposals") {
  Rng rng(1);
  const Surrogate s(two_point_model());
  AcquisitionSpec spec;
  MatrixXd one(1, 1);
  one << 0.4;
  const std::vector<Index> only = {0};
  CHECK(propose(&s, spec, one, only, rng).index == 0);

  // Far from the data every candidate has the prior's acquisition value.
  MatrixXd far(4, 1);
  far << 1000.0, 2000.0, 3000.0, 4000.0;
  const std::vector<Index> avail = {3, 1, 2};
  CHECK(propose(&s, spec, far, avail, rng).index == 1);
}

TEST_CASE("continuous proposal matches a dense grid argmax") {
  const Surrogate s(two_point_model());
  AcquisitionSpec spec;
  Rng rng(4);
  const Proposal p = propose(&s, spec, VectorXd::Zero(1), VectorXd::Ones(1), rng);
  const Index m = 1000000;
  MatrixXd grid(m, 1);
  for (Index i = 0; i < m; ++i) grid(i, 0) = double(i) / double(m - 1);
  const VectorXd a = s.acquisition(spec, grid);
  Index arg = 0;
  a.maxCoeff(&arg);
  CHECK(std::abs(p.x[0] - grid(arg, 0)) < 1e-2);
  CHECK(p.value >= a[arg] - 1e-9);
}

TEST_CASE("random candidate choice is uniform") {
  MatrixXd cands(20, 1);
  for (Index i = 0; i < 20; ++i) cands(i, 0) = double(i);
  std::vector<Index> avail(20);
  for (Index i = 0; i < 20; ++i) avail[std::size_t(i)] = i;
  AcquisitionSpec spec;
  spec.kind = AcquisitionKind::Random;
  std::vector<int> counts(20, 0);
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    Rng rng = make_rng(seed);
    ++counts[std::size_t(propose(nullptr, spec, cands, avail, rng).index)];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 500.0) * (c - 500.0) / 500.0;
  // 99th percentile of chi-squared with 19 degrees of freedom.
  CHECK(chi2 < 36.191);
}

TEST_CASE("seeds run in parallel reproduce the serial result") {
  BOConfig c = quick_config(AcquisitionKind::EI);
  const auto o = objectives::SyntheticObjective::make("branin-het");
  auto make = [&](const BOConfig& cfg) { return run_bo(o, cfg); };
  const auto serial = run_seeds(make, c, 3, 1);
  const auto parallel = run_seeds(make, c, 3, 3);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t i = 0; i < serial[s].records.size(); ++i) CHECK(serial[s].records[i].y == parallel[s].records[i].y);
  CHECK(serial[0].records[0].y != serial[1].records[0].y);
  const BOSummary sum = summarise(serial);
  CHECK(sum.n_seeds == 3);
  CHECK(sum.mean_best_h.size() == serial[0].records.size());
}

TEST_CASE("sign test") {
  const std::vector<double> a(10, 0.0), b(10, 1.0);
  CHECK(sign_test_less(a, b) == doctest::Approx(std::pow(0.5, 10)));
  CHECK(sign_test_less(b, a) == doctest::Approx(1.0));
  const std::vector<double> c = {0, 0, 1, 5}, d = {1, 0, 1, 2};
  // One win, one loss, two ties dropped: P(X >= 1), X ~ Bin(2, 1/2).
  CHECK(sign_test_less(c, d) == doctest::Approx(0.75));
}

TEST_CASE("trace csv header") {
  BOConfig c = quick_config(AcquisitionKind::Random);
  c.iterations = 1;
  c.init_size = 2;
  const BOTrace t = run_bo(objectives::SyntheticObjective::make("branin-het"), c);
  std::ostringstream os;
  write_trace_csv(os, t, 7, true);
  std::string header;
  std::istringstream is(os.str());
  std::getline(is, header);
  CHECK(header == "seed,iter,phase,x0,x1,y,f_true,g_true,best_h,lowest_g,acq_value,wall_ms");
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    CHECK(line.rfind("7,", 0) == 0);
  }
  CHECK(rows == 3);
}

TEST_CASE("invalid configurations are rejected") {
  BOConfig c;
  c.init_size = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = BOConfig{};
  c.alpha = 2.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

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

#include "hetbo/benchmark.hpp"
#include "hetbo/dataset_io.hpp"
#include "hetbo/errors.hpp"
#include "hetbo/metrics.hpp"
#include "hetbo/random.hpp"
#include "hetbo/serialize.hpp"

#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

using namespace hetbo;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

gp::Dataset linear_data(Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> e(0.0, 0.05);
  MatrixXd x(n, 2);
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = u(rng);
    x(i, 1) = u(rng);
    y[i] = 2.0 * x(i, 0) - x(i, 1) + e(rng);
  }
  return {kernels::Inputs::real(x), y, std::nullopt};
}

}  // namespace

TEST_CASE("metrics closed forms") {
  const VectorXd y = (VectorXd(3) << 1.0, -2.0, 0.5).finished();
  const auto perfect = metrics::compute_metrics(y, VectorXd::Ones(3), y);
  CHECK(perfect.rmse == 0.0);
  CHECK(perfect.mae == 0.0);
  CHECK(perfect.nlpd == doctest::Approx(0.918938533204673).epsilon(1e-12));
  const auto off = metrics::compute_metrics(VectorXd::Zero(1), VectorXd::Ones(1), VectorXd::Ones(1));
  CHECK(off.nlpd == doctest::Approx(1.418938533204673).epsilon(1e-12));
  CHECK(off.rmse >= 0.0);
  CHECK(off.mae >= 0.0);
}

TEST_CASE("zero predictive variance is flagged, not fatal") {
  const VectorXd y = (VectorXd(2) << 1.0, 2.0).finished();
  const auto r = metrics::compute_metrics(VectorXd::Zero(2), VectorXd::Zero(2), y);
  CHECK(r.nlpd_infinite);
  CHECK(std::isinf(r.nlpd));
}

TEST_CASE("a constant-mean predictor has non-positive R squared on held-out data") {
  const auto d = linear_data(60, 1);
  const double train_mean = d.targets.head(40).mean();
  const auto r = metrics::compute_metrics(VectorXd::Constant(20, train_mean), VectorXd::Ones(20), d.targets.tail(20));
  CHECK(r.r2 <= 1e-12);
}

TEST_CASE("dataset parsing") {
  std::istringstream in("x0,x1,y,noise_std\n0.1,0.2,1.5,0.1\n\n0.3,0.4,2.5,0.2\n");
  const auto d = io::read_dataset_csv(in);
  CHECK(d.data.size() == 2);
  CHECK(d.data.inputs.dimension() == 2);
  CHECK((*d.data.noise_std)[1] == 0.2);
  CHECK(d.num_tasks == 0);

  std::istringstream bad("x0,y\n0.1,1\n0.2,oops\n");
  try {
    io::read_dataset_csv(bad);
    FAIL("expected a parse error");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("wide multitask data skips missing labels") {
  std::istringstream in("f0,f1,f2,y0,y1\n1,0,1,0.5,\n0,1,1,nan,2.0\n1,1,0,0.1,0.3\n");
  const auto d = io::read_dataset_csv(in);
  CHECK(d.num_tasks == 2);
  CHECK(d.data.size() == 4);
  CHECK(d.data.inputs.kind == kernels::InputKind::Count);
  CHECK(d.data.inputs.multitask());
}

TEST_CASE("string inputs") {
  std::istringstream in("smiles,y\nCCO,1\nc1ccccc1,2\n");
  const auto d = io::read_dataset_csv(in);
  CHECK(d.data.inputs.kind == kernels::InputKind::String);
  CHECK(d.data.inputs.strings[1] == "c1ccccc1");
}

TEST_CASE("dataset csv round trip keeps the column layout") {
  auto d = linear_data(5, 2);
  d.noise_std = VectorXd::Constant(5, 0.3);
  std::stringstream ss;
  io::write_dataset_csv(ss, d);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "x0,x1,y,noise_std");
  ss.seekg(0);
  const auto back = io::read_dataset_csv(ss);
  CHECK((back.data.targets - d.targets).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("model json round trip reproduces predictions") {
  const auto d = linear_data(30, 3);
  gp::FitOptions fo;
  fo.n_restarts = 2;
  const gp::GPModel m = gp::fit_gp(d, kernels::KernelSpec::continuous(kernels::KernelFamily::Matern52, 2), fo);
  const auto j = serialize::model_to_json(m, "train.csv");
  const gp::GPModel back = serialize::model_from_json(nlohmann::json::parse(j.dump()), d);
  const auto test = kernels::Inputs::real(MatrixXd::Random(10, 2));
  CHECK((gp::predict(m, test).mean - gp::predict(back, test).mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(j["training_data"] == "train.csv");
  auto d2 = d;
  d2.targets *= 3.0;
  CHECK_THROWS_AS(serialize::model_from_json(j, d2), InvalidInput);
}

TEST_CASE("model json keys are stable") {
  const auto d = linear_data(10, 4);
  const gp::GPModel m = gp::GPModel::assemble(d, kernels::KernelSpec::continuous(kernels::KernelFamily::SQE, 2), 0.1);
  std::vector<std::string> keys;
  for (const auto& [k, v] : serialize::model_to_json(m, "d.csv").items()) keys.push_back(k);
  const std::vector<std::string> want = {"jitter", "kernel", "nlml", "noise_fixed", "noise_variance", "prior_mean",
                                         "standardisation", "standardised", "training_data", "type"};
  CHECK(keys == want);
}

TEST_CASE("kernel json round trip") {
  auto icm = kernels::KernelSpec::icm(kernels::KernelSpec::continuous(kernels::KernelFamily::RQ, 3), 2);
  icm.coregional_factor << 1.0, 0.0, 0.3, 0.7;
  const auto back = serialize::kernel_from_json(serialize::kernel_to_json(icm));
  CHECK(back.describe() == icm.describe());
  CHECK_THROWS_AS(serialize::kernel_from_json(nlohmann::json{{"family", "nope"}}), InvalidInput);
}

TEST_CASE("regression benchmark on learnable data") {
  benchmark::BenchmarkOptions o;
  o.n_splits = 5;
  o.fit.n_restarts = 2;
  o.seed = 11;
  const auto d = linear_data(60, 5);
  const auto k = kernels::KernelSpec::continuous(kernels::KernelFamily::SQE, 2);
  const auto r = benchmark::run_regression_benchmark(d, k, o);
  for (const auto& s : r.splits) {
    CHECK(s.r2 > 0.95);
    CHECK(s.n_test == 12);
  }
  o.threads = 3;
  const auto again = benchmark::run_regression_benchmark(d, k, o);
  CHECK(serialize::report_to_json(r).dump() == serialize::report_to_json(again).dump());
  CHECK_THROWS_AS(benchmark::run_regression_benchmark(linear_data(4, 1), k, o), InvalidInput);
}

TEST_CASE("multitask benchmark reports every task") {
  Rng rng(6);
  std::bernoulli_distribution coin(0.5);
  const Index n = 40;
  MatrixXd f(n, 12);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < 12; ++j) f(i, j) = coin(rng) ? 1.0 : 0.0;
  VectorXd y(n);
  std::vector<int> tasks;
  for (Index i = 0; i < n; ++i) {
    tasks.push_back(int(i % 4));
    y[i] = f.row(i).head(6).sum() + 0.5 * double(i % 4);
  }
  gp::Dataset d{kernels::Inputs::counts(f).with_tasks(tasks), y, std::nullopt};
  benchmark::BenchmarkOptions o;
  o.n_splits = 2;
  o.fit.n_restarts = 1;
  const auto r = benchmark::run_regression_benchmark(
      d, kernels::KernelSpec::icm(kernels::KernelSpec::tanimoto(), 4), o);
  CHECK(r.tasks.size() == 4);
}

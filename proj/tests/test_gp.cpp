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

#include "hetbo/errors.hpp"
#include "hetbo/gp.hpp"
#include "hetbo/random.hpp"
#include "oracles.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace hetbo;
using namespace hetbo::gp;
using kernels::KernelFamily;

namespace {

Dataset random_dataset(Index n, Index d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::normal_distribution<double> eps(0.0, 0.1);
  MatrixXd x(n, d);
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) x(i, j) = u(rng);
    y[i] = std::sin(2.0 * x(i, 0)) + (d > 1 ? 0.5 * x(i, 1) : 0.0) + eps(rng);
  }
  return {Inputs::real(x), y, std::nullopt};
}

double nlml_at(const GPModel& m, const std::vector<std::string>& names, const VectorXd& theta) {
  const auto kn = kernels::parameter_names(m.kernel());
  VectorXd kt = kernels::pack_parameters(m.kernel());
  double noise = m.noise_variance();
  for (std::size_t p = 0; p < names.size(); ++p) {
    if (names[p] == "log_noise_variance") {
      noise = std::exp(theta[Index(p)]);
      continue;
    }
    for (std::size_t q = 0; q < kn.size(); ++q)
      if (kn[q] == names[p]) kt[Index(q)] = theta[Index(p)];
  }
  return GPModel::assemble(m.data(), kernels::unpack_parameters(m.kernel(), kt), noise, 0.0, true, m.noise_fixed())
      .nlml();
}

}  // namespace

TEST_CASE("single-point marginal likelihood") {
  MatrixXd x(1, 1);
  x << 0.0;
  const auto k = kernels::KernelSpec::continuous(KernelFamily::SQE, 1);
  Dataset d0{Inputs::real(x), VectorXd::Zero(1), std::nullopt};
  CHECK(GPModel::assemble(d0, k, 0.0, 0.0, false).nlml() == doctest::Approx(0.918938533204673).epsilon(1e-12));
  Dataset d1{Inputs::real(x), VectorXd::Ones(1), std::nullopt};
  CHECK(GPModel::assemble(d1, k, 0.0, 0.0, false).nlml() == doctest::Approx(1.418938533204673).epsilon(1e-12));
}

TEST_CASE("marginal likelihood matches a dense multivariate normal density") {
  Rng rng(7);
  for (KernelFamily f : {KernelFamily::SQE, KernelFamily::Matern12, KernelFamily::Matern32, KernelFamily::Matern52,
                         KernelFamily::RQ}) {
    const Dataset d = random_dataset(3, 1, rng);
    auto k = kernels::KernelSpec::continuous(f, 1);
    k.lengthscales[0] = 0.9;
    k.signal_variance = 1.4;
    const GPModel m = GPModel::assemble(d, k, 0.05, 0.0);
    MatrixXd cov = oracle::gram(k, d.inputs, d.inputs);
    cov.diagonal().array() += 0.05;
    CHECK(m.nlml() == doctest::Approx(oracle::mvn_neg_log_density(cov, m.standardised_targets())).epsilon(1e-10));
  }
}

TEST_CASE("noise-free posterior interpolates the data") {
  Rng rng(1);
  const Dataset d = random_dataset(5, 1, rng);
  const GPModel m = GPModel::assemble(d, kernels::KernelSpec::continuous(KernelFamily::SQE, 1), 0.0, 0.0);
  const PosteriorPrediction p = predict(m, d.inputs);
  for (Index i = 0; i < 5; ++i) CHECK(p.mean[i] == doctest::Approx(d.targets[i]).epsilon(1e-6));
}

TEST_CASE("prediction equals brute-force Gaussian conditioning") {
  Rng rng(2);
  const Dataset d = random_dataset(2, 1, rng);
  auto k = kernels::KernelSpec::continuous(KernelFamily::Matern52, 1);
  k.lengthscales[0] = 1.3;
  const GPModel m = GPModel::assemble(d, k, 0.1, 0.0);
  MatrixXd xs(1, 1);
  xs << 1.7;
  const Inputs test = Inputs::real(xs);
  PredictOptions po;
  po.full_covariance = true;
  po.standardised = true;
  const PosteriorPrediction p = predict(m, test, po);
  MatrixXd kxx = oracle::gram(k, d.inputs, d.inputs);
  kxx.diagonal().array() += 0.1;
  const auto c = oracle::condition(kxx, oracle::gram(k, d.inputs, test), oracle::gram(k, test, test),
                                   m.standardised_targets());
  CHECK(std::abs(p.mean[0] - c.mean[0]) < 1e-10);
  CHECK(std::abs((*p.covariance)(0, 0) - c.cov(0, 0)) < 1e-10);
}

TEST_CASE("posterior reverts to the prior far from data") {
  Rng rng(3);
  const Dataset d = random_dataset(6, 1, rng);
  auto k = kernels::KernelSpec::continuous(KernelFamily::SQE, 1);
  k.signal_variance = 2.0;
  const GPModel m = GPModel::assemble(d, k, 0.01);
  MatrixXd far(1, 1);
  far << 53.0;
  PredictOptions po;
  po.standardised = true;
  const auto p = predict(m, Inputs::real(far), po);
  CHECK(std::abs(p.mean[0] - m.prior_mean()) < 1e-6);
  CHECK(std::abs(p.variance[0] - 2.0) < 1e-6);
}

TEST_CASE("posterior variance never exceeds the prior variance") {
  Rng rng(4);
  const Dataset d = random_dataset(20, 2, rng);
  auto k = kernels::KernelSpec::continuous(KernelFamily::Matern32, 2);
  k.signal_variance = 1.5;
  const GPModel m = GPModel::assemble(d, k, 1e-4);
  PredictOptions po;
  po.standardised = true;
  const auto p = predict(m, Inputs::real(MatrixXd::Random(200, 2) * 4.0), po);
  CHECK(p.variance.maxCoeff() <= 1.5 + 1e-8);
  CHECK(p.variance.minCoeff() >= 0.0);
}

TEST_CASE("affine rescaling of the targets leaves the standardised fit unchanged") {
  Rng rng(5);
  Dataset d = random_dataset(8, 1, rng);
  const auto k = kernels::KernelSpec::continuous(KernelFamily::SQE, 1);
  const double a = GPModel::assemble(d, k, 0.1).nlml();
  d.targets = (d.targets.array() * 37.0 + 4.0).matrix();
  CHECK(GPModel::assemble(d, k, 0.1).nlml() == doctest::Approx(a).epsilon(1e-8));
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Dataset d = random_dataset(6, 1, rng);
  for (int rep = 0; rep < 10; ++rep) {
    auto k = kernels::KernelSpec::continuous(KernelFamily::SQE, 1);
    k.signal_variance = std::exp(u(rng));
    k.lengthscales[0] = std::exp(u(rng));
    const GPModel m = GPModel::assemble(d, k, std::exp(u(rng) - 2.0), 0.0, true, false);
    const auto names = gradient_parameter_names(m);
    const VectorXd g = nlml_gradient(m);
    VectorXd theta(Index(names.size()));
    const VectorXd kt = kernels::pack_parameters(k);
    theta.head(kt.size()) = kt;
    theta[theta.size() - 1] = std::log(m.noise_variance());
    for (Index p = 0; p < theta.size(); ++p) {
      VectorXd hi = theta, lo = theta;
      hi[p] += 1e-5;
      lo[p] -= 1e-5;
      const double fd = (nlml_at(m, names, hi) - nlml_at(m, names, lo)) / 2e-5;
      CHECK(std::abs(fd - g[p]) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("fitted model is stationary and robust to the restart seed") {
  Rng rng(8);
  const Dataset d = random_dataset(25, 1, rng);
  const auto k = kernels::KernelSpec::continuous(KernelFamily::SQE, 1);
  FitOptions fo;
  fo.seed = 1;
  const GPModel a = fit_gp(d, k, fo);
  fo.seed = 2;
  const GPModel b = fit_gp(d, k, fo);
  CHECK(std::abs(a.nlml() - b.nlml()) < 1e-3);
  const auto names = gradient_parameter_names(a);
  const VectorXd g = nlml_gradient(a, {"log_signal_variance"});
  CHECK(std::abs(g[0]) < 1e-5);
  CHECK(nlml(a) == doctest::Approx(a.nlml()));
}

TEST_CASE("degenerate targets are rejected before fitting") {
  MatrixXd x(3, 1);
  x << 0, 1, 2;
  Dataset d{Inputs::real(x), VectorXd::Constant(3, 2.0), std::nullopt};
  CHECK_THROWS_AS(fit_gp(d, kernels::KernelSpec::continuous(KernelFamily::SQE, 1)), InvalidInput);
  Dataset bad{Inputs::real(x), VectorXd::Constant(2, 2.0), std::nullopt};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("posterior samples are consistent and deterministic") {
  Rng rng(9);
  const Dataset d = random_dataset(6, 1, rng);
  const GPModel m = GPModel::assemble(d, kernels::KernelSpec::continuous(KernelFamily::SQE, 1), 0.05);
  MatrixXd xs(3, 1);
  xs << 0.2, 1.5, 4.0;
  const Inputs test = Inputs::real(xs);
  const MatrixXd s = sample_posterior(m, test, 10000, 42);
  const auto p = predict(m, test);
  for (Index j = 0; j < 3; ++j) {
    const double mean = s.col(j).mean();
    CHECK(std::abs(mean - p.mean[j]) < 4.0 * std::sqrt(p.variance[j] / 10000.0));
  }
  CHECK(s == sample_posterior(m, test, 10000, 42));
}

TEST_CASE("a single draw at a noise-free training point returns its target") {
  Rng rng(10);
  const Dataset d = random_dataset(4, 1, rng);
  const GPModel m = GPModel::assemble(d, kernels::KernelSpec::continuous(KernelFamily::SQE, 1), 0.0, 0.0);
  const MatrixXd s = sample_posterior(m, d.inputs.row(2), 1, 3);
  CHECK(std::abs(s(0, 0) - d.targets[2]) < 1e-5);
}

TEST_CASE("jitter escalates on singular matrices") {
  const MatrixXd ones = MatrixXd::Ones(3, 3);
  const auto f = factorise(ones, 0.0);
  REQUIRE(f.has_value());
  CHECK(f->jitter > 0.0);
  CHECK(f->jitter <= 1e-3);
  MatrixXd neg = -MatrixXd::Identity(2, 2);
  CHECK_FALSE(factorise(neg, 1e-6).has_value());
}

TEST_CASE("multitask fit with an icm kernel") {
  Rng rng(12);
  Dataset d = random_dataset(30, 1, rng);
  std::vector<int> tasks;
  for (Index i = 0; i < 30; ++i) {
    tasks.push_back(int(i % 2));
    if (i % 2) d.targets[i] = 0.8 * d.targets[i] + 0.3;
  }
  d.inputs = d.inputs.with_tasks(tasks);
  FitOptions fo;
  fo.n_restarts = 3;
  const GPModel m = fit_gp(d, kernels::KernelSpec::icm(kernels::KernelSpec::continuous(KernelFamily::SQE, 1), 2), fo);
  const MatrixXd b = m.kernel().coregionalisation();
  CHECK(b(0, 1) / std::sqrt(b(0, 0) * b(1, 1)) > 0.5);
  const VectorXd g = nlml_gradient(m);
  CHECK(g.cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("string inputs fit with the n-gram kernel") {
  const std::vector<std::string> s = {"CCO", "CCCO", "CCCCO", "c1ccccc1", "c1ccccc1O", "CC(=O)O", "CCN", "CCCN"};
  VectorXd y(8);
  y << 1.0, 1.4, 1.9, -0.5, -0.2, 0.3, 0.8, 1.2;
  Dataset d{Inputs::text(s), y, std::nullopt};
  FitOptions fo;
  fo.n_restarts = 3;
  const GPModel m = fit_gp(d, kernels::KernelSpec::string_ngram(3), fo);
  CHECK(std::isfinite(m.nlml()));
  const auto p = predict(m, Inputs::text({"CCCCCO"}));
  CHECK(std::isfinite(p.mean[0]));
}

TEST_CASE("lengthscale floors bound the optimiser") {
  Rng rng(31);
  const Dataset d = random_dataset(30, 2, rng);
  FitOptions fo;
  fo.n_restarts = 4;
  fo.seed = 3;
  const GPModel free_fit = fit_gp(d, kernels::KernelSpec::continuous(KernelFamily::SQE, 2), fo);
  CHECK(free_fit.kernel().lengthscales[0] < 1.5);

  VectorXd floor(2);
  floor << 2.0, 0.1;
  fo.min_lengthscale = floor;
  const GPModel ard = fit_gp(d, kernels::KernelSpec::continuous(KernelFamily::SQE, 2), fo);
  CHECK(ard.kernel().lengthscales[0] >= 2.0 * (1.0 - 1e-9));
  CHECK(ard.kernel().lengthscales[0] < 2.1);
  CHECK(ard.kernel().lengthscales[1] >= 0.1 * (1.0 - 1e-9));
  CHECK(ard.nlml() >= free_fit.nlml() - 1e-6);

  floor << 3.0, 2.0;
  fo.min_lengthscale = floor;
  const GPModel iso = fit_gp(d, kernels::KernelSpec::continuous(KernelFamily::SQE, 2, false), fo);
  CHECK(iso.kernel().lengthscales[0] >= 2.0 * (1.0 - 1e-9));
}

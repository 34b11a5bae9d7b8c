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
#include "hetbo/kernels.hpp"
#include "hetbo/random.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace hetbo;
using namespace hetbo::kernels;

namespace {

// Direct formulas, written independently of the library.
double reference_radial(KernelFamily f, double s, const VectorXd& a, const VectorXd& b, const VectorXd& ell,
                        double rq_alpha) {
  double r2 = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double l = ell.size() == 1 ? ell[0] : ell[i];
    r2 += (a[i] - b[i]) * (a[i] - b[i]) / (l * l);
  }
  const double r = std::sqrt(r2);
  switch (f) {
    case KernelFamily::SQE: return s * std::exp(-r2 / 2);
    case KernelFamily::Matern12: return s * std::exp(-r);
    case KernelFamily::Matern32: return s * (1 + std::sqrt(3.0) * r) * std::exp(-std::sqrt(3.0) * r);
    case KernelFamily::Matern52:
      return s * (1 + std::sqrt(5.0) * r + 5.0 * r2 / 3.0) * std::exp(-std::sqrt(5.0) * r);
    case KernelFamily::RQ: return s * std::pow(1 + r2 / (2 * rq_alpha), -rq_alpha);
    default: return NAN;
  }
}

MatrixXd random_binary(Index n, Index d, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  MatrixXd x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = coin(rng) ? 1.0 : 0.0;
  return x;
}

MatrixXd random_real(Index n, Index d, Rng& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  MatrixXd x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = u(rng);
  return x;
}

const KernelFamily kContinuous[] = {KernelFamily::SQE, KernelFamily::Matern12, KernelFamily::Matern32,
                                    KernelFamily::Matern52, KernelFamily::RQ};

}  // namespace

TEST_CASE("hand-evaluated kernel values") {
  VectorXd a(2), b(2);
  a << 0.3, -1.2;
  KernelSpec sqe = KernelSpec::continuous(KernelFamily::SQE, 1, false);
  CHECK(kernel_eval(sqe, a, a) == doctest::Approx(1.0).epsilon(1e-15));

  VectorXd ta(3), tb(3);
  ta << 1, 0, 1;
  tb << 1, 1, 0;
  CHECK(kernel_eval(KernelSpec::tanimoto(), ta, tb) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  KernelSpec m12 = KernelSpec::continuous(KernelFamily::Matern12, 1, false);
  VectorXd one(1), zero(1);
  one << 1.0;
  zero << 0.0;
  CHECK(kernel_eval(m12, one, zero) == doctest::Approx(0.36787944117144233).epsilon(1e-14));
}

TEST_CASE("continuous families agree with direct formulas") {
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (KernelFamily f : kContinuous) {
    for (bool ard : {false, true}) {
      KernelSpec k = KernelSpec::continuous(f, 3, ard);
      k.signal_variance = u(rng);
      for (Index i = 0; i < k.lengthscales.size(); ++i) k.lengthscales[i] = u(rng);
      k.rq_alpha = u(rng);
      const MatrixXd x = random_real(6, 3, rng);
      const MatrixXd km = kernel_matrix(k, Inputs::real(x));
      for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 6; ++j) {
          const double want = reference_radial(f, k.signal_variance, x.row(i).transpose(), x.row(j).transpose(),
                                               k.lengthscales, k.rq_alpha);
          CHECK(km(i, j) == doctest::Approx(want).epsilon(1e-12));
        }
    }
  }
}

TEST_CASE("icm with identity factor decouples tasks") {
  KernelSpec icm = KernelSpec::icm(KernelSpec::continuous(KernelFamily::SQE, 1, false), 2);
  icm.coregional_factor = MatrixXd::Identity(2, 2);
  MatrixXd x(2, 1);
  x << 0.5, 0.5;
  const Inputs in = Inputs::real(x).with_tasks({0, 1});
  const MatrixXd k = kernel_matrix(icm, in);
  CHECK(k(0, 1) == 0.0);
  CHECK(k(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("icm is the base kernel times the coregionalisation matrix") {
  Rng rng(5);
  KernelSpec base = KernelSpec::continuous(KernelFamily::Matern52, 2, true);
  base.lengthscales << 0.7, 1.9;
  KernelSpec icm = KernelSpec::icm(base, 3);
  icm.coregional_factor << 1.0, 0, 0, 0.4, 0.8, 0, -0.3, 0.2, 0.5;
  const MatrixXd b = icm.coregional_factor * icm.coregional_factor.transpose();
  const MatrixXd x = random_real(7, 2, rng);
  const std::vector<int> tasks = {0, 1, 2, 0, 2, 1, 1};
  const MatrixXd k = kernel_matrix(icm, Inputs::real(x).with_tasks(tasks));
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 7; ++j) {
      const double want = reference_radial(KernelFamily::Matern52, 1.0, x.row(i).transpose(), x.row(j).transpose(),
                                           base.lengthscales, 1.0) *
                          b(tasks[i], tasks[j]);
      CHECK(k(i, j) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("tanimoto gram matrix range") {
  Rng rng(3);
  KernelSpec t = KernelSpec::tanimoto(2.5);
  const MatrixXd x = random_binary(10, 16, rng);
  const MatrixXd k = kernel_matrix(t, Inputs::counts(x));
  for (Index i = 0; i < 10; ++i) {
    CHECK(k(i, i) == doctest::Approx(2.5));
    for (Index j = 0; j < 10; ++j) {
      CHECK(k(i, j) >= 0.0);
      CHECK(k(i, j) <= 2.5 + 1e-12);
    }
  }
}

TEST_CASE("rational quadratic tends to the squared exponential") {
  Rng rng(9);
  const MatrixXd x = random_real(12, 2, rng);
  KernelSpec rq = KernelSpec::continuous(KernelFamily::RQ, 2, false);
  rq.rq_alpha = 1e6;
  const KernelSpec sqe = KernelSpec::continuous(KernelFamily::SQE, 2, false);
  const MatrixXd diff = kernel_matrix(rq, Inputs::real(x)) - kernel_matrix(sqe, Inputs::real(x));
  CHECK(diff.cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("gram matrices are positive semi-definite") {
  Rng rng(21);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  auto check_psd = [](const MatrixXd& k) {
    const MatrixXd m = k + 1e-9 * MatrixXd::Identity(k.rows(), k.cols());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    return es.eigenvalues().minCoeff() >= 0.0;
  };
  for (int rep = 0; rep < 50; ++rep) {
    for (KernelFamily f : kContinuous) {
      KernelSpec k = KernelSpec::continuous(f, 2, true);
      k.lengthscales << u(rng), u(rng);
      CHECK(check_psd(kernel_matrix(k, Inputs::real(random_real(15, 2, rng)))));
    }
    CHECK(check_psd(kernel_matrix(KernelSpec::tanimoto(), Inputs::counts(random_binary(15, 12, rng)))));
    CHECK(check_psd(kernel_matrix(KernelSpec::scalar_product(), Inputs::counts(random_binary(15, 12, rng)))));
    std::vector<std::string> s;
    std::uniform_int_distribution<int> len(0, 9), ch(0, 3);
    for (int i = 0; i < 10; ++i) {
      std::string w;
      for (int c = len(rng); c > 0; --c) w.push_back("CNO("[ch(rng)]);
      s.push_back(w);
    }
    CHECK(check_psd(kernel_matrix(KernelSpec::string_ngram(3), Inputs::text(s))));
  }
}

TEST_CASE("n-gram counting") {
  const NGramCounts c = ngram_counts("CC", 2);
  CHECK(c.size() == 2);
  CHECK(c.at("C") == 2.0);
  CHECK(c.at("CC") == 1.0);
  CHECK(ngram_counts("", 3).empty());
  CHECK(kernel_eval(KernelSpec::string_ngram(3), "", "CCO") == 0.0);
  CHECK(kernel_eval(KernelSpec::string_ngram(3), "", "") == 0.0);
}

TEST_CASE("string kernel self-similarity matches a dictionary recount") {
  const std::string s = "c1ccccc1";
  std::map<std::string, int> counts;
  for (std::size_t len = 1; len <= 5; ++len)
    for (std::size_t i = 0; i + len <= s.size(); ++i) ++counts[s.substr(i, len)];
  double sum_sq = 0.0;
  for (const auto& [gram, n] : counts) sum_sq += double(n) * n;
  CHECK(kernel_eval(KernelSpec::string_ngram(5, 1.7), s, s) == doctest::Approx(1.7 * sum_sq).epsilon(1e-14));
}

TEST_CASE("kernel matrix gradients match finite differences") {
  Rng rng(4);
  const Inputs in = Inputs::real(random_real(5, 2, rng));
  for (KernelFamily f : kContinuous) {
    KernelSpec k = KernelSpec::continuous(f, 2, true);
    k.lengthscales << 0.8, 1.4;
    k.signal_variance = 1.3;
    k.rq_alpha = 0.7;
    const VectorXd theta = pack_parameters(k);
    const auto grads = kernel_matrix_gradients(k, in);
    REQUIRE(grads.size() == static_cast<std::size_t>(theta.size()));
    for (Index p = 0; p < theta.size(); ++p) {
      VectorXd hi = theta, lo = theta;
      hi[p] += 1e-6;
      lo[p] -= 1e-6;
      const MatrixXd fd = (kernel_matrix(unpack_parameters(k, hi), in) - kernel_matrix(unpack_parameters(k, lo), in)) / 2e-6;
      CHECK((fd - grads[p]).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("parameters round-trip through packing") {
  KernelSpec k = KernelSpec::continuous(KernelFamily::RQ, 3, true);
  k.lengthscales << 0.1, 2.0, 30.0;
  k.rq_alpha = 4.0;
  k.signal_variance = 0.25;
  const KernelSpec back = unpack_parameters(k, pack_parameters(k));
  CHECK(back.signal_variance == doctest::Approx(0.25));
  CHECK(back.lengthscales[2] == doctest::Approx(30.0));
  CHECK(back.rq_alpha == doctest::Approx(4.0));
  CHECK(parameter_names(k).size() == 5);
  CHECK(family_from_string(to_string(KernelFamily::Matern32)) == KernelFamily::Matern32);
}

TEST_CASE("incompatible inputs are rejected") {
  CHECK_THROWS_AS(check_compatible(KernelSpec::string_ngram(), Inputs::real(MatrixXd::Zero(2, 2))), InvalidInput);
  MatrixXd neg(1, 2);
  neg << -1.0, 1.0;
  CHECK_THROWS_AS(check_compatible(KernelSpec::tanimoto(), Inputs::counts(neg)), InvalidInput);
  CHECK_THROWS_AS(family_from_string("nope"), InvalidInput);
}

TEST_CASE("n-grams outside the frozen vocabulary contribute nothing") {
  KernelSpec k = KernelSpec::string_ngram(2);
  k.vocabulary = std::make_shared<const NGramVocabulary>(NGramVocabulary::build({"CCO", "CO"}, 2));
  CHECK(kernel_eval(k, "NN", "NN") == 0.0);
  // CCO against CNO: shared in-vocabulary grams are C (2·1) and O (1·1).
  CHECK(kernel_eval(k, "CCO", "CNO") == doctest::Approx(3.0));
  CHECK(kernel_eval(k, "CCO", "CCO") == doctest::Approx(kernel_eval(KernelSpec::string_ngram(2), "CCO", "CCO")));
}

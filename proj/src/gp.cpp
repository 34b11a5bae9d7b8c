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

#include "hetbo/gp.hpp"

#include "hetbo/errors.hpp"
#include "hetbo/random.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace hetbo::gp {

namespace {

using kernels::KernelFamily;

constexpr double kLog2Pi = 1.8378770664093453;

// Fixes the string-kernel vocabulary to the training strings.
KernelSpec freeze_vocabulary(KernelSpec spec, const Inputs& inputs) {
  if (spec.family == KernelFamily::StringNGram && !spec.vocabulary) {
    spec.vocabulary = std::make_shared<const kernels::NGramVocabulary>(
        kernels::NGramVocabulary::build(inputs.strings, spec.ngram_order));
  } else if (spec.family == KernelFamily::ICM && spec.base && spec.base->family == KernelFamily::StringNGram &&
             !spec.base->vocabulary) {
    spec.base = std::make_shared<const KernelSpec>(freeze_vocabulary(*spec.base, inputs));
  }
  return spec;
}

VectorXd standardised_point_noise(const Dataset& data, const StandardisationStats& stats) {
  if (!data.noise_std) return VectorXd::Zero(data.size());
  return (data.noise_std->array() / stats.std).square().matrix();
}

struct Evaluation {
  double value = std::numeric_limits<double>::infinity();
  MatrixXd chol;
  VectorXd alpha;
  double jitter = 0.0;
};

// NLML at the given hyperparameters; value is +inf if K cannot be factorised.
Evaluation evaluate(const MatrixXd& k, const VectorXd& diag_noise, const VectorXd& y, double jitter) {
  Evaluation ev;
  MatrixXd a = k;
  a.diagonal() += diag_noise;
  auto fac = factorise(a, jitter);
  if (!fac) return ev;
  ev.chol = std::move(fac->lower);
  ev.jitter = fac->jitter;
  const auto l = ev.chol.triangularView<Eigen::Lower>();
  ev.alpha = ev.chol.transpose().triangularView<Eigen::Upper>().solve(l.solve(y));
  const double logdet = 2.0 * ev.chol.diagonal().array().log().sum();
  ev.value = 0.5 * y.dot(ev.alpha) + 0.5 * logdet + 0.5 * static_cast<double>(y.size()) * kLog2Pi;
  return ev;
}

// ∂NLML/∂θ for each dK/dθ, given the factorisation.
VectorXd gradient_from(const Evaluation& ev, const std::vector<MatrixXd>& dk, double noise_variance,
                       bool with_noise) {
  const Index n = ev.alpha.size();
  const auto l = ev.chol.triangularView<Eigen::Lower>();
  MatrixXd linv = MatrixXd::Identity(n, n);
  l.solveInPlace(linv);
  MatrixXd w = MatrixXd::Zero(n, n);
  w.selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());
  w.triangularView<Eigen::StrictlyUpper>() = w.transpose();
  const MatrixXd g = ev.alpha * ev.alpha.transpose() - w;
  VectorXd grad(static_cast<Index>(dk.size()) + (with_noise ? 1 : 0));
  for (std::size_t p = 0; p < dk.size(); ++p) grad[static_cast<Index>(p)] = -0.5 * (g.array() * dk[p].array()).sum();
  if (with_noise) grad[grad.size() - 1] = -0.5 * noise_variance * g.trace();
  return grad;
}

void check_prediction_inputs(const GPModel& model, const Inputs& test) {
  const Inputs& train = model.data().inputs;
  if (test.kind != train.kind) throw InvalidInput("test inputs are of a different kind than the training inputs");
  if (test.kind != kernels::InputKind::String && test.dimension() != train.dimension()) {
    throw InvalidInput("test input dimension " + std::to_string(test.dimension()) + " does not match training dimension " +
                       std::to_string(train.dimension()));
  }
  if (test.multitask() != train.multitask()) throw InvalidInput("task tags must be present on both training and test inputs");
}

}  // namespace

// --- standardisation / dataset ----------------------------------------------------

StandardisationStats StandardisationStats::from_targets(const VectorXd& y) {
  if (y.size() == 0) throw InvalidInput("cannot standardise an empty target vector");
  StandardisationStats s;
  s.mean = y.mean();
  s.std = std::sqrt((y.array() - s.mean).square().mean());
  if (!(s.std > 0.0) || !std::isfinite(s.std)) throw InvalidInput("targets have zero variance; cannot standardise");
  return s;
}

void Dataset::validate() const {
  if (targets.size() == 0) throw InvalidInput("dataset is empty");
  if (inputs.size() != targets.size()) {
    throw InvalidInput("dataset has " + std::to_string(inputs.size()) + " inputs but " + std::to_string(targets.size()) +
                       " targets");
  }
  if (!targets.allFinite()) throw InvalidInput("dataset contains non-finite targets");
  if (inputs.kind != kernels::InputKind::String && !inputs.points.allFinite()) {
    throw InvalidInput("dataset contains non-finite inputs");
  }
  if (noise_std) {
    if (noise_std->size() != targets.size()) throw InvalidInput("noise_std length does not match targets");
    if (!noise_std->allFinite() || (noise_std->array() < 0.0).any()) throw InvalidInput("noise_std must be finite and non-negative");
  }
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Dataset out;
  out.inputs = inputs.subset(rows);
  out.targets.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out.targets[static_cast<Index>(i)] = targets[rows[i]];
  if (noise_std) {
    VectorXd ns(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) ns[static_cast<Index>(i)] = (*noise_std)[rows[i]];
    out.noise_std = std::move(ns);
  }
  return out;
}

// --- numerics ----------------------------------------------------------------------

std::optional<Factorisation> factorise(const MatrixXd& a, double jitter, double max_jitter) {
  double j = jitter;
  const Index n = a.rows();
  while (true) {
    MatrixXd m = a;
    m.diagonal().array() += j;
    Eigen::LLT<MatrixXd> llt(m);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite() &&
        (llt.matrixLLT().diagonal().array() > 0.0).all()) {
      Factorisation f;
      f.lower = MatrixXd(llt.matrixL());
      f.jitter = j;
      return f;
    }
    const double next = j == 0.0 ? 1e-12 : j * 10.0;
    if (next > max_jitter * (1.0 + 1e-12) || n == 0) return std::nullopt;
    j = std::min(next, max_jitter);
  }
}

double condition_estimate(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// --- model -------------------------------------------------------------------------

GPModel GPModel::assemble(Dataset data, KernelSpec kernel, double noise_variance, double jitter, bool standardise,
                          bool noise_fixed) {
  data.validate();
  if (noise_variance < 0.0) throw InvalidInput("noise variance must be non-negative");
  kernel = freeze_vocabulary(std::move(kernel), data.inputs);
  kernels::check_compatible(kernel, data.inputs);

  GPModel m;
  m.stats_ = standardise ? StandardisationStats::from_targets(data.targets) : StandardisationStats{};
  m.y_ = m.stats_.apply(data.targets);
  m.point_noise_ = standardised_point_noise(data, m.stats_);
  m.kernel_ = std::move(kernel);
  m.noise_variance_ = noise_variance;
  m.noise_fixed_ = noise_fixed;

  const MatrixXd k = kernels::kernel_matrix(m.kernel_, data.inputs);
  const VectorXd diag = m.point_noise_.array() + noise_variance;
  Evaluation ev = evaluate(k, diag, m.y_, jitter);
  if (!std::isfinite(ev.value)) {
    MatrixXd a = k;
    a.diagonal() += diag;
    std::ostringstream os;
    os << "Cholesky factorisation failed for kernel " << m.kernel_.describe() << " after jitter escalation to 1e-3"
       << " (condition estimate " << condition_estimate(a) << ")";
    throw NumericalError(os.str());
  }
  m.chol_ = std::move(ev.chol);
  m.alpha_ = std::move(ev.alpha);
  m.jitter_ = ev.jitter;
  m.nlml_ = ev.value;
  m.data_ = std::move(data);
  return m;
}

GPModel fit_gp(const Dataset& data, const KernelSpec& kernel_in, const FitOptions& options) {
  data.validate();
  if (options.n_restarts < 1) throw InvalidInput("n_restarts must be at least 1");
  const KernelSpec kernel = freeze_vocabulary(kernel_in, data.inputs);
  kernels::check_compatible(kernel, data.inputs);

  const StandardisationStats stats =
      options.standardise ? StandardisationStats::from_targets(data.targets) : StandardisationStats{};
  const VectorXd y = stats.apply(data.targets);
  const VectorXd point_noise = standardised_point_noise(data, stats);
  const bool free_noise = !options.fix_noise;

  const VectorXd theta_kernel = kernels::pack_parameters(kernel);
  const auto names = kernels::parameter_names(kernel);
  auto [lo_k, hi_k] = kernels::parameter_bounds(kernel);
  const Index nk = theta_kernel.size();
  const Index np = nk + (free_noise ? 1 : 0);
  VectorXd lo(np), hi(np), start(np);
  lo.head(nk) = lo_k;
  hi.head(nk) = hi_k;
  start.head(nk) = theta_kernel;
  if (options.min_lengthscale && options.min_lengthscale->size() > 0) {
    const VectorXd& floor = *options.min_lengthscale;
    const bool isotropic = kernel.family == kernels::KernelFamily::ICM ? kernel.base->lengthscales.size() == 1
                                                                       : kernel.lengthscales.size() == 1;
    for (Index p = 0; p < nk; ++p) {
      const std::string& name = names[static_cast<std::size_t>(p)];
      if (name.rfind("log_lengthscale_", 0) != 0) continue;
      const Index d = std::stoi(name.substr(16));
      const double f = (isotropic || floor.size() == 1) ? floor.minCoeff() : floor[std::min(d, floor.size() - 1)];
      if (f > 0.0) lo[p] = std::min(std::max(lo[p], std::log(f)), hi[p]);
    }
  }
  if (free_noise) {
    lo[nk] = std::log(options.min_noise_variance);
    hi[nk] = std::log(options.max_noise_variance);
    start[nk] = std::log(std::max(options.noise_variance, options.min_noise_variance));
  }

  auto objective = [&](const VectorXd& theta, VectorXd& grad) -> double {
    const KernelSpec spec = kernels::unpack_parameters(kernel, theta.head(nk));
    const double noise = free_noise ? std::exp(theta[nk]) : options.noise_variance;
    const MatrixXd k = kernels::kernel_matrix(spec, data.inputs);
    const Evaluation ev = evaluate(k, point_noise.array() + noise, y, options.jitter);
    if (!std::isfinite(ev.value)) {
      grad.setZero(theta.size());
      return ev.value;
    }
    grad = gradient_from(ev, kernels::kernel_matrix_gradients(spec, data.inputs), noise, free_noise);
    return ev.value;
  };

  Rng rng = make_rng(options.seed, 0x6b1f);
  std::uniform_real_distribution<double> log_uniform(std::log(1e-2), std::log(1e2));
  std::normal_distribution<double> perturb(0.0, 0.1);

  optimize::Result best;
  best.value = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.n_restarts; ++r) {
    VectorXd x0 = start;
    if (r > 0) {
      for (Index p = 0; p < nk; ++p) {
        const std::string& name = names[static_cast<std::size_t>(p)];
        if (name.rfind("log_", 0) == 0) {
          x0[p] = log_uniform(rng);
        } else {
          // ICM factor entry "L_i_j": 0.5·I plus a small perturbation.
          const bool diagonal = name.substr(name.find('_') + 1, name.rfind('_') - name.find('_') - 1) ==
                                name.substr(name.rfind('_') + 1);
          x0[p] = (diagonal ? 0.5 : 0.0) + perturb(rng);
        }
      }
      if (free_noise) x0[nk] = log_uniform(rng);
    }
    x0 = x0.cwiseMax(lo).cwiseMin(hi);
    optimize::Result res = optimize::minimize_bounded(objective, x0, lo, hi, options.optimizer);
    if (res.value < best.value) best = std::move(res);
  }
  if (!std::isfinite(best.value)) {
    const MatrixXd k = kernels::kernel_matrix(kernel, data.inputs);
    std::ostringstream os;
    os << "Cholesky factorisation failed at every restart for kernel " << kernel.describe()
       << " (condition estimate at the start point " << condition_estimate(k) << ")";
    throw NumericalError(os.str());
  }
  const KernelSpec fitted = kernels::unpack_parameters(kernel, best.x.head(nk));
  const double noise = free_noise ? std::exp(best.x[nk]) : options.noise_variance;
  return GPModel::assemble(data, fitted, noise, options.jitter, options.standardise, options.fix_noise);
}

double nlml(const GPModel& model) { return model.nlml(); }

std::vector<std::string> gradient_parameter_names(const GPModel& model) {
  auto names = kernels::parameter_names(model.kernel());
  names.push_back("log_noise_variance");
  return names;
}

VectorXd nlml_gradient(const GPModel& model) {
  Evaluation ev;
  ev.chol = model.chol();
  ev.alpha = model.alpha();
  ev.value = model.nlml();
  return gradient_from(ev, kernels::kernel_matrix_gradients(model.kernel(), model.data().inputs),
                       model.noise_variance(), true);
}

VectorXd nlml_gradient(const GPModel& model, const std::vector<std::string>& names) {
  const auto all = gradient_parameter_names(model);
  std::vector<Index> picks;
  for (const auto& n : names) {
    auto it = std::find(all.begin(), all.end(), n);
    if (it == all.end()) {
      throw UnsupportedGradient("no differentiable hyperparameter '" + n + "' on kernel " + model.kernel().describe());
    }
    picks.push_back(static_cast<Index>(it - all.begin()));
  }
  const VectorXd full = nlml_gradient(model);
  VectorXd out(static_cast<Index>(picks.size()));
  for (std::size_t i = 0; i < picks.size(); ++i) out[static_cast<Index>(i)] = full[picks[i]];
  return out;
}

// --- prediction ----------------------------------------------------------------------

PosteriorPrediction predict(const GPModel& model, const Inputs& test, const PredictOptions& options) {
  check_prediction_inputs(model, test);
  const KernelSpec& spec = model.kernel();
  const MatrixXd ks = kernels::kernel_matrix(spec, test, model.data().inputs);  // n_test × n
  const auto l = model.chol().triangularView<Eigen::Lower>();
  const MatrixXd v = l.solve(ks.transpose());  // n × n_test

  PosteriorPrediction out;
  out.mean = ks * model.alpha();
  const double noise = options.include_noise ? model.noise_variance() : 0.0;
  out.includes_observation_noise = options.include_noise;
  if (options.full_covariance) {
    MatrixXd cov = kernels::kernel_matrix(spec, test) - v.transpose() * v;
    cov = 0.5 * (cov + cov.transpose());
    cov.diagonal() = cov.diagonal().cwiseMax(0.0);
    cov.diagonal().array() += noise;
    out.variance = cov.diagonal();
    out.covariance = std::move(cov);
  } else {
    out.variance = (kernels::kernel_diagonal(spec, test) - v.colwise().squaredNorm().transpose()).cwiseMax(0.0);
    out.variance.array() += noise;
  }
  if (!options.standardised) {
    const auto& s = model.stats();
    out.mean = s.invert(out.mean);
    out.variance *= s.std * s.std;
    if (out.covariance) *out.covariance *= s.std * s.std;
  }
  return out;
}

MatrixXd sample_posterior(const GPModel& model, const Inputs& test, int n_samples, std::uint64_t seed,
                          bool include_noise) {
  if (n_samples < 1) throw InvalidInput("n_samples must be at least 1");
  PredictOptions po;
  po.full_covariance = true;
  po.include_noise = include_noise;
  po.standardised = true;
  const PosteriorPrediction pred = predict(model, test, po);
  auto fac = factorise(*pred.covariance, 0.0);
  if (!fac) {
    throw NumericalError("posterior covariance is not positive definite after jitter escalation (condition estimate " +
                         std::to_string(condition_estimate(*pred.covariance)) + ")");
  }
  const Index m = test.size();
  Rng rng = make_rng(seed, 0x5a3b);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd z(m, n_samples);
  for (Index s = 0; s < n_samples; ++s) {
    for (Index i = 0; i < m; ++i) z(i, s) = normal(rng);
  }
  MatrixXd draws = fac->lower.triangularView<Eigen::Lower>() * z;
  draws.colwise() += pred.mean;
  const auto& st = model.stats();
  return ((draws.transpose().array() * st.std) + st.mean).matrix();
}

}  // namespace hetbo::gp

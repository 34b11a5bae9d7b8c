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

#include "hetbo/hetgp.hpp"

#include "hetbo/errors.hpp"
#include "hetbo/random.hpp"

#include <cmath>
#include <string>

namespace hetbo::hetgp {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

constexpr double kVarianceFloor = 1e-12;

std::uint64_t point_key(const Inputs& inputs, Index i, double target) {
  std::uint64_t h = hash_bytes(&target, sizeof target);
  if (inputs.kind == kernels::InputKind::String) {
    const auto& s = inputs.strings[static_cast<std::size_t>(i)];
    h = hash_bytes(s.data(), s.size(), h);
  } else {
    for (Index c = 0; c < inputs.points.cols(); ++c) {
      const double v = inputs.points(i, c);
      h = hash_bytes(&v, sizeof v, h);
    }
  }
  if (inputs.multitask()) {
    const int task = inputs.tasks[static_cast<std::size_t>(i)];
    h = hash_bytes(&task, sizeof task, h);
  }
  return h;
}

template <typename F>
auto with_iteration(int iteration, F&& f) {
  try {
    return f();
  } catch (const NumericalError& e) {
    throw NumericalError("MLHGP iteration " + std::to_string(iteration) + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw InvalidInput("MLHGP iteration " + std::to_string(iteration) + ": " + e.what());
  }
}

}  // namespace

VectorXd empirical_noise_levels(const GPModel& g, const Dataset& data, int s, std::uint64_t seed) {
  if (s < 2) throw InvalidInput("sample size for the noise estimator must be at least 2");
  data.validate();
  gp::PredictOptions po;
  po.standardised = true;
  po.include_noise = true;
  const gp::PosteriorPrediction pred = gp::predict(g, data.inputs, po);
  const VectorXd t = g.stats().apply(data.targets);
  VectorXd point_noise = VectorXd::Zero(data.size());
  if (data.noise_std) point_noise = (data.noise_std->array() / g.stats().std).square().matrix();

  VectorXd z(data.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < data.size(); ++i) {
    const double sd = std::sqrt(pred.variance[i] + point_noise[i]);
    Rng rng = make_rng(seed, point_key(data.inputs, i, t[i]));
    double acc = 0.0;
    for (int j = 0; j < s; ++j) {
      const double d = t[i] - (pred.mean[i] + sd * normal(rng));
      acc += 0.5 * d * d;
    }
    z[i] = std::log(std::max(acc / s, kVarianceFloor));
  }
  return z;
}

MLHGPModel fit_mlhgp(const Dataset& data, const KernelSpec& kernel_latent, const KernelSpec& kernel_noise,
                     const MLHGPOptions& options) {
  data.validate();
  if (options.max_iterations < 0) throw InvalidInput("max_iterations must be non-negative");
  if (!(options.noise_lengthscale_fraction >= 0.0)) throw InvalidInput("noise_lengthscale_fraction must be non-negative");
  if (options.sample_size < 2) throw InvalidInput("sample_size must be at least 2");

  const StandardisationStats stats = StandardisationStats::from_targets(data.targets);
  Dataset base;
  base.inputs = data.inputs;
  base.targets = stats.apply(data.targets);

  const int refits = options.refit_restarts.value_or(options.n_restarts);
  gp::FitOptions latent;
  latent.n_restarts = options.n_restarts;
  latent.jitter = options.jitter;
  latent.standardise = false;
  latent.optimizer = options.optimizer;
  latent.seed = split_seed(options.seed, 0);

  GPModel current = with_iteration(0, [&] { return gp::fit_gp(base, kernel_latent, latent); });
  std::vector<double> history{current.nlml()};
  std::optional<GPModel> noise_model;
  KernelSpec noise_kernel = kernel_noise;
  double noise_start = options.noise_model_initial_noise;

  std::optional<VectorXd> noise_floor;
  if (options.noise_lengthscale_fraction > 0.0 && data.inputs.kind != kernels::InputKind::String &&
      data.inputs.points.rows() > 0) {
    const Eigen::MatrixXd& x = data.inputs.points;
    noise_floor = (options.noise_lengthscale_fraction * (x.colwise().maxCoeff() - x.colwise().minCoeff()))
                      .transpose()
                      .cwiseMax(1e-5);
  }

  int iterations = 0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const std::uint64_t it_seed = split_seed(options.seed, static_cast<std::uint64_t>(it));
    Dataset noise_data;
    noise_data.inputs = base.inputs;
    noise_data.targets = empirical_noise_levels(current, current.data(), options.sample_size, split_seed(it_seed, 1));

    gp::FitOptions nf;
    nf.n_restarts = it == 1 ? options.n_restarts : refits;
    nf.noise_variance = noise_start;
    nf.jitter = options.jitter;
    nf.optimizer = options.optimizer;
    nf.seed = split_seed(it_seed, 2);
    nf.min_lengthscale = noise_floor;
    // A spread-free z (e.g. every estimate floored) cannot be standardised.
    const double spread = (noise_data.targets.array() - noise_data.targets.mean()).abs().maxCoeff();
    nf.standardise = spread > 0.0;
    noise_model = with_iteration(it, [&] { return gp::fit_gp(noise_data, noise_kernel, nf); });
    noise_kernel = noise_model->kernel();
    noise_start = noise_model->noise_variance();

    gp::PredictOptions po;
    const VectorXd log_r = gp::predict(*noise_model, base.inputs, po).mean;
    Dataset latent_data = base;
    latent_data.noise_std = (0.5 * log_r.array()).exp().matrix();

    gp::FitOptions lf = latent;
    lf.n_restarts = refits;
    lf.fix_noise = true;
    lf.noise_variance = 0.0;
    lf.seed = split_seed(it_seed, 3);
    const KernelSpec warm = current.kernel();
    current = with_iteration(it, [&] { return gp::fit_gp(latent_data, warm, lf); });
    history.push_back(current.nlml());
    iterations = it;

    if (options.tolerance) {
      const double prev = history[history.size() - 2];
      if (std::abs(current.nlml() - prev) <= *options.tolerance * std::max(1.0, std::abs(prev))) break;
    }
  }

  MLHGPModel m{current, noise_model, 0.0, stats, iterations, options.sample_size, options.seed, iterations == 0,
               std::move(history)};
  if (!noise_model) m.constant_log_noise = std::log(std::max(current.noise_variance(), kVarianceFloor));
  return m;
}

HetPrediction predict_het(const MLHGPModel& model, const Inputs& test, bool standardised) {
  gp::PredictOptions po;
  po.standardised = true;
  const gp::PosteriorPrediction latent = gp::predict(model.g_latent, test, po);
  HetPrediction out;
  out.mean = latent.mean;
  out.epistemic = latent.variance;
  if (model.g_noise) {
    out.aleatoric = gp::predict(*model.g_noise, test).mean.array().exp().matrix();
  } else {
    out.aleatoric = VectorXd::Constant(test.size(), std::exp(model.constant_log_noise));
  }
  if (!standardised) {
    const double v = model.stats.std * model.stats.std;
    out.mean = model.stats.invert(out.mean);
    out.epistemic *= v;
    out.aleatoric *= v;
  }
  return out;
}

}  // namespace hetbo::hetgp

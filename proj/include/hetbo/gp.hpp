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

#pragma once

#include "hetbo/kernels.hpp"
#include "hetbo/optimize.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hetbo::gp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using kernels::Inputs;
using kernels::KernelSpec;

struct StandardisationStats {
  double mean = 0.0;
  double std = 1.0;

  /// Empirical mean and (population) standard deviation. Throws InvalidInput
  /// when the targets have zero spread.
  static StandardisationStats from_targets(const VectorXd& y);

  double apply(double y) const { return (y - mean) / std; }
  double invert(double z) const { return z * std + mean; }
  VectorXd apply(const VectorXd& y) const { return ((y.array() - mean) / std).matrix(); }
  VectorXd invert(const VectorXd& z) const { return (z.array() * std + mean).matrix(); }
};

struct Dataset {
  Inputs inputs;
  VectorXd targets;
  std::optional<VectorXd> noise_std;  // known per-point noise, output units

  Index size() const { return targets.size(); }
  /// Throws InvalidInput on length mismatches or non-finite values.
  void validate() const;
  Dataset subset(std::span<const Index> rows) const;
};

struct FitOptions {
  int n_restarts = 20;
  bool fix_noise = false;
  double noise_variance = 1.0;  // starting value, or the held value when fix_noise
  double min_noise_variance = 1e-6;
  double max_noise_variance = 1e3;
  double jitter = 1e-6;
  std::uint64_t seed = 0;
  bool standardise = true;
  /// Lower bound on every lengthscale, per input dimension (input units). A
  /// single value applies to all dimensions; isotropic kernels use the smallest.
  std::optional<VectorXd> min_lengthscale;
  optimize::Options optimizer = {};
};

/// An exact GP conditioned on its training data. Immutable: any change of
/// hyperparameters means assembling a new model.
class GPModel {
 public:
  /// Conditions a GP with explicit hyperparameters (no optimisation).
  /// `noise_variance` is σ_y² in standardised units. Jitter escalates ×10 from
  /// `jitter` up to 1e-3 if the Cholesky factorisation fails.
  static GPModel assemble(Dataset data, KernelSpec kernel, double noise_variance, double jitter = 1e-6,
                          bool standardise = true, bool noise_fixed = true);

  const KernelSpec& kernel() const { return kernel_; }
  double noise_variance() const { return noise_variance_; }
  bool noise_fixed() const { return noise_fixed_; }
  double jitter() const { return jitter_; }
  double prior_mean() const { return 0.0; }
  const Dataset& data() const { return data_; }
  const StandardisationStats& stats() const { return stats_; }
  const VectorXd& standardised_targets() const { return y_; }
  /// Known per-point noise variances in standardised units (zeros if none).
  const VectorXd& point_noise() const { return point_noise_; }
  const MatrixXd& chol() const { return chol_; }
  const VectorXd& alpha() const { return alpha_; }
  double nlml() const { return nlml_; }

 private:
  GPModel() = default;

  KernelSpec kernel_;
  double noise_variance_ = 0.0;
  bool noise_fixed_ = true;
  double jitter_ = 0.0;
  Dataset data_;
  StandardisationStats stats_;
  VectorXd y_;
  VectorXd point_noise_;
  MatrixXd chol_;
  VectorXd alpha_;
  double nlml_ = 0.0;
};

/// Maximum-marginal-likelihood fit: best of `n_restarts` bounded quasi-Newton
/// runs over log-transformed hyperparameters. The first run starts at the
/// supplied kernel (and noise) values; the rest are drawn log-uniformly from
/// [1e-2, 1e2].
GPModel fit_gp(const Dataset& data, const KernelSpec& kernel, const FitOptions& options = {});

/// Negative log marginal likelihood in standardised units.
double nlml(const GPModel& model);

/// Gradient names: the kernel's packed parameters followed by
/// "log_noise_variance".
std::vector<std::string> gradient_parameter_names(const GPModel& model);
VectorXd nlml_gradient(const GPModel& model);
/// Subset of the gradient; throws UnsupportedGradient for a name that is not a
/// differentiable hyperparameter of this model.
VectorXd nlml_gradient(const GPModel& model, const std::vector<std::string>& names);

struct PredictOptions {
  bool full_covariance = false;
  bool include_noise = false;  // adds σ_y² to the variances
  bool standardised = false;   // report in the model's standardised units
};

struct PosteriorPrediction {
  VectorXd mean;
  VectorXd variance;
  std::optional<MatrixXd> covariance;
  bool includes_observation_noise = false;
};

PosteriorPrediction predict(const GPModel& model, const Inputs& test, const PredictOptions& options = {});

/// n_samples × n_test draws from the joint posterior (output units).
MatrixXd sample_posterior(const GPModel& model, const Inputs& test, int n_samples, std::uint64_t seed,
                          bool include_noise = false);

/// Lower Cholesky factor of `a`, adding jitter·I escalated ×10 from `jitter`
/// to `max_jitter` until it succeeds. Returns nullopt on failure.
struct Factorisation {
  MatrixXd lower;
  double jitter = 0.0;
};
std::optional<Factorisation> factorise(const MatrixXd& a, double jitter, double max_jitter = 1e-3);

/// λ_max / λ_min of a symmetric matrix (infinite when λ_min ≤ 0).
double condition_estimate(const MatrixXd& a);

}  // namespace hetbo::gp

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

#include "hetbo/gp.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hetbo::hetgp {

using gp::Dataset;
using gp::GPModel;
using gp::StandardisationStats;
using kernels::Inputs;
using kernels::KernelSpec;

struct MLHGPOptions {
  int max_iterations = 10;
  int sample_size = 100;
  std::uint64_t seed = 0;
  int n_restarts = 20;
  /// Restarts for the refits inside the loop; each also warm-starts from the
  /// previous iterate. Defaults to n_restarts when unset.
  std::optional<int> refit_restarts;
  /// Stop early when the relative change of the latent NLML drops below this.
  std::optional<double> tolerance;
  double noise_model_initial_noise = 1.0;
  /// The noise GP's lengthscales are kept above this fraction of each input
  /// dimension's range; 0 disables the floor.
  double noise_lengthscale_fraction = 0.1;
  double jitter = 1e-6;
  optimize::Options optimizer = {};
};

/// Latent GP (fit on standardised targets with per-point noise r_i) plus a GP
/// on the log empirical noise levels.
struct MLHGPModel {
  GPModel g_latent;
  std::optional<GPModel> g_noise;  // empty when no iteration ran
  double constant_log_noise = 0.0;  // used when g_noise is empty
  StandardisationStats stats;
  int iterations_run = 0;
  int sample_size = 100;
  std::uint64_t seed = 0;
  bool degenerate = false;
  std::vector<double> nlml_history;  // latent NLML after each stage
};

/// z_i = log((1/s)·Σ_j ½(t_i − t_i^j)²), t_i^j drawn from the predictive of the
/// observed targets at x_i (observation noise included). Targets and z are in
/// the model's standardised units. Each point has its own random stream keyed
/// by its content, so the result does not depend on the training-set order.
Eigen::VectorXd empirical_noise_levels(const GPModel& g, const Dataset& data, int s, std::uint64_t seed);

MLHGPModel fit_mlhgp(const Dataset& data, const KernelSpec& kernel_latent, const KernelSpec& kernel_noise,
                     const MLHGPOptions& options = {});

struct HetPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd epistemic;  // var[t], excluding observation noise
  Eigen::VectorXd aleatoric;  // r(x)
};

/// Output units unless `standardised`.
HetPrediction predict_het(const MLHGPModel& model, const Inputs& test, bool standardised = false);

}  // namespace hetbo::hetgp

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

namespace hetbo::metrics {

struct MetricsReport {
  double rmse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  double nlpd = 0.0;
  /// Set when a zero predictive variance makes the NLPD infinite.
  bool nlpd_infinite = false;
  Eigen::Index n_test = 0;
  std::uint64_t split_seed = 0;
};

/// NLPD = (1/n)Σ −log N(y_i | μ_i, v_i) with the variances as given (pass a
/// prediction that includes observation noise). R² is NaN for constant truth.
MetricsReport compute_metrics(const Eigen::VectorXd& mean, const Eigen::VectorXd& variance,
                              const Eigen::VectorXd& truth);
MetricsReport compute_metrics(const gp::PosteriorPrediction& prediction, const Eigen::VectorXd& truth);

}  // namespace hetbo::metrics

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

#include "hetbo/metrics.hpp"

#include "hetbo/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace hetbo::metrics {

MetricsReport compute_metrics(const Eigen::VectorXd& mean, const Eigen::VectorXd& variance,
                              const Eigen::VectorXd& truth) {
  const Eigen::Index n = truth.size();
  if (n == 0) throw InvalidInput("metrics need at least one test point");
  if (mean.size() != n || variance.size() != n) throw InvalidInput("metrics: prediction and truth differ in length");
  const Eigen::VectorXd res = truth - mean;

  MetricsReport m;
  m.n_test = n;
  m.rmse = std::sqrt(res.squaredNorm() / static_cast<double>(n));
  m.mae = res.cwiseAbs().mean();
  const double ss_tot = (truth.array() - truth.mean()).square().sum();
  m.r2 = ss_tot > 0.0 ? 1.0 - res.squaredNorm() / ss_tot : std::numeric_limits<double>::quiet_NaN();

  double total = 0.0;
  bool degenerate = false;
  bool miss = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = variance[i];
    if (!(v > 0.0)) {
      degenerate = true;
      miss = miss || res[i] != 0.0;
      continue;
    }
    total += 0.5 * std::log(2.0 * std::numbers::pi * v) + 0.5 * res[i] * res[i] / v;
  }
  if (degenerate) {
    m.nlpd_infinite = true;
    m.nlpd = miss ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  } else {
    m.nlpd = total / static_cast<double>(n);
  }
  return m;
}

MetricsReport compute_metrics(const gp::PosteriorPrediction& prediction, const Eigen::VectorXd& truth) {
  return compute_metrics(prediction.mean, prediction.variance, truth);
}

}  // namespace hetbo::metrics

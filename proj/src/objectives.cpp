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

#include "hetbo/objectives.hpp"

#include "hetbo/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace hetbo::objectives {

namespace {

using std::numbers::pi;

double sin_f(const VectorXd& x) { return std::sin(x[0]) + 0.2 * x[0] + 3.0; }
double sin_g(const VectorXd& x) { return 0.5 * x[0]; }

double branin_f(const VectorXd& x) {
  const double a = 15.0 * x[0] - 5.0;
  const double b = 15.0 * x[1];
  const double q = b - 5.1 * a * a / (4.0 * pi * pi) + 5.0 * a / pi - 6.0;
  return (q * q + (10.0 - 10.0 / (8.0 * pi)) * std::cos(a) - 44.81) / 51.95;
}
double branin_g(const VectorXd& x) { return 15.0 - 8.0 * x[0] + 8.0 * x[1] * x[1]; }

double hosaki_f(const VectorXd& x) {
  const double a = x[0];
  const double b = x[1];
  const double poly = 1.0 - 8.0 * a + 7.0 * a * a - 7.0 / 3.0 * a * a * a + 0.25 * a * a * a * a;
  return (poly * b * b * std::exp(-b) - 0.817) / 0.573;
}
double hosaki_g(const VectorXd& x) {
  return 50.0 / ((x[0] - 3.5) * (x[0] - 3.5) + 2.5) / ((x[1] - 2.0) * (x[1] - 2.0) + 2.5);
}

double gprice_f(const VectorXd& x) {
  const double a = 4.0 * x[0] - 2.0;
  const double b = 4.0 * x[1] - 2.0;
  const double p = 1.0 + (a + b + 1.0) * (a + b + 1.0) * (19.0 - 14.0 * a + 3.0 * a * a - 14.0 * b + 6.0 * a * b + 3.0 * b * b);
  const double q = 30.0 + (2.0 * a - 3.0 * b) * (2.0 * a - 3.0 * b) *
                              (18.0 - 32.0 * a + 12.0 * a * a + 48.0 * b - 36.0 * a * b + 27.0 * b * b);
  return (std::log(p * q) - 8.693) / 2.427;
}
double gprice_g(const VectorXd& x) {
  return 1.5 / ((x[0] - 0.5) * (x[0] - 0.5) + 0.2) / ((x[1] - 0.3) * (x[1] - 0.3) + 0.3);
}

}  // namespace

NoiseSpec NoiseSpec::parse(std::string_view text) {
  NoiseSpec s;
  if (text == "off") {
    s.mode = NoiseMode::Off;
  } else if (text == "het") {
    s.mode = NoiseMode::Heteroscedastic;
  } else if (text.starts_with("homo:")) {
    s.mode = NoiseMode::Homoscedastic;
    const std::string value(text.substr(5));
    std::size_t used = 0;
    try {
      s.sigma = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty() || !(s.sigma >= 0.0)) {
      throw InvalidInput("invalid homoscedastic noise level '" + value + "'");
    }
  } else {
    throw InvalidInput("unknown noise mode '" + std::string(text) + "' (expected off, homo:<sigma> or het)");
  }
  return s;
}

std::string NoiseSpec::to_string() const {
  switch (mode) {
    case NoiseMode::Off: return "off";
    case NoiseMode::Heteroscedastic: return "het";
    case NoiseMode::Homoscedastic: {
      std::string v = std::to_string(sigma);
      return "homo:" + v;
    }
  }
  return "het";
}

SyntheticObjective SyntheticObjective::make(std::string_view name, NoiseSpec noise) {
  SyntheticObjective o;
  o.name_ = std::string(name);
  o.noise_ = noise;
  if (name == "sin-het") {
    o.lower_ = VectorXd::Zero(1);
    o.upper_ = VectorXd::Constant(1, 10.0);
    o.direction_ = Direction::Maximise;
    o.f_ = sin_f;
    o.g_ = sin_g;
  } else if (name == "branin-het") {
    o.lower_ = VectorXd::Zero(2);
    o.upper_ = VectorXd::Ones(2);
    o.f_ = branin_f;
    o.g_ = branin_g;
  } else if (name == "hosaki-het") {
    o.lower_ = VectorXd::Zero(2);
    o.upper_ = VectorXd::Constant(2, 5.0);
    o.f_ = hosaki_f;
    o.g_ = hosaki_g;
  } else if (name == "gprice-het") {
    o.lower_ = VectorXd::Zero(2);
    o.upper_ = VectorXd::Ones(2);
    o.f_ = gprice_f;
    o.g_ = gprice_g;
  } else {
    throw InvalidInput("unknown objective '" + std::string(name) +
                       "' (expected sin-het, branin-het, hosaki-het or gprice-het)");
  }
  return o;
}

std::vector<std::string> SyntheticObjective::names() { return {"sin-het", "branin-het", "hosaki-het", "gprice-het"}; }

void SyntheticObjective::check_bounds(const VectorXd& x) const {
  if (x.size() != dimension()) {
    throw InvalidInput(name_ + " expects " + std::to_string(dimension()) + " inputs, got " + std::to_string(x.size()));
  }
  for (Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower_[i] && x[i] <= upper_[i])) {
      throw InvalidInput(name_ + ": input " + std::to_string(i) + " = " + std::to_string(x[i]) + " outside [" +
                         std::to_string(lower_[i]) + ", " + std::to_string(upper_[i]) + "]");
    }
  }
}

double SyntheticObjective::f(const VectorXd& x) const {
  check_bounds(x);
  return f_(x);
}

double SyntheticObjective::g_het(const VectorXd& x) const {
  check_bounds(x);
  return g_(x);
}

double SyntheticObjective::g(const VectorXd& x) const {
  switch (noise_.mode) {
    case NoiseMode::Off: check_bounds(x); return 0.0;
    case NoiseMode::Homoscedastic: check_bounds(x); return noise_.sigma;
    case NoiseMode::Heteroscedastic: return g_het(x);
  }
  return 0.0;
}

Evaluation eval_objective(const SyntheticObjective& objective, const VectorXd& x) {
  return {objective.f(x), objective.g(x)};
}

double sample_noisy(const SyntheticObjective& objective, const VectorXd& x, Rng& rng) {
  const Evaluation e = eval_objective(objective, x);
  if (e.g == 0.0) return e.f;
  std::normal_distribution<double> normal(0.0, 1.0);
  return e.f + e.g * normal(rng);
}

double sample_noisy(const SyntheticObjective& objective, const VectorXd& x, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_noisy(objective, x, rng);
}

double composite(double f, double g, double alpha, Direction direction) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in [0, 1]");
  return direction == Direction::Minimise ? alpha * f + (1.0 - alpha) * g : alpha * f - (1.0 - alpha) * g;
}

Composite composite_eval(const SyntheticObjective& objective, const VectorXd& x, double alpha) {
  const Evaluation e = eval_objective(objective, x);
  return {composite(e.f, e.g, alpha, objective.direction()), e.f, e.g};
}

VectorXd kernel_smooth(const MatrixXd& inputs, const VectorXd& values, double bandwidth) {
  if (!(bandwidth > 0.0)) throw InvalidInput("bandwidth must be positive");
  if (inputs.rows() != values.size()) throw InvalidInput("kernel_smooth: inputs and values differ in length");
  const Index n = values.size();
  VectorXd out(n);
  const double scale = -0.5 / (bandwidth * bandwidth);
  for (Index i = 0; i < n; ++i) {
    // Log-sum-exp so a tiny bandwidth still normalises.
    VectorXd logw(n);
    for (Index j = 0; j < n; ++j) logw[j] = scale * (inputs.row(i) - inputs.row(j)).squaredNorm();
    const double top = logw.maxCoeff();
    const VectorXd w = (logw.array() - top).exp().matrix();
    out[i] = w.dot(values) / w.sum();
  }
  return out;
}

VectorXd smoothed_noise_oracle(const gp::Dataset& data, double bandwidth, const kernels::KernelSpec& kernel,
                               const gp::FitOptions& options) {
  if (!(bandwidth > 0.0)) throw InvalidInput("bandwidth must be positive");
  if (data.inputs.kind == kernels::InputKind::String) throw InvalidInput("noise oracle needs vector inputs");
  const gp::GPModel model = gp::fit_gp(data, kernel, options);
  const VectorXd mean = gp::predict(model, data.inputs).mean;
  const VectorXd sq = (data.targets - mean).array().square().matrix();
  return kernel_smooth(data.inputs.points, sq, bandwidth);
}

TabularObjective::TabularObjective(MatrixXd features, VectorXd targets, std::optional<VectorXd> noise_std,
                                   Direction direction)
    : features_(std::move(features)),
      targets_(std::move(targets)),
      noise_std_(std::move(noise_std)),
      direction_(direction),
      queried_(static_cast<std::size_t>(targets_.size()), false) {
  if (features_.rows() != targets_.size() || targets_.size() == 0) {
    throw InvalidInput("tabular objective needs matching, non-empty features and targets");
  }
  if (noise_std_ && noise_std_->size() != targets_.size()) throw InvalidInput("noise_std length does not match targets");
  centre_ = features_.colwise().mean().transpose();
  scale_ = ((features_.rowwise() - centre_.transpose()).array().square().colwise().mean().sqrt()).transpose();
  for (Index c = 0; c < scale_.size(); ++c) {
    if (!(scale_[c] > 0.0)) scale_[c] = 1.0;
  }
}

Index TabularObjective::remaining() const {
  return static_cast<Index>(std::count(queried_.begin(), queried_.end(), false));
}

Index TabularObjective::nearest_unqueried(const VectorXd& x) const {
  if (x.size() != dimension()) throw InvalidInput("query dimension does not match the table");
  const VectorXd xs = (x - centre_).cwiseQuotient(scale_);
  Index best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index r = 0; r < size(); ++r) {
    if (queried_[static_cast<std::size_t>(r)]) continue;
    const double d = ((features_.row(r).transpose() - centre_).cwiseQuotient(scale_) - xs).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  if (best < 0) throw InvalidInput("every row of the table has already been queried");
  return best;
}

double TabularObjective::query(Index row) {
  if (row < 0 || row >= size()) throw InvalidInput("row index out of range");
  auto ref = queried_[static_cast<std::size_t>(row)];
  if (ref) throw InvalidInput("row " + std::to_string(row) + " was already queried");
  ref = true;
  return targets_[row];
}

Evaluation TabularObjective::truth(Index row) const {
  if (!noise_std_) throw InvalidInput("composite evaluation needs a known noise_std column");
  return {targets_[row], (*noise_std_)[row]};
}

}  // namespace hetbo::objectives

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

#include "hetbo/acquisition.hpp"
#include "hetbo/gp.hpp"
#include "hetbo/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hetbo::objectives {

using acquisition::Direction;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class NoiseMode { Off, Homoscedastic, Heteroscedastic };

struct NoiseSpec {
  NoiseMode mode = NoiseMode::Heteroscedastic;
  double sigma = 0.0;  // Homoscedastic only

  /// "off", "homo:<σ>" or "het".
  static NoiseSpec parse(std::string_view text);
  std::string to_string() const;
};

/// One of the synthetic tasks: `sin-het`, `branin-het`, `hosaki-het`,
/// `gprice-het`. Observations are f(x) + g(x)·ε with ε ~ N(0, 1).
class SyntheticObjective {
 public:
  static SyntheticObjective make(std::string_view name, NoiseSpec noise = {});
  static std::vector<std::string> names();

  const std::string& name() const { return name_; }
  Index dimension() const { return lower_.size(); }
  const VectorXd& lower() const { return lower_; }
  const VectorXd& upper() const { return upper_; }
  Direction direction() const { return direction_; }
  const NoiseSpec& noise() const { return noise_; }

  /// Throws InvalidInput outside the box (or on a dimension mismatch).
  void check_bounds(const VectorXd& x) const;
  double f(const VectorXd& x) const;
  double g(const VectorXd& x) const;
  /// Heteroscedastic noise scale regardless of the configured noise mode.
  double g_het(const VectorXd& x) const;

 private:
  std::string name_;
  VectorXd lower_;
  VectorXd upper_;
  Direction direction_ = Direction::Minimise;
  NoiseSpec noise_;
  double (*f_)(const VectorXd&) = nullptr;
  double (*g_)(const VectorXd&) = nullptr;
};

struct Evaluation {
  double f = 0.0;
  double g = 0.0;
};

Evaluation eval_objective(const SyntheticObjective& objective, const VectorXd& x);

double sample_noisy(const SyntheticObjective& objective, const VectorXd& x, Rng& rng);
double sample_noisy(const SyntheticObjective& objective, const VectorXd& x, std::uint64_t seed);

struct Composite {
  double h = 0.0;
  double f = 0.0;
  double g = 0.0;
};

/// αf + (1−α)g for minimisation, αf − (1−α)g for maximisation.
double composite(double f, double g, double alpha, Direction direction);
Composite composite_eval(const SyntheticObjective& objective, const VectorXd& x, double alpha);

/// Gaussian-kernel moving average of `values` at every input, weights
/// exp(−‖x_i − x_j‖²/(2b²)) normalised per point.
VectorXd kernel_smooth(const MatrixXd& inputs, const VectorXd& values, double bandwidth);

/// Fits a homoscedastic GP to all of `data`, then smooths its squared residuals
/// (output units²) with kernel_smooth.
VectorXd smoothed_noise_oracle(const gp::Dataset& data, double bandwidth, const kernels::KernelSpec& kernel,
                               const gp::FitOptions& options = {});

/// A finite pool of rows that can each be queried once. Queries at arbitrary
/// points snap to the closest unqueried row (Euclidean distance on
/// standardised features).
class TabularObjective {
 public:
  /// `noise_std` is the known noise scale g per row, when available.
  TabularObjective(MatrixXd features, VectorXd targets, std::optional<VectorXd> noise_std = std::nullopt,
                   Direction direction = Direction::Minimise);

  Index size() const { return targets_.size(); }
  Index remaining() const;
  Index dimension() const { return features_.cols(); }
  const MatrixXd& features() const { return features_; }
  const VectorXd& targets() const { return targets_; }
  const std::optional<VectorXd>& noise_std() const { return noise_std_; }
  Direction direction() const { return direction_; }
  bool queried(Index row) const { return queried_[static_cast<std::size_t>(row)]; }
  VectorXd lower() const { return features_.colwise().minCoeff(); }
  VectorXd upper() const { return features_.colwise().maxCoeff(); }

  /// Closest unqueried row; ties go to the lowest index. Throws when exhausted.
  Index nearest_unqueried(const VectorXd& x) const;
  /// Marks the row as queried and returns its target. Throws when already used.
  double query(Index row);
  /// f and g of a row; throws InvalidInput when g is unknown.
  Evaluation truth(Index row) const;

 private:
  MatrixXd features_;
  VectorXd targets_;
  std::optional<VectorXd> noise_std_;
  Direction direction_;
  VectorXd centre_;
  VectorXd scale_;
  std::vector<bool> queried_;
};

}  // namespace hetbo::objectives

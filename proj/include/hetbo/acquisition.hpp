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

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>

namespace hetbo::acquisition {

enum class AcquisitionKind { EI, AEI, HAEI, ANPEI, Random };
enum class Direction { Minimise, Maximise };

std::string to_string(AcquisitionKind kind);
AcquisitionKind kind_from_string(std::string_view name);
std::string to_string(Direction direction);
Direction direction_from_string(std::string_view name);

struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::EI;
  double gamma = 1.0;                 // HAEI
  double beta = 0.5;                  // ANPEI
  std::optional<double> fixed_noise;  // AEI σ_n in output units; surrogate noise when unset
  Direction direction = Direction::Minimise;

  /// Throws InvalidInput on out-of-range parameters.
  void validate() const;
};

double normal_pdf(double u);
double normal_cdf(double u);

/// Minimisation form: (η−μ)Φ(u) + σφ(u), u = (η−μ)/σ; max(0, η−μ) when σ = 0.
double expected_improvement(double mean, double std, double eta);

/// 1 − σ_n/√(var_t + σ_n²), written so that σ_n = 0 gives exactly 1.
double aei_factor(double var_t, double fixed_noise);
double aei(double mean, double std, double eta, double fixed_noise);

/// 1 − γ√r/√(var_t + γ²r). Exactly 1 for r = 0 and exactly 0 for var_t = 0 < r;
/// defined as 1 when var_t = r = 0.
double haei_factor(double var_t, double r, double gamma);
double haei(double mean, double var_t, double r, double eta, double gamma);

double anpei(double mean, double std, double r, double eta, double beta);

/// Best posterior mean (standardised, minimisation) over the observed inputs.
double incumbent(const gp::GPModel& model, const kernels::Inputs& observed);

/// Vectorised evaluation for EI/AEI/HAEI/ANPEI in standardised minimisation
/// units. `var_t` is epistemic; `r` the aleatoric variance; `noise_std` the AEI
/// σ_n already in standardised units.
Eigen::VectorXd evaluate(const AcquisitionSpec& spec, const Eigen::VectorXd& mean, const Eigen::VectorXd& var_t,
                         const Eigen::VectorXd& r, double eta, double noise_std);

}  // namespace hetbo::acquisition

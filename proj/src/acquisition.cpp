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

#include "hetbo/acquisition.hpp"

#include "hetbo/errors.hpp"

#include <cmath>
#include <numbers>

namespace hetbo::acquisition {

std::string to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::EI: return "ei";
    case AcquisitionKind::AEI: return "aei";
    case AcquisitionKind::HAEI: return "haei";
    case AcquisitionKind::ANPEI: return "anpei";
    case AcquisitionKind::Random: return "random";
  }
  return "ei";
}

AcquisitionKind kind_from_string(std::string_view name) {
  if (name == "ei") return AcquisitionKind::EI;
  if (name == "aei") return AcquisitionKind::AEI;
  if (name == "haei") return AcquisitionKind::HAEI;
  if (name == "anpei") return AcquisitionKind::ANPEI;
  if (name == "random") return AcquisitionKind::Random;
  throw InvalidInput("unknown acquisition '" + std::string(name) + "' (expected ei, aei, haei, anpei or random)");
}

std::string to_string(Direction direction) { return direction == Direction::Minimise ? "minimise" : "maximise"; }

Direction direction_from_string(std::string_view name) {
  if (name == "minimise" || name == "min") return Direction::Minimise;
  if (name == "maximise" || name == "max") return Direction::Maximise;
  throw InvalidInput("unknown direction '" + std::string(name) + "'");
}

void AcquisitionSpec::validate() const {
  if (kind == AcquisitionKind::HAEI && !(gamma > 0.0)) throw InvalidInput("gamma must be positive");
  if (kind == AcquisitionKind::ANPEI && !(beta >= 0.0 && beta <= 1.0)) throw InvalidInput("beta must lie in [0, 1]");
  if (fixed_noise && !(*fixed_noise >= 0.0)) throw InvalidInput("fixed noise must be non-negative");
}

double normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

double expected_improvement(double mean, double std, double eta) {
  const double d = eta - mean;
  if (!(std > 0.0)) return std::max(0.0, d);
  const double u = d / std;
  return std::max(0.0, d * normal_cdf(u) + std * normal_pdf(u));
}

double aei_factor(double var_t, double fixed_noise) {
  const double n2 = fixed_noise * fixed_noise;
  if (var_t == 0.0 && n2 == 0.0) return 1.0;
  return 1.0 - 1.0 / std::sqrt(1.0 + var_t / n2);
}

double aei(double mean, double std, double eta, double fixed_noise) {
  return expected_improvement(mean, std, eta) * aei_factor(std * std, fixed_noise);
}

double haei_factor(double var_t, double r, double gamma) {
  const double penalty = gamma * gamma * r;
  if (var_t == 0.0 && penalty == 0.0) return 1.0;
  return 1.0 - 1.0 / std::sqrt(1.0 + var_t / penalty);
}

double haei(double mean, double var_t, double r, double eta, double gamma) {
  return expected_improvement(mean, std::sqrt(var_t), eta) * haei_factor(var_t, r, gamma);
}

double anpei(double mean, double std, double r, double eta, double beta) {
  return beta * expected_improvement(mean, std, eta) - (1.0 - beta) * std::sqrt(r);
}

double incumbent(const gp::GPModel& model, const kernels::Inputs& observed) {
  if (observed.size() == 0) throw InvalidInput("incumbent needs at least one observed input");
  gp::PredictOptions po;
  po.standardised = true;
  return gp::predict(model, observed, po).mean.minCoeff();
}

Eigen::VectorXd evaluate(const AcquisitionSpec& spec, const Eigen::VectorXd& mean, const Eigen::VectorXd& var_t,
                         const Eigen::VectorXd& r, double eta, double noise_std) {
  Eigen::VectorXd out(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double v = std::max(var_t[i], 0.0);
    switch (spec.kind) {
      case AcquisitionKind::EI: out[i] = expected_improvement(mean[i], std::sqrt(v), eta); break;
      case AcquisitionKind::AEI: out[i] = aei(mean[i], std::sqrt(v), eta, noise_std); break;
      case AcquisitionKind::HAEI: out[i] = haei(mean[i], v, r[i], eta, spec.gamma); break;
      case AcquisitionKind::ANPEI: out[i] = anpei(mean[i], std::sqrt(v), r[i], eta, spec.beta); break;
      case AcquisitionKind::Random: out[i] = 0.0; break;
    }
  }
  return out;
}

}  // namespace hetbo::acquisition

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

#include <Eigen/Dense>

#include <functional>

namespace hetbo::optimize {

using Eigen::VectorXd;

/// Returns f(x) and writes ∇f(x) into `grad`. A non-finite value marks x as
/// infeasible; the line search backs away from it.
using Objective = std::function<double(const VectorXd& x, VectorXd& grad)>;

struct Options {
  int max_iterations = 200;
  int memory = 8;
  double gradient_tolerance = 1e-6;  // on the projected gradient, ∞-norm
  double value_tolerance = 1e-12;    // relative decrease per iteration
  int max_line_search = 40;
};

struct Result {
  VectorXd x;
  double value = 0.0;
  VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Limited-memory BFGS with box constraints handled by projection and an
/// active set: coordinates pinned at a bound with the gradient pointing
/// outward are frozen for the step.
Result minimize_bounded(const Objective& f, VectorXd x0, const VectorXd& lower, const VectorXd& upper,
                        const Options& options = {});

}  // namespace hetbo::optimize

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

#include "hetbo/optimize.hpp"

#include "hetbo/errors.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace hetbo::optimize {

namespace {

struct Pair {
  VectorXd s;
  VectorXd y;
  double rho;
};

VectorXd projected_gradient(const VectorXd& x, const VectorXd& g, const VectorXd& lo, const VectorXd& hi) {
  VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)) pg[i] = 0.0;
  }
  return pg;
}

// Two-loop recursion on the free coordinates.
VectorXd lbfgs_direction(const VectorXd& pg, const std::deque<Pair>& memory) {
  VectorXd q = pg;
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alpha[k] = memory[k].rho * memory[k].s.dot(q);
    q -= alpha[k] * memory[k].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * memory[k].y.dot(q);
    q += (alpha[k] - beta) * memory[k].s;
  }
  return -q;
}

}  // namespace

Result minimize_bounded(const Objective& f, VectorXd x0, const VectorXd& lower, const VectorXd& upper,
                        const Options& options) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) throw InvalidInput("bound vectors do not match the start point");

  Result res;
  res.x = x0.cwiseMax(lower).cwiseMin(upper);
  res.gradient = VectorXd::Zero(n);
  res.value = f(res.x, res.gradient);
  res.evaluations = 1;
  if (!std::isfinite(res.value)) return res;

  std::deque<Pair> memory;
  VectorXd grad_new(n);
  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    VectorXd pg = projected_gradient(res.x, res.gradient, lower, upper);
    if (pg.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      res.converged = true;
      break;
    }
    // Free-variable mask for this step.
    VectorXd mask = (pg.array() != 0.0).cast<double>().matrix();

    bool accepted = false;
    double value_new = 0.0;
    VectorXd x_new;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      VectorXd d = lbfgs_direction(pg, memory).cwiseProduct(mask);
      double slope = d.dot(res.gradient);
      if (!(slope < 0.0)) {
        memory.clear();
        d = -pg;
        slope = d.dot(res.gradient);
      }
      double t = memory.empty() ? std::min(1.0, 1.0 / pg.lpNorm<Eigen::Infinity>()) : 1.0;
      for (int ls = 0; ls < options.max_line_search; ++ls, t *= 0.5) {
        x_new = (res.x + t * d).cwiseMax(lower).cwiseMin(upper);
        if ((x_new - res.x).lpNorm<Eigen::Infinity>() == 0.0) break;
        value_new = f(x_new, grad_new);
        ++res.evaluations;
        if (std::isfinite(value_new) && value_new <= res.value + 1e-4 * res.gradient.dot(x_new - res.x)) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (memory.empty()) break;
        memory.clear();
      }
    }
    if (!accepted) {
      // No descent possible along the projected path: treat as stationary.
      res.converged = pg.lpNorm<Eigen::Infinity>() <= std::sqrt(options.gradient_tolerance);
      break;
    }

    VectorXd s = x_new - res.x;
    VectorXd y = grad_new - res.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      memory.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }
    const double decrease = res.value - value_new;
    res.x = std::move(x_new);
    res.value = value_new;
    res.gradient = grad_new;
    if (decrease <= options.value_tolerance * std::max(1.0, std::abs(res.value))) {
      res.converged = true;
      ++res.iterations;
      break;
    }
  }
  return res;
}

}  // namespace hetbo::optimize

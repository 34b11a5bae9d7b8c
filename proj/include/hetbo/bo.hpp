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
#include "hetbo/hetgp.hpp"
#include "hetbo/objectives.hpp"
#include "hetbo/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace hetbo::bo {

using acquisition::AcquisitionKind;
using acquisition::AcquisitionSpec;
using acquisition::Direction;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class SurrogateKind { Homoscedastic, MLHGP };

std::string to_string(SurrogateKind kind);
SurrogateKind surrogate_from_string(std::string_view name);
/// EI/AEI/Random use a homoscedastic GP, HAEI/ANPEI the MLHGP.
SurrogateKind default_surrogate(AcquisitionKind kind);

struct ProposeOptions {
  int n_samples = 1000;
  int n_refine = 10;
  int refine_steps = 20;
  double initial_step = 0.05;  // fraction of each box side
};

struct BOConfig {
  SurrogateKind surrogate = SurrogateKind::Homoscedastic;
  AcquisitionSpec acquisition;
  int init_size = 25;
  int iterations = 10;
  double alpha = 0.5;  // trace evaluation only
  std::uint64_t seed = 0;

  int n_restarts = 20;        // first surrogate fit
  int refit_restarts = 10;    // later fits, on top of the warm start
  int mlhgp_iterations = 10;
  int mlhgp_samples = 100;
  int mlhgp_restarts = 20;        // first latent/noise fits inside the MLHGP
  int mlhgp_refit_restarts = 10;  // every other fit inside the MLHGP
  ProposeOptions propose;

  /// Throws InvalidInput on inconsistent settings.
  void validate() const;
};

/// Predictions of the surrogate in its standardised minimisation units.
struct SurrogatePrediction {
  VectorXd mean;
  VectorXd var_t;  // epistemic
  VectorXd r;      // aleatoric
};

class Surrogate {
 public:
  explicit Surrogate(gp::GPModel model) : model_(std::move(model)) {}
  explicit Surrogate(hetgp::MLHGPModel model) : model_(std::move(model)) {}

  SurrogateKind kind() const;
  SurrogatePrediction predict(const MatrixXd& x) const;
  /// Best latent posterior mean over the training inputs.
  double incumbent() const;
  /// Output standard deviation used to standardise the targets.
  double output_scale() const;
  /// √σ_y² for the homoscedastic GP; mean √r over the training inputs otherwise.
  double noise_std() const;
  VectorXd acquisition(const AcquisitionSpec& spec, const MatrixXd& x) const;

  const gp::GPModel* homoscedastic() const { return std::get_if<gp::GPModel>(&model_); }
  const hetgp::MLHGPModel* mlhgp() const { return std::get_if<hetgp::MLHGPModel>(&model_); }

 private:
  std::variant<gp::GPModel, hetgp::MLHGPModel> model_;
};

struct Proposal {
  VectorXd x;
  double value = 0.0;
  Index index = -1;  // candidate index in candidate-set mode
};

/// Continuous box: best of `n_samples` uniform draws, then the `n_refine` best
/// are polished by coordinate search; only strict improvements are accepted, so
/// ties keep the earliest sample. Random acquisition returns one uniform draw.
Proposal propose(const Surrogate* surrogate, const AcquisitionSpec& spec, const VectorXd& lower,
                 const VectorXd& upper, Rng& rng, const ProposeOptions& options = {});

/// Exact argmax over `available` rows of `candidates`; ties go to the lowest
/// index. Random acquisition picks uniformly.
Proposal propose(const Surrogate* surrogate, const AcquisitionSpec& spec, const MatrixXd& candidates,
                 std::span<const Index> available, Rng& rng);

struct BORecord {
  int iter = 0;              // 0-based record index
  std::string phase;         // "init" or "bo"
  VectorXd x;
  double y = 0.0;            // observed value
  std::optional<double> f_true;
  std::optional<double> g_true;
  std::optional<double> h;   // composite at x
  std::optional<double> best_h;
  std::optional<double> lowest_g;
  std::optional<double> acq_value;
  std::optional<Index> row;  // candidate-set mode
  bool fit_failed = false;
  double wall_ms = 0.0;
};

struct BOTrace {
  BOConfig config;
  std::string objective;
  Direction direction = Direction::Minimise;
  std::vector<BORecord> records;
  bool exhausted = false;
  std::vector<std::string> log;
  double wall_ms = 0.0;
};

BOTrace run_bo(const objectives::SyntheticObjective& objective, const BOConfig& config);
/// Candidate-set mode over the rows of `objective`. The table is consumed.
BOTrace run_bo(objectives::TabularObjective& objective, const BOConfig& config, const std::string& name = "table");

/// Runs `n_seeds` independent traces, seed i using split_seed(config.seed, i).
/// `make_run` receives the per-seed config. Uses up to `threads` workers.
std::vector<BOTrace> run_seeds(const std::function<BOTrace(const BOConfig&)>& make_run, const BOConfig& config,
                               int n_seeds, int threads);

/// Worker count: HETGP_THREADS when set, else hardware concurrency.
int default_threads();

struct BOSummary {
  std::vector<double> mean_best_h, se_best_h;
  std::vector<double> mean_lowest_g, se_lowest_g;
  int n_seeds = 0;
};

BOSummary summarise(const std::vector<BOTrace>& traces);

/// One-sided sign test: P(X ≥ wins) for X ~ Binomial(n, ½), where wins counts
/// pairs with a[i] < b[i] and ties are dropped.
double sign_test_less(std::span<const double> a, std::span<const double> b);

/// `seed,iter,phase,x0..,y,f_true,g_true,best_h,lowest_g,acq_value,wall_ms`;
/// the header is written when `header` is set.
void write_trace_csv(std::ostream& out, const BOTrace& trace, std::uint64_t seed, bool header);

}  // namespace hetbo::bo

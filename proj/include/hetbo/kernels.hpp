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

#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hetbo::kernels {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class KernelFamily {
  SQE,
  Matern12,
  Matern32,
  Matern52,
  RQ,
  Tanimoto,
  ScalarProduct,
  StringNGram,
  ICM,
};

/// Lowercase tags used by the CLI and the model JSON.
std::string_view to_string(KernelFamily family);
KernelFamily family_from_string(std::string_view tag);

/// True for SQE, the Matérn orders and RQ.
bool is_stationary(KernelFamily family);

enum class InputKind { Real, Count, String };

/// A collection of kernel inputs of one kind. Real and count vectors are rows
/// of `points`; strings live in `strings`. When `tasks` is non-empty every
/// input is paired with a task index (multitask / ICM).
struct Inputs {
  InputKind kind = InputKind::Real;
  MatrixXd points;
  std::vector<std::string> strings;
  std::vector<int> tasks;

  static Inputs real(MatrixXd points);
  static Inputs counts(MatrixXd points);
  static Inputs text(std::vector<std::string> strings);

  Index size() const;
  Index dimension() const;  // 0 for strings
  bool multitask() const { return !tasks.empty(); }

  Inputs with_tasks(std::vector<int> task_indices) const;
  Inputs subset(std::span<const Index> rows) const;
  Inputs row(Index i) const;
  void append(const Inputs& other);
};

using NGramCounts = std::map<std::string, double>;

/// Counts of every contiguous substring of length 1..n.
NGramCounts ngram_counts(std::string_view s, int n);

/// The n-gram vocabulary of a training run. Frozen at fit time; n-grams
/// outside it contribute nothing to the string kernel.
struct NGramVocabulary {
  int order = 5;
  std::set<std::string> grams;

  static NGramVocabulary build(const std::vector<std::string>& strings, int n);
  bool contains(const std::string& gram) const { return grams.count(gram) != 0; }
  /// Dense count vector in vocabulary order.
  VectorXd features(std::string_view s) const;
};

struct KernelSpec {
  KernelFamily family = KernelFamily::SQE;
  double signal_variance = 1.0;
  VectorXd lengthscales = VectorXd::Ones(1);  // size 1 (isotropic) or d (ARD)
  double rq_alpha = 1.0;
  int ngram_order = 5;
  std::shared_ptr<const NGramVocabulary> vocabulary;
  std::shared_ptr<const KernelSpec> base;  // ICM only
  MatrixXd coregional_factor;              // ICM only: lower-triangular L, B = L Lᵀ

  static KernelSpec continuous(KernelFamily family, Index dimension, bool ard = true);
  static KernelSpec tanimoto(double signal_variance = 1.0);
  static KernelSpec scalar_product(double signal_variance = 1.0);
  static KernelSpec string_ngram(int order = 5, double signal_variance = 1.0);
  /// L starts at 0.5·I; the optimiser perturbs it per restart.
  static KernelSpec icm(KernelSpec base, int num_tasks);

  int num_tasks() const { return static_cast<int>(coregional_factor.rows()); }
  MatrixXd coregionalisation() const;
  std::string describe() const;
};

/// Throws InvalidInput when `inputs` cannot be fed to `spec`.
void check_compatible(const KernelSpec& spec, const Inputs& inputs);

/// k(A[i], B[j]).
double kernel_eval(const KernelSpec& spec, const Inputs& a, Index i, const Inputs& b, Index j);
double kernel_eval(const KernelSpec& spec, const VectorXd& a, const VectorXd& b);
double kernel_eval(const KernelSpec& spec, std::string_view a, std::string_view b);

/// Cross-covariance K(A, B).
MatrixXd kernel_matrix(const KernelSpec& spec, const Inputs& a, const Inputs& b);
/// K(A, A), filled from the upper triangle so it is exactly symmetric.
MatrixXd kernel_matrix(const KernelSpec& spec, const Inputs& a);
/// k(A[i], A[i]) for every i.
VectorXd kernel_diagonal(const KernelSpec& spec, const Inputs& a);

// --- hyperparameter packing -------------------------------------------------
//
// Free parameters, in order:
//   continuous : log σ_f², log ℓ_1..ℓ_m, [log α for RQ]
//   tanimoto / scalar_product / string_ngram : log σ_f²
//   icm        : base parameters without σ_f² (fixed at 1), then the
//                lower-triangular entries of L row by row (untransformed)

std::vector<std::string> parameter_names(const KernelSpec& spec);
VectorXd pack_parameters(const KernelSpec& spec);
KernelSpec unpack_parameters(const KernelSpec& spec, const VectorXd& theta);
/// Box constraints on the packed parameters.
std::pair<VectorXd, VectorXd> parameter_bounds(const KernelSpec& spec);

/// dK(A,A)/dθ_p for every packed parameter p.
std::vector<MatrixXd> kernel_matrix_gradients(const KernelSpec& spec, const Inputs& a);

}  // namespace hetbo::kernels

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

#include "hetbo/kernels.hpp"

#include "hetbo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hetbo::kernels {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;

struct FamilyTag {
  KernelFamily family;
  std::string_view tag;
};

constexpr FamilyTag kTags[] = {
    {KernelFamily::SQE, "sqe"},
    {KernelFamily::Matern12, "matern12"},
    {KernelFamily::Matern32, "matern32"},
    {KernelFamily::Matern52, "matern52"},
    {KernelFamily::RQ, "rq"},
    {KernelFamily::Tanimoto, "tanimoto"},
    {KernelFamily::ScalarProduct, "scalar_product"},
    {KernelFamily::StringNGram, "string_ngram"},
    {KernelFamily::ICM, "icm"},
};

// Value of a stationary kernel as a function of the scaled distance.
double radial(const KernelSpec& spec, double r2) {
  const double s = spec.signal_variance;
  switch (spec.family) {
    case KernelFamily::SQE:
      return s * std::exp(-0.5 * r2);
    case KernelFamily::Matern12:
      return s * std::exp(-std::sqrt(r2));
    case KernelFamily::Matern32: {
      const double u = kSqrt3 * std::sqrt(r2);
      return s * (1.0 + u) * std::exp(-u);
    }
    case KernelFamily::Matern52: {
      const double u = kSqrt5 * std::sqrt(r2);
      return s * (1.0 + u + u * u / 3.0) * std::exp(-u);
    }
    case KernelFamily::RQ:
      return s * std::pow(1.0 + r2 / (2.0 * spec.rq_alpha), -spec.rq_alpha);
    default:
      throw InvalidInput("radial profile requested for a non-stationary kernel");
  }
}

// d k / d log ℓ_k = lengthscale_factor(r) · (Δ_k / ℓ_k)².
double lengthscale_factor(const KernelSpec& spec, double r2, double k) {
  const double s = spec.signal_variance;
  switch (spec.family) {
    case KernelFamily::SQE:
      return k;
    case KernelFamily::Matern12: {
      const double r = std::sqrt(r2);
      return r > 0.0 ? k / r : 0.0;
    }
    case KernelFamily::Matern32:
      return 3.0 * s * std::exp(-kSqrt3 * std::sqrt(r2));
    case KernelFamily::Matern52: {
      const double u = kSqrt5 * std::sqrt(r2);
      return (5.0 / 3.0) * s * (1.0 + u) * std::exp(-u);
    }
    case KernelFamily::RQ: {
      const double q = 1.0 + r2 / (2.0 * spec.rq_alpha);
      return s * std::pow(q, -spec.rq_alpha - 1.0);
    }
    default:
      return 0.0;
  }
}

double scaled_sq_distance(const double* a, const double* b, Index d, const VectorXd& ls) {
  double r2 = 0.0;
  if (ls.size() == 1) {
    for (Index k = 0; k < d; ++k) {
      const double diff = a[k] - b[k];
      r2 += diff * diff;
    }
    return r2 / (ls[0] * ls[0]);
  }
  for (Index k = 0; k < d; ++k) {
    const double diff = (a[k] - b[k]) / ls[k];
    r2 += diff * diff;
  }
  return r2;
}

double dot(const double* a, const double* b, Index d) {
  double s = 0.0;
  for (Index k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

double tanimoto_value(double sf2, double ab, double aa, double bb) {
  const double denom = aa + bb - ab;
  if (denom <= 0.0) throw InvalidInput("tanimoto kernel evaluated on an all-zero pair");
  return sf2 * ab / denom;
}

double counts_inner(const NGramCounts& a, const NGramCounts& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  double s = 0.0;
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      s += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return s;
}

NGramCounts filtered_counts(const KernelSpec& spec, std::string_view s) {
  NGramCounts counts = ngram_counts(s, spec.ngram_order);
  if (spec.vocabulary) {
    std::erase_if(counts, [&](const auto& kv) { return !spec.vocabulary->contains(kv.first); });
  }
  return counts;
}

const KernelSpec& base_of(const KernelSpec& spec) {
  if (!spec.base) throw InvalidInput("icm kernel has no base kernel");
  return *spec.base;
}

int base_parameter_count(const KernelSpec& spec) {
  // Parameters of `spec` when used as an ICM base (σ_f² excluded).
  return static_cast<int>(pack_parameters(spec).size()) - 1;
}

// Kernel matrix with the vector-input families. Task structure is handled by
// the caller.
MatrixXd vector_kernel_matrix(const KernelSpec& spec, const RowMatrix& a, const RowMatrix& b,
                              bool symmetric) {
  const Index n = a.rows();
  const Index m = b.rows();
  const Index d = a.cols();
  MatrixXd k(n, m);
  VectorXd aa, bb;
  if (spec.family == KernelFamily::Tanimoto) {
    aa = a.rowwise().squaredNorm();
    bb = b.rowwise().squaredNorm();
  }
  for (Index i = 0; i < n; ++i) {
    const Index j0 = symmetric ? i : 0;
    for (Index j = j0; j < m; ++j) {
      const double* pa = a.row(i).data();
      const double* pb = b.row(j).data();
      double v;
      if (is_stationary(spec.family)) {
        v = radial(spec, scaled_sq_distance(pa, pb, d, spec.lengthscales));
      } else if (spec.family == KernelFamily::Tanimoto) {
        try {
          v = tanimoto_value(spec.signal_variance, dot(pa, pb, d), aa[i], bb[j]);
        } catch (const InvalidInput& e) {
          throw InvalidInput(std::string(e.what()) + " at index pair (" + std::to_string(i) + ", " +
                             std::to_string(j) + ")");
        }
      } else {
        v = spec.signal_variance * dot(pa, pb, d);
      }
      k(i, j) = v;
      if (symmetric) k(j, i) = v;
    }
  }
  return k;
}

MatrixXd string_kernel_matrix(const KernelSpec& spec, const std::vector<std::string>& a,
                              const std::vector<std::string>& b, bool symmetric) {
  std::vector<NGramCounts> ca, cb;
  ca.reserve(a.size());
  for (const auto& s : a) ca.push_back(filtered_counts(spec, s));
  if (!symmetric) {
    cb.reserve(b.size());
    for (const auto& s : b) cb.push_back(filtered_counts(spec, s));
  }
  const auto& right = symmetric ? ca : cb;
  const Index n = static_cast<Index>(a.size());
  const Index m = static_cast<Index>(right.size());
  MatrixXd k(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = symmetric ? i : 0; j < m; ++j) {
      const double v = spec.signal_variance * counts_inner(ca[i], right[j]);
      k(i, j) = v;
      if (symmetric) k(j, i) = v;
    }
  }
  return k;
}

MatrixXd base_matrix(const KernelSpec& spec, const Inputs& a, const Inputs& b, bool symmetric) {
  if (spec.family == KernelFamily::StringNGram) {
    return string_kernel_matrix(spec, a.strings, b.strings, symmetric);
  }
  const RowMatrix ra = a.points;
  if (symmetric) return vector_kernel_matrix(spec, ra, ra, true);
  const RowMatrix rb = b.points;
  return vector_kernel_matrix(spec, ra, rb, false);
}

void check_tasks(const KernelSpec& spec, const Inputs& inputs) {
  if (!inputs.multitask()) throw InvalidInput("icm kernel requires task-tagged inputs");
  for (int t : inputs.tasks) {
    if (t < 0 || t >= spec.num_tasks()) {
      throw InvalidInput("task index " + std::to_string(t) + " outside [0, " +
                         std::to_string(spec.num_tasks()) + ")");
    }
  }
}

}  // namespace

std::string_view to_string(KernelFamily family) {
  for (const auto& t : kTags) {
    if (t.family == family) return t.tag;
  }
  return "unknown";
}

KernelFamily family_from_string(std::string_view tag) {
  for (const auto& t : kTags) {
    if (t.tag == tag) return t.family;
  }
  throw InvalidInput("unknown kernel family '" + std::string(tag) + "'");
}

bool is_stationary(KernelFamily family) {
  switch (family) {
    case KernelFamily::SQE:
    case KernelFamily::Matern12:
    case KernelFamily::Matern32:
    case KernelFamily::Matern52:
    case KernelFamily::RQ:
      return true;
    default:
      return false;
  }
}

// --- Inputs -----------------------------------------------------------------

Inputs Inputs::real(MatrixXd points) {
  Inputs in;
  in.kind = InputKind::Real;
  in.points = std::move(points);
  return in;
}

Inputs Inputs::counts(MatrixXd points) {
  Inputs in;
  in.kind = InputKind::Count;
  in.points = std::move(points);
  return in;
}

Inputs Inputs::text(std::vector<std::string> strings) {
  Inputs in;
  in.kind = InputKind::String;
  in.strings = std::move(strings);
  return in;
}

Index Inputs::size() const {
  return kind == InputKind::String ? static_cast<Index>(strings.size()) : points.rows();
}

Index Inputs::dimension() const { return kind == InputKind::String ? 0 : points.cols(); }

Inputs Inputs::with_tasks(std::vector<int> task_indices) const {
  if (static_cast<Index>(task_indices.size()) != size()) {
    throw InvalidInput("task index count does not match input count");
  }
  Inputs out = *this;
  out.tasks = std::move(task_indices);
  return out;
}

Inputs Inputs::subset(std::span<const Index> rows) const {
  Inputs out;
  out.kind = kind;
  if (kind == InputKind::String) {
    out.strings.reserve(rows.size());
    for (Index r : rows) out.strings.push_back(strings.at(static_cast<std::size_t>(r)));
  } else {
    out.points.resize(static_cast<Index>(rows.size()), points.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.points.row(static_cast<Index>(i)) = points.row(rows[i]);
  }
  if (multitask()) {
    out.tasks.reserve(rows.size());
    for (Index r : rows) out.tasks.push_back(tasks.at(static_cast<std::size_t>(r)));
  }
  return out;
}

Inputs Inputs::row(Index i) const {
  const Index idx[] = {i};
  return subset(idx);
}

void Inputs::append(const Inputs& other) {
  if (size() == 0 && tasks.empty()) {
    *this = other;
    return;
  }
  if (other.kind != kind || other.multitask() != multitask()) {
    throw InvalidInput("cannot append inputs of a different kind");
  }
  if (kind == InputKind::String) {
    strings.insert(strings.end(), other.strings.begin(), other.strings.end());
  } else {
    if (other.points.cols() != points.cols()) throw InvalidInput("input dimension mismatch on append");
    MatrixXd merged(points.rows() + other.points.rows(), points.cols());
    merged << points, other.points;
    points = std::move(merged);
  }
  tasks.insert(tasks.end(), other.tasks.begin(), other.tasks.end());
}

// --- n-grams ----------------------------------------------------------------

NGramCounts ngram_counts(std::string_view s, int n) {
  if (n < 1) throw InvalidInput("n-gram order must be at least 1");
  NGramCounts counts;
  for (std::size_t start = 0; start < s.size(); ++start) {
    for (std::size_t len = 1; len <= static_cast<std::size_t>(n) && start + len <= s.size(); ++len) {
      counts[std::string(s.substr(start, len))] += 1.0;
    }
  }
  return counts;
}

NGramVocabulary NGramVocabulary::build(const std::vector<std::string>& strings, int n) {
  NGramVocabulary vocab;
  vocab.order = n;
  for (const auto& s : strings) {
    for (auto& [gram, count] : ngram_counts(s, n)) vocab.grams.insert(gram);
  }
  return vocab;
}

VectorXd NGramVocabulary::features(std::string_view s) const {
  const NGramCounts counts = ngram_counts(s, order);
  VectorXd phi = VectorXd::Zero(static_cast<Index>(grams.size()));
  Index i = 0;
  for (const auto& gram : grams) {
    if (auto it = counts.find(gram); it != counts.end()) phi[i] = it->second;
    ++i;
  }
  return phi;
}

// --- KernelSpec ---------------------------------------------------------------

KernelSpec KernelSpec::continuous(KernelFamily family, Index dimension, bool ard) {
  if (!is_stationary(family)) throw InvalidInput("continuous() needs a stationary family");
  KernelSpec spec;
  spec.family = family;
  spec.lengthscales = VectorXd::Ones(ard ? std::max<Index>(dimension, 1) : 1);
  return spec;
}

KernelSpec KernelSpec::tanimoto(double signal_variance) {
  KernelSpec spec;
  spec.family = KernelFamily::Tanimoto;
  spec.signal_variance = signal_variance;
  return spec;
}

KernelSpec KernelSpec::scalar_product(double signal_variance) {
  KernelSpec spec;
  spec.family = KernelFamily::ScalarProduct;
  spec.signal_variance = signal_variance;
  return spec;
}

KernelSpec KernelSpec::string_ngram(int order, double signal_variance) {
  if (order < 1) throw InvalidInput("n-gram order must be at least 1");
  KernelSpec spec;
  spec.family = KernelFamily::StringNGram;
  spec.ngram_order = order;
  spec.signal_variance = signal_variance;
  return spec;
}

KernelSpec KernelSpec::icm(KernelSpec base, int num_tasks) {
  if (num_tasks < 1) throw InvalidInput("icm kernel needs at least one task");
  if (base.family == KernelFamily::ICM) throw InvalidInput("icm kernels cannot be nested");
  base.signal_variance = 1.0;
  KernelSpec spec;
  spec.family = KernelFamily::ICM;
  spec.base = std::make_shared<const KernelSpec>(std::move(base));
  spec.coregional_factor = 0.5 * MatrixXd::Identity(num_tasks, num_tasks);
  return spec;
}

MatrixXd KernelSpec::coregionalisation() const {
  const MatrixXd l = coregional_factor.triangularView<Eigen::Lower>();
  return l * l.transpose();
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  os << to_string(family);
  if (family == KernelFamily::ICM) {
    os << "[" << (base ? base->describe() : "?") << ", P=" << num_tasks() << "]";
    return os.str();
  }
  os << "(signal_variance=" << signal_variance;
  if (is_stationary(family)) {
    os << ", lengthscales=[";
    for (Index i = 0; i < lengthscales.size(); ++i) os << (i ? "," : "") << lengthscales[i];
    os << "]";
    if (family == KernelFamily::RQ) os << ", alpha=" << rq_alpha;
  }
  if (family == KernelFamily::StringNGram) os << ", n=" << ngram_order;
  os << ")";
  return os.str();
}

void check_compatible(const KernelSpec& spec, const Inputs& inputs) {
  if (spec.family == KernelFamily::ICM) {
    check_tasks(spec, inputs);
    Inputs plain = inputs;
    plain.tasks.clear();
    check_compatible(base_of(spec), plain);
    return;
  }
  if (spec.signal_variance <= 0.0) throw InvalidInput("signal variance must be positive");
  switch (spec.family) {
    case KernelFamily::StringNGram:
      if (inputs.kind != InputKind::String) throw InvalidInput("string_ngram kernel requires string inputs");
      return;
    case KernelFamily::Tanimoto:
    case KernelFamily::ScalarProduct:
      if (inputs.kind == InputKind::String) throw InvalidInput(std::string(to_string(spec.family)) + " kernel requires vector inputs");
      if (spec.family == KernelFamily::Tanimoto && (inputs.points.array() < 0.0).any()) {
        throw InvalidInput("tanimoto kernel requires non-negative inputs");
      }
      return;
    default:
      if (inputs.kind == InputKind::String) throw InvalidInput(std::string(to_string(spec.family)) + " kernel requires vector inputs");
      if (spec.lengthscales.size() != 1 && spec.lengthscales.size() != inputs.dimension()) {
        throw InvalidInput("lengthscale count " + std::to_string(spec.lengthscales.size()) +
                           " does not match input dimension " + std::to_string(inputs.dimension()));
      }
      if ((spec.lengthscales.array() <= 0.0).any()) throw InvalidInput("lengthscales must be positive");
      if (spec.family == KernelFamily::RQ && spec.rq_alpha <= 0.0) throw InvalidInput("rq alpha must be positive");
      return;
  }
}

// --- evaluation ---------------------------------------------------------------

double kernel_eval(const KernelSpec& spec, const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size()) throw InvalidInput("input dimension mismatch");
  if (spec.family == KernelFamily::ICM) throw InvalidInput("icm kernel requires task-tagged inputs");
  if (spec.family == KernelFamily::StringNGram) throw InvalidInput("string_ngram kernel requires string inputs");
  const Index d = a.size();
  if (is_stationary(spec.family)) {
    if (spec.lengthscales.size() != 1 && spec.lengthscales.size() != d) {
      throw InvalidInput("lengthscale count does not match input dimension");
    }
    return radial(spec, scaled_sq_distance(a.data(), b.data(), d, spec.lengthscales));
  }
  if (spec.family == KernelFamily::Tanimoto) {
    if ((a.array() < 0.0).any() || (b.array() < 0.0).any()) throw InvalidInput("tanimoto kernel requires non-negative inputs");
    return tanimoto_value(spec.signal_variance, a.dot(b), a.squaredNorm(), b.squaredNorm());
  }
  return spec.signal_variance * a.dot(b);
}

double kernel_eval(const KernelSpec& spec, std::string_view a, std::string_view b) {
  if (spec.family != KernelFamily::StringNGram) throw InvalidInput(std::string(to_string(spec.family)) + " kernel cannot take string inputs");
  return spec.signal_variance * counts_inner(filtered_counts(spec, a), filtered_counts(spec, b));
}

double kernel_eval(const KernelSpec& spec, const Inputs& a, Index i, const Inputs& b, Index j) {
  if (spec.family == KernelFamily::ICM) {
    const MatrixXd coreg = spec.coregionalisation();
    const Inputs ai = a.row(i);
    const Inputs bj = b.row(j);
    check_tasks(spec, ai);
    check_tasks(spec, bj);
    const double kb = kernel_eval(base_of(spec), ai, 0, bj, 0);
    return kb * coreg(ai.tasks[0], bj.tasks[0]);
  }
  if (a.kind == InputKind::String || b.kind == InputKind::String) {
    if (a.kind != b.kind) throw InvalidInput("input kind mismatch");
    return kernel_eval(spec, a.strings.at(static_cast<std::size_t>(i)), b.strings.at(static_cast<std::size_t>(j)));
  }
  return kernel_eval(spec, VectorXd(a.points.row(i).transpose()), VectorXd(b.points.row(j).transpose()));
}

MatrixXd kernel_matrix(const KernelSpec& spec, const Inputs& a, const Inputs& b) {
  if (a.kind != b.kind) throw InvalidInput("input kind mismatch");
  if (a.kind != InputKind::String && a.dimension() != b.dimension()) {
    throw InvalidInput("input dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                       std::to_string(b.dimension()));
  }
  check_compatible(spec, a);
  check_compatible(spec, b);
  if (spec.family == KernelFamily::ICM) {
    MatrixXd k = base_matrix(base_of(spec), a, b, false);
    const MatrixXd coreg = spec.coregionalisation();
    for (Index i = 0; i < k.rows(); ++i) {
      for (Index j = 0; j < k.cols(); ++j) k(i, j) *= coreg(a.tasks[i], b.tasks[j]);
    }
    return k;
  }
  return base_matrix(spec, a, b, false);
}

MatrixXd kernel_matrix(const KernelSpec& spec, const Inputs& a) {
  check_compatible(spec, a);
  if (spec.family == KernelFamily::ICM) {
    MatrixXd k = base_matrix(base_of(spec), a, a, true);
    const MatrixXd coreg = spec.coregionalisation();
    for (Index i = 0; i < k.rows(); ++i) {
      for (Index j = i; j < k.cols(); ++j) {
        k(i, j) *= coreg(a.tasks[i], a.tasks[j]);
        k(j, i) = k(i, j);
      }
    }
    return k;
  }
  return base_matrix(spec, a, a, true);
}

VectorXd kernel_diagonal(const KernelSpec& spec, const Inputs& a) {
  check_compatible(spec, a);
  const Index n = a.size();
  VectorXd diag(n);
  if (spec.family == KernelFamily::ICM) {
    const MatrixXd coreg = spec.coregionalisation();
    const VectorXd base = kernel_diagonal(base_of(spec), [&] {
      Inputs plain = a;
      plain.tasks.clear();
      return plain;
    }());
    for (Index i = 0; i < n; ++i) diag[i] = base[i] * coreg(a.tasks[i], a.tasks[i]);
    return diag;
  }
  if (is_stationary(spec.family)) return VectorXd::Constant(n, spec.signal_variance);
  for (Index i = 0; i < n; ++i) {
    if (spec.family == KernelFamily::StringNGram) {
      const NGramCounts c = filtered_counts(spec, a.strings[static_cast<std::size_t>(i)]);
      diag[i] = spec.signal_variance * counts_inner(c, c);
    } else if (spec.family == KernelFamily::Tanimoto) {
      if (a.points.row(i).squaredNorm() == 0.0) throw InvalidInput("tanimoto kernel evaluated on an all-zero pair");
      diag[i] = spec.signal_variance;
    } else {
      diag[i] = spec.signal_variance * a.points.row(i).squaredNorm();
    }
  }
  return diag;
}

// --- parameters -----------------------------------------------------------------

std::vector<std::string> parameter_names(const KernelSpec& spec) {
  std::vector<std::string> names;
  if (spec.family == KernelFamily::ICM) {
    const auto base = parameter_names(base_of(spec));
    names.assign(base.begin() + 1, base.end());
    for (int i = 0; i < spec.num_tasks(); ++i) {
      for (int j = 0; j <= i; ++j) names.push_back("L_" + std::to_string(i) + "_" + std::to_string(j));
    }
    return names;
  }
  names.push_back("log_signal_variance");
  if (is_stationary(spec.family)) {
    for (Index i = 0; i < spec.lengthscales.size(); ++i) names.push_back("log_lengthscale_" + std::to_string(i));
    if (spec.family == KernelFamily::RQ) names.push_back("log_rq_alpha");
  }
  return names;
}

VectorXd pack_parameters(const KernelSpec& spec) {
  if (spec.family == KernelFamily::ICM) {
    const VectorXd base = pack_parameters(base_of(spec));
    const int p = spec.num_tasks();
    VectorXd theta(base.size() - 1 + p * (p + 1) / 2);
    theta.head(base.size() - 1) = base.tail(base.size() - 1);
    Index k = base.size() - 1;
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j <= i; ++j) theta[k++] = spec.coregional_factor(i, j);
    }
    return theta;
  }
  const Index extra = is_stationary(spec.family) ? spec.lengthscales.size() + (spec.family == KernelFamily::RQ ? 1 : 0) : 0;
  VectorXd theta(1 + extra);
  theta[0] = std::log(spec.signal_variance);
  if (is_stationary(spec.family)) {
    theta.segment(1, spec.lengthscales.size()) = spec.lengthscales.array().log().matrix();
    if (spec.family == KernelFamily::RQ) theta[theta.size() - 1] = std::log(spec.rq_alpha);
  }
  return theta;
}

KernelSpec unpack_parameters(const KernelSpec& spec, const VectorXd& theta) {
  KernelSpec out = spec;
  if (spec.family == KernelFamily::ICM) {
    const KernelSpec& base = base_of(spec);
    const int nb = base_parameter_count(base);
    VectorXd base_theta(nb + 1);
    base_theta[0] = 0.0;
    base_theta.tail(nb) = theta.head(nb);
    out.base = std::make_shared<const KernelSpec>(unpack_parameters(base, base_theta));
    const int p = spec.num_tasks();
    out.coregional_factor = MatrixXd::Zero(p, p);
    Index k = nb;
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j <= i; ++j) out.coregional_factor(i, j) = theta[k++];
    }
    return out;
  }
  if (theta.size() != pack_parameters(spec).size()) throw InvalidInput("parameter vector has the wrong length");
  out.signal_variance = std::exp(theta[0]);
  if (is_stationary(spec.family)) {
    out.lengthscales = theta.segment(1, spec.lengthscales.size()).array().exp().matrix();
    if (spec.family == KernelFamily::RQ) out.rq_alpha = std::exp(theta[theta.size() - 1]);
  }
  return out;
}

std::pair<VectorXd, VectorXd> parameter_bounds(const KernelSpec& spec) {
  const auto names = parameter_names(spec);
  const Index n = static_cast<Index>(names.size());
  VectorXd lo(n), hi(n);
  for (Index i = 0; i < n; ++i) {
    const std::string& name = names[static_cast<std::size_t>(i)];
    if (name == "log_signal_variance") {
      lo[i] = std::log(1e-6);
      hi[i] = std::log(1e6);
    } else if (name.rfind("log_lengthscale", 0) == 0) {
      lo[i] = std::log(1e-5);
      hi[i] = std::log(1e5);
    } else if (name == "log_rq_alpha") {
      lo[i] = std::log(1e-4);
      hi[i] = std::log(1e5);
    } else {
      lo[i] = -100.0;
      hi[i] = 100.0;
    }
  }
  return {lo, hi};
}

std::vector<MatrixXd> kernel_matrix_gradients(const KernelSpec& spec, const Inputs& a) {
  check_compatible(spec, a);
  const Index n = a.size();
  if (spec.family == KernelFamily::ICM) {
    const KernelSpec& base = base_of(spec);
    Inputs plain = a;
    plain.tasks.clear();
    const MatrixXd kb = kernel_matrix(base, plain);
    const MatrixXd coreg = spec.coregionalisation();
    std::vector<MatrixXd> base_grads = kernel_matrix_gradients(base, plain);
    std::vector<MatrixXd> grads;
    for (std::size_t p = 1; p < base_grads.size(); ++p) {
      MatrixXd g = base_grads[p];
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) g(i, j) *= coreg(a.tasks[i], a.tasks[j]);
      }
      grads.push_back(std::move(g));
    }
    const MatrixXd l = spec.coregional_factor.triangularView<Eigen::Lower>();
    const int tasks = spec.num_tasks();
    for (int r = 0; r < tasks; ++r) {
      for (int c = 0; c <= r; ++c) {
        // dB/dL_rc = E_rc Lᵀ + L E_cr
        MatrixXd db = MatrixXd::Zero(tasks, tasks);
        for (int j = 0; j < tasks; ++j) {
          db(r, j) += l(j, c);
          db(j, r) += l(j, c);
        }
        MatrixXd g(n, n);
        for (Index i = 0; i < n; ++i) {
          for (Index j = 0; j < n; ++j) g(i, j) = kb(i, j) * db(a.tasks[i], a.tasks[j]);
        }
        grads.push_back(std::move(g));
      }
    }
    return grads;
  }

  const MatrixXd k = kernel_matrix(spec, a);
  std::vector<MatrixXd> grads;
  grads.push_back(k);  // d/d log σ_f²
  if (!is_stationary(spec.family)) return grads;

  const Index d = a.dimension();
  const Index m = spec.lengthscales.size();
  const RowMatrix pts = a.points;
  for (Index p = 0; p < m; ++p) grads.emplace_back(MatrixXd::Zero(n, n));
  MatrixXd dalpha;
  if (spec.family == KernelFamily::RQ) dalpha = MatrixXd::Zero(n, n);

  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double* pa = pts.row(i).data();
      const double* pb = pts.row(j).data();
      const double r2 = scaled_sq_distance(pa, pb, d, spec.lengthscales);
      const double kij = k(i, j);
      const double factor = lengthscale_factor(spec, r2, kij);
      if (m == 1) {
        const double v = factor * r2;
        grads[1](i, j) = grads[1](j, i) = v;
      } else {
        for (Index p = 0; p < m; ++p) {
          const double u = (pa[p] - pb[p]) / spec.lengthscales[p];
          const double v = factor * u * u;
          grads[static_cast<std::size_t>(1 + p)](i, j) = v;
          grads[static_cast<std::size_t>(1 + p)](j, i) = v;
        }
      }
      if (spec.family == KernelFamily::RQ) {
        const double alpha = spec.rq_alpha;
        const double q = 1.0 + r2 / (2.0 * alpha);
        const double v = kij * (-alpha * std::log(q) + r2 / (2.0 * q));
        dalpha(i, j) = dalpha(j, i) = v;
      }
    }
  }
  if (spec.family == KernelFamily::RQ) grads.push_back(std::move(dalpha));
  return grads;
}

}  // namespace hetbo::kernels

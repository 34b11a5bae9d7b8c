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

#include "hetbo/bo.hpp"

#include "hetbo/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

namespace hetbo::bo {

namespace {

using Clock = std::chrono::steady_clock;
using kernels::KernelFamily;
using kernels::KernelSpec;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

VectorXd uniform_point(const VectorXd& lower, const VectorXd& upper, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd x(lower.size());
  for (Index d = 0; d < x.size(); ++d) x[d] = lower[d] + (upper[d] - lower[d]) * u(rng);
  return x;
}

Index first_argmax(const VectorXd& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

struct RunningBest {
  Direction direction;
  std::optional<double> best_h;
  std::optional<double> lowest_g;

  void update(BORecord& rec) {
    if (rec.h) {
      const bool better = !best_h || (direction == Direction::Minimise ? *rec.h < *best_h : *rec.h > *best_h);
      if (better) best_h = rec.h;
    }
    if (rec.g_true && (!lowest_g || *rec.g_true < *lowest_g)) lowest_g = rec.g_true;
    rec.best_h = best_h;
    rec.lowest_g = lowest_g;
  }
};

Surrogate fit_surrogate(const MatrixXd& x, const VectorXd& y, Direction direction, const BOConfig& config,
                        const Surrogate* previous, std::uint64_t seed) {
  gp::Dataset data;
  data.inputs = kernels::Inputs::real(x);
  data.targets = direction == Direction::Maximise ? VectorXd(-y) : y;
  const KernelSpec fresh = KernelSpec::continuous(KernelFamily::SQE, x.cols());

  if (config.surrogate == SurrogateKind::Homoscedastic) {
    gp::FitOptions fo;
    fo.seed = seed;
    fo.n_restarts = config.n_restarts;
    KernelSpec start = fresh;
    if (previous && previous->homoscedastic()) {
      start = previous->homoscedastic()->kernel();
      fo.noise_variance = previous->homoscedastic()->noise_variance();
      fo.n_restarts = config.refit_restarts;
    }
    return Surrogate(gp::fit_gp(data, start, fo));
  }

  hetgp::MLHGPOptions mo;
  mo.seed = seed;
  mo.max_iterations = config.mlhgp_iterations;
  mo.sample_size = config.mlhgp_samples;
  mo.n_restarts = config.mlhgp_restarts;
  mo.refit_restarts = config.mlhgp_refit_restarts;
  KernelSpec latent = fresh;
  KernelSpec noise = fresh;
  if (previous && previous->mlhgp()) {
    const hetgp::MLHGPModel& m = *previous->mlhgp();
    latent = m.g_latent.kernel();
    if (m.g_noise) noise = m.g_noise->kernel();
    mo.n_restarts = config.mlhgp_refit_restarts;
  }
  return Surrogate(hetgp::fit_mlhgp(data, latent, noise, mo));
}

void finish_record(BORecord& rec, double alpha, Direction direction, RunningBest& best) {
  if (rec.f_true && rec.g_true) rec.h = objectives::composite(*rec.f_true, *rec.g_true, alpha, direction);
  best.update(rec);
}

}  // namespace

std::string to_string(SurrogateKind kind) { return kind == SurrogateKind::Homoscedastic ? "homoscedastic" : "mlhgp"; }

SurrogateKind surrogate_from_string(std::string_view name) {
  if (name == "homoscedastic" || name == "homo") return SurrogateKind::Homoscedastic;
  if (name == "mlhgp" || name == "het") return SurrogateKind::MLHGP;
  throw InvalidInput("unknown surrogate '" + std::string(name) + "' (expected homoscedastic or mlhgp)");
}

SurrogateKind default_surrogate(AcquisitionKind kind) {
  return kind == AcquisitionKind::HAEI || kind == AcquisitionKind::ANPEI ? SurrogateKind::MLHGP
                                                                         : SurrogateKind::Homoscedastic;
}

void BOConfig::validate() const {
  acquisition.validate();
  if (init_size < 1) throw InvalidInput("init_size must be at least 1");
  if (iterations < 0) throw InvalidInput("iterations must be non-negative");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in [0, 1]");
  if (n_restarts < 1 || refit_restarts < 1 || mlhgp_restarts < 1 || mlhgp_refit_restarts < 1) {
    throw InvalidInput("restart counts must be at least 1");
  }
  if (mlhgp_iterations < 0) throw InvalidInput("mlhgp_iterations must be non-negative");
  if (mlhgp_samples < 2) throw InvalidInput("mlhgp_samples must be at least 2");
  if (propose.n_samples < 1 || propose.n_refine < 0 || propose.refine_steps < 0) {
    throw InvalidInput("invalid acquisition optimiser settings");
  }
}

// --- surrogate ---------------------------------------------------------------------

SurrogateKind Surrogate::kind() const {
  return std::holds_alternative<gp::GPModel>(model_) ? SurrogateKind::Homoscedastic : SurrogateKind::MLHGP;
}

SurrogatePrediction Surrogate::predict(const MatrixXd& x) const {
  const kernels::Inputs in = kernels::Inputs::real(x);
  SurrogatePrediction out;
  if (const auto* m = homoscedastic()) {
    gp::PredictOptions po;
    po.standardised = true;
    gp::PosteriorPrediction p = gp::predict(*m, in, po);
    out.mean = std::move(p.mean);
    out.var_t = std::move(p.variance);
    out.r = VectorXd::Constant(x.rows(), m->noise_variance());
  } else {
    hetgp::HetPrediction p = hetgp::predict_het(*mlhgp(), in, true);
    out.mean = std::move(p.mean);
    out.var_t = std::move(p.epistemic);
    out.r = std::move(p.aleatoric);
  }
  return out;
}

double Surrogate::incumbent() const {
  if (const auto* m = homoscedastic()) return acquisition::incumbent(*m, m->data().inputs);
  const auto& latent = mlhgp()->g_latent;
  return acquisition::incumbent(latent, latent.data().inputs);
}

double Surrogate::output_scale() const {
  if (const auto* m = homoscedastic()) return m->stats().std;
  return mlhgp()->stats.std;
}

double Surrogate::noise_std() const {
  if (const auto* m = homoscedastic()) return std::sqrt(m->noise_variance());
  const auto& latent = mlhgp()->g_latent;
  return predict(latent.data().inputs.points).r.array().sqrt().mean();
}

VectorXd Surrogate::acquisition(const AcquisitionSpec& spec, const MatrixXd& x) const {
  const SurrogatePrediction p = predict(x);
  double sigma_n = 0.0;
  if (spec.kind == AcquisitionKind::AEI) sigma_n = spec.fixed_noise ? *spec.fixed_noise / output_scale() : noise_std();
  return acquisition::evaluate(spec, p.mean, p.var_t, p.r, incumbent(), sigma_n);
}

// --- proposals -----------------------------------------------------------------------

Proposal propose(const Surrogate* surrogate, const AcquisitionSpec& spec, const VectorXd& lower,
                 const VectorXd& upper, Rng& rng, const ProposeOptions& options) {
  if (lower.size() != upper.size() || lower.size() == 0) throw InvalidInput("invalid box bounds");
  Proposal out;
  if (spec.kind == AcquisitionKind::Random || !surrogate) {
    out.x = uniform_point(lower, upper, rng);
    out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const Index d = lower.size();
  MatrixXd samples(options.n_samples, d);
  for (Index i = 0; i < samples.rows(); ++i) samples.row(i) = uniform_point(lower, upper, rng).transpose();
  const VectorXd values = surrogate->acquisition(spec, samples);

  std::vector<Index> order(static_cast<std::size_t>(samples.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values[a] > values[b]; });

  out.x = samples.row(order.front()).transpose();
  out.value = values[order.front()];
  const Index n_refine = std::min<Index>(options.n_refine, samples.rows());
  const VectorXd range = upper - lower;
  for (Index k = 0; k < n_refine; ++k) {
    VectorXd x = samples.row(order[static_cast<std::size_t>(k)]).transpose();
    double v = values[order[static_cast<std::size_t>(k)]];
    VectorXd step = options.initial_step * range;
    for (int s = 0; s < options.refine_steps; ++s) {
      MatrixXd nb(2 * d, d);
      for (Index j = 0; j < d; ++j) {
        nb.row(2 * j) = x.transpose();
        nb.row(2 * j + 1) = x.transpose();
        nb(2 * j, j) = std::min(upper[j], x[j] + step[j]);
        nb(2 * j + 1, j) = std::max(lower[j], x[j] - step[j]);
      }
      const VectorXd nv = surrogate->acquisition(spec, nb);
      const Index b = first_argmax(nv);
      if (nv[b] > v) {
        x = nb.row(b).transpose();
        v = nv[b];
      } else {
        step *= 0.5;
      }
    }
    if (v > out.value) {
      out.x = x;
      out.value = v;
    }
  }
  return out;
}

Proposal propose(const Surrogate* surrogate, const AcquisitionSpec& spec, const MatrixXd& candidates,
                 std::span<const Index> available, Rng& rng) {
  if (available.empty()) throw InvalidInput("no candidates left to propose");
  Proposal out;
  if (spec.kind == AcquisitionKind::Random || !surrogate) {
    std::uniform_int_distribution<std::size_t> pick(0, available.size() - 1);
    out.index = available[pick(rng)];
    out.x = candidates.row(out.index).transpose();
    out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  MatrixXd x(static_cast<Index>(available.size()), candidates.cols());
  for (std::size_t i = 0; i < available.size(); ++i) x.row(static_cast<Index>(i)) = candidates.row(available[i]);
  const VectorXd values = surrogate->acquisition(spec, x);
  Index b = 0;
  for (Index i = 1; i < values.size(); ++i) {
    const auto ui = static_cast<std::size_t>(i), ub = static_cast<std::size_t>(b);
    if (values[i] > values[b] || (values[i] == values[b] && available[ui] < available[ub])) b = i;
  }
  out.index = available[static_cast<std::size_t>(b)];
  out.x = candidates.row(out.index).transpose();
  out.value = values[b];
  return out;
}

// --- loops ---------------------------------------------------------------------------

BOTrace run_bo(const objectives::SyntheticObjective& objective, const BOConfig& config) {
  config.validate();
  const auto t_start = Clock::now();
  BOTrace trace;
  trace.config = config;
  trace.objective = objective.name();
  trace.direction = objective.direction();

  Rng init_rng = make_rng(config.seed, 1);
  Rng propose_rng = make_rng(config.seed, 2);
  const std::uint64_t noise_seed = split_seed(config.seed, 3);
  const std::uint64_t fit_seed = split_seed(config.seed, 4);
  RunningBest best{objective.direction(), {}, {}};

  const Index n_total = config.init_size + config.iterations;
  MatrixXd xs(n_total, objective.dimension());
  VectorXd ys(n_total);

  auto observe = [&](int k, const VectorXd& x, const char* phase) -> BORecord& {
    BORecord rec;
    rec.iter = k;
    rec.phase = phase;
    rec.x = x;
    rec.y = objectives::sample_noisy(objective, x, split_seed(noise_seed, static_cast<std::uint64_t>(k)));
    const objectives::Evaluation e = objectives::eval_objective(objective, x);
    rec.f_true = e.f;
    rec.g_true = e.g;
    xs.row(k) = x.transpose();
    ys[k] = rec.y;
    trace.records.push_back(std::move(rec));
    return trace.records.back();
  };

  for (int k = 0; k < config.init_size; ++k) {
    const auto t0 = Clock::now();
    BORecord& rec = observe(k, uniform_point(objective.lower(), objective.upper(), init_rng), "init");
    finish_record(rec, config.alpha, objective.direction(), best);
    rec.wall_ms = elapsed_ms(t0);
  }

  std::optional<Surrogate> surrogate;
  for (int it = 0; it < config.iterations; ++it) {
    const auto t0 = Clock::now();
    const int k = config.init_size + it;
    bool failed = false;
    if (config.acquisition.kind != AcquisitionKind::Random) {
      try {
        surrogate = fit_surrogate(xs.topRows(k), ys.head(k), objective.direction(), config,
                                  surrogate ? &*surrogate : nullptr, split_seed(fit_seed, static_cast<std::uint64_t>(it)));
      } catch (const Error& e) {
        failed = true;
        trace.log.push_back("iteration " + std::to_string(it) + ": surrogate fit failed (" + e.what() +
                            "); reusing the previous surrogate");
      }
    }
    const Proposal p = propose(surrogate ? &*surrogate : nullptr, config.acquisition, objective.lower(),
                               objective.upper(), propose_rng, config.propose);
    BORecord& rec = observe(k, p.x, "bo");
    if (!std::isnan(p.value)) rec.acq_value = p.value;
    rec.fit_failed = failed;
    finish_record(rec, config.alpha, objective.direction(), best);
    rec.wall_ms = elapsed_ms(t0);
  }
  trace.wall_ms = elapsed_ms(t_start);
  return trace;
}

BOTrace run_bo(objectives::TabularObjective& objective, const BOConfig& config, const std::string& name) {
  config.validate();
  if (config.init_size >= objective.remaining()) {
    throw InvalidInput("candidate-set mode needs rows left over after initialisation (" +
                       std::to_string(objective.remaining()) + " available, init_size " +
                       std::to_string(config.init_size) + ")");
  }
  const auto t_start = Clock::now();
  BOTrace trace;
  trace.config = config;
  trace.objective = name;
  trace.direction = objective.direction();

  Rng init_rng = make_rng(config.seed, 1);
  Rng propose_rng = make_rng(config.seed, 2);
  const std::uint64_t fit_seed = split_seed(config.seed, 4);
  RunningBest best{objective.direction(), {}, {}};
  const bool has_truth = objective.noise_std().has_value();

  std::vector<Index> rows;
  auto observe = [&](int k, Index row, const char* phase) -> BORecord& {
    BORecord rec;
    rec.iter = k;
    rec.phase = phase;
    rec.row = row;
    rec.x = objective.features().row(row).transpose();
    rec.y = objective.query(row);
    if (has_truth) {
      const objectives::Evaluation e = objective.truth(row);
      rec.f_true = e.f;
      rec.g_true = e.g;
    }
    rows.push_back(row);
    trace.records.push_back(std::move(rec));
    return trace.records.back();
  };

  std::vector<Index> pool;
  for (Index r = 0; r < objective.size(); ++r) {
    if (!objective.queried(r)) pool.push_back(r);
  }
  for (int k = 0; k < config.init_size; ++k) {
    const auto t0 = Clock::now();
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), pool.size() - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[pick(init_rng)]);
    BORecord& rec = observe(k, pool[static_cast<std::size_t>(k)], "init");
    finish_record(rec, config.alpha, objective.direction(), best);
    rec.wall_ms = elapsed_ms(t0);
  }

  std::optional<Surrogate> surrogate;
  for (int it = 0; it < config.iterations; ++it) {
    const auto t0 = Clock::now();
    std::vector<Index> available;
    for (Index r = 0; r < objective.size(); ++r) {
      if (!objective.queried(r)) available.push_back(r);
    }
    if (available.empty()) {
      trace.exhausted = true;
      trace.log.push_back("candidate set exhausted after " + std::to_string(it) + " iterations");
      break;
    }
    const int k = config.init_size + it;
    bool failed = false;
    if (config.acquisition.kind != AcquisitionKind::Random) {
      MatrixXd x(static_cast<Index>(rows.size()), objective.dimension());
      VectorXd y(static_cast<Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        x.row(static_cast<Index>(i)) = objective.features().row(rows[i]);
        y[static_cast<Index>(i)] = objective.targets()[rows[i]];
      }
      try {
        surrogate = fit_surrogate(x, y, objective.direction(), config, surrogate ? &*surrogate : nullptr,
                                  split_seed(fit_seed, static_cast<std::uint64_t>(it)));
      } catch (const Error& e) {
        failed = true;
        trace.log.push_back("iteration " + std::to_string(it) + ": surrogate fit failed (" + e.what() +
                            "); reusing the previous surrogate");
      }
    }
    const Proposal p = propose(surrogate ? &*surrogate : nullptr, config.acquisition, objective.features(), available,
                               propose_rng);
    BORecord& rec = observe(k, p.index, "bo");
    if (!std::isnan(p.value)) rec.acq_value = p.value;
    rec.fit_failed = failed;
    finish_record(rec, config.alpha, objective.direction(), best);
    rec.wall_ms = elapsed_ms(t0);
  }
  trace.wall_ms = elapsed_ms(t_start);
  return trace;
}

// --- multi-seed ------------------------------------------------------------------------

int default_threads() {
  if (const char* env = std::getenv("HETGP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::vector<BOTrace> run_seeds(const std::function<BOTrace(const BOConfig&)>& make_run, const BOConfig& config,
                               int n_seeds, int threads) {
  if (n_seeds < 1) throw InvalidInput("n_seeds must be at least 1");
  std::vector<BOTrace> traces(static_cast<std::size_t>(n_seeds));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_seeds));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n_seeds; i = next++) {
      BOConfig c = config;
      c.seed = split_seed(config.seed, static_cast<std::uint64_t>(i));
      try {
        traces[static_cast<std::size_t>(i)] = make_run(c);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int n_workers = std::clamp(threads, 1, n_seeds);
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return traces;
}

BOSummary summarise(const std::vector<BOTrace>& traces) {
  BOSummary s;
  s.n_seeds = static_cast<int>(traces.size());
  if (traces.empty()) return s;
  std::size_t len = traces.front().records.size();
  for (const auto& t : traces) len = std::min(len, t.records.size());
  auto stats = [&](auto get, std::vector<double>& mean, std::vector<double>& se) {
    for (std::size_t k = 0; k < len; ++k) {
      std::vector<double> v;
      for (const auto& t : traces) {
        if (auto x = get(t.records[k])) v.push_back(*x);
      }
      if (v.empty()) {
        mean.push_back(std::numeric_limits<double>::quiet_NaN());
        se.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      const double n = static_cast<double>(v.size());
      mean.push_back(m);
      se.push_back(v.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0);
    }
  };
  stats([](const BORecord& r) { return r.best_h; }, s.mean_best_h, s.se_best_h);
  stats([](const BORecord& r) { return r.lowest_g; }, s.mean_lowest_g, s.se_lowest_g);
  return s;
}

double sign_test_less(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("sign test needs paired samples");
  int wins = 0;
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    ++n;
    if (a[i] < b[i]) ++wins;
  }
  if (n == 0) return 1.0;
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  return std::min(1.0, p);
}

void write_trace_csv(std::ostream& out, const BOTrace& trace, std::uint64_t seed, bool header) {
  const Index d = trace.records.empty() ? 0 : trace.records.front().x.size();
  if (header) {
    out << "seed,iter,phase";
    for (Index j = 0; j < d; ++j) out << ",x" << j;
    out << ",y,f_true,g_true,best_h,lowest_g,acq_value,wall_ms\n";
  }
  const auto old = out.precision(17);
  auto opt = [&](const std::optional<double>& v) {
    out << ',';
    if (v) out << *v;
  };
  for (const auto& r : trace.records) {
    out << seed << ',' << r.iter << ',' << r.phase;
    for (Index j = 0; j < r.x.size(); ++j) out << ',' << r.x[j];
    out << ',' << r.y;
    opt(r.f_true);
    opt(r.g_true);
    opt(r.best_h);
    opt(r.lowest_g);
    opt(r.acq_value);
    out << ',' << r.wall_ms << '\n';
  }
  out.precision(old);
}

}  // namespace hetbo::bo

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

#include "hetbo/benchmark.hpp"
#include "hetbo/bo.hpp"
#include "hetbo/dataset_io.hpp"
#include "hetbo/errors.hpp"
#include "hetbo/gp.hpp"
#include "hetbo/hetgp.hpp"
#include "hetbo/objectives.hpp"
#include "hetbo/serialize.hpp"
#include "hetbo/timeseries.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace hetbo;
using nlohmann::json;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// --- output helpers ----------------------------------------------------------------

// Writes through `fn` to `path`, or to stdout when the path is empty or "-".
template <typename F>
void emit(const std::string& path, F&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  fn(out);
}

void emit_json(const std::string& path, const json& j) {
  emit(path, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

timeseries::Lightcurve read_lightcurve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open lightcurve '" + path + "'");
  try {
    return timeseries::read_lightcurve_csv(in);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

// --- kernels -------------------------------------------------------------------------

struct KernelArgs {
  std::string family = "sqe";
  std::string base = "sqe";
  bool ard = true;
  int ngram_order = 5;

  void add(CLI::App* app, const std::string& default_family) {
    family = default_family;
    app->add_option("--kernel", family, "Kernel family tag");
    app->add_option("--base-kernel", base, "Base kernel of the icm wrapper");
    app->add_option("--ard", ard, "One lengthscale per input dimension");
    app->add_option("--ngram-order", ngram_order, "Maximum n-gram length of the string kernel");
  }

  kernels::KernelSpec build_single(const std::string& tag, const kernels::Inputs& inputs) const {
    const kernels::KernelFamily f = kernels::family_from_string(tag);
    switch (f) {
      case kernels::KernelFamily::Tanimoto: return kernels::KernelSpec::tanimoto();
      case kernels::KernelFamily::ScalarProduct: return kernels::KernelSpec::scalar_product();
      case kernels::KernelFamily::StringNGram: return kernels::KernelSpec::string_ngram(ngram_order);
      case kernels::KernelFamily::ICM: throw InvalidInput("icm cannot wrap another icm kernel");
      default: return kernels::KernelSpec::continuous(f, std::max<Index>(1, inputs.dimension()), ard);
    }
  }

  kernels::KernelSpec build(const kernels::Inputs& inputs, int num_tasks) const {
    if (family == "icm") {
      if (num_tasks < 1) throw InvalidInput("the icm kernel needs task-labelled data");
      return kernels::KernelSpec::icm(build_single(base, inputs), num_tasks);
    }
    if (inputs.multitask()) throw InvalidInput("task-labelled data needs --kernel icm");
    return build_single(family, inputs);
  }
};

// --- commands ------------------------------------------------------------------------

struct FitArgs {
  std::string data, out;
  KernelArgs kernel;
  int restarts = 20;
  std::optional<double> fix_noise;
  double jitter = 1e-6;
  bool mlhgp = false;
  std::string noise_kernel = "sqe";
  int mlhgp_iterations = 10;
  int samples = 100;
};

int run_fit(const FitArgs& a, std::uint64_t seed) {
  const io::LoadedDataset loaded = io::read_dataset_file(a.data);
  const kernels::KernelSpec kernel = a.kernel.build(loaded.data.inputs, loaded.num_tasks);
  if (a.mlhgp) {
    hetgp::MLHGPOptions mo;
    mo.max_iterations = a.mlhgp_iterations;
    mo.sample_size = a.samples;
    mo.seed = seed;
    mo.n_restarts = a.restarts;
    mo.jitter = a.jitter;
    KernelArgs nk = a.kernel;
    nk.family = a.noise_kernel;
    const auto model = hetgp::fit_mlhgp(loaded.data, kernel, nk.build(loaded.data.inputs, loaded.num_tasks), mo);
    emit_json(a.out, serialize::mlhgp_to_json(model, a.data));
    return 0;
  }
  gp::FitOptions fo;
  fo.n_restarts = a.restarts;
  fo.jitter = a.jitter;
  fo.seed = seed;
  if (a.fix_noise) {
    fo.fix_noise = true;
    fo.noise_variance = *a.fix_noise;
  }
  const gp::GPModel model = gp::fit_gp(loaded.data, kernel, fo);
  emit_json(a.out, serialize::model_to_json(model, a.data));
  return 0;
}

struct PredictArgs {
  std::string model, data, test, out;
  bool include_noise = false;
};

int run_predict(const PredictArgs& a) {
  const json doc = read_json_file(a.model);
  const std::string data_path = a.data.empty() ? doc.value("training_data", std::string()) : a.data;
  if (data_path.empty()) throw InvalidInput("no training data: pass --data");
  const io::LoadedDataset loaded = io::read_dataset_file(data_path);
  const kernels::Inputs test = io::read_inputs_file(a.test);
  emit(a.out, [&](std::ostream& o) {
    o.precision(17);
    if (doc.value("type", "gp") == "mlhgp") {
      const hetgp::MLHGPModel m = serialize::mlhgp_from_json(doc, loaded.data);
      const hetgp::HetPrediction p = hetgp::predict_het(m, test);
      o << "mean,variance,epistemic,aleatoric\n";
      for (Index i = 0; i < p.mean.size(); ++i) {
        const double var = p.epistemic[i] + (a.include_noise ? p.aleatoric[i] : 0.0);
        o << p.mean[i] << ',' << var << ',' << p.epistemic[i] << ',' << p.aleatoric[i] << '\n';
      }
      return;
    }
    const gp::GPModel m = serialize::model_from_json(doc, loaded.data);
    gp::PredictOptions po;
    po.include_noise = a.include_noise;
    const gp::PosteriorPrediction p = gp::predict(m, test, po);
    o << "mean,variance\n";
    for (Index i = 0; i < p.mean.size(); ++i) o << p.mean[i] << ',' << p.variance[i] << '\n';
  });
  return 0;
}

struct BenchArgs {
  std::string data, out;
  KernelArgs kernel;
  int splits = 20;
  double train_fraction = 0.8;
  int restarts = 20;
  double jitter = 1e-6;
};

int run_bench(const BenchArgs& a, std::uint64_t seed, int threads) {
  const io::LoadedDataset loaded = io::read_dataset_file(a.data);
  benchmark::BenchmarkOptions bo;
  bo.n_splits = a.splits;
  bo.train_fraction = a.train_fraction;
  bo.seed = seed;
  bo.threads = threads;
  bo.fit.n_restarts = a.restarts;
  bo.fit.jitter = a.jitter;
  const auto report =
      benchmark::run_regression_benchmark(loaded.data, a.kernel.build(loaded.data.inputs, loaded.num_tasks), bo);
  emit_json(a.out, serialize::report_to_json(report));
  return 0;
}

struct BOArgs {
  std::string objective, table, noise = "het", acq = "ei", surrogate = "auto", direction = "min";
  std::string trace, summary;
  double gamma = 1.0, beta = 0.5, alpha = 0.5;
  std::optional<double> fixed_noise;
  int init = 25, iterations = 10, seeds = 1;
  int restarts = 20, refit_restarts = 10, mlhgp_iterations = 10, samples = 100, mlhgp_restarts = 20,
      mlhgp_refit_restarts = 10;
};

int run_bo_command(const BOArgs& a, std::uint64_t seed, int threads) {
  if (a.objective.empty() == a.table.empty()) throw InvalidInput("pass exactly one of --objective or --table");
  bo::BOConfig c;
  c.acquisition.kind = acquisition::kind_from_string(a.acq);
  c.acquisition.gamma = a.gamma;
  c.acquisition.beta = a.beta;
  c.acquisition.fixed_noise = a.fixed_noise;
  c.surrogate = a.surrogate == "auto" ? bo::default_surrogate(c.acquisition.kind) : bo::surrogate_from_string(a.surrogate);
  c.init_size = a.init;
  c.iterations = a.iterations;
  c.alpha = a.alpha;
  c.seed = seed;
  c.n_restarts = a.restarts;
  c.refit_restarts = a.refit_restarts;
  c.mlhgp_iterations = a.mlhgp_iterations;
  c.mlhgp_samples = a.samples;
  c.mlhgp_restarts = a.mlhgp_restarts;
  c.mlhgp_refit_restarts = a.mlhgp_refit_restarts;

  std::function<bo::BOTrace(const bo::BOConfig&)> make_run;
  if (!a.objective.empty()) {
    const auto objective = objectives::SyntheticObjective::make(a.objective, objectives::NoiseSpec::parse(a.noise));
    c.acquisition.direction = objective.direction();
    make_run = [objective](const bo::BOConfig& cfg) { return bo::run_bo(objective, cfg); };
  } else {
    const io::LoadedDataset loaded = io::read_dataset_file(a.table);
    if (loaded.data.inputs.kind == kernels::InputKind::String || loaded.data.inputs.multitask()) {
      throw InvalidInput("table objectives need single-task vector inputs");
    }
    const auto direction = acquisition::direction_from_string(a.direction);
    c.acquisition.direction = direction;
    const objectives::TabularObjective table(loaded.data.inputs.points, loaded.data.targets, loaded.data.noise_std,
                                             direction);
    const std::string name = a.table;
    make_run = [table, name](const bo::BOConfig& cfg) {
      objectives::TabularObjective copy = table;
      return bo::run_bo(copy, cfg, name);
    };
  }
  c.validate();
  const std::vector<bo::BOTrace> traces = bo::run_seeds(make_run, c, a.seeds, threads);
  emit(a.trace, [&](std::ostream& o) {
    for (std::size_t i = 0; i < traces.size(); ++i) bo::write_trace_csv(o, traces[i], i, i == 0);
  });
  for (const auto& t : traces) {
    for (const auto& line : t.log) std::cerr << line << '\n';
  }
  if (!a.summary.empty()) {
    json s = serialize::summary_to_json(bo::summarise(traces));
    s["objective"] = traces.front().objective;
    s["acquisition"] = acquisition::to_string(c.acquisition.kind);
    s["surrogate"] = bo::to_string(c.surrogate);
    s["alpha"] = c.alpha;
    s["master_seed"] = seed;
    emit_json(a.summary, s);
  }
  return 0;
}

struct SimArgs {
  double beta = 2.0, dt = 1.0;
  Index n = 4390;
  Index keep = 0;
  std::string out, gapped_out;
};

int run_simulate(const SimArgs& a, std::uint64_t seed) {
  const timeseries::Lightcurve lc = timeseries::simulate_lightcurve(a.beta, a.n, a.dt, seed);
  emit(a.out, [&](std::ostream& o) { timeseries::write_lightcurve_csv(o, lc); });
  if (a.keep > 0) {
    const auto gapped = timeseries::apply_gaps(lc, timeseries::random_keep_times(lc, a.keep, split_seed(seed, 1)));
    if (a.gapped_out.empty()) throw InvalidInput("--keep needs --gapped-out");
    emit(a.gapped_out, [&](std::ostream& o) { timeseries::write_lightcurve_csv(o, gapped); });
  }
  return 0;
}

struct SFArgs {
  std::string lc, out, fit;
  double delta = 5.3;
  bool normalise = true, subtract_noise = false, allow_single = true;
};

int run_structfunc(const SFArgs& a) {
  const auto lc = read_lightcurve(a.lc);
  timeseries::StructureFunctionOptions so;
  so.normalise = a.normalise;
  so.subtract_noise = a.subtract_noise;
  const auto sf = timeseries::structure_function(lc, a.delta, so);
  emit(a.out, [&](std::ostream& o) { timeseries::write_structure_function_csv(o, sf); });
  if (!a.fit.empty()) {
    VectorXd w = VectorXd::Ones(static_cast<Index>(sf.sf.size()));
    for (std::size_t b = 0; b < sf.sf.size(); ++b) {
      if (sf.standard_error[b] && *sf.standard_error[b] > 0.0 && sf.sf[b] && *sf.sf[b] > 0.0) {
        // Uncertainty of log SF is stderr / SF.
        const double rel = *sf.standard_error[b] / *sf.sf[b];
        w[static_cast<Index>(b)] = 1.0 / (rel * rel);
      }
    }
    emit_json(a.fit, serialize::power_law_to_json(timeseries::fit_broken_power_law(sf, w, a.allow_single)));
  }
  return 0;
}

struct LagArgs {
  std::string lc_a, lc_b, out;
  KernelArgs kernel;
  double dt = 1.0, noise_variance = 0.0, jitter = 1e-3;
  int pairs = 1000, bins = 8, restarts = 20;
  std::optional<double> f_min, f_max;
};

int run_lagspec(const LagArgs& a, std::uint64_t seed) {
  const auto la = read_lightcurve(a.lc_a);
  const auto lb = read_lightcurve(a.lc_b);
  const double t0 = std::max(la.times[0], lb.times[0]);
  const double t1 = std::min(la.times[la.size() - 1], lb.times[lb.size() - 1]);
  if (!(t1 > t0) || !(a.dt > 0.0)) throw InvalidInput("the two lightcurves do not overlap in time");
  const auto n = static_cast<Index>(std::floor((t1 - t0) / a.dt)) + 1;
  const VectorXd grid = VectorXd::LinSpaced(n, t0, t0 + a.dt * static_cast<double>(n - 1));
  gp::FitOptions fo;
  fo.fix_noise = true;
  fo.noise_variance = a.noise_variance;
  fo.jitter = a.jitter;
  fo.n_restarts = a.restarts;
  const kernels::Inputs in = kernels::Inputs::real(MatrixXd(grid));
  std::vector<MatrixXd> draws;
  std::uint64_t stream = 0;
  for (const auto* lc : {&la, &lb}) {
    fo.seed = split_seed(seed, stream);
    const auto fit = timeseries::fit_lightcurve_gp(*lc, grid, a.kernel.build(in, 0), fo);
    draws.push_back(gp::sample_posterior(fit.model, in, a.pairs, split_seed(seed, 10 + stream)));
    ++stream;
  }
  std::vector<std::pair<timeseries::Lightcurve, timeseries::Lightcurve>> pairs;
  for (int p = 0; p < a.pairs; ++p) {
    timeseries::Lightcurve x{grid, draws[0].row(p).transpose(), std::nullopt};
    timeseries::Lightcurve y{grid, draws[1].row(p).transpose(), std::nullopt};
    pairs.emplace_back(std::move(x), std::move(y));
  }
  timeseries::CrossSpectrumOptions co;
  co.n_bins = a.bins;
  co.f_min = a.f_min;
  co.f_max = a.f_max;
  const auto spectrum = timeseries::coherence_lag(pairs, co);
  emit(a.out, [&](std::ostream& o) { timeseries::write_cross_spectrum_csv(o, spectrum); });
  return 0;
}

struct OracleArgs {
  std::string data, out;
  KernelArgs kernel;
  double bandwidth = 0.0;
  int restarts = 20;
};

int run_oracle(const OracleArgs& a, std::uint64_t seed) {
  io::LoadedDataset loaded = io::read_dataset_file(a.data);
  gp::FitOptions fo;
  fo.n_restarts = a.restarts;
  fo.seed = seed;
  const VectorXd var = objectives::smoothed_noise_oracle(
      loaded.data, a.bandwidth, a.kernel.build(loaded.data.inputs, loaded.num_tasks), fo);
  gp::Dataset out = loaded.data;
  out.noise_std = var.array().sqrt().matrix();
  emit(a.out, [&](std::ostream& o) { io::write_dataset_csv(o, out); });
  return 0;
}

struct PCAArgs {
  std::string data, out;
  int components = 14;
};

int run_pca(const PCAArgs& a) {
  io::LoadedDataset loaded = io::read_dataset_file(a.data);
  const MatrixXd& x = loaded.data.inputs.points;
  if (loaded.data.inputs.kind == kernels::InputKind::String) throw InvalidInput("PCA needs vector inputs");
  if (a.components < 1 || a.components > x.cols()) {
    throw InvalidInput("components must lie in [1, " + std::to_string(x.cols()) + "]");
  }
  const MatrixXd centred = x.rowwise() - x.colwise().mean();
  Eigen::BDCSVD<MatrixXd> svd(centred, Eigen::ComputeThinV);
  const MatrixXd scores = centred * svd.matrixV().leftCols(a.components);
  gp::Dataset out = loaded.data;
  out.inputs = kernels::Inputs::real(scores);
  if (loaded.data.inputs.multitask()) out.inputs = out.inputs.with_tasks(loaded.data.inputs.tasks);
  emit(a.out, [&](std::ostream& o) { io::write_dataset_csv(o, out); });
  return 0;
}

// --- config files ----------------------------------------------------------------------

// Flags from a flat JSON object, inserted after the subcommand name so that
// flags given on the command line still take precedence.
std::vector<std::string> config_tokens(const std::string& path) {
  const json j = read_json_file(path);
  if (!j.is_object()) throw InvalidInput(path + ": config must be a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : j.items()) {
    if (key == "config" || key == "write-config") continue;
    auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_null()) continue;
    if (value.is_array()) {
      for (const auto& v : value) {
        tokens.push_back("--" + key);
        tokens.push_back(scalar(v));
      }
    } else {
      tokens.push_back("--" + key);
      tokens.push_back(scalar(value));
    }
  }
  return tokens;
}

json effective_config(const CLI::App* sub, const CLI::App* root) {
  json j;
  for (const CLI::App* app : {root, sub}) {
    for (const CLI::Option* opt : app->get_options()) {
      const std::string name = opt->get_single_name();
      if (name == "help" || name == "config" || name == "write-config" || opt->get_lnames().empty()) continue;
      std::string value;
      if (opt->count() > 0) {
        value = opt->results().back();
      } else {
        value = opt->get_default_str();
      }
      if (value.empty()) continue;
      j[opt->get_lnames().front()] = value;
    }
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    for (std::size_t i = 1; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
      if (path.empty()) continue;
      std::size_t at = 1;
      while (at < args.size() && !args[at].empty() && args[at][0] == '-') ++at;
      const auto tokens = config_tokens(path);
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(std::min(at + 1, args.size())), tokens.begin(),
                  tokens.end());
      break;
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{"Gaussian-process regression, heteroscedastic Bayesian optimisation and lightcurve analysis"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  int threads = bo::default_threads();
  std::string config_path, write_config;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--threads", threads, "Worker threads (default: HETGP_THREADS, else all cores)");
    sub->add_option("--config", config_path, "JSON file of flag values");
    sub->add_option("--write-config", write_config, "Write the effective flag values as JSON");
  };

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit a GP (or MLHGP) and write the model JSON");
  c_fit->add_option("--data", fit.data, "Training CSV")->required();
  fit.kernel.add(c_fit, "sqe");
  c_fit->add_option("--restarts", fit.restarts, "Optimiser restarts");
  c_fit->add_option("--fix-noise", fit.fix_noise, "Hold the noise variance (standardised units) at this value");
  c_fit->add_option("--jitter", fit.jitter, "Initial diagonal jitter");
  c_fit->add_option("--mlhgp", fit.mlhgp, "Fit the most likely heteroscedastic GP");
  c_fit->add_option("--noise-kernel", fit.noise_kernel, "Kernel of the log-noise GP");
  c_fit->add_option("--mlhgp-iterations", fit.mlhgp_iterations, "MLHGP iterations");
  c_fit->add_option("--samples", fit.samples, "Samples per point in the noise estimator");
  c_fit->add_option("--out", fit.out, "Output JSON (stdout if omitted)");
  common(c_fit);

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Predict with a saved model");
  c_pred->add_option("--model", pred.model, "Model JSON")->required();
  c_pred->add_option("--data", pred.data, "Training CSV (defaults to the path stored in the model)");
  c_pred->add_option("--test", pred.test, "CSV of test inputs")->required();
  c_pred->add_option("--include-noise", pred.include_noise, "Add observation noise to the variances");
  c_pred->add_option("--out", pred.out, "Output CSV");
  common(c_pred);

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("regress-bench", "Repeated train/test regression benchmark");
  c_bench->add_option("--data", bench.data, "Dataset CSV")->required();
  bench.kernel.add(c_bench, "sqe");
  c_bench->add_option("--splits", bench.splits, "Number of random splits");
  c_bench->add_option("--train-fraction", bench.train_fraction, "Training fraction per split");
  c_bench->add_option("--restarts", bench.restarts, "Optimiser restarts");
  c_bench->add_option("--jitter", bench.jitter, "Initial diagonal jitter");
  c_bench->add_option("--out", bench.out, "Output JSON");
  common(c_bench);

  BOArgs boa;
  auto* c_bo = app.add_subcommand("bo", "Bayesian optimisation over a synthetic task or a table");
  c_bo->add_option("--objective", boa.objective, "sin-het, branin-het, hosaki-het or gprice-het");
  c_bo->add_option("--table", boa.table, "Dataset CSV used as a finite candidate set");
  c_bo->add_option("--direction", boa.direction, "min or max (tables)");
  c_bo->add_option("--noise", boa.noise, "off, homo:<sigma> or het");
  c_bo->add_option("--acq", boa.acq, "ei, aei, haei, anpei or random");
  c_bo->add_option("--gamma", boa.gamma, "HAEI penalty");
  c_bo->add_option("--beta", boa.beta, "ANPEI weight");
  c_bo->add_option("--fixed-noise", boa.fixed_noise, "AEI noise level (output units)");
  c_bo->add_option("--surrogate", boa.surrogate, "auto, homoscedastic or mlhgp");
  c_bo->add_option("--init", boa.init, "Initial random points");
  c_bo->add_option("--iterations", boa.iterations, "Sequential iterations");
  c_bo->add_option("--alpha", boa.alpha, "Composite weight used in the trace");
  c_bo->add_option("--seeds", boa.seeds, "Independent runs");
  c_bo->add_option("--restarts", boa.restarts, "Restarts for the first surrogate fit");
  c_bo->add_option("--refit-restarts", boa.refit_restarts, "Restarts for later fits (including the warm start)");
  c_bo->add_option("--mlhgp-iterations", boa.mlhgp_iterations, "MLHGP iterations");
  c_bo->add_option("--samples", boa.samples, "Samples per point in the noise estimator");
  c_bo->add_option("--mlhgp-restarts", boa.mlhgp_restarts, "Restarts for the first MLHGP sub-fits");
  c_bo->add_option("--mlhgp-refit-restarts", boa.mlhgp_refit_restarts, "Restarts for later MLHGP sub-fits");
  c_bo->add_option("--trace", boa.trace, "Trace CSV");
  c_bo->add_option("--summary", boa.summary, "Summary JSON");
  common(c_bo);

  SimArgs sim;
  auto* c_sim = app.add_subcommand("simulate-lc", "Simulate a power-law lightcurve");
  c_sim->add_option("--beta", sim.beta, "PSD index");
  c_sim->add_option("--n", sim.n, "Number of samples");
  c_sim->add_option("--dt", sim.dt, "Time step (days)");
  c_sim->add_option("--keep", sim.keep, "Also write a gapped copy keeping this many points");
  c_sim->add_option("--out", sim.out, "Output CSV");
  c_sim->add_option("--gapped-out", sim.gapped_out, "Gapped output CSV");
  common(c_sim);

  SFArgs sfa;
  auto* c_sf = app.add_subcommand("structfunc", "Binned structure function");
  c_sf->add_option("--lc", sfa.lc, "Lightcurve CSV")->required();
  c_sf->add_option("--delta", sfa.delta, "Bin width (days)");
  c_sf->add_option("--normalise", sfa.normalise, "Divide by the global variance");
  c_sf->add_option("--subtract-noise", sfa.subtract_noise, "Subtract the measurement-noise term");
  c_sf->add_option("--fit", sfa.fit, "Write a broken power-law fit to this JSON file");
  c_sf->add_option("--allow-single", sfa.allow_single, "Prefer a single power law when the break barely helps");
  c_sf->add_option("--out", sfa.out, "Output CSV");
  common(c_sf);

  LagArgs lag;
  auto* c_lag = app.add_subcommand("lagspec", "Coherence and lag spectra from GP posterior sample pairs");
  c_lag->add_option("--lc-a", lag.lc_a, "First lightcurve CSV")->required();
  c_lag->add_option("--lc-b", lag.lc_b, "Second lightcurve CSV")->required();
  lag.kernel.add(c_lag, "matern12");
  c_lag->add_option("--dt", lag.dt, "Sampling grid step (days)");
  c_lag->add_option("--noise-variance", lag.noise_variance, "Fixed noise variance (standardised units)");
  c_lag->add_option("--jitter", lag.jitter, "Diagonal jitter");
  c_lag->add_option("--restarts", lag.restarts, "Optimiser restarts");
  c_lag->add_option("--pairs", lag.pairs, "Posterior sample pairs");
  c_lag->add_option("--bins", lag.bins, "Log-spaced frequency bins");
  c_lag->add_option("--fmin", lag.f_min, "Lowest frequency (1/day)");
  c_lag->add_option("--fmax", lag.f_max, "Highest frequency (1/day)");
  c_lag->add_option("--out", lag.out, "Output CSV");
  common(c_lag);

  OracleArgs oracle;
  auto* c_or = app.add_subcommand("noise-oracle", "Kernel-smoothed pseudo noise levels");
  c_or->add_option("--data", oracle.data, "Dataset CSV")->required();
  c_or->add_option("--bandwidth", oracle.bandwidth, "Smoothing bandwidth")->required();
  oracle.kernel.add(c_or, "sqe");
  c_or->add_option("--restarts", oracle.restarts, "Optimiser restarts");
  c_or->add_option("--out", oracle.out, "Output CSV with a noise_std column");
  common(c_or);

  PCAArgs pca;
  auto* c_pca = app.add_subcommand("pca-reduce", "Project features onto their leading principal components");
  c_pca->add_option("--data", pca.data, "Dataset CSV")->required();
  c_pca->add_option("--components", pca.components, "Components to keep");
  c_pca->add_option("--out", pca.out, "Output CSV");
  common(c_pca);

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!write_config.empty()) emit_json(write_config, effective_config(sub, &app));
    if (sub == c_fit) return run_fit(fit, seed);
    if (sub == c_pred) return run_predict(pred);
    if (sub == c_bench) return run_bench(bench, seed, threads);
    if (sub == c_bo) return run_bo_command(boa, seed, threads);
    if (sub == c_sim) return run_simulate(sim, seed);
    if (sub == c_sf) return run_structfunc(sfa);
    if (sub == c_lag) return run_lagspec(lag, seed);
    if (sub == c_or) return run_oracle(oracle, seed);
    if (sub == c_pca) return run_pca(pca);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const UnsupportedGradient& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

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

#include "hetbo/serialize.hpp"

#include "hetbo/errors.hpp"

#include <cmath>
#include <limits>

namespace hetbo::serialize {

namespace {

using kernels::KernelFamily;
using kernels::KernelSpec;

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from(const json& a, const char* what) {
  if (!a.is_array()) throw InvalidInput(std::string("'") + what + "' must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

// JSON has no infinities or NaN; those become null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw InvalidInput(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("field '") + key + "': " + e.what());
  }
}

json stats_json(const gp::StandardisationStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

json aggregate_json(const benchmark::Aggregate& a) { return {{"mean", number(a.mean)}, {"se", number(a.se)}, {"n", a.n}}; }

json summary_json(const benchmark::MetricSummary& s) {
  return {{"rmse", aggregate_json(s.rmse)},
          {"mae", aggregate_json(s.mae)},
          {"r2", aggregate_json(s.r2)},
          {"nlpd", aggregate_json(s.nlpd)},
          {"nlpd_infinite_splits", s.nlpd_infinite}};
}

json sequence_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

}  // namespace

json kernel_to_json(const KernelSpec& spec) {
  json j;
  j["family"] = kernels::to_string(spec.family);
  switch (spec.family) {
    case KernelFamily::ICM: {
      j["base"] = kernel_to_json(*spec.base);
      json rows = json::array();
      for (Eigen::Index r = 0; r < spec.coregional_factor.rows(); ++r) {
        rows.push_back(vector_json(spec.coregional_factor.row(r).transpose()));
      }
      j["coregional_factor"] = rows;
      return j;
    }
    case KernelFamily::StringNGram:
      j["signal_variance"] = spec.signal_variance;
      j["ngram_order"] = spec.ngram_order;
      return j;
    case KernelFamily::Tanimoto:
    case KernelFamily::ScalarProduct:
      j["signal_variance"] = spec.signal_variance;
      return j;
    default:
      j["signal_variance"] = spec.signal_variance;
      j["lengthscales"] = vector_json(spec.lengthscales);
      if (spec.family == KernelFamily::RQ) j["rq_alpha"] = spec.rq_alpha;
      return j;
  }
}

KernelSpec kernel_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("kernel must be a JSON object");
  const KernelFamily family = kernels::family_from_string(field<std::string>(j, "family"));
  KernelSpec spec;
  spec.family = family;
  if (family == KernelFamily::ICM) {
    spec.base = std::make_shared<const KernelSpec>(kernel_from_json(j.at("base")));
    const json& rows = j.at("coregional_factor");
    const auto p = static_cast<Eigen::Index>(rows.size());
    spec.coregional_factor = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index r = 0; r < p; ++r) {
      const Eigen::VectorXd row = vector_from(rows[static_cast<std::size_t>(r)], "coregional_factor");
      if (row.size() != p) throw InvalidInput("coregional_factor must be square");
      spec.coregional_factor.row(r) = row.transpose();
    }
    return spec;
  }
  spec.signal_variance = field<double>(j, "signal_variance");
  if (!(spec.signal_variance > 0.0)) throw InvalidInput("signal_variance must be positive");
  if (family == KernelFamily::StringNGram) {
    spec.ngram_order = field<int>(j, "ngram_order");
    if (spec.ngram_order < 1) throw InvalidInput("ngram_order must be at least 1");
  } else if (kernels::is_stationary(family)) {
    spec.lengthscales = vector_from(j.at("lengthscales"), "lengthscales");
    if (spec.lengthscales.size() == 0 || (spec.lengthscales.array() <= 0.0).any()) {
      throw InvalidInput("lengthscales must be positive");
    }
    if (family == KernelFamily::RQ) spec.rq_alpha = field<double>(j, "rq_alpha");
  }
  return spec;
}

json model_to_json(const gp::GPModel& model, const std::string& training_data) {
  return {{"type", "gp"},
          {"kernel", kernel_to_json(model.kernel())},
          {"noise_variance", model.noise_variance()},
          {"noise_fixed", model.noise_fixed()},
          {"jitter", model.jitter()},
          {"prior_mean", model.prior_mean()},
          {"standardised", !(model.stats().mean == 0.0 && model.stats().std == 1.0)},
          {"standardisation", stats_json(model.stats())},
          {"nlml", model.nlml()},
          {"training_data", training_data}};
}

gp::GPModel model_from_json(const json& j, const gp::Dataset& data) {
  const bool standardise = j.value("standardised", true);
  gp::GPModel m = gp::GPModel::assemble(data, kernel_from_json(j.at("kernel")), field<double>(j, "noise_variance"),
                                        field<double>(j, "jitter"), standardise, j.value("noise_fixed", true));
  if (standardise && j.contains("standardisation")) {
    const double mean = j["standardisation"].value("mean", m.stats().mean);
    const double sd = j["standardisation"].value("std", m.stats().std);
    if (std::abs(mean - m.stats().mean) > 1e-9 * (1.0 + std::abs(mean)) || std::abs(sd - m.stats().std) > 1e-9 * sd) {
      throw InvalidInput("model standardisation does not match the supplied training data");
    }
  }
  return m;
}

json mlhgp_to_json(const hetgp::MLHGPModel& model, const std::string& training_data) {
  json j;
  j["type"] = "mlhgp";
  j["training_data"] = training_data;
  j["standardisation"] = stats_json(model.stats);
  j["latent"] = model_to_json(model.g_latent, training_data);
  j["latent_point_noise"] = vector_json(model.g_latent.point_noise());
  if (model.g_noise) {
    j["noise"] = model_to_json(*model.g_noise, "noise_levels");
    j["noise_levels"] = vector_json(model.g_noise->data().targets);
  } else {
    j["noise"] = nullptr;
  }
  j["constant_log_noise"] = model.constant_log_noise;
  j["iterations_run"] = model.iterations_run;
  j["sample_size"] = model.sample_size;
  j["seed"] = model.seed;
  j["degenerate"] = model.degenerate;
  j["nlml_history"] = model.nlml_history;
  return j;
}

hetgp::MLHGPModel mlhgp_from_json(const json& j, const gp::Dataset& data) {
  if (j.value("type", "") != "mlhgp") throw InvalidInput("document is not an MLHGP model");
  data.validate();
  const gp::StandardisationStats stats = gp::StandardisationStats::from_targets(data.targets);
  gp::Dataset latent_data;
  latent_data.inputs = data.inputs;
  latent_data.targets = stats.apply(data.targets);
  const Eigen::VectorXd r = vector_from(j.at("latent_point_noise"), "latent_point_noise");
  if (r.size() != data.size()) throw InvalidInput("latent_point_noise does not match the training data");
  if ((r.array() != 0.0).any()) latent_data.noise_std = r.array().sqrt().matrix();
  gp::GPModel latent = model_from_json(j.at("latent"), latent_data);

  std::optional<gp::GPModel> noise;
  if (!j.at("noise").is_null()) {
    gp::Dataset noise_data;
    noise_data.inputs = data.inputs;
    noise_data.targets = vector_from(j.at("noise_levels"), "noise_levels");
    noise = model_from_json(j.at("noise"), noise_data);
  }
  hetgp::MLHGPModel m{std::move(latent), std::move(noise), field<double>(j, "constant_log_noise"), stats,
                      field<int>(j, "iterations_run"), field<int>(j, "sample_size"),
                      field<std::uint64_t>(j, "seed"), field<bool>(j, "degenerate"),
                      field<std::vector<double>>(j, "nlml_history")};
  return m;
}

json metrics_to_json(const metrics::MetricsReport& m) {
  return {{"rmse", m.rmse},       {"mae", m.mae},
          {"r2", number(m.r2)},   {"nlpd", number(m.nlpd)},
          {"nlpd_infinite", m.nlpd_infinite}, {"n_test", m.n_test},
          {"split_seed", m.split_seed}};
}

json report_to_json(const benchmark::BenchmarkReport& report) {
  json j;
  j["kernel"] = report.kernel;
  j["n_splits"] = report.n_splits;
  j["train_fraction"] = report.train_fraction;
  j["seed"] = report.seed;
  j["summary"] = summary_json(report.summary);
  json splits = json::array();
  for (const auto& m : report.splits) splits.push_back(metrics_to_json(m));
  j["splits"] = splits;
  json tasks = json::array();
  for (const auto& t : report.tasks) {
    json tj;
    tj["task"] = t.task;
    tj["summary"] = summary_json(t.summary);
    json ts = json::array();
    for (const auto& m : t.splits) ts.push_back(metrics_to_json(m));
    tj["splits"] = ts;
    tasks.push_back(tj);
  }
  j["tasks"] = tasks;
  return j;
}

json summary_to_json(const bo::BOSummary& s) {
  return {{"n_seeds", s.n_seeds},
          {"best_h", {{"mean", sequence_json(s.mean_best_h)}, {"se", sequence_json(s.se_best_h)}}},
          {"lowest_g", {{"mean", sequence_json(s.mean_lowest_g)}, {"se", sequence_json(s.se_lowest_g)}}}};
}

json power_law_to_json(const timeseries::PowerLawFit& f) {
  json j;
  j["broken"] = f.broken;
  if (f.broken) {
    j["alpha1"] = f.alpha1;
    j["alpha2"] = f.alpha2;
    j["tau_break"] = f.tau_break;
  } else {
    j["alpha"] = f.alpha;
  }
  j["amplitude"] = f.amplitude;
  j["rss_broken"] = f.rss_broken;
  j["rss_single"] = f.rss_single;
  return j;
}

}  // namespace hetbo::serialize

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

#include "hetbo/errors.hpp"
#include "hetbo/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

namespace hetbo::benchmark {

namespace {

using Eigen::Index;

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  std::vector<double> v;
  for (double x : values) {
    if (std::isfinite(x)) v.push_back(x);
  }
  a.n = static_cast<int>(v.size());
  if (v.empty()) {
    a.mean = a.se = std::numeric_limits<double>::quiet_NaN();
    return a;
  }
  const double n = static_cast<double>(v.size());
  a.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - a.mean) * (x - a.mean);
  a.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return a;
}

struct SplitOutcome {
  metrics::MetricsReport overall;
  std::vector<std::pair<int, metrics::MetricsReport>> per_task;
};

}  // namespace

MetricSummary summarise(const std::vector<metrics::MetricsReport>& splits) {
  std::vector<double> rmse, mae, r2, nlpd;
  MetricSummary s;
  for (const auto& m : splits) {
    rmse.push_back(m.rmse);
    mae.push_back(m.mae);
    r2.push_back(m.r2);
    nlpd.push_back(m.nlpd);
    if (m.nlpd_infinite) ++s.nlpd_infinite;
  }
  s.rmse = aggregate(rmse);
  s.mae = aggregate(mae);
  s.r2 = aggregate(r2);
  s.nlpd = aggregate(nlpd);
  return s;
}

BenchmarkReport run_regression_benchmark(const gp::Dataset& data, const kernels::KernelSpec& kernel,
                                         const BenchmarkOptions& options) {
  data.validate();
  const Index n = data.size();
  if (n < 5) throw InvalidInput("regression benchmark needs at least 5 rows, got " + std::to_string(n));
  if (options.n_splits < 1) throw InvalidInput("n_splits must be at least 1");
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
    throw InvalidInput("train_fraction must lie strictly between 0 and 1");
  }
  const Index n_train = std::clamp<Index>(static_cast<Index>(std::floor(options.train_fraction * static_cast<double>(n))),
                                          1, n - 1);
  const bool multitask = data.inputs.multitask();
  const int n_tasks = multitask ? *std::max_element(data.inputs.tasks.begin(), data.inputs.tasks.end()) + 1 : 0;

  std::vector<SplitOutcome> outcomes(static_cast<std::size_t>(options.n_splits));
  std::vector<std::exception_ptr> errors(outcomes.size());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int s = next++; s < options.n_splits; s = next++) {
      try {
        const std::uint64_t split_seed = hetbo::split_seed(options.seed, static_cast<std::uint64_t>(s));
        std::vector<Index> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), Index{0});
        Rng rng = make_rng(split_seed);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Index> train(perm.begin(), perm.begin() + n_train);
        std::vector<Index> test(perm.begin() + n_train, perm.end());
        std::sort(train.begin(), train.end());
        std::sort(test.begin(), test.end());

        const gp::Dataset tr = data.subset(train);
        const gp::Dataset te = data.subset(test);
        gp::FitOptions fo = options.fit;
        fo.seed = hetbo::split_seed(split_seed, 1);
        const gp::GPModel model = gp::fit_gp(tr, kernel, fo);
        gp::PredictOptions po;
        po.include_noise = true;
        const gp::PosteriorPrediction pred = gp::predict(model, te.inputs, po);
        SplitOutcome& out = outcomes[static_cast<std::size_t>(s)];
        out.overall = metrics::compute_metrics(pred, te.targets);
        out.overall.split_seed = split_seed;
        for (int t = 0; t < n_tasks; ++t) {
          std::vector<Index> rows;
          for (Index i = 0; i < te.size(); ++i) {
            if (te.inputs.tasks[static_cast<std::size_t>(i)] == t) rows.push_back(i);
          }
          if (rows.empty()) continue;
          Eigen::VectorXd mu(static_cast<Index>(rows.size())), var(mu.size()), y(mu.size());
          for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto j = static_cast<Index>(k);
            mu[j] = pred.mean[rows[k]];
            var[j] = pred.variance[rows[k]];
            y[j] = te.targets[rows[k]];
          }
          metrics::MetricsReport m = metrics::compute_metrics(mu, var, y);
          m.split_seed = split_seed;
          out.per_task.emplace_back(t, m);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(s)] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(options.threads, 1, options.n_splits);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  BenchmarkReport report;
  report.kernel = kernel.describe();
  report.n_splits = options.n_splits;
  report.train_fraction = options.train_fraction;
  report.seed = options.seed;
  for (const auto& o : outcomes) report.splits.push_back(o.overall);
  report.summary = summarise(report.splits);
  for (int t = 0; t < n_tasks; ++t) {
    TaskReport tr;
    tr.task = t;
    for (const auto& o : outcomes) {
      for (const auto& [task, m] : o.per_task) {
        if (task == t) tr.splits.push_back(m);
      }
    }
    tr.summary = summarise(tr.splits);
    report.tasks.push_back(std::move(tr));
  }
  return report;
}

}  // namespace hetbo::benchmark

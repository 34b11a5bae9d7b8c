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

#include "hetbo/gp.hpp"
#include "hetbo/metrics.hpp"

#include <cstdint>
#include <vector>

namespace hetbo::benchmark {

struct BenchmarkOptions {
  int n_splits = 20;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  gp::FitOptions fit = {};
  int threads = 1;
};

struct Aggregate {
  double mean = 0.0;
  double se = 0.0;
  int n = 0;  // finite values used
};

struct MetricSummary {
  Aggregate rmse, mae, r2, nlpd;
  int nlpd_infinite = 0;  // splits with an infinite NLPD
};

struct TaskReport {
  int task = 0;
  std::vector<metrics::MetricsReport> splits;
  MetricSummary summary;
};

struct BenchmarkReport {
  std::string kernel;
  int n_splits = 0;
  double train_fraction = 0.0;
  std::uint64_t seed = 0;
  std::vector<metrics::MetricsReport> splits;
  MetricSummary summary;
  std::vector<TaskReport> tasks;  // multitask data only
};

MetricSummary summarise(const std::vector<metrics::MetricsReport>& splits);

/// Repeated random train/test splits: fit on the train part, score predictions
/// (including observation noise) on the rest. For multitask inputs the scores
/// are also reported per task.
BenchmarkReport run_regression_benchmark(const gp::Dataset& data, const kernels::KernelSpec& kernel,
                                         const BenchmarkOptions& options = {});

}  // namespace hetbo::benchmark

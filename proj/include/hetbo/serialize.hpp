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

#include "hetbo/benchmark.hpp"
#include "hetbo/bo.hpp"
#include "hetbo/gp.hpp"
#include "hetbo/hetgp.hpp"
#include "hetbo/metrics.hpp"
#include "hetbo/timeseries.hpp"

#include "json.hpp"

#include <string>

namespace hetbo::serialize {

using nlohmann::json;

json kernel_to_json(const kernels::KernelSpec& spec);
/// Throws InvalidInput on unknown tags or malformed fields.
kernels::KernelSpec kernel_from_json(const json& j);

/// Hyperparameters, standardisation and a reference to the training data; the
/// factorisation is not stored.
json model_to_json(const gp::GPModel& model, const std::string& training_data);
/// Rebuilds the model on `data`, which must be the referenced training set.
gp::GPModel model_from_json(const json& j, const gp::Dataset& data);

json mlhgp_to_json(const hetgp::MLHGPModel& model, const std::string& training_data);
hetgp::MLHGPModel mlhgp_from_json(const json& j, const gp::Dataset& data);

json metrics_to_json(const metrics::MetricsReport& m);
json report_to_json(const benchmark::BenchmarkReport& report);
json summary_to_json(const bo::BOSummary& summary);
json power_law_to_json(const timeseries::PowerLawFit& fit);

}  // namespace hetbo::serialize

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

#include <complex>
#include <vector>

namespace hetbo::fft {

/// Non-negative-frequency half of the DFT of a real series, length n/2 + 1,
/// unnormalised (X_k = Σ x_t e^{−2πikt/n}).
std::vector<std::complex<double>> rfft(const Eigen::VectorXd& x);

/// Inverse of rfft for a length-n real series, unnormalised
/// (x_t = Σ_k X_k e^{2πikt/n} over the full Hermitian spectrum).
Eigen::VectorXd irfft(const std::vector<std::complex<double>>& spectrum, Eigen::Index n);

}  // namespace hetbo::fft

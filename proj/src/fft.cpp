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

#include "hetbo/fft.hpp"

#include "hetbo/errors.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace hetbo::fft {

namespace {

// The FFTW planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::vector<std::complex<double>> rfft(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  if (n < 1) throw InvalidInput("cannot transform an empty series");
  std::vector<double> in(x.data(), x.data() + n);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

Eigen::VectorXd irfft(const std::vector<std::complex<double>>& spectrum, Eigen::Index n) {
  if (n < 1 || spectrum.size() != static_cast<std::size_t>(n / 2 + 1)) {
    throw InvalidInput("spectrum length does not match the requested series length");
  }
  std::vector<std::complex<double>> in = spectrum;  // c2r destroys its input
  Eigen::VectorXd out(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace hetbo::fft

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

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace hetbo::timeseries {

using Eigen::Index;
using Eigen::VectorXd;

struct Lightcurve {
  VectorXd times;  // days, strictly increasing
  VectorXd values;
  std::optional<VectorXd> errors;

  Index size() const { return times.size(); }
  /// Throws InvalidInput on length mismatches, non-finite values or
  /// non-increasing times.
  void validate() const;
};

/// Gaussian series with power spectrum ∝ f^{−β}: random Fourier amplitudes on a
/// grid of the next power of two ≥ n, inverse transformed, truncated to n and
/// rescaled to zero mean and unit variance.
Lightcurve simulate_lightcurve(double beta, Index n, double dt, std::uint64_t seed);

/// Keeps the points nearest to `keep_times`; each must lie within half the
/// smallest grid spacing of a point. Duplicates collapse; order is preserved.
Lightcurve apply_gaps(const Lightcurve& lc, const VectorXd& keep_times);

/// `m` of the series' times chosen uniformly without replacement, sorted.
VectorXd random_keep_times(const Lightcurve& lc, Index m, std::uint64_t seed);

/// Mean squared residual.
double rss(const VectorXd& predicted, const VectorXd& truth);

/// Periodogram |X_k|² at f_k = k/(n·dt), k = 1..⌊n/2⌋.
std::pair<VectorXd, VectorXd> periodogram(const VectorXd& values, double dt);

/// Least-squares slope of log power against log frequency.
double periodogram_slope(const VectorXd& values, double dt);

struct StructureFunctionResult {
  VectorXd centres;                        // (i − ½)δ
  std::vector<std::optional<double>> sf;   // empty for unoccupied bins
  std::vector<long long> counts;
  std::vector<std::optional<double>> standard_error;  // of the bin mean
  double delta = 0.0;
  bool normalised = false;
};

struct StructureFunctionOptions {
  bool normalise = true;
  /// Subtracts the mean of σ_i² + σ_j² per bin when errors are present.
  bool subtract_noise = false;
};

/// Bin i covers ((i−1)δ, iδ]; every pair t_j > t_i adds (v_i − v_j)² to the bin
/// holding t_j − t_i.
StructureFunctionResult structure_function(const Lightcurve& lc, double delta,
                                           const StructureFunctionOptions& options = {});

struct CrossSpectrumOptions {
  int n_bins = 8;
  std::optional<double> f_min;  // default: lowest Fourier frequency
  std::optional<double> f_max;  // default: Nyquist
};

struct CrossSpectrum {
  VectorXd frequency;  // |S_xy|-weighted mean frequency per bin
  VectorXd coherence;
  VectorXd coherence_err;
  VectorXd lag;  // days; positive when the first series leads
  VectorXd lag_err;
  std::vector<long long> counts;  // Fourier frequencies per bin
};

/// Cross-spectra averaged over pairs and within log-spaced frequency bins.
/// Standard errors are leave-one-pair-out jackknife estimates.
CrossSpectrum coherence_lag(const std::vector<std::pair<Lightcurve, Lightcurve>>& pairs,
                            const CrossSpectrumOptions& options = {});

struct PowerLawFit {
  bool broken = false;
  double amplitude = 0.0;   // SF at the break (broken) or at τ = 1 (single)
  double alpha1 = 0.0;      // SF ∝ (τ/τ_b)^{−α1} below the break
  double alpha2 = 0.0;      // and (τ/τ_b)^{−α2} above it
  double tau_break = 0.0;
  double alpha = 0.0;       // single law: SF ∝ τ^{−α}
  double rss_broken = 0.0;  // weighted, in log space
  double rss_single = 0.0;
};

/// Weighted least squares in log–log space over the occupied bins. `weights`
/// (one per bin, optional) multiply the squared residuals. The break is
/// searched over bin centres and then refined between neighbours. With
/// `allow_single`, a single power law is returned when the break improves the
/// residual by less than 5%.
PowerLawFit fit_broken_power_law(const StructureFunctionResult& sf, const std::optional<VectorXd>& weights,
                                 bool allow_single);

/// Conditions a GP on `observed` with the noise variance held fixed and
/// predicts on `grid`.
struct LightcurveFit {
  gp::GPModel model;
  VectorXd mean;
};
LightcurveFit fit_lightcurve_gp(const Lightcurve& observed, const VectorXd& grid, const kernels::KernelSpec& kernel,
                                const gp::FitOptions& options);

// CSV helpers.
Lightcurve read_lightcurve_csv(std::istream& in);
void write_lightcurve_csv(std::ostream& out, const Lightcurve& lc);
void write_structure_function_csv(std::ostream& out, const StructureFunctionResult& sf);
void write_cross_spectrum_csv(std::ostream& out, const CrossSpectrum& spectrum);

}  // namespace hetbo::timeseries

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

#include "hetbo/timeseries.hpp"

#include "hetbo/dataset_io.hpp"
#include "hetbo/errors.hpp"
#include "hetbo/fft.hpp"
#include "hetbo/random.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

namespace hetbo::timeseries {

namespace {

using cd = std::complex<double>;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double population_variance(const VectorXd& v) { return (v.array() - v.mean()).square().mean(); }

// Common grid spacing of a regularly sampled series; throws otherwise.
double regular_spacing(const VectorXd& t) {
  if (t.size() < 2) throw InvalidInput("a regular grid needs at least two points");
  const double dt = (t[t.size() - 1] - t[0]) / static_cast<double>(t.size() - 1);
  for (Index i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-6 * dt) throw InvalidInput("series is not on a regular time grid");
  }
  return dt;
}

struct WeightedLine {
  Eigen::VectorXd coef;
  double rss = 0.0;
};

WeightedLine weighted_lsq(const Eigen::MatrixXd& design, const VectorXd& y, const VectorXd& w) {
  const VectorXd sw = w.array().sqrt().matrix();
  const Eigen::MatrixXd a = sw.asDiagonal() * design;
  const VectorXd b = sw.cwiseProduct(y);
  WeightedLine out;
  out.coef = a.colPivHouseholderQr().solve(b);
  out.rss = (a * out.coef - b).squaredNorm();
  return out;
}

WeightedLine hinge_fit(const VectorXd& x, const VectorXd& y, const VectorXd& w, double b) {
  Eigen::MatrixXd design(x.size(), 3);
  for (Index i = 0; i < x.size(); ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::min(x[i] - b, 0.0);
    design(i, 2) = std::max(x[i] - b, 0.0);
  }
  return weighted_lsq(design, y, w);
}

}  // namespace

void Lightcurve::validate() const {
  if (times.size() != values.size()) throw InvalidInput("lightcurve times and values differ in length");
  if (errors && errors->size() != times.size()) throw InvalidInput("lightcurve errors differ in length");
  if (!times.allFinite() || !values.allFinite()) throw InvalidInput("lightcurve contains non-finite entries");
  for (Index i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw InvalidInput("lightcurve times must be strictly increasing");
  }
  if (errors && (errors->array() < 0.0).any()) throw InvalidInput("lightcurve errors must be non-negative");
}

Lightcurve simulate_lightcurve(double beta, Index n, double dt, std::uint64_t seed) {
  if (n < 2) throw InvalidInput("lightcurve length must be at least 2");
  if (!(beta >= 0.0)) throw InvalidInput("PSD index must be non-negative");
  if (!(dt > 0.0)) throw InvalidInput("time step must be positive");
  Index big = 2;
  while (big < n) big *= 2;

  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<cd> spectrum(static_cast<std::size_t>(big / 2 + 1), cd(0.0, 0.0));
  for (Index k = 1; k <= big / 2; ++k) {
    const double f = static_cast<double>(k) / (static_cast<double>(big) * dt);
    const double amp = std::sqrt(0.5 * std::pow(f, -beta));
    const double re = normal(rng) * amp;
    const double im = normal(rng) * amp;
    spectrum[static_cast<std::size_t>(k)] = k == big / 2 ? cd(re * std::numbers::sqrt2, 0.0) : cd(re, im);
  }
  const VectorXd full = fft::irfft(spectrum, big);
  VectorXd v = full.head(n);
  v.array() -= v.mean();
  const double sd = std::sqrt(population_variance(v));
  if (sd > 0.0) v /= sd;

  Lightcurve lc;
  lc.times = VectorXd::LinSpaced(n, 0.0, dt * static_cast<double>(n - 1));
  lc.values = std::move(v);
  return lc;
}

Lightcurve apply_gaps(const Lightcurve& lc, const VectorXd& keep_times) {
  lc.validate();
  if (keep_times.size() == 0) throw InvalidInput("keep set is empty");
  double min_gap = std::numeric_limits<double>::infinity();
  for (Index i = 1; i < lc.size(); ++i) min_gap = std::min(min_gap, lc.times[i] - lc.times[i - 1]);
  const double tol = 0.5 * min_gap;

  std::vector<Index> keep;
  keep.reserve(static_cast<std::size_t>(keep_times.size()));
  const double* begin = lc.times.data();
  const double* end = begin + lc.size();
  for (Index k = 0; k < keep_times.size(); ++k) {
    const double t = keep_times[k];
    const double* it = std::lower_bound(begin, end, t);
    Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    // Candidates are the neighbours on either side; the earlier one wins ties.
    for (const double* c : {it - 1, it}) {
      if (c < begin || c >= end) continue;
      const double d = std::abs(*c - t);
      if (d < best_d) {
        best_d = d;
        best = c - begin;
      }
    }
    if (best < 0 || best_d > tol) {
      throw InvalidInput("keep time " + std::to_string(t) + " is not within half a grid step of any sample");
    }
    keep.push_back(best);
  }
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());

  Lightcurve out;
  out.times.resize(static_cast<Index>(keep.size()));
  out.values.resize(static_cast<Index>(keep.size()));
  if (lc.errors) out.errors = VectorXd(static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto j = static_cast<Index>(i);
    out.times[j] = lc.times[keep[i]];
    out.values[j] = lc.values[keep[i]];
    if (lc.errors) (*out.errors)[j] = (*lc.errors)[keep[i]];
  }
  return out;
}

VectorXd random_keep_times(const Lightcurve& lc, Index m, std::uint64_t seed) {
  if (m < 1 || m > lc.size()) throw InvalidInput("cannot keep " + std::to_string(m) + " of " + std::to_string(lc.size()) + " points");
  std::vector<Index> idx(static_cast<std::size_t>(lc.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  Rng rng = make_rng(seed);
  for (Index i = 0; i < m; ++i) {
    std::uniform_int_distribution<Index> pick(i, lc.size() - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  std::sort(idx.begin(), idx.begin() + m);
  VectorXd out(m);
  for (Index i = 0; i < m; ++i) out[i] = lc.times[idx[static_cast<std::size_t>(i)]];
  return out;
}

double rss(const VectorXd& predicted, const VectorXd& truth) {
  if (predicted.size() != truth.size()) {
    throw InvalidInput("rss: lengths differ (" + std::to_string(predicted.size()) + " vs " +
                       std::to_string(truth.size()) + ")");
  }
  if (truth.size() == 0) throw InvalidInput("rss: empty vectors");
  return (predicted - truth).squaredNorm() / static_cast<double>(truth.size());
}

std::pair<VectorXd, VectorXd> periodogram(const VectorXd& values, double dt) {
  const Index n = values.size();
  if (n < 2) throw InvalidInput("periodogram needs at least two samples");
  const auto spec = fft::rfft(values.array() - values.mean());
  VectorXd f(n / 2), p(n / 2);
  for (Index k = 1; k <= n / 2; ++k) {
    f[k - 1] = static_cast<double>(k) / (static_cast<double>(n) * dt);
    p[k - 1] = std::norm(spec[static_cast<std::size_t>(k)]);
  }
  return {f, p};
}

double periodogram_slope(const VectorXd& values, double dt) {
  const auto [f, p] = periodogram(values, dt);
  const VectorXd x = f.array().log().matrix();
  const VectorXd y = p.array().max(std::numeric_limits<double>::min()).log().matrix();
  const double mx = x.mean();
  const double my = y.mean();
  return ((x.array() - mx) * (y.array() - my)).sum() / (x.array() - mx).square().sum();
}

StructureFunctionResult structure_function(const Lightcurve& lc, double delta, const StructureFunctionOptions& options) {
  lc.validate();
  if (lc.size() < 2) throw InvalidInput("structure function needs at least two points");
  if (!(delta > 0.0)) throw InvalidInput("bin width must be positive");
  double scale = 1.0;
  if (options.normalise) {
    scale = population_variance(lc.values);
    if (!(scale > 0.0)) throw InvalidInput("cannot normalise the structure function of a constant series");
  }
  const Index n = lc.size();
  const double span = lc.times[n - 1] - lc.times[0];
  const auto n_bins = static_cast<std::size_t>(std::max(1.0, std::ceil(span / delta - 1e-9)));
  std::vector<double> sum(n_bins, 0.0), sum2(n_bins, 0.0), noise(n_bins, 0.0);
  std::vector<long long> counts(n_bins, 0);
  const bool subtract = options.subtract_noise && lc.errors;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double tau = lc.times[j] - lc.times[i];
      auto b = static_cast<std::size_t>(std::max(1.0, std::ceil(tau / delta - 1e-9))) - 1;
      b = std::min(b, n_bins - 1);
      const double d = lc.values[i] - lc.values[j];
      sum[b] += d * d;
      sum2[b] += d * d * d * d;
      ++counts[b];
      if (subtract) noise[b] += (*lc.errors)[i] * (*lc.errors)[i] + (*lc.errors)[j] * (*lc.errors)[j];
    }
  }
  StructureFunctionResult out;
  out.delta = delta;
  out.normalised = options.normalise;
  out.centres.resize(static_cast<Index>(n_bins));
  out.counts = counts;
  out.sf.resize(n_bins);
  out.standard_error.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    out.centres[static_cast<Index>(b)] = (static_cast<double>(b) + 0.5) * delta;
    if (counts[b] == 0) continue;
    const double c = static_cast<double>(counts[b]);
    const double mean = sum[b] / c;
    out.sf[b] = (mean - (subtract ? noise[b] / c : 0.0)) / scale;
    if (counts[b] > 1) {
      const double var = std::max(0.0, (sum2[b] - c * mean * mean) / (c - 1.0));
      out.standard_error[b] = std::sqrt(var / c) / scale;
    }
  }
  return out;
}

CrossSpectrum coherence_lag(const std::vector<std::pair<Lightcurve, Lightcurve>>& pairs,
                            const CrossSpectrumOptions& options) {
  if (pairs.size() < 2) throw InvalidInput("coherence and lag need at least two pairs");
  if (options.n_bins < 1) throw InvalidInput("need at least one frequency bin");
  const Lightcurve& ref = pairs.front().first;
  ref.validate();
  const Index n = ref.size();
  const double dt = regular_spacing(ref.times);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (const Lightcurve* lc : {&pairs[p].first, &pairs[p].second}) {
      lc->validate();
      if (lc->size() != n || (lc->times - ref.times).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, dt)) {
        throw InvalidInput("pair " + std::to_string(p) + " is not on the common time grid");
      }
    }
  }
  const double f_lo = options.f_min.value_or(1.0 / (static_cast<double>(n) * dt));
  const double f_hi = options.f_max.value_or(0.5 / dt);
  if (!(f_lo > 0.0 && f_hi > f_lo)) throw InvalidInput("invalid frequency range");
  const auto bins = static_cast<std::size_t>(options.n_bins);
  const double log_span = std::log(f_hi / f_lo);

  // Bin of every Fourier frequency (−1 when outside the range).
  std::vector<int> bin_of(static_cast<std::size_t>(n / 2 + 1), -1);
  std::vector<long long> counts(bins, 0);
  for (Index k = 1; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) / (static_cast<double>(n) * dt);
    if (f < f_lo * (1.0 - 1e-12) || f > f_hi * (1.0 + 1e-12)) continue;
    auto b = static_cast<std::size_t>(std::max(0.0, std::floor(options.n_bins * std::log(f / f_lo) / log_span)));
    b = std::min(b, bins - 1);
    bin_of[static_cast<std::size_t>(k)] = static_cast<int>(b);
    ++counts[b];
  }

  struct Acc {
    cd sxy{0.0, 0.0};
    double sxx = 0.0, syy = 0.0, wf = 0.0, w = 0.0;
    Acc& operator+=(const Acc& o) {
      sxy += o.sxy;
      sxx += o.sxx;
      syy += o.syy;
      wf += o.wf;
      w += o.w;
      return *this;
    }
    Acc& operator-=(const Acc& o) {
      sxy -= o.sxy;
      sxx -= o.sxx;
      syy -= o.syy;
      wf -= o.wf;
      w -= o.w;
      return *this;
    }
  };
  const std::size_t np = pairs.size();
  std::vector<Acc> per(np * bins);
  std::vector<Acc> total(bins);
  for (std::size_t p = 0; p < np; ++p) {
    const auto x = fft::rfft(pairs[p].first.values.array() - pairs[p].first.values.mean());
    const auto y = fft::rfft(pairs[p].second.values.array() - pairs[p].second.values.mean());
    for (Index k = 1; k <= n / 2; ++k) {
      const int b = bin_of[static_cast<std::size_t>(k)];
      if (b < 0) continue;
      const auto ku = static_cast<std::size_t>(k);
      Acc& a = per[p * bins + static_cast<std::size_t>(b)];
      const cd sxy = x[ku] * std::conj(y[ku]);
      const double f = static_cast<double>(k) / (static_cast<double>(n) * dt);
      a.sxy += sxy;
      a.sxx += std::norm(x[ku]);
      a.syy += std::norm(y[ku]);
      a.wf += std::abs(sxy) * f;
      a.w += std::abs(sxy);
    }
    for (std::size_t b = 0; b < bins; ++b) total[b] += per[p * bins + b];
  }

  auto coherence_of = [](const Acc& a) {
    const double den = a.sxx * a.syy;
    return den > 0.0 ? std::min(1.0, std::norm(a.sxy) / den) : kNaN;
  };
  auto lag_of = [](const Acc& a) {
    if (!(a.w > 0.0)) return kNaN;
    return std::arg(a.sxy) / (2.0 * std::numbers::pi * (a.wf / a.w));
  };

  CrossSpectrum out;
  out.counts = counts;
  out.frequency.resize(options.n_bins);
  out.coherence.resize(options.n_bins);
  out.coherence_err.resize(options.n_bins);
  out.lag.resize(options.n_bins);
  out.lag_err.resize(options.n_bins);
  const double pn = static_cast<double>(np);
  for (std::size_t b = 0; b < bins; ++b) {
    const auto bi = static_cast<Index>(b);
    const Acc& t = total[b];
    out.frequency[bi] = t.w > 0.0 ? t.wf / t.w : kNaN;
    out.coherence[bi] = coherence_of(t);
    out.lag[bi] = lag_of(t);
    // Leave-one-pair-out jackknife.
    std::vector<double> coh(np), lag(np);
    for (std::size_t p = 0; p < np; ++p) {
      Acc loo = t;
      loo -= per[p * bins + b];
      coh[p] = coherence_of(loo);
      lag[p] = lag_of(loo);
    }
    auto jackknife = [&](const std::vector<double>& v) {
      const double m = std::accumulate(v.begin(), v.end(), 0.0) / pn;
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      return std::sqrt((pn - 1.0) / pn * ss);
    };
    out.coherence_err[bi] = jackknife(coh);
    out.lag_err[bi] = jackknife(lag);
  }
  return out;
}

PowerLawFit fit_broken_power_law(const StructureFunctionResult& sf, const std::optional<VectorXd>& weights,
                                 bool allow_single) {
  const std::size_t n_bins = sf.sf.size();
  if (weights && weights->size() != static_cast<Index>(n_bins)) throw InvalidInput("one weight per bin is required");
  std::vector<Index> used;
  std::string bad;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (!sf.sf[b]) continue;
    if (!(*sf.sf[b] > 0.0)) {
      bad += (bad.empty() ? "" : ", ") + std::to_string(b + 1);
      continue;
    }
    if (weights && !((*weights)[static_cast<Index>(b)] > 0.0)) continue;
    used.push_back(static_cast<Index>(b));
  }
  if (!bad.empty()) throw InvalidInput("structure function is non-positive in bins " + bad + "; cannot take logs");
  const auto m = static_cast<Index>(used.size());
  if (m < 4) throw InvalidInput("power-law fit needs at least 4 occupied bins, got " + std::to_string(m));

  VectorXd x(m), y(m), w(m);
  for (Index i = 0; i < m; ++i) {
    const auto b = used[static_cast<std::size_t>(i)];
    x[i] = std::log(sf.centres[b]);
    y[i] = std::log(*sf.sf[static_cast<std::size_t>(b)]);
    w[i] = weights ? (*weights)[b] : 1.0;
  }

  PowerLawFit out;
  Eigen::MatrixXd line(m, 2);
  line.col(0).setOnes();
  line.col(1) = x;
  const WeightedLine single = weighted_lsq(line, y, w);
  out.rss_single = single.rss;
  out.alpha = -single.coef[1];

  // Break candidates: interior bin centres, then golden-section refinement
  // between the neighbouring centres.
  Index best_k = -1;
  double best_rss = std::numeric_limits<double>::infinity();
  for (Index k = 1; k + 1 < m; ++k) {
    const double r = hinge_fit(x, y, w, x[k]).rss;
    if (r < best_rss) {
      best_rss = r;
      best_k = k;
    }
  }
  double lo = x[best_k - 1];
  double hi = x[best_k + 1];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - phi * (hi - lo);
  double d = lo + phi * (hi - lo);
  double fc = hinge_fit(x, y, w, c).rss;
  double fd = hinge_fit(x, y, w, d).rss;
  for (int it = 0; it < 100; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - phi * (hi - lo);
      fc = hinge_fit(x, y, w, c).rss;
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + phi * (hi - lo);
      fd = hinge_fit(x, y, w, d).rss;
    }
  }
  double b = 0.5 * (lo + hi);
  WeightedLine broken = hinge_fit(x, y, w, b);
  if (best_rss < broken.rss) {
    b = x[best_k];
    broken = hinge_fit(x, y, w, b);
  }
  out.rss_broken = broken.rss;
  out.tau_break = std::exp(b);
  out.amplitude = std::exp(broken.coef[0]);
  out.alpha1 = -broken.coef[1];
  out.alpha2 = -broken.coef[2];
  out.broken = true;

  const double scale = y.squaredNorm() + 1.0;
  const bool exact_single = single.rss <= 1e-24 * scale;
  if (allow_single && (exact_single || (single.rss - broken.rss) < 0.05 * single.rss)) {
    out.broken = false;
    out.amplitude = std::exp(single.coef[0]);
  }
  return out;
}

LightcurveFit fit_lightcurve_gp(const Lightcurve& observed, const VectorXd& grid, const kernels::KernelSpec& kernel,
                                const gp::FitOptions& options) {
  observed.validate();
  gp::Dataset data;
  data.inputs = kernels::Inputs::real(Eigen::MatrixXd(observed.times));
  data.targets = observed.values;
  gp::GPModel model = gp::fit_gp(data, kernel, options);
  VectorXd mean = gp::predict(model, kernels::Inputs::real(Eigen::MatrixXd(grid))).mean;
  return {std::move(model), std::move(mean)};
}

Lightcurve read_lightcurve_csv(std::istream& in) {
  const io::CsvTable t = io::read_csv(in);
  const int c_t = t.column("mjd");
  const int c_v = t.column("value");
  const int c_e = t.column("error");
  if (c_t < 0 || c_v < 0) throw InvalidInput("lightcurve CSV needs 'mjd' and 'value' columns");
  const auto n = static_cast<Index>(t.rows.size());
  Lightcurve lc;
  lc.times.resize(n);
  lc.values.resize(n);
  VectorXd err(n);
  bool any_error = false;
  for (Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    const int line = t.line_numbers[static_cast<std::size_t>(i)];
    auto get = [&](int c) { return c < static_cast<int>(row.size()) ? row[static_cast<std::size_t>(c)] : std::string(); };
    lc.times[i] = io::parse_number(get(c_t), line, "mjd");
    lc.values[i] = io::parse_number(get(c_v), line, "value");
    if (!std::isfinite(lc.times[i]) || !std::isfinite(lc.values[i])) {
      throw InvalidInput("line " + std::to_string(line) + ": missing time or value");
    }
    err[i] = c_e >= 0 ? io::parse_number(get(c_e), line, "error") : kNaN;
    any_error = any_error || !std::isnan(err[i]);
  }
  if (any_error) {
    if (err.hasNaN()) throw InvalidInput("lightcurve CSV has an 'error' column with missing entries");
    lc.errors = std::move(err);
  }
  lc.validate();
  return lc;
}

void write_lightcurve_csv(std::ostream& out, const Lightcurve& lc) {
  const auto old = out.precision(17);
  out << "mjd,value,error\n";
  for (Index i = 0; i < lc.size(); ++i) {
    out << lc.times[i] << ',' << lc.values[i] << ',';
    if (lc.errors) out << (*lc.errors)[i];
    out << '\n';
  }
  out.precision(old);
}

void write_structure_function_csv(std::ostream& out, const StructureFunctionResult& sf) {
  const auto old = out.precision(17);
  out << "tau,sf,count,stderr\n";
  for (std::size_t b = 0; b < sf.sf.size(); ++b) {
    out << sf.centres[static_cast<Index>(b)] << ',';
    if (sf.sf[b]) out << *sf.sf[b];
    out << ',' << sf.counts[b] << ',';
    if (sf.standard_error[b]) out << *sf.standard_error[b];
    out << '\n';
  }
  out.precision(old);
}

void write_cross_spectrum_csv(std::ostream& out, const CrossSpectrum& s) {
  const auto old = out.precision(17);
  out << "freq,coherence,coh_err,lag_days,lag_err\n";
  for (Index b = 0; b < s.frequency.size(); ++b) {
    out << s.frequency[b] << ',' << s.coherence[b] << ',' << s.coherence_err[b] << ',' << s.lag[b] << ','
        << s.lag_err[b] << '\n';
  }
  out.precision(old);
}

}  // namespace hetbo::timeseries

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pvsplit/errors.hpp"

namespace pvsplit {

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw InvalidInput("mean: empty series");
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size());
}

// One-sample KS statistic against U(0,1).
inline double ks_statistic_uniform(std::vector<double> samples) {
  if (samples.empty()) throw InvalidInput("ks_statistic_uniform: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = double(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = samples[i];  // uniform CDF
    d = std::max(d, std::max((double(i) + 1.0) / n - cdf, cdf - double(i) / n));
  }
  return d;
}

// Two-sample KS statistic: sup |F_a - F_b| over the pooled sample.
inline double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidInput("ks_statistic_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    const double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    d = std::max(d, std::fabs(double(ia) / na - double(ib) / nb));
  }
  return d;
}

// Asymptotic critical coefficient c(α) = sqrt(-ln(α/2)/2) of the two-sided
// KS test (c(0.01) ≈ 1.6276, c(0.05) ≈ 1.3581).
inline double ks_critical_coefficient(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidInput("ks_critical_coefficient: alpha must be in (0,1)");
  return std::sqrt(-std::log(alpha / 2.0) / 2.0);
}

inline double ks_critical_value_one_sample(std::size_t n, double alpha) {
  if (n == 0) throw InvalidInput("ks_critical_value: empty sample");
  return ks_critical_coefficient(alpha) / std::sqrt(double(n));
}

inline double ks_critical_value_two_sample(std::size_t n, std::size_t m, double alpha) {
  if (n == 0 || m == 0) throw InvalidInput("ks_critical_value: empty sample");
  return ks_critical_coefficient(alpha) *
         std::sqrt((double(n) + double(m)) / (double(n) * double(m)));
}

// Integrated autocorrelation time 1 + 2 Σ ρ_k with Sokal's adaptive window:
// truncate at the smallest W with W ≥ 5·τ_int(W).  Returns 1 for white noise,
// grows with chain stickiness; capped at n/2 lags.
inline double integrated_autocorrelation_time(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 8) throw InvalidInput("integrated_autocorrelation_time: series too short");
  const double m = mean(series);
  const double var = variance(series);
  if (var == 0.0) return 1.0;  // constant series: no correlation structure

  double tau = 1.0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    double c = 0.0;
    for (std::size_t i = 0; i + k < n; ++i)
      c += (series[i] - m) * (series[i + k] - m);
    c /= double(n - k) * var;
    tau += 2.0 * c;
    if (double(k) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0);
}

}  // namespace pvsplit

#pragma once

#include <cmath>

// Scalar Gaussian helpers for N(0, sigma^2): density, CDF, density derivative.

namespace stratsel {

inline double sqrt_two_pi() { return std::sqrt(2.0 * M_PI); }

inline double sqrt_two_pi_e() { return std::sqrt(2.0 * M_PI * std::exp(1.0)); }

inline double normal_pdf(double x, double sigma) {
  const double u = x / sigma;
  return std::exp(-0.5 * u * u) / (sigma * sqrt_two_pi());
}

inline double normal_cdf(double x, double sigma) {
  return 0.5 * std::erfc(-x / (sigma * M_SQRT2));
}

// d/dx of normal_pdf; extremes at x = +-sigma with magnitude 1/(sigma^2 sqrt(2 pi e)).
inline double normal_pdf_deriv(double x, double sigma) {
  return -x / (sigma * sigma) * normal_pdf(x, sigma);
}

inline double normal_quantile(double p, double sigma) {
  // Bisection on the CDF; only used in tests/diagnostics, robustness over speed.
  double lo = -40.0 * sigma, hi = 40.0 * sigma;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * sigma; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid, sigma) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace stratsel

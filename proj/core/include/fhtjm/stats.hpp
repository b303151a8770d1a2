#pragma once

#include <cmath>
#include <limits>

#include "fhtjm/rng.hpp"

// Scalar distribution helpers shared across the library, guarded so the
// samplers stay usable deep in the tails.

namespace fhtjm::stats {

inline constexpr double kLogTwoPi = 1.8378770664093454836;
inline constexpr double kSqrtTwo = 1.4142135623730950488;

inline double norm_logpdf(double z) { return -0.5 * (kLogTwoPi + z * z); }

inline double norm_pdf(double z) { return std::exp(norm_logpdf(z)); }

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrtTwo); }

/// log Φ(z), stable for arbitrarily negative z (asymptotic series past -10).
double norm_logcdf(double z);

/// Φ⁻¹(p) (Wichura AS241, double precision).
double norm_quantile(double p);

/// Φ⁻¹ given log(p); works for log-probabilities far below log(DBL_MIN)'s p.
double norm_quantile_logp(double logp);

/// Draw from N(mean, sd²) conditioned on being below `upper`, by inverse CDF.
double truncated_normal_below(Rng& rng, double mean, double sd, double upper);

/// Draw from N(mean, sd²) conditioned on being above `lower`, by inverse CDF.
double truncated_normal_above(Rng& rng, double mean, double sd, double lower);

double digamma(double x);

inline double lbeta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double normal_lpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * (kLogTwoPi + z * z) - std::log(sd);
}

inline double half_cauchy_lpdf(double x, double scale) {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  const double z = x / scale;
  return std::log(2.0 / M_PI) - std::log(scale) - std::log1p(z * z);
}

inline double exponential_lpdf(double x, double rate) {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(rate) - rate * x;
}

inline double beta_lpdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) return -std::numeric_limits<double>::infinity();
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lbeta(a, b);
}

/// LKJ(eta) log-density of a 2x2 correlation matrix with off-diagonal w,
/// including the normalizing constant (Beta(eta, eta) form on (w+1)/2).
inline double lkj2_lpdf(double w, double eta) {
  if (w <= -1.0 || w >= 1.0) return -std::numeric_limits<double>::infinity();
  // det = 1 - w^2; density ∝ det^(eta-1); ∫(1-w²)^(eta-1) dw = 2^(2eta-1) B(eta,eta)
  return (eta - 1.0) * std::log1p(-w * w) - lbeta(eta, eta) -
         (2.0 * eta - 1.0) * std::log(2.0);
}

}  // namespace fhtjm::stats

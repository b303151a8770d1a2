#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fhtjm/rng.hpp"

namespace fhtjm {

/// Parameters of a Wiener process Y(t) = y0 + drift·t + √var·W(t) started
/// above an absorbing boundary at zero. The first passage of the boundary
/// follows an inverse-Gaussian law; positive drift leaves positive
/// probability of never hitting.
struct FhtParams {
  double y0;           ///< initial level, > 0
  double drift;        ///< signed drift per unit time
  double var = 1.0;    ///< process variance per unit time, > 0

  bool valid() const { return y0 > 0.0 && var > 0.0 && std::isfinite(y0) && std::isfinite(drift) && std::isfinite(var); }
};

/// One draw of the hitting time; `never()` marks a path that escapes.
struct FhtSample {
  double time = std::numeric_limits<double>::infinity();

  bool hits() const { return std::isfinite(time); }
  static FhtSample never() { return {}; }
  static FhtSample at(double t) { return {t}; }
};

struct InfeasibleQuantileError : std::domain_error {
  using std::domain_error::domain_error;
};
struct NoTruncationMassError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Log-density of the hitting time at t > 0.
double fht_logpdf(double t, const FhtParams& p);

/// P(no hit by time t); decreasing from 1 toward cure_rate(p).
double fht_survival(double t, const FhtParams& p);

/// P(the boundary is never hit): 0 for drift ≤ 0, 1 - exp(-2·y0·drift/var) otherwise.
double cure_rate(const FhtParams& p);

/// Time t with P(hit by t) = q; requires q < 1 - cure_rate(p).
double fht_quantile(double q, const FhtParams& p);

/// Exact draw of the hitting time, including the never-hits outcome.
FhtSample fht_sample(Rng& rng, const FhtParams& p);

/// Draw of the hitting time conditioned on being finite and > lower.
double fht_sample_truncated(Rng& rng, const FhtParams& p, double lower);

/// Euler-discretized paths of the underlying Wiener process; the Monte Carlo
/// oracle used to validate the closed forms above.
struct McOracleResult {
  std::vector<double> hit_times;
  std::size_t never_hit = 0;
  std::size_t n_paths = 0;

  double never_hit_fraction() const {
    return static_cast<double>(never_hit) / static_cast<double>(n_paths);
  }
};

McOracleResult fht_mc_oracle(const FhtParams& p, double dt, double horizon,
                             std::size_t n_paths, Rng& rng, int n_threads = 1);

}  // namespace fhtjm

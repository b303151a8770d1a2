#pragma once

#include <span>
#include <vector>

#include "fhtjm/data.hpp"
#include "fhtjm/rng.hpp"

namespace fhtjm {

/// Constrained-scale parameters of the longitudinal submodel.
struct LongitudinalParams {
  // fixed effects, one polynomial per biomarker
  std::vector<std::vector<double>> beta;          // [q][k]
  // random effects, per subject: [i][q*P + p]
  std::vector<std::vector<double>> rand_effects;
  // random-effect scales and 2x2 correlations
  std::vector<double> sigma;                      // [q*P + p]
  std::vector<double> omega;                      // [q], off-diagonal of Ω_q
  // subject residual structure
  std::vector<std::vector<double>> resid_sd;      // s_iq, [i][q]
  std::vector<double> resid_corr;                 // r_i (Q = 2), [i]
  // hyperparameters of the log-variance law and the correlation prior
  std::vector<double> gamma;                      // [q]
  std::vector<double> psi;                        // [q]
  double shape_a = 1.0;
  double shape_b = 1.0;
};

/// Polynomial mean with random intercept and slope:
/// Σ_k beta[k] t^k + b[0] + b[1] t.
double mean_value(double t, std::span<const double> beta_q, std::span<const double> b_iq);

/// Joint Gaussian log-density of the completed panel. `augmented` supplies
/// one value per flagged entry, in panel scan order (subject, visit,
/// biomarker); each must lie below its detection limit.
double long_logdensity(const LongitudinalPanel& panel, const ModelSpec& spec,
                       const LongitudinalParams& params,
                       std::span<const double> augmented);

/// Log prior over every longitudinal parameter block; -inf outside support.
double prior_logdensity(const ModelSpec& spec, const LongitudinalParams& params);

/// One visit row with below-limit entries redrawn from the Gaussian
/// conditional on the observed entries, truncated above at the limits.
/// `values` holds the current row (flagged slots ignored), `cov` the Q×Q
/// row covariance (row-major). Returns draws for the flagged slots in order.
std::vector<double> impute_censored_conditional(Rng& rng,
                                                std::span<const double> values,
                                                std::span<const std::uint8_t> flags,
                                                std::span<const double> mean,
                                                std::span<const double> cov,
                                                std::span<const double> limits);

}  // namespace fhtjm

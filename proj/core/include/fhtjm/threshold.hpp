#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fhtjm/data.hpp"
#include "fhtjm/fht.hpp"

namespace fhtjm {

/// Regression coefficients of the two latent process components:
/// log(y0) = alpha·W, drift = eta·W.
struct SurvivalCoefficients {
  std::vector<double> alpha;
  std::vector<double> eta;
};

/// Standardized survival design row W = (1, b'_{11..QP}, s'_{1..Q}, Z).
/// Random effects are scaled by their sds, log-variances centered by gamma
/// and scaled by psi.
std::vector<double> build_design_row(std::span<const double> rand_effects_iq,  // [q*P+p]
                                     std::span<const double> log_var_iq,       // log(s_iq²)
                                     std::span<const double> sigma,            // [q*P+p]
                                     std::span<const double> gamma,
                                     std::span<const double> psi,
                                     std::span<const double> covariates);

/// Map a design row through the coefficients to process parameters
/// (exp link on y0, identity on drift, unit variance).
FhtParams link_latents(std::span<const double> design_row, const SurvivalCoefficients& coef);

/// Event-time log-density. Observed events contribute the FHT density at the
/// recorded time; censored records contribute it at the augmented time, which
/// must exceed the censoring time (its transform Jacobian lives in the
/// sampler layer).
double surv_logdensity(const SurvivalRecord& rec, const FhtParams& p,
                       std::optional<double> augmented_time = std::nullopt);

}  // namespace fhtjm

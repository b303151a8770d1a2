#include "fhtjm/threshold.hpp"

#include <cmath>
#include <stdexcept>

namespace fhtjm {

std::vector<double> build_design_row(std::span<const double> rand_effects_iq,
                                     std::span<const double> log_var_iq,
                                     std::span<const double> sigma,
                                     std::span<const double> gamma,
                                     std::span<const double> psi,
                                     std::span<const double> covariates) {
  const std::size_t qp = rand_effects_iq.size();
  const std::size_t nq = log_var_iq.size();
  std::vector<double> w;
  w.reserve(1 + qp + nq + covariates.size());
  w.push_back(1.0);
  for (std::size_t k = 0; k < qp; ++k) {
    if (!(sigma[k] > 0.0)) throw std::domain_error("build_design_row: sigma must be positive");
    w.push_back(rand_effects_iq[k] / sigma[k]);
  }
  for (std::size_t q = 0; q < nq; ++q) {
    if (!(psi[q] > 0.0)) throw std::domain_error("build_design_row: psi must be positive");
    w.push_back((log_var_iq[q] - gamma[q]) / psi[q]);
  }
  for (double z : covariates) w.push_back(z);
  return w;
}

FhtParams link_latents(std::span<const double> design_row, const SurvivalCoefficients& coef) {
  if (coef.alpha.size() != design_row.size() || coef.eta.size() != design_row.size()) {
    throw std::invalid_argument("link_latents: coefficient/design dimension mismatch");
  }
  double log_y0 = 0.0, drift = 0.0;
  for (std::size_t d = 0; d < design_row.size(); ++d) {
    log_y0 += coef.alpha[d] * design_row[d];
    drift += coef.eta[d] * design_row[d];
  }
  return FhtParams{std::exp(log_y0), drift, 1.0};
}

double surv_logdensity(const SurvivalRecord& rec, const FhtParams& p,
                       std::optional<double> augmented_time) {
  if (rec.event) {
    return fht_logpdf(rec.time, p);
  }
  if (!augmented_time) {
    throw std::invalid_argument("surv_logdensity: censored record needs an augmented time");
  }
  if (!(*augmented_time > rec.time)) {
    throw std::domain_error("surv_logdensity: augmented time must exceed the censoring time");
  }
  return fht_logpdf(*augmented_time, p);
}

}  // namespace fhtjm

#include "fhtjm/longitudinal.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "fhtjm/stats.hpp"

namespace fhtjm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::size_t LongitudinalPanel::n_flagged() const {
  std::size_t n = 0;
  for (const auto& s : subjects) {
    for (auto f : s.below_lod) n += (f != 0);
  }
  return n;
}

void LongitudinalPanel::validate() const {
  if (n_biomarkers < 1) throw std::invalid_argument("panel: need at least one biomarker");
  if (detection_limits.size() != static_cast<std::size_t>(n_biomarkers)) {
    throw std::invalid_argument("panel: detection_limits size mismatch");
  }
  const auto q = static_cast<std::size_t>(n_biomarkers);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto& s = subjects[i];
    if (s.times.empty()) throw std::invalid_argument("panel: subject with no visits");
    if (s.values.size() != s.times.size() * q || s.below_lod.size() != s.times.size() * q) {
      throw std::invalid_argument("panel: ragged value block for subject " + std::to_string(i));
    }
    for (std::size_t j = 1; j < s.times.size(); ++j) {
      if (!(s.times[j] > s.times[j - 1])) {
        throw std::invalid_argument("panel: visit times must be strictly increasing");
      }
    }
    for (std::size_t j = 0; j < s.times.size(); ++j) {
      for (std::size_t b = 0; b < q; ++b) {
        const double v = s.values[j * q + b];
        if (s.below_lod[j * q + b]) {
          if (v > detection_limits[b]) {
            throw std::invalid_argument("panel: flagged entry stored above its detection limit");
          }
        } else if (!std::isfinite(v)) {
          throw std::invalid_argument("panel: non-finite biomarker value");
        }
      }
    }
  }
}

void ModelSpec::validate() const {
  if (n_biomarkers < 1 || n_biomarkers > 2) {
    throw std::invalid_argument("spec: n_biomarkers must be 1 or 2");
  }
  if (poly_degrees.size() != static_cast<std::size_t>(n_biomarkers)) {
    throw std::invalid_argument("spec: poly_degrees size mismatch");
  }
  for (int m : poly_degrees) {
    if (m < 1) throw std::invalid_argument("spec: polynomial needs at least an intercept");
  }
  if (detection_limits.size() != static_cast<std::size_t>(n_biomarkers)) {
    throw std::invalid_argument("spec: detection_limits size mismatch");
  }
  if (n_covariates < 0) throw std::invalid_argument("spec: negative covariate count");
}

double mean_value(double t, std::span<const double> beta_q, std::span<const double> b_iq) {
  double acc = 0.0;
  double tk = 1.0;
  for (double c : beta_q) {
    acc += c * tk;
    tk *= t;
  }
  return acc + b_iq[0] + b_iq[1] * t;
}

double long_logdensity(const LongitudinalPanel& panel, const ModelSpec& spec,
                       const LongitudinalParams& params,
                       std::span<const double> augmented) {
  const int Q = spec.n_biomarkers;
  if (augmented.size() != panel.n_flagged()) {
    throw std::invalid_argument("long_logdensity: one augmented value per flagged entry required");
  }
  std::size_t aug_pos = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < panel.subjects.size(); ++i) {
    const auto& subj = panel.subjects[i];
    const auto& s_i = params.resid_sd[i];
    const double r = (Q == 2) ? params.resid_corr[i] : 0.0;
    double subject_sum = 0.0;
    for (std::size_t j = 0; j < subj.n_visits(); ++j) {
      const double t = subj.times[j];
      double e[2];
      for (int q = 0; q < Q; ++q) {
        double x = subj.value(j, q, Q);
        if (subj.flagged(j, q, Q)) {
          x = augmented[aug_pos++];
          if (!(x < panel.detection_limits[q])) {
            throw std::invalid_argument("long_logdensity: augmented value not below its limit");
          }
        }
        const std::span<const double> b(&params.rand_effects[i][q * ModelSpec::n_random],
                                        ModelSpec::n_random);
        e[q] = x - mean_value(t, params.beta[q], b);
      }
      if (Q == 1) {
        const double a = e[0] / s_i[0];
        subject_sum += -0.5 * stats::kLogTwoPi - std::log(s_i[0]) - 0.5 * a * a;
      } else {
        const double denom = 1.0 - r * r;
        if (!(denom > 0.0)) {
          throw std::domain_error("long_logdensity: residual correlation outside (-1, 1)");
        }
        const double a = e[0] / s_i[0];
        const double b2 = e[1] / s_i[1];
        subject_sum += -stats::kLogTwoPi - std::log(s_i[0] * s_i[1]) - 0.5 * std::log(denom) -
                       (a * a - 2.0 * r * a * b2 + b2 * b2) / (2.0 * denom);
      }
    }
    total += subject_sum;
  }
  return total;
}

double prior_logdensity(const ModelSpec& spec, const LongitudinalParams& params) {
  const int Q = spec.n_biomarkers;
  const auto& pc = spec.priors;
  double lp = 0.0;

  for (int q = 0; q < Q; ++q) {
    for (double bq : params.beta[q]) lp += stats::normal_lpdf(bq, 0.0, pc.beta_scale);
  }
  for (double s : params.sigma) {
    if (s <= 0.0) return kNegInf;
    lp += stats::half_cauchy_lpdf(s, pc.sigma_scale);
  }
  for (double w : params.omega) {
    if (!(std::fabs(w) < 1.0)) return kNegInf;
    lp += stats::lkj2_lpdf(w, pc.lkj_shape);
  }
  for (int q = 0; q < Q; ++q) {
    if (params.psi[q] <= 0.0) return kNegInf;
    lp += stats::normal_lpdf(params.gamma[q], 0.0, pc.gamma_scale);
    lp += stats::half_cauchy_lpdf(params.psi[q], pc.psi_scale);
  }
  for (std::size_t i = 0; i < params.resid_sd.size(); ++i) {
    for (int q = 0; q < Q; ++q) {
      const double s = params.resid_sd[i][q];
      if (s <= 0.0) return kNegInf;
      lp += stats::normal_lpdf(std::log(s * s), params.gamma[q], params.psi[q]);
    }
  }
  if (Q == 2) {
    if (params.shape_a <= 0.0 || params.shape_b <= 0.0) return kNegInf;
    lp += stats::exponential_lpdf(params.shape_a, pc.shape_rate_a);
    lp += stats::exponential_lpdf(params.shape_b, pc.shape_rate_b);
    for (double r : params.resid_corr) {
      if (!(std::fabs(r) < 1.0)) return kNegInf;
      // (r+1)/2 ~ Beta(a, b); the 1/2 is the change-of-variable factor
      lp += stats::beta_lpdf(0.5 * (r + 1.0), params.shape_a, params.shape_b) + std::log(0.5);
    }
  }
  return std::isfinite(lp) ? lp : kNegInf;
}

std::vector<double> impute_censored_conditional(Rng& rng,
                                                std::span<const double> values,
                                                std::span<const std::uint8_t> flags,
                                                std::span<const double> mean,
                                                std::span<const double> cov,
                                                std::span<const double> limits) {
  const int Q = static_cast<int>(values.size());
  std::vector<int> cens, obs;
  for (int q = 0; q < Q; ++q) {
    (flags[q] ? cens : obs).push_back(q);
  }
  if (cens.empty()) {
    throw std::invalid_argument("impute_censored_conditional: no flagged entry in row");
  }
  const int nc = static_cast<int>(cens.size());
  const int no = static_cast<int>(obs.size());

  Eigen::VectorXd mu_c(nc);
  Eigen::MatrixXd s_c(nc, nc);
  for (int a = 0; a < nc; ++a) {
    mu_c[a] = mean[cens[a]];
    for (int b = 0; b < nc; ++b) s_c(a, b) = cov[cens[a] * Q + cens[b]];
  }
  if (no > 0) {
    Eigen::MatrixXd s_o(no, no), s_co(nc, no);
    Eigen::VectorXd dev(no);
    for (int a = 0; a < no; ++a) {
      dev[a] = values[obs[a]] - mean[obs[a]];
      for (int b = 0; b < no; ++b) s_o(a, b) = cov[obs[a] * Q + obs[b]];
      for (int c = 0; c < nc; ++c) s_co(c, a) = cov[cens[c] * Q + obs[a]];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(s_o, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double cond = svd.singularValues()(0) / svd.singularValues()(no - 1);
    if (!std::isfinite(cond) || cond > 1e12) {
      throw std::domain_error("impute_censored_conditional: observed block numerically singular");
    }
    const Eigen::MatrixXd gain = s_co * s_o.inverse();
    mu_c += gain * dev;
    s_c -= gain * s_co.transpose();
  }

  std::vector<double> out(nc);
  if (nc == 1) {
    const double sd = std::sqrt(s_c(0, 0));
    out[0] = stats::truncated_normal_below(rng, mu_c[0], sd, limits[cens[0]]);
    return out;
  }
  // Gibbs over univariate truncated conditionals; a short fixed burn-in is
  // enough at Q = 2.
  Eigen::VectorXd x(nc);
  for (int a = 0; a < nc; ++a) x[a] = std::min(mu_c[a], limits[cens[a]] - 1e-3);
  const int sweeps = 20;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (int a = 0; a < nc; ++a) {
      double cond_mean = mu_c[a];
      double cond_var = s_c(a, a);
      // nc == 2: condition coordinate a on the other one
      const int b = 1 - a;
      const double rho2 = s_c(a, b) * s_c(a, b) / (s_c(a, a) * s_c(b, b));
      cond_mean += s_c(a, b) / s_c(b, b) * (x[b] - mu_c[b]);
      cond_var *= (1.0 - rho2);
      x[a] = stats::truncated_normal_below(rng, cond_mean, std::sqrt(cond_var), limits[cens[a]]);
    }
  }
  for (int a = 0; a < nc; ++a) out[a] = x[a];
  return out;
}

}  // namespace fhtjm

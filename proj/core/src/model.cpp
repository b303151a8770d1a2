#include "fhtjm/model.hpp"

#include <cmath>
#include <stdexcept>

#include "fhtjm/stats.hpp"

namespace fhtjm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double polyval(const double* beta, int m, double t) {
  double acc = 0.0, tk = 1.0;
  for (int k = 0; k < m; ++k) {
    acc += beta[k] * tk;
    tk *= t;
  }
  return acc;
}

// Inverse-Gaussian moment match on the observed event times; gives the
// survival intercept blocks a starting point in the right order of magnitude.
std::pair<double, double> moment_start(const std::vector<SurvivalRecord>& records) {
  double mean = 0.0;
  int n = 0;
  for (const auto& r : records) {
    if (r.event) {
      mean += r.time;
      ++n;
    }
  }
  if (n < 2) return {0.0, -1.0};
  mean /= n;
  double var = 0.0;
  for (const auto& r : records) {
    if (r.event) var += (r.time - mean) * (r.time - mean);
  }
  var /= (n - 1);
  if (!(var > 0.0)) return {std::log(std::max(mean, 1.0)), -1.0};
  const double y0 = std::clamp(std::sqrt(mean * mean * mean / var), 0.5, 1e3);
  return {std::log(y0), -y0 / mean};
}
}  // namespace

std::vector<std::string> TargetDensity::param_names() const {
  std::vector<std::string> names(static_cast<std::size_t>(constrained_dim()));
  for (std::size_t d = 0; d < names.size(); ++d) names[d] = "p_" + std::to_string(d + 1);
  return names;
}

Eigen::VectorXd TargetDensity::initial_point(Rng& rng, double radius) const {
  Eigen::VectorXd theta(dim());
  for (int d = 0; d < dim(); ++d) theta[d] = rng.uniform(-radius, radius);
  return theta;
}

int ParamLayout::beta(int q, int k) const {
  int off = beta0;
  for (int qq = 0; qq < q; ++qq) off += m[qq];
  return off + k;
}

JointModel::JointModel(const LongitudinalPanel& panel, std::vector<SurvivalRecord> records,
                       ModelSpec spec, Options opts)
    : panel_(&panel), records_(std::move(records)), spec_(std::move(spec)), opts_(opts) {
  spec_.validate();
  panel.validate();
  if (panel.n_biomarkers != spec_.n_biomarkers) {
    throw std::invalid_argument("JointModel: panel/spec biomarker count mismatch");
  }
  if (opts_.include_survival && records_.size() != panel.n_subjects()) {
    throw std::invalid_argument("JointModel: one survival record per subject required");
  }

  auto& L = layout_;
  L.Q = spec_.n_biomarkers;
  L.P = ModelSpec::n_random;
  L.N = static_cast<int>(panel.n_subjects());
  L.D = spec_.design_dim();
  L.m = spec_.poly_degrees;
  L.with_survival = opts_.include_survival;
  if (L.D > 16) {
    throw std::invalid_argument("JointModel: survival design capped at 16 columns");
  }

  for (int i = 0; i < L.N; ++i) {
    const auto& subj = panel.subjects[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < subj.n_visits(); ++j) {
      for (int q = 0; q < L.Q; ++q) {
        if (subj.flagged(j, q, L.Q)) {
          flagged_.push_back({i, static_cast<int>(j), q});
        }
      }
    }
  }
  L.n_flagged = static_cast<int>(flagged_.size());
  flag_index_.resize(static_cast<std::size_t>(L.N));
  for (int e = 0; e < L.n_flagged; ++e) {
    flag_index_[static_cast<std::size_t>(flagged_[static_cast<std::size_t>(e)].subject)].push_back(e);
  }

  censor_index_.assign(static_cast<std::size_t>(L.N), -1);
  if (L.with_survival) {
    for (int i = 0; i < L.N; ++i) {
      if (!records_[static_cast<std::size_t>(i)].event) {
        censor_index_[static_cast<std::size_t>(i)] = static_cast<int>(censored_.size());
        censored_.push_back(i);
      }
      if (static_cast<int>(records_[static_cast<std::size_t>(i)].covariates.size()) != L.D - 1 - L.P * L.Q - L.Q) {
        throw std::invalid_argument("JointModel: covariate dimension mismatch");
      }
    }
  }
  L.n_censored = static_cast<int>(censored_.size());

  int off = 0;
  L.beta0 = off;
  for (int q = 0; q < L.Q; ++q) off += L.m[static_cast<std::size_t>(q)];
  L.log_sigma0 = off; off += L.Q * L.P;
  L.omega0 = off; off += L.Q;
  L.z0 = off; off += L.N * L.Q * L.P;
  L.ell0 = off; off += L.N * L.Q;
  L.r0 = off; off += (L.Q == 2) ? L.N : 0;
  L.gamma0 = off; off += L.Q;
  L.psi0 = off; off += L.Q;
  L.ab0 = off; off += (L.Q == 2) ? 2 : 0;
  L.alpha0 = off; off += L.with_survival ? L.D : 0;
  L.eta0 = off; off += L.with_survival ? L.D : 0;
  L.u0 = off; off += L.n_flagged;
  L.v0 = off; off += L.with_survival ? L.n_censored : 0;
  L.dim = off;

  if (L.with_survival) {
    std::tie(init_log_y0_, init_drift_) = moment_start(records_);
  }
  for (const auto& subj : panel.subjects) {
    for (double t : subj.times) time_scale_ = std::max(time_scale_, std::fabs(t));
  }
}

Eigen::VectorXd JointModel::initial_point(Rng& rng, double radius) const {
  const auto& L = layout_;
  Eigen::VectorXd theta(L.dim);
  for (int d = 0; d < L.dim; ++d) theta[d] = rng.uniform(-radius, radius);
  // polynomial coefficients act on t^k lever arms
  for (int q = 0; q < L.Q; ++q) {
    double scale = 1.0;
    for (int k = 0; k < L.m[static_cast<std::size_t>(q)]; ++k) {
      theta[L.beta(q, k)] = rng.uniform(-radius, radius) / scale;
      scale *= std::max(1.0, time_scale_);
    }
  }
  if (L.with_survival) {
    // the event-time density is extremely sharp in the linked latents; start
    // the coefficient blocks near a moment-matched point
    for (int d = 0; d < L.D; ++d) {
      theta[L.alpha(d)] = rng.uniform(-0.05, 0.05);
      theta[L.eta(d)] = rng.uniform(-0.05, 0.05);
    }
    theta[L.alpha(0)] += init_log_y0_;
    theta[L.eta(0)] += init_drift_;
  }
  return theta;
}

Eigen::VectorXd JointModel::metric_hint() const {
  const auto& L = layout_;
  Eigen::VectorXd m = Eigen::VectorXd::Constant(L.dim, 0.25);
  for (int q = 0; q < L.Q; ++q) {
    double scale = 1.0;
    for (int k = 0; k < L.m[static_cast<std::size_t>(q)]; ++k) {
      m[L.beta(q, k)] = 0.01 / (scale * scale);
      scale *= std::max(1.0, time_scale_);
    }
    for (int p = 0; p < L.P; ++p) m[L.log_sigma(q, p)] = 0.01;
    m[L.omega(q)] = 0.04;
    m[L.gamma(q)] = 0.01;
    m[L.psi(q)] = 0.01;
  }
  if (L.Q == 2) {
    m[L.ab0] = 0.04;
    m[L.ab0 + 1] = 0.04;
  }
  if (L.with_survival) {
    for (int d = 0; d < L.D; ++d) {
      m[L.alpha(d)] = 0.0025;
      m[L.eta(d)] = 0.01;
    }
  }
  return m;
}

double JointModel::log_density_gradient(const Eigen::VectorXd& theta,
                                        Eigen::VectorXd& grad) const {
  const auto& L = layout_;
  const auto& pc = spec_.priors;
  grad.setZero(L.dim);
  const double* th = theta.data();
  double* g = grad.data();
  double value = 0.0;

  const int Q = L.Q;
  const int P = L.P;

  // unpack shared scales
  double sigma[4], w_corr[2], c_corr[2], gamma_q[2], psi_q[2];
  for (int q = 0; q < Q; ++q) {
    for (int p = 0; p < P; ++p) sigma[q * P + p] = std::exp(th[L.log_sigma(q, p)]);
    w_corr[q] = std::tanh(th[L.omega(q)]);
    c_corr[q] = std::sqrt(1.0 - w_corr[q] * w_corr[q]);
    gamma_q[q] = th[L.gamma(q)];
    psi_q[q] = std::exp(th[L.psi(q)]);
  }
  double shape_a = 1.0, shape_b = 1.0;
  if (Q == 2) {
    shape_a = std::exp(th[L.ab0]);
    shape_b = std::exp(th[L.ab0 + 1]);
  }
  if (!std::isfinite(sigma[0]) || !std::isfinite(psi_q[0]) ||
      (Q == 2 && (!std::isfinite(shape_a) || !std::isfinite(shape_b)))) {
    grad.setZero();
    return kNegInf;
  }

  double gw_acc[2] = {0.0, 0.0};          // d/dw accumulated over subjects
  double glogsig_acc[4] = {0, 0, 0, 0};   // likelihood part of d/dlog sigma
  double ggamma_acc[2] = {0.0, 0.0};
  double gpsi_acc[2] = {0.0, 0.0};        // d/dpsi (constrained scale)
  double ga_sum = 0.0, gb_sum = 0.0;      // Σ log u_i, Σ log(1-u_i)

  const double digamma_ab = (Q == 2) ? stats::digamma(shape_a + shape_b) : 0.0;
  const double digamma_a = (Q == 2) ? stats::digamma(shape_a) : 0.0;
  const double digamma_b = (Q == 2) ? stats::digamma(shape_b) : 0.0;

  for (int i = 0; i < L.N; ++i) {
    const auto& subj = panel_->subjects[static_cast<std::size_t>(i)];
    const int n_i = static_cast<int>(subj.n_visits());

    double zv[4], b_eff[4], bp[4];
    for (int q = 0; q < Q; ++q) {
      const double z1 = th[L.z(i, q, 0)];
      const double z2 = th[L.z(i, q, 1)];
      zv[q * P + 0] = z1;
      zv[q * P + 1] = z2;
      bp[q * P + 0] = z1;
      bp[q * P + 1] = w_corr[q] * z1 + c_corr[q] * z2;
      b_eff[q * P + 0] = sigma[q * P + 0] * bp[q * P + 0];
      b_eff[q * P + 1] = sigma[q * P + 1] * bp[q * P + 1];
    }
    double ell[2], s_sd[2], sp[2];
    for (int q = 0; q < Q; ++q) {
      ell[q] = th[L.ell(i, q)];
      s_sd[q] = std::exp(0.5 * ell[q]);
      sp[q] = (ell[q] - gamma_q[q]) / psi_q[q];
    }
    const double r = (Q == 2) ? std::tanh(th[L.r(i)]) : 0.0;
    const double denom = 1.0 - r * r;

    double subject_value = 0.0;
    double gb[4] = {0, 0, 0, 0};   // d/db_eff
    double gl[2] = {0.0, 0.0};     // d/dell (likelihood part)
    double gr_like = 0.0;          // d/dr (likelihood part)

    // ---- longitudinal likelihood over visits
    int flag_cursor = 0;
    const auto& subj_flags = flag_index_[static_cast<std::size_t>(i)];
    for (int j = 0; j < n_i; ++j) {
      const double t = subj.times[static_cast<std::size_t>(j)];
      double e[2], x[2];
      int uslot[2] = {-1, -1};
      for (int q = 0; q < Q; ++q) {
        if (subj.flagged(static_cast<std::size_t>(j), q, Q)) {
          const int e_idx = subj_flags[static_cast<std::size_t>(flag_cursor++)];
          uslot[q] = L.u(e_idx);
          x[q] = panel_->detection_limits[static_cast<std::size_t>(q)] - std::exp(th[uslot[q]]);
        } else {
          x[q] = subj.value(static_cast<std::size_t>(j), q, Q);
        }
        const double mu = polyval(th + L.beta(q, 0), L.m[static_cast<std::size_t>(q)], t) +
                          b_eff[q * P + 0] + b_eff[q * P + 1] * t;
        e[q] = x[q] - mu;
      }
      double ge[2];
      if (Q == 1) {
        const double a = e[0] / s_sd[0];
        subject_value += -0.5 * stats::kLogTwoPi - 0.5 * ell[0] - 0.5 * a * a;
        ge[0] = -a / s_sd[0];
        gl[0] += -0.5 + 0.5 * a * a;
      } else {
        const double a1 = e[0] / s_sd[0];
        const double a2 = e[1] / s_sd[1];
        const double qf = (a1 * a1 - 2.0 * r * a1 * a2 + a2 * a2) / denom;
        subject_value += -stats::kLogTwoPi - 0.5 * (ell[0] + ell[1]) -
                         0.5 * std::log(denom) - 0.5 * qf;
        ge[0] = -(a1 - r * a2) / (denom * s_sd[0]);
        ge[1] = -(a2 - r * a1) / (denom * s_sd[1]);
        gl[0] += -0.5 + 0.5 * a1 * (a1 - r * a2) / denom;
        gl[1] += -0.5 + 0.5 * a2 * (a2 - r * a1) / denom;
        gr_like += (r + a1 * a2 - r * qf) / denom;
      }
      for (int q = 0; q < Q; ++q) {
        // fixed effects and random effects share -ge through the mean
        double tk = 1.0;
        const int mb = L.beta(q, 0);
        for (int k = 0; k < L.m[static_cast<std::size_t>(q)]; ++k) {
          g[mb + k] += -ge[q] * tk;
          tk *= t;
        }
        gb[q * P + 0] += -ge[q];
        gb[q * P + 1] += -ge[q] * t;
        if (uslot[q] >= 0) {
          // x = L - exp(u): dx/du = L - x... careful, equals -(exp u)
          g[uslot[q]] += ge[q] * (x[q] - panel_->detection_limits[static_cast<std::size_t>(q)]) + 1.0;
          subject_value += th[uslot[q]];  // log-Jacobian of the transform
        }
      }
    }

    // ---- hierarchical terms per subject
    for (int q = 0; q < Q; ++q) {
      // innovations are standard normal
      const double z1 = zv[q * P + 0], z2 = zv[q * P + 1];
      subject_value += -stats::kLogTwoPi - 0.5 * (z1 * z1 + z2 * z2);
      g[L.z(i, q, 0)] += -z1;
      g[L.z(i, q, 1)] += -z2;
      // log-variance law
      const double dev = ell[q] - gamma_q[q];
      subject_value += -0.5 * stats::kLogTwoPi - std::log(psi_q[q]) -
                       0.5 * dev * dev / (psi_q[q] * psi_q[q]);
      gl[q] += -dev / (psi_q[q] * psi_q[q]);
      ggamma_acc[q] += dev / (psi_q[q] * psi_q[q]);
      gpsi_acc[q] += -1.0 / psi_q[q] + dev * dev / (psi_q[q] * psi_q[q] * psi_q[q]);
    }
    double gr_total = gr_like;
    if (Q == 2) {
      const double u_r = 0.5 * (r + 1.0);
      subject_value += stats::beta_lpdf(u_r, shape_a, shape_b) + std::log(0.5) +
                       std::log1p(-r * r);
      gr_total += (shape_a - 1.0) / (r + 1.0) - (shape_b - 1.0) / (1.0 - r) -
                  2.0 * r / denom;
      ga_sum += std::log(u_r);
      gb_sum += std::log1p(-u_r);
      g[L.r(i)] += gr_total * denom;
    }

    // ---- survival contribution
    if (L.with_survival) {
      const auto& rec = records_[static_cast<std::size_t>(i)];
      double wrow[16];
      wrow[0] = 1.0;
      for (int q = 0; q < Q; ++q) {
        wrow[1 + q * P + 0] = bp[q * P + 0];
        wrow[1 + q * P + 1] = bp[q * P + 1];
        wrow[1 + Q * P + q] = sp[q];
      }
      for (std::size_t k = 0; k < rec.covariates.size(); ++k) {
        wrow[1 + Q * P + Q + static_cast<int>(k)] = rec.covariates[k];
      }
      double log_y0 = 0.0, drift = 0.0;
      for (int d = 0; d < L.D; ++d) {
        log_y0 += th[L.alpha(d)] * wrow[d];
        drift += th[L.eta(d)] * wrow[d];
      }
      const double y0 = std::exp(log_y0);
      const int vslot = censor_index_[static_cast<std::size_t>(i)];
      double t_ev = rec.time;
      if (vslot >= 0) {
        t_ev = rec.time + std::exp(th[L.v(vslot)]);
        subject_value += th[L.v(vslot)];  // log-Jacobian
      }
      const double devt = y0 + drift * t_ev;
      subject_value += log_y0 - 0.5 * (stats::kLogTwoPi + 3.0 * std::log(t_ev)) -
                       devt * devt / (2.0 * t_ev);
      const double d_logy0 = 1.0 - y0 * devt / t_ev;
      const double d_drift = -devt;
      for (int d = 0; d < L.D; ++d) {
        g[L.alpha(d)] += d_logy0 * wrow[d];
        g[L.eta(d)] += d_drift * wrow[d];
      }
      if (vslot >= 0) {
        const double d_t = -1.5 / t_ev + y0 * y0 / (2.0 * t_ev * t_ev) -
                           drift * drift / 2.0;
        g[L.v(vslot)] += d_t * (t_ev - rec.time) + 1.0;
      }
      // chain the design row back into the latent blocks
      for (int q = 0; q < Q; ++q) {
        const double gw1 = d_logy0 * th[L.alpha(1 + q * P + 0)] + d_drift * th[L.eta(1 + q * P + 0)];
        const double gw2 = d_logy0 * th[L.alpha(1 + q * P + 1)] + d_drift * th[L.eta(1 + q * P + 1)];
        const double gsp = d_logy0 * th[L.alpha(1 + Q * P + q)] + d_drift * th[L.eta(1 + Q * P + q)];
        g[L.z(i, q, 0)] += gw1 + gw2 * w_corr[q];
        g[L.z(i, q, 1)] += gw2 * c_corr[q];
        gw_acc[q] += gw2 * (zv[q * P + 0] - w_corr[q] * zv[q * P + 1] / c_corr[q]);
        gl[q] += gsp / psi_q[q];
        ggamma_acc[q] += -gsp / psi_q[q];
        gpsi_acc[q] += -gsp * sp[q] / psi_q[q];
      }
    }

    // ---- chain random-effect gradients into innovations/scales/correlations
    for (int q = 0; q < Q; ++q) {
      const double s1 = sigma[q * P + 0], s2 = sigma[q * P + 1];
      g[L.z(i, q, 0)] += gb[q * P + 0] * s1 + gb[q * P + 1] * s2 * w_corr[q];
      g[L.z(i, q, 1)] += gb[q * P + 1] * s2 * c_corr[q];
      gw_acc[q] += gb[q * P + 1] * s2 *
                   (zv[q * P + 0] - w_corr[q] * zv[q * P + 1] / c_corr[q]);
      glogsig_acc[q * P + 0] += gb[q * P + 0] * b_eff[q * P + 0];
      glogsig_acc[q * P + 1] += gb[q * P + 1] * b_eff[q * P + 1];
      g[L.ell(i, q)] += gl[q];
    }

    if (!std::isfinite(subject_value)) {
      grad.setZero();
      return kNegInf;
    }
    value += subject_value;
  }

  // ---- global priors and transform terms
  for (int q = 0; q < Q; ++q) {
    const int mb = L.beta(q, 0);
    for (int k = 0; k < L.m[static_cast<std::size_t>(q)]; ++k) {
      value += stats::normal_lpdf(th[mb + k], 0.0, pc.beta_scale);
      g[mb + k] += -th[mb + k] / (pc.beta_scale * pc.beta_scale);
    }
    for (int p = 0; p < P; ++p) {
      const double s = sigma[q * P + p];
      value += stats::half_cauchy_lpdf(s, pc.sigma_scale) + std::log(s);
      g[L.log_sigma(q, p)] += glogsig_acc[q * P + p] -
                              2.0 * s * s / (pc.sigma_scale * pc.sigma_scale + s * s) + 1.0;
    }
    const double w = w_corr[q];
    value += stats::lkj2_lpdf(w, pc.lkj_shape) + std::log1p(-w * w);
    g[L.omega(q)] += (gw_acc[q] - 2.0 * w * (pc.lkj_shape - 1.0) / (1.0 - w * w)) *
                         (1.0 - w * w) -
                     2.0 * w;
    value += stats::normal_lpdf(gamma_q[q], 0.0, pc.gamma_scale);
    g[L.gamma(q)] += ggamma_acc[q] - gamma_q[q] / (pc.gamma_scale * pc.gamma_scale);
    const double psi = psi_q[q];
    value += stats::half_cauchy_lpdf(psi, pc.psi_scale) + std::log(psi);
    g[L.psi(q)] += (gpsi_acc[q] - 2.0 * psi / (pc.psi_scale * pc.psi_scale + psi * psi)) * psi + 1.0;
  }
  if (Q == 2) {
    const double n = static_cast<double>(L.N);
    value += stats::exponential_lpdf(shape_a, pc.shape_rate_a) + th[L.ab0];
    value += stats::exponential_lpdf(shape_b, pc.shape_rate_b) + th[L.ab0 + 1];
    g[L.ab0] += shape_a * (ga_sum - n * (digamma_a - digamma_ab) - pc.shape_rate_a) + 1.0;
    g[L.ab0 + 1] += shape_b * (gb_sum - n * (digamma_b - digamma_ab) - pc.shape_rate_b) + 1.0;
  }
  if (L.with_survival) {
    for (int d = 0; d < L.D; ++d) {
      value += stats::normal_lpdf(th[L.alpha(d)], 0.0, pc.coef_scale);
      value += stats::normal_lpdf(th[L.eta(d)], 0.0, pc.coef_scale);
      g[L.alpha(d)] += -th[L.alpha(d)] / (pc.coef_scale * pc.coef_scale);
      g[L.eta(d)] += -th[L.eta(d)] / (pc.coef_scale * pc.coef_scale);
    }
  }

  if (!std::isfinite(value)) {
    grad.setZero();
    return kNegInf;
  }
  return value;
}

Eigen::VectorXd JointModel::constrain(const Eigen::VectorXd& theta) const {
  const auto& L = layout_;
  Eigen::VectorXd con(L.dim);
  const double* th = theta.data();
  double* c = con.data();
  for (int k = L.beta0; k < L.log_sigma0; ++k) c[k] = th[k];
  for (int q = 0; q < L.Q; ++q) {
    for (int p = 0; p < L.P; ++p) c[L.log_sigma(q, p)] = std::exp(th[L.log_sigma(q, p)]);
    c[L.omega(q)] = std::tanh(th[L.omega(q)]);
    c[L.gamma(q)] = th[L.gamma(q)];
    c[L.psi(q)] = std::exp(th[L.psi(q)]);
  }
  for (int i = 0; i < L.N; ++i) {
    for (int q = 0; q < L.Q; ++q) {
      const double s1 = c[L.log_sigma(q, 0)], s2 = c[L.log_sigma(q, 1)];
      const double w = c[L.omega(q)];
      const double cc = std::sqrt(1.0 - w * w);
      const double z1 = th[L.z(i, q, 0)], z2 = th[L.z(i, q, 1)];
      c[L.z(i, q, 0)] = s1 * z1;
      c[L.z(i, q, 1)] = s2 * (w * z1 + cc * z2);
      c[L.ell(i, q)] = std::exp(th[L.ell(i, q)]);  // subject residual variance
    }
    if (L.Q == 2) c[L.r(i)] = std::tanh(th[L.r(i)]);
  }
  if (L.Q == 2) {
    c[L.ab0] = std::exp(th[L.ab0]);
    c[L.ab0 + 1] = std::exp(th[L.ab0 + 1]);
  }
  if (L.with_survival) {
    for (int d = 0; d < L.D; ++d) {
      c[L.alpha(d)] = th[L.alpha(d)];
      c[L.eta(d)] = th[L.eta(d)];
    }
  }
  for (int e = 0; e < L.n_flagged; ++e) {
    const auto& fe = flagged_[static_cast<std::size_t>(e)];
    c[L.u(e)] = panel_->detection_limits[static_cast<std::size_t>(fe.biomarker)] - std::exp(th[L.u(e)]);
  }
  if (L.with_survival) {
    for (int k = 0; k < L.n_censored; ++k) {
      const auto& rec = records_[static_cast<std::size_t>(censored_[static_cast<std::size_t>(k)])];
      c[L.v(k)] = rec.time + std::exp(th[L.v(k)]);
    }
  }
  return con;
}

Eigen::VectorXd JointModel::unconstrain(const Eigen::VectorXd& con) const {
  const auto& L = layout_;
  Eigen::VectorXd theta(L.dim);
  const double* c = con.data();
  double* th = theta.data();
  for (int k = L.beta0; k < L.log_sigma0; ++k) th[k] = c[k];
  for (int q = 0; q < L.Q; ++q) {
    for (int p = 0; p < L.P; ++p) th[L.log_sigma(q, p)] = std::log(c[L.log_sigma(q, p)]);
    th[L.omega(q)] = std::atanh(c[L.omega(q)]);
    th[L.gamma(q)] = c[L.gamma(q)];
    th[L.psi(q)] = std::log(c[L.psi(q)]);
  }
  for (int i = 0; i < L.N; ++i) {
    for (int q = 0; q < L.Q; ++q) {
      const double s1 = c[L.log_sigma(q, 0)], s2 = c[L.log_sigma(q, 1)];
      const double w = c[L.omega(q)];
      const double cc = std::sqrt(1.0 - w * w);
      const double z1 = c[L.z(i, q, 0)] / s1;
      th[L.z(i, q, 0)] = z1;
      th[L.z(i, q, 1)] = (c[L.z(i, q, 1)] / s2 - w * z1) / cc;
      th[L.ell(i, q)] = std::log(c[L.ell(i, q)]);
    }
    if (L.Q == 2) th[L.r(i)] = std::atanh(c[L.r(i)]);
  }
  if (L.Q == 2) {
    th[L.ab0] = std::log(c[L.ab0]);
    th[L.ab0 + 1] = std::log(c[L.ab0 + 1]);
  }
  if (L.with_survival) {
    for (int d = 0; d < L.D; ++d) {
      th[L.alpha(d)] = c[L.alpha(d)];
      th[L.eta(d)] = c[L.eta(d)];
    }
  }
  for (int e = 0; e < L.n_flagged; ++e) {
    const auto& fe = flagged_[static_cast<std::size_t>(e)];
    th[L.u(e)] = std::log(panel_->detection_limits[static_cast<std::size_t>(fe.biomarker)] - c[L.u(e)]);
  }
  if (L.with_survival) {
    for (int k = 0; k < L.n_censored; ++k) {
      const auto& rec = records_[static_cast<std::size_t>(censored_[static_cast<std::size_t>(k)])];
      th[L.v(k)] = std::log(c[L.v(k)] - rec.time);
    }
  }
  return theta;
}

std::vector<std::string> JointModel::param_names() const {
  const auto& L = layout_;
  std::vector<std::string> names(static_cast<std::size_t>(L.dim));
  for (int q = 0; q < L.Q; ++q) {
    for (int k = 0; k < L.m[static_cast<std::size_t>(q)]; ++k) {
      names[static_cast<std::size_t>(L.beta(q, k))] =
          "beta_" + std::to_string(q + 1) + "_" + std::to_string(k + 1);
    }
    for (int p = 0; p < L.P; ++p) {
      names[static_cast<std::size_t>(L.log_sigma(q, p))] =
          "sigma_" + std::to_string(q + 1) + "_" + std::to_string(p + 1);
    }
    names[static_cast<std::size_t>(L.omega(q))] = "omega_" + std::to_string(q + 1);
    names[static_cast<std::size_t>(L.gamma(q))] = "gamma_" + std::to_string(q + 1);
    names[static_cast<std::size_t>(L.psi(q))] = "psi_" + std::to_string(q + 1);
  }
  for (int i = 0; i < L.N; ++i) {
    for (int q = 0; q < L.Q; ++q) {
      for (int p = 0; p < L.P; ++p) {
        names[static_cast<std::size_t>(L.z(i, q, p))] = "b_" + std::to_string(i + 1) + "_" +
                                                        std::to_string(q + 1) + "_" +
                                                        std::to_string(p + 1);
      }
      names[static_cast<std::size_t>(L.ell(i, q))] =
          "s2_" + std::to_string(i + 1) + "_" + std::to_string(q + 1);
    }
    if (L.Q == 2) names[static_cast<std::size_t>(L.r(i))] = "r_" + std::to_string(i + 1);
  }
  if (L.Q == 2) {
    names[static_cast<std::size_t>(L.ab0)] = "a";
    names[static_cast<std::size_t>(L.ab0 + 1)] = "b";
  }
  if (L.with_survival) {
    for (int d = 0; d < L.D; ++d) {
      names[static_cast<std::size_t>(L.alpha(d))] = "alpha_" + std::to_string(d + 1);
      names[static_cast<std::size_t>(L.eta(d))] = "eta_" + std::to_string(d + 1);
    }
  }
  for (int e = 0; e < L.n_flagged; ++e) {
    names[static_cast<std::size_t>(L.u(e))] = "x_imp_" + std::to_string(e + 1);
  }
  if (L.with_survival) {
    for (int k = 0; k < L.n_censored; ++k) {
      names[static_cast<std::size_t>(L.v(k))] = "t_imp_" + std::to_string(k + 1);
    }
  }
  return names;
}

double JointModel::mean_at(const Eigen::VectorXd& con, int i, int j, int q) const {
  const auto& L = layout_;
  const double t = panel_->subjects[static_cast<std::size_t>(i)].times[static_cast<std::size_t>(j)];
  return polyval(con.data() + L.beta(q, 0), L.m[static_cast<std::size_t>(q)], t) +
         con[L.z(i, q, 0)] + con[L.z(i, q, 1)] * t;
}

double JointModel::resid_sd_at(const Eigen::VectorXd& con, int i, int q) const {
  return std::sqrt(con[layout_.ell(i, q)]);
}

double JointModel::resid_corr_at(const Eigen::VectorXd& con, int i) const {
  return (layout_.Q == 2) ? con[layout_.r(i)] : 0.0;
}

std::vector<double> JointModel::design_row_at(const Eigen::VectorXd& con, int i) const {
  const auto& L = layout_;
  std::vector<double> b(static_cast<std::size_t>(L.Q * L.P));
  std::vector<double> logvar(static_cast<std::size_t>(L.Q));
  std::vector<double> sig(static_cast<std::size_t>(L.Q * L.P));
  std::vector<double> gam(static_cast<std::size_t>(L.Q)), ps(static_cast<std::size_t>(L.Q));
  for (int q = 0; q < L.Q; ++q) {
    for (int p = 0; p < L.P; ++p) {
      b[static_cast<std::size_t>(q * L.P + p)] = con[L.z(i, q, p)];
      sig[static_cast<std::size_t>(q * L.P + p)] = con[L.log_sigma(q, p)];
    }
    logvar[static_cast<std::size_t>(q)] = std::log(con[L.ell(i, q)]);
    gam[static_cast<std::size_t>(q)] = con[L.gamma(q)];
    ps[static_cast<std::size_t>(q)] = con[L.psi(q)];
  }
  const auto& z = records_.empty() ? std::vector<double>{}
                                   : records_[static_cast<std::size_t>(i)].covariates;
  return build_design_row(b, logvar, sig, gam, ps, z);
}

FhtParams JointModel::fht_params_at(const Eigen::VectorXd& con, int i) const {
  const auto& L = layout_;
  SurvivalCoefficients coef;
  coef.alpha.resize(static_cast<std::size_t>(L.D));
  coef.eta.resize(static_cast<std::size_t>(L.D));
  for (int d = 0; d < L.D; ++d) {
    coef.alpha[static_cast<std::size_t>(d)] = con[L.alpha(d)];
    coef.eta[static_cast<std::size_t>(d)] = con[L.eta(d)];
  }
  return link_latents(design_row_at(con, i), coef);
}

// ---------------------------------------------------------------------------

ThresholdOnlyModel::ThresholdOnlyModel(Eigen::MatrixXd design,
                                       std::vector<SurvivalRecord> records,
                                       PriorConfig priors)
    : design_(std::move(design)), records_(std::move(records)), priors_(priors) {
  if (design_.rows() != static_cast<Eigen::Index>(records_.size())) {
    throw std::invalid_argument("ThresholdOnlyModel: design/record count mismatch");
  }
  censor_index_.assign(records_.size(), -1);
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!records_[i].event) censor_index_[i] = n_censored_++;
  }
  std::tie(init_log_y0_, init_drift_) = moment_start(records_);
}

Eigen::VectorXd ThresholdOnlyModel::initial_point(Rng& rng, double radius) const {
  const int D = static_cast<int>(design_.cols());
  Eigen::VectorXd theta(dim());
  for (int d = 0; d < dim(); ++d) theta[d] = rng.uniform(-radius, radius);
  for (int d = 0; d < 2 * D; ++d) theta[d] = rng.uniform(-0.05, 0.05);
  theta[0] += init_log_y0_;
  theta[D] += init_drift_;
  return theta;
}

Eigen::VectorXd ThresholdOnlyModel::metric_hint() const {
  const int D = static_cast<int>(design_.cols());
  Eigen::VectorXd m = Eigen::VectorXd::Constant(dim(), 0.25);
  for (int d = 0; d < D; ++d) {
    m[d] = 0.0025;
    m[D + d] = 0.01;
  }
  return m;
}

double ThresholdOnlyModel::log_density_gradient(const Eigen::VectorXd& theta,
                                                Eigen::VectorXd& grad) const {
  const int D = static_cast<int>(design_.cols());
  grad.setZero(dim());
  const double* th = theta.data();
  double* g = grad.data();
  double value = 0.0;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& rec = records_[i];
    double log_y0 = 0.0, drift = 0.0;
    for (int d = 0; d < D; ++d) {
      log_y0 += th[d] * design_(static_cast<Eigen::Index>(i), d);
      drift += th[D + d] * design_(static_cast<Eigen::Index>(i), d);
    }
    const double y0 = std::exp(log_y0);
    const int vslot = censor_index_[i];
    double t_ev = rec.time;
    if (vslot >= 0) {
      t_ev = rec.time + std::exp(th[2 * D + vslot]);
      value += th[2 * D + vslot];
    }
    const double devt = y0 + drift * t_ev;
    value += log_y0 - 0.5 * (stats::kLogTwoPi + 3.0 * std::log(t_ev)) -
             devt * devt / (2.0 * t_ev);
    const double d_logy0 = 1.0 - y0 * devt / t_ev;
    const double d_drift = -devt;
    for (int d = 0; d < D; ++d) {
      g[d] += d_logy0 * design_(static_cast<Eigen::Index>(i), d);
      g[D + d] += d_drift * design_(static_cast<Eigen::Index>(i), d);
    }
    if (vslot >= 0) {
      const double d_t = -1.5 / t_ev + y0 * y0 / (2.0 * t_ev * t_ev) - drift * drift / 2.0;
      g[2 * D + vslot] += d_t * (t_ev - rec.time) + 1.0;
    }
    if (!std::isfinite(value)) {
      grad.setZero();
      return kNegInf;
    }
  }
  for (int d = 0; d < 2 * D; ++d) {
    value += stats::normal_lpdf(th[d], 0.0, priors_.coef_scale);
    g[d] += -th[d] / (priors_.coef_scale * priors_.coef_scale);
  }
  if (!std::isfinite(value)) {
    grad.setZero();
    return kNegInf;
  }
  return value;
}

Eigen::VectorXd ThresholdOnlyModel::constrain(const Eigen::VectorXd& theta) const {
  const int D = static_cast<int>(design_.cols());
  Eigen::VectorXd con = theta;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const int vslot = censor_index_[i];
    if (vslot >= 0) con[2 * D + vslot] = records_[i].time + std::exp(theta[2 * D + vslot]);
  }
  return con;
}

std::vector<std::string> ThresholdOnlyModel::param_names() const {
  const int D = static_cast<int>(design_.cols());
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(dim()));
  for (int d = 0; d < D; ++d) names.push_back("alpha_" + std::to_string(d + 1));
  for (int d = 0; d < D; ++d) names.push_back("eta_" + std::to_string(d + 1));
  for (int k = 0; k < n_censored_; ++k) names.push_back("t_imp_" + std::to_string(k + 1));
  return names;
}

}  // namespace fhtjm

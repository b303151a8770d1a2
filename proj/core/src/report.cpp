#include "fhtjm/report.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fhtjm/diagnostics.hpp"
#include "fhtjm/longitudinal.hpp"
#include "fhtjm/stats.hpp"

namespace fhtjm {

PosteriorDraws::PosteriorDraws(Eigen::MatrixXd draws, std::vector<std::string> names)
    : draws_(std::move(draws)), names_(std::move(names)) {
  if (draws_.cols() != static_cast<Eigen::Index>(names_.size())) {
    throw std::invalid_argument("PosteriorDraws: name/column mismatch");
  }
}

PosteriorDraws PosteriorDraws::from_chains(const std::vector<ChainResult>& chains,
                                           std::vector<std::string> names) {
  if (chains.empty()) throw std::invalid_argument("PosteriorDraws: no chains");
  Eigen::Index total = 0;
  for (const auto& c : chains) total += c.draws.rows();
  Eigen::MatrixXd merged(total, chains.front().draws.cols());
  Eigen::Index at = 0;
  for (const auto& c : chains) {
    merged.middleRows(at, c.draws.rows()) = c.draws;
    at += c.draws.rows();
  }
  return PosteriorDraws(std::move(merged), std::move(names));
}

int PosteriorDraws::col(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

SurvivalCoefficients PosteriorDraws::coefficients_at(Eigen::Index k, int design_dim) const {
  SurvivalCoefficients coef;
  coef.alpha.resize(static_cast<std::size_t>(design_dim));
  coef.eta.resize(static_cast<std::size_t>(design_dim));
  for (int d = 0; d < design_dim; ++d) {
    const int ca = col("alpha_" + std::to_string(d + 1));
    const int ce = col("eta_" + std::to_string(d + 1));
    if (ca < 0 || ce < 0) throw std::invalid_argument("draws lack survival coefficients");
    coef.alpha[static_cast<std::size_t>(d)] = draws_(k, ca);
    coef.eta[static_cast<std::size_t>(d)] = draws_(k, ce);
  }
  return coef;
}

CovariateProfile CovariateProfile::neutral(const ModelSpec& spec, std::vector<double> covariates) {
  if (covariates.size() != static_cast<std::size_t>(spec.n_covariates)) {
    throw std::invalid_argument("profile: covariate count mismatch");
  }
  CovariateProfile p;
  p.design.assign(static_cast<std::size_t>(spec.design_dim()), 0.0);
  p.design[0] = 1.0;
  const int base = 1 + ModelSpec::n_random * spec.n_biomarkers + spec.n_biomarkers;
  for (std::size_t k = 0; k < covariates.size(); ++k) {
    p.design[static_cast<std::size_t>(base) + k] = covariates[k];
  }
  return p;
}

CovariateProfile& CovariateProfile::effect_offset(const ModelSpec& spec, int q, int p,
                                                  double offset) {
  if (q < 0 || q >= spec.n_biomarkers || p < 0 || p >= ModelSpec::n_random) {
    throw std::invalid_argument("profile: effect index out of range");
  }
  design[static_cast<std::size_t>(1 + q * ModelSpec::n_random + p)] = offset;
  return *this;
}

CovariateProfile& CovariateProfile::variability_offset(const ModelSpec& spec, int q,
                                                       double offset) {
  if (q < 0 || q >= spec.n_biomarkers) {
    throw std::invalid_argument("profile: biomarker index out of range");
  }
  design[static_cast<std::size_t>(1 + ModelSpec::n_random * spec.n_biomarkers + q)] = offset;
  return *this;
}

namespace {

std::vector<Eigen::Index> spread_indices(Eigen::Index available, int wanted) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(wanted));
  for (int k = 0; k < wanted; ++k) {
    idx.push_back(static_cast<Eigen::Index>(
        (static_cast<double>(k) + 0.5) / static_cast<double>(wanted) * static_cast<double>(available)));
  }
  return idx;
}

double median_of(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1, v.end());
    return 0.5 * (hi + v[mid - 1]);
  }
  return hi;
}

}  // namespace

Eigen::MatrixXd ppc_longitudinal(const JointModel& model, const PosteriorDraws& draws, int n_draws,
                                 Rng& rng) {
  if (draws.n_draws() < 100 || n_draws < 100) {
    throw InsufficientDrawsError("ppc_longitudinal: need at least 100 retained draws");
  }
  n_draws = std::min<int>(n_draws, static_cast<int>(draws.n_draws()));
  const auto& panel = model.panel();
  const int Q = model.spec().n_biomarkers;
  const int N = static_cast<int>(panel.n_subjects());
  Eigen::MatrixXd below(N, Q);
  below.setZero();

  const auto picks = spread_indices(draws.n_draws(), n_draws);
  std::vector<double> mu(static_cast<std::size_t>(Q)), xrow(static_cast<std::size_t>(Q));
  std::vector<double> cov(static_cast<std::size_t>(Q * Q));
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(Q));

  for (const auto k : picks) {
    const Eigen::VectorXd row = draws.row(k);
    for (int i = 0; i < N; ++i) {
      const auto& subj = panel.subjects[static_cast<std::size_t>(i)];
      double s_sd[2], r = model.resid_corr_at(row, i);
      for (int q = 0; q < Q; ++q) s_sd[q] = model.resid_sd_at(row, i, q);
      cov[0] = s_sd[0] * s_sd[0];
      if (Q == 2) {
        cov[1] = cov[2] = r * s_sd[0] * s_sd[1];
        cov[3] = s_sd[1] * s_sd[1];
      }
      double t_com[2] = {0.0, 0.0}, t_rep[2] = {0.0, 0.0};
      for (std::size_t j = 0; j < subj.n_visits(); ++j) {
        bool any_flag = false;
        for (int q = 0; q < Q; ++q) {
          mu[static_cast<std::size_t>(q)] = model.mean_at(row, i, static_cast<int>(j), q);
          flags[static_cast<std::size_t>(q)] = subj.flagged(j, q, Q) ? 1 : 0;
          xrow[static_cast<std::size_t>(q)] = subj.value(j, q, Q);
          any_flag |= subj.flagged(j, q, Q);
        }
        if (any_flag) {
          const auto imputed = impute_censored_conditional(rng, xrow, flags, mu, cov,
                                                           panel.detection_limits);
          std::size_t c = 0;
          for (int q = 0; q < Q; ++q) {
            if (flags[static_cast<std::size_t>(q)]) xrow[static_cast<std::size_t>(q)] = imputed[c++];
          }
        }
        // replicated completed row from the fitted Gaussian law
        double rep[2];
        if (Q == 1) {
          rep[0] = mu[0] + s_sd[0] * rng.normal();
        } else {
          const double n1 = rng.normal(), n2 = rng.normal();
          rep[0] = mu[0] + s_sd[0] * n1;
          rep[1] = mu[1] + s_sd[1] * (r * n1 + std::sqrt(1.0 - r * r) * n2);
        }
        for (int q = 0; q < Q; ++q) {
          const double dc = xrow[static_cast<std::size_t>(q)] - mu[static_cast<std::size_t>(q)];
          const double dr = rep[q] - mu[static_cast<std::size_t>(q)];
          t_com[q] += dc * dc / (s_sd[q] * s_sd[q]);
          t_rep[q] += dr * dr / (s_sd[q] * s_sd[q]);
        }
      }
      for (int q = 0; q < Q; ++q) below(i, q) += (t_com[q] <= t_rep[q]) ? 1.0 : 0.0;
    }
  }
  below /= static_cast<double>(n_draws);
  return below;
}

SurvivalPpc ppc_survival(const JointModel& model, const PosteriorDraws& draws,
                         const std::vector<double>& age_thresholds, int n_draws, Rng& rng) {
  if (draws.n_draws() < 100 || n_draws < 100) {
    throw InsufficientDrawsError("ppc_survival: need at least 100 retained draws");
  }
  n_draws = std::min<int>(n_draws, static_cast<int>(draws.n_draws()));
  const auto& records = model.records();
  const int N = static_cast<int>(records.size());

  SurvivalPpc out;
  out.count_p.assign(age_thresholds.size(), 0.0);
  const auto picks = spread_indices(draws.n_draws(), n_draws);
  std::vector<double> t_com(static_cast<std::size_t>(N)), t_rep(static_cast<std::size_t>(N));

  for (const auto k : picks) {
    const Eigen::VectorXd row = draws.row(k);
    for (int i = 0; i < N; ++i) {
      const FhtParams fp = model.fht_params_at(row, i);
      const auto& rec = records[static_cast<std::size_t>(i)];
      if (rec.event) {
        t_com[static_cast<std::size_t>(i)] = rec.time;
      } else {
        try {
          t_com[static_cast<std::size_t>(i)] = fht_sample_truncated(rng, fp, rec.time);
        } catch (const NoTruncationMassError&) {
          // the draw leaves no mass past the censoring time; pin at the bound
          t_com[static_cast<std::size_t>(i)] = rec.time;
        }
      }
      t_rep[static_cast<std::size_t>(i)] = fht_sample(rng, fp).time;
    }
    const double med_com = median_of(t_com);
    const double med_rep = median_of(t_rep);
    if (med_com <= med_rep) out.median_p += 1.0;
    for (std::size_t a = 0; a < age_thresholds.size(); ++a) {
      int c_com = 0, c_rep = 0;
      for (int i = 0; i < N; ++i) {
        c_com += (t_com[static_cast<std::size_t>(i)] <= age_thresholds[a]);
        c_rep += (t_rep[static_cast<std::size_t>(i)] <= age_thresholds[a]);
      }
      if (c_com <= c_rep) out.count_p[a] += 1.0;
    }
  }
  out.median_p /= static_cast<double>(n_draws);
  for (auto& p : out.count_p) p /= static_cast<double>(n_draws);
  return out;
}

CurveTable survival_curve(const PosteriorDraws& draws, const CovariateProfile& profile,
                          const std::vector<double>& grid) {
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (!(grid[g] > grid[g - 1]) || grid[g - 1] < 0.0) {
      throw std::invalid_argument("survival_curve: grid must be increasing and nonnegative");
    }
  }
  const int D = static_cast<int>(profile.design.size());
  const auto K = draws.n_draws();
  Eigen::MatrixXd values(K, static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto coef = draws.coefficients_at(k, D);
    const FhtParams fp = link_latents(profile.design, coef);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      values(k, static_cast<Eigen::Index>(g)) = fht_survival(grid[g], fp);
    }
  }
  CurveTable table;
  table.time = grid;
  std::vector<double> colbuf(static_cast<std::size_t>(K));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto col = values.col(static_cast<Eigen::Index>(g));
    table.mean.push_back(col.mean());
    for (Eigen::Index k = 0; k < K; ++k) colbuf[static_cast<std::size_t>(k)] = col[k];
    table.lo.push_back(quantile(colbuf, 0.025));
    table.hi.push_back(quantile(colbuf, 0.975));
  }
  return table;
}

MedianSummary median_event_time(const PosteriorDraws& draws, const CovariateProfile& profile,
                                double time_offset) {
  const int D = static_cast<int>(profile.design.size());
  MedianSummary out;
  out.per_draw.reserve(static_cast<std::size_t>(draws.n_draws()));
  for (Eigen::Index k = 0; k < draws.n_draws(); ++k) {
    const auto coef = draws.coefficients_at(k, D);
    const FhtParams fp = link_latents(profile.design, coef);
    if (cure_rate(fp) >= 0.5) {
      throw MedianUndefinedError("median_event_time: cure rate >= 1/2 at draw " +
                                 std::to_string(k));
    }
    out.per_draw.push_back(fht_quantile(0.5, fp) + time_offset);
  }
  double mean = 0.0;
  for (double v : out.per_draw) mean += v;
  out.mean = mean / static_cast<double>(out.per_draw.size());
  out.lo = quantile(out.per_draw, 0.025);
  out.hi = quantile(out.per_draw, 0.975);
  return out;
}

MedianSummary median_difference(const PosteriorDraws& draws, const CovariateProfile& a,
                                const CovariateProfile& b) {
  const auto ma = median_event_time(draws, a);
  const auto mb = median_event_time(draws, b);
  MedianSummary out;
  out.per_draw.resize(ma.per_draw.size());
  for (std::size_t k = 0; k < ma.per_draw.size(); ++k) {
    out.per_draw[k] = ma.per_draw[k] - mb.per_draw[k];
  }
  double mean = 0.0;
  for (double v : out.per_draw) mean += v;
  out.mean = mean / static_cast<double>(out.per_draw.size());
  out.lo = quantile(out.per_draw, 0.025);
  out.hi = quantile(out.per_draw, 0.975);
  return out;
}

}  // namespace fhtjm

#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "fhtjm/model.hpp"
#include "fhtjm/nuts.hpp"
#include "fhtjm/rng.hpp"

namespace fhtjm {

/// Merged kept draws with named columns.
class PosteriorDraws {
 public:
  PosteriorDraws(Eigen::MatrixXd draws, std::vector<std::string> names);
  static PosteriorDraws from_chains(const std::vector<ChainResult>& chains,
                                    std::vector<std::string> names);

  Eigen::Index n_draws() const { return draws_.rows(); }
  const Eigen::MatrixXd& matrix() const { return draws_; }
  const std::vector<std::string>& names() const { return names_; }
  int col(const std::string& name) const;  // -1 when absent
  Eigen::VectorXd row(Eigen::Index k) const { return draws_.row(k); }

  /// Survival coefficients of draw k (columns alpha_1.., eta_1..).
  SurvivalCoefficients coefficients_at(Eigen::Index k, int design_dim) const;

 private:
  Eigen::MatrixXd draws_;
  std::vector<std::string> names_;
};

struct InsufficientDrawsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MedianUndefinedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A survival design row for an synthetic individual: offsets on the
/// standardized scale, unspecified entries zero, covariates as given.
struct CovariateProfile {
  std::string name = "profile";
  std::vector<double> design;  // full row, design[0] == 1

  static CovariateProfile neutral(const ModelSpec& spec, std::vector<double> covariates = {});
  CovariateProfile& effect_offset(const ModelSpec& spec, int q, int p, double offset);
  CovariateProfile& variability_offset(const ModelSpec& spec, int q, double offset);
};

/// Posterior predictive p-values of the per-subject chi-squared discrepancy,
/// one per (subject, biomarker). Censored entries are re-imputed per draw from
/// the truncated row conditional; replicated rows come from the fitted
/// Gaussian law without truncation.
Eigen::MatrixXd ppc_longitudinal(const JointModel& model, const PosteriorDraws& draws, int n_draws,
                                 Rng& rng);

/// Posterior predictive p-values for the event-time summaries: the median and
/// the running event counts at each age threshold.
struct SurvivalPpc {
  double median_p = 0.0;
  std::vector<double> count_p;  // one per age threshold
};

SurvivalPpc ppc_survival(const JointModel& model, const PosteriorDraws& draws,
                         const std::vector<double>& age_thresholds, int n_draws, Rng& rng);

/// Pointwise posterior mean and central 95% band of the survival curve for a
/// covariate profile.
struct CurveTable {
  std::vector<double> time, mean, lo, hi;
};

CurveTable survival_curve(const PosteriorDraws& draws, const CovariateProfile& profile,
                          const std::vector<double>& grid);

/// Posterior distribution of the median event time under a profile.
struct MedianSummary {
  double mean = 0.0, lo = 0.0, hi = 0.0;
  std::vector<double> per_draw;
};

MedianSummary median_event_time(const PosteriorDraws& draws, const CovariateProfile& profile,
                                double time_offset = 0.0);

/// Paired per-draw difference of medians between two profiles (a - b).
MedianSummary median_difference(const PosteriorDraws& draws, const CovariateProfile& a,
                                const CovariateProfile& b);

}  // namespace fhtjm

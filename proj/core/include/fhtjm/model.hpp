#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "fhtjm/data.hpp"
#include "fhtjm/fht.hpp"
#include "fhtjm/longitudinal.hpp"
#include "fhtjm/threshold.hpp"

namespace fhtjm {

/// Differentiable unnormalized log-density over an unconstrained real vector;
/// the surface the gradient sampler drives.
class TargetDensity {
 public:
  virtual ~TargetDensity() = default;

  virtual int dim() const = 0;

  /// Log density and its gradient at `theta`. Numerically invalid states
  /// yield -inf with a zero gradient (the proposal is simply rejected).
  virtual double log_density_gradient(const Eigen::VectorXd& theta,
                                      Eigen::VectorXd& grad) const = 0;

  /// Constrained-scale view of a draw; identity unless overridden.
  virtual Eigen::VectorXd constrain(const Eigen::VectorXd& theta) const { return theta; }
  virtual int constrained_dim() const { return dim(); }
  virtual std::vector<std::string> param_names() const;

  /// Chain starting point. Defaults to U(-radius, radius) per coordinate;
  /// models with sharply identified blocks may seed those near crude moment
  /// estimates instead.
  virtual Eigen::VectorXd initial_point(Rng& rng, double radius) const;

  /// Starting diagonal of the inverse mass matrix (posterior variance
  /// guesses). Warmup refines it; a block-aware hint keeps early step sizes
  /// off the floor when coordinate scales differ by orders of magnitude.
  virtual Eigen::VectorXd metric_hint() const {
    return Eigen::VectorXd::Ones(dim());
  }
};

/// Block offsets of the joint model's flat parameter vector. The same layout
/// serves the unconstrained and constrained scales.
struct ParamLayout {
  int Q = 0;
  int P = 0;
  int N = 0;
  int D = 0;                 // survival design dimension
  std::vector<int> m;        // fixed-effect counts per biomarker
  bool with_survival = true;
  int n_flagged = 0;
  int n_censored = 0;

  int beta0 = 0, log_sigma0 = 0, omega0 = 0, z0 = 0, ell0 = 0, r0 = 0;
  int gamma0 = 0, psi0 = 0, ab0 = 0, alpha0 = 0, eta0 = 0, u0 = 0, v0 = 0;
  int dim = 0;

  int beta(int q, int k) const;
  int log_sigma(int q, int p) const { return log_sigma0 + q * P + p; }
  int omega(int q) const { return omega0 + q; }
  int z(int i, int q, int p) const { return z0 + (i * Q + q) * P + p; }
  int ell(int i, int q) const { return ell0 + i * Q + q; }
  int r(int i) const { return r0 + i; }
  int gamma(int q) const { return gamma0 + q; }
  int psi(int q) const { return psi0 + q; }
  int alpha(int d) const { return alpha0 + d; }
  int eta(int d) const { return eta0 + d; }
  int u(int e) const { return u0 + e; }
  int v(int c) const { return v0 + c; }
};

/// The joint posterior of the longitudinal and threshold-regression
/// submodels in unconstrained coordinates, with analytic gradients.
///
/// Random effects are non-centered (standard-normal innovations scaled by
/// the Cholesky of their covariance); positive quantities are log
/// transformed, correlations atanh transformed; below-limit biomarker values
/// enter as x = L - exp(u) and censored event times as t = C + exp(v), with
/// all change-of-variable terms included.
class JointModel : public TargetDensity {
 public:
  struct Options {
    bool include_survival = true;  // false = longitudinal-only (two-stage first pass)
  };

  JointModel(const LongitudinalPanel& panel, std::vector<SurvivalRecord> records,
             ModelSpec spec, Options opts);
  JointModel(const LongitudinalPanel& panel, std::vector<SurvivalRecord> records, ModelSpec spec)
      : JointModel(panel, std::move(records), std::move(spec), Options{}) {}

  int dim() const override { return layout_.dim; }
  double log_density_gradient(const Eigen::VectorXd& theta,
                              Eigen::VectorXd& grad) const override;
  Eigen::VectorXd constrain(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd unconstrain(const Eigen::VectorXd& constrained) const;
  std::vector<std::string> param_names() const override;
  Eigen::VectorXd initial_point(Rng& rng, double radius) const override;
  Eigen::VectorXd metric_hint() const override;

  const ParamLayout& layout() const { return layout_; }
  const ModelSpec& spec() const { return spec_; }
  const LongitudinalPanel& panel() const { return *panel_; }
  const std::vector<SurvivalRecord>& records() const { return records_; }

  /// Flagged panel entries in scan order (subject, visit, biomarker).
  struct FlaggedEntry {
    int subject, visit, biomarker;
  };
  const std::vector<FlaggedEntry>& flagged_entries() const { return flagged_; }
  /// Subjects with censored event times, in record order.
  const std::vector<int>& censored_subjects() const { return censored_; }

  // Constrained-draw accessors used by the reporting layer.
  double mean_at(const Eigen::VectorXd& con, int i, int j, int q) const;
  double resid_sd_at(const Eigen::VectorXd& con, int i, int q) const;
  double resid_corr_at(const Eigen::VectorXd& con, int i) const;
  std::vector<double> design_row_at(const Eigen::VectorXd& con, int i) const;
  FhtParams fht_params_at(const Eigen::VectorXd& con, int i) const;

 private:
  const LongitudinalPanel* panel_;
  std::vector<SurvivalRecord> records_;
  ModelSpec spec_;
  Options opts_;
  ParamLayout layout_;
  std::vector<FlaggedEntry> flagged_;
  std::vector<int> censored_;
  std::vector<std::vector<int>> flag_index_;  // subject -> flat u indices in scan order
  std::vector<int> censor_index_;             // subject -> v index or -1
  double init_log_y0_ = 0.0;                  // moment-matched starting intercepts
  double init_drift_ = -1.0;
  double time_scale_ = 1.0;                   // characteristic visit-time magnitude
};

/// Threshold regression against a fixed design matrix; the second pass of the
/// two-stage baseline. Parameters: alpha, eta, censored-time augmentations.
class ThresholdOnlyModel : public TargetDensity {
 public:
  ThresholdOnlyModel(Eigen::MatrixXd design, std::vector<SurvivalRecord> records,
                     PriorConfig priors);

  int dim() const override { return 2 * static_cast<int>(design_.cols()) + n_censored_; }
  double log_density_gradient(const Eigen::VectorXd& theta,
                              Eigen::VectorXd& grad) const override;
  Eigen::VectorXd constrain(const Eigen::VectorXd& theta) const override;
  std::vector<std::string> param_names() const override;
  Eigen::VectorXd initial_point(Rng& rng, double radius) const override;
  Eigen::VectorXd metric_hint() const override;

 private:
  Eigen::MatrixXd design_;  // N × D
  std::vector<SurvivalRecord> records_;
  PriorConfig priors_;
  std::vector<int> censor_index_;  // subject -> v slot or -1
  int n_censored_ = 0;
  double init_log_y0_ = 0.0;
  double init_drift_ = -1.0;
};

}  // namespace fhtjm

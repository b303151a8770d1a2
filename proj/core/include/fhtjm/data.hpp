#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fhtjm {

/// Longitudinal record for one subject: visit times and a visits × Q block of
/// biomarker values on the analysis scale. Entries flagged below_lod store
/// the detection limit itself; the actual value is treated as latent.
struct SubjectPanel {
  std::vector<double> times;          // strictly increasing, size n
  std::vector<double> values;         // row-major n × Q
  std::vector<std::uint8_t> below_lod;  // n × Q, 0/1

  std::size_t n_visits() const { return times.size(); }
  double value(std::size_t j, int q, int n_biomarkers) const {
    return values[j * static_cast<std::size_t>(n_biomarkers) + static_cast<std::size_t>(q)];
  }
  bool flagged(std::size_t j, int q, int n_biomarkers) const {
    return below_lod[j * static_cast<std::size_t>(n_biomarkers) + static_cast<std::size_t>(q)] != 0;
  }
};

struct LongitudinalPanel {
  int n_biomarkers = 1;
  std::vector<double> detection_limits;  // length Q; -inf marks an uncensored biomarker
  std::vector<SubjectPanel> subjects;

  std::size_t n_subjects() const { return subjects.size(); }
  std::size_t n_flagged() const;
  void validate() const;
};

/// Time-to-event record: observed time is the event time when `event`, else
/// the right-censoring time.
struct SurvivalRecord {
  double time = 0.0;
  bool event = true;
  std::vector<double> covariates;
};

struct PriorConfig {
  double beta_scale = 100.0;       // Normal sd on fixed effects
  double sigma_scale = 2.5;        // Half-Cauchy scale on random-effect sds
  double lkj_shape = 1.0;          // LKJ shape on random-effect correlations
  double gamma_scale = 100.0;      // Normal sd on log-variance means
  double psi_scale = 2.5;          // Half-Cauchy scale on log-variance sds
  double shape_rate_a = 0.1;       // Exponential rate on the Beta shape a
  double shape_rate_b = 0.1;       // Exponential rate on the Beta shape b
  double coef_scale = 100.0;       // Normal sd on survival coefficients
};

/// Structural description of the joint model; Q ≤ 2 and P = 2 random effects
/// (intercept + slope) per biomarker.
struct ModelSpec {
  int n_biomarkers = 1;                 // Q
  std::vector<int> poly_degrees;        // number of fixed-effect coefficients per biomarker
  int n_covariates = 0;                 // baseline covariates in the survival design
  std::vector<double> detection_limits; // length Q; -inf disables censoring
  PriorConfig priors;
  bool standardize_covariates = false;

  static constexpr int n_random = 2;    // P

  int design_dim() const {
    return 1 + n_random * n_biomarkers + n_biomarkers + n_covariates;
  }
  void validate() const;
};

inline constexpr double kNoDetectionLimit = -std::numeric_limits<double>::infinity();

}  // namespace fhtjm

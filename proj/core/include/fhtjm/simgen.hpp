#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fhtjm/data.hpp"
#include "fhtjm/rng.hpp"

namespace fhtjm {

/// Ground-truth generating configuration for one simulation scenario.
struct ScenarioConfig {
  std::string name = "custom";
  int n_subjects = 1000;
  int visits_min = 6;
  int visits_max = 15;
  /// Subjects enter at a uniform random offset on [0, visit_offset_max] and
  /// are seen annually afterwards.
  double visit_offset_max = 6.25;

  ModelSpec spec;

  // true parameter values
  std::vector<std::vector<double>> beta;     // [q][k]
  std::vector<double> sigma;                 // [q*P + p]
  std::vector<double> omega;                 // [q]
  std::vector<double> gamma;                 // [q]
  std::vector<double> psi;                   // [q]
  double corr_shape_a = 1.0;                 // Beta shape a of (r+1)/2, Q = 2
  double corr_shape_b = 1.0;
  std::vector<double> alpha;                 // survival coefficients
  std::vector<double> eta;
  std::vector<double> covariate_mean;        // baseline covariate laws (normal)
  std::vector<double> covariate_sd;
  double censor_rate = 0.0;                  // exponential right-censoring rate
  double never_hit_horizon = 1e4;            // censoring fallback for escaped paths

  void validate() const;
};

/// Everything that was latent during generation, for recovery diagnostics.
struct GroundTruth {
  std::vector<std::vector<double>> rand_effects;  // [i][q*P+p]
  std::vector<std::vector<double>> resid_sd;      // [i][q]
  std::vector<double> resid_corr;                 // [i]
  std::vector<double> y0;                         // [i]
  std::vector<double> drift;                      // [i]
  std::vector<double> event_time;                 // [i] true (uncensored) time
  std::vector<std::vector<double>> censored_values;  // [i] latent below-LOD values, scan order
  int never_hit_redraws = 0;
  int never_hit_fallbacks = 0;
};

struct Dataset {
  LongitudinalPanel panel;
  std::vector<SurvivalRecord> records;
  GroundTruth truth;
};

Dataset generate_dataset(const ScenarioConfig& cfg, Rng& rng);

/// True values of the global parameters keyed by the model's parameter names.
std::vector<std::pair<std::string, double>> true_globals(const ScenarioConfig& cfg);

/// Named presets: "q1-lod", "q2-lod", "swan-shape".
ScenarioConfig scenario_preset(const std::string& name);
std::vector<std::string> scenario_preset_names();

}  // namespace fhtjm

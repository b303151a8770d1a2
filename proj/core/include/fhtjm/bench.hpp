#pragma once

#include <map>
#include <string>
#include <vector>

#include "fhtjm/diagnostics.hpp"
#include "fhtjm/nuts.hpp"
#include "fhtjm/simgen.hpp"

namespace fhtjm {

/// One row of the replication-study table: the four evaluation criteria for
/// one parameter.
struct MetricRow {
  std::string name;
  double truth = 0.0;
  double coverage = 0.0;        // fraction of replications whose interval covers truth
  double bias = 0.0;            // mean(estimate - truth)
  double avg_interval_length = 0.0;
  double rmse = 0.0;
  int n_replications = 0;
};

/// Aggregate posterior means and central 95% intervals across replications.
/// Interval endpoints count as covering (inclusive).
MetricRow compute_metrics(const std::string& name, double truth,
                          const std::vector<double>& estimates,
                          const std::vector<std::pair<double, double>>& intervals);

/// Posterior summaries of the survival coefficients from the two-stage
/// baseline: the longitudinal submodel is fitted alone, then the threshold
/// regression runs against empirically standardized posterior-mean latents.
struct TwoStageFit {
  std::vector<ParamSummary> survival_summaries;  // alpha_*, eta_*
  std::vector<ParamSummary> stage1_summaries;    // longitudinal parameters
  double max_rhat = 0.0;
};

TwoStageFit tsim_two_stage(const Dataset& data, const ModelSpec& spec, const NutsConfig& fit,
                           int n_threads = 1);

struct ReplicationConfig {
  ScenarioConfig scenario;
  int replications = 20;
  NutsConfig fit;
  bool run_joint = true;
  bool run_two_stage = true;
  double rhat_limit = 1.1;    // replications above this are excluded
  int threads = 1;
  std::uint64_t seed = 1;
};

struct BenchResult {
  std::vector<MetricRow> joint;       // empty unless run_joint
  std::vector<MetricRow> two_stage;   // alpha/eta only
  int excluded_joint = 0;
  int excluded_two_stage = 0;
  int replications = 0;
};

/// Generate R datasets, fit the requested methods on each, and aggregate the
/// four criteria per parameter. Replications run in parallel; replication r
/// derives its seeds from config.seed + r.
BenchResult run_replications(const ReplicationConfig& config);

}  // namespace fhtjm

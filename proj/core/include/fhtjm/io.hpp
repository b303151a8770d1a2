#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fhtjm/bench.hpp"
#include "fhtjm/data.hpp"
#include "fhtjm/diagnostics.hpp"
#include "fhtjm/report.hpp"
#include "fhtjm/simgen.hpp"

namespace fhtjm {

/// Data-file failure carrying the offending location.
struct ParseError : std::runtime_error {
  ParseError(const std::string& file, long line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what) {}
};

// Longitudinal panel file: subject_id,time,x1..xQ,lod1..lodQ (flags 0/1).
void write_panel_csv(const std::filesystem::path& path, const LongitudinalPanel& panel);
LongitudinalPanel read_panel_csv(const std::filesystem::path& path,
                                 const std::vector<double>& detection_limits);

// Survival file: subject_id,time,event,z1..zK.
void write_survival_csv(const std::filesystem::path& path,
                        const std::vector<SurvivalRecord>& records);
std::vector<SurvivalRecord> read_survival_csv(const std::filesystem::path& path);

// Ground-truth sidecar written by the simulator.
void write_truth_json(const std::filesystem::path& path, const ScenarioConfig& cfg,
                      const GroundTruth& truth);

/// Streams one draws file: header of parameter names, then one row per kept
/// iteration, written as the sampler produces them.
class DrawsWriter {
 public:
  DrawsWriter(const std::filesystem::path& path, const std::vector<std::string>& names);
  void append(const Eigen::VectorXd& constrained_draw);

 private:
  std::ofstream out_;
  Eigen::Index width_;
};

/// Reads a draws file back into a matrix plus its header names.
std::pair<Eigen::MatrixXd, std::vector<std::string>> read_draws_csv(
    const std::filesystem::path& path);

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<ParamSummary>& summaries);

void write_metrics_csv(const std::filesystem::path& path, const BenchResult& result);

void write_curve_csv(const std::filesystem::path& path, const CurveTable& curve);

void write_longitudinal_ppc_csv(const std::filesystem::path& path, const Eigen::MatrixXd& pvals);
void write_survival_ppc_csv(const std::filesystem::path& path, const SurvivalPpc& ppc,
                            const std::vector<double>& age_thresholds);

/// Serialize the fully-resolved run configuration; every command writes one
/// next to its outputs so a run is reproducible from the manifest alone.
void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& fields);

// JSON (de)serialization of the structural configs.
std::string model_spec_to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const std::string& text);

}  // namespace fhtjm

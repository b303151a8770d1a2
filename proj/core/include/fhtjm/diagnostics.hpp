#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "fhtjm/nuts.hpp"

namespace fhtjm {

/// Split-chain potential scale reduction and effective sample size for one
/// parameter column across chains. R-hat is NaN when every half-chain is
/// constant (the degenerate-chain signal).
struct RhatEss {
  double rhat = std::numeric_limits<double>::quiet_NaN();
  double ess = std::numeric_limits<double>::quiet_NaN();
};

RhatEss rhat_ess_single(const std::vector<const Eigen::VectorXd*>& chains);

/// Convenience overload over ChainResult columns.
std::vector<RhatEss> rhat_ess(const std::vector<ChainResult>& chains);

/// Per-parameter posterior summary over pooled chains.
struct ParamSummary {
  std::string name;
  double mean = 0, sd = 0, q025 = 0, q50 = 0, q975 = 0;
  double rhat = std::numeric_limits<double>::quiet_NaN();
  double ess = std::numeric_limits<double>::quiet_NaN();
};

std::vector<ParamSummary> summarize(const std::vector<ChainResult>& chains,
                                    const std::vector<std::string>& names);

/// Empirical quantile with linear interpolation on the sorted copy.
double quantile(std::vector<double> values, double p);

}  // namespace fhtjm

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fhtjm/model.hpp"
#include "fhtjm/rng.hpp"

namespace fhtjm {

struct NutsConfig {
  int iter = 2000;
  int warmup = 1000;
  int chains = 3;
  double target_accept = 0.8;
  int max_treedepth = 10;
  double max_delta_h = 1000.0;   // divergence threshold on the Hamiltonian error
  std::uint64_t seed = 1;
  double init_radius = 1.0;      // unconstrained init ~ U(-radius, radius)
  bool adapt_metric = true;
  Eigen::VectorXd initial_inv_metric;  // empty = identity

  void validate() const {
    if (iter <= warmup || warmup < 100) {
      throw std::invalid_argument("NutsConfig: need iter > warmup >= 100");
    }
  }
};

/// Kept draws (constrained scale) plus adaptation state of one chain.
struct ChainResult {
  Eigen::MatrixXd draws;         // kept iterations × constrained dimension
  Eigen::VectorXd inv_metric;    // adapted diagonal of the inverse mass matrix
  double step_size = 0.0;
  int divergences = 0;           // post-warmup
  int max_treedepth_hits = 0;
  double mean_accept = 0.0;
  int iter = 0;
  int warmup = 0;
};

struct FatalDivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Streaming hook: invoked once per kept draw with the constrained vector.
using DrawCallback = std::function<void(int chain, int kept_index, const Eigen::VectorXd&)>;

/// Run one NUTS chain (dynamic multinomial trajectories, dual-averaged step
/// size, windowed diagonal metric adaptation during warmup).
ChainResult run_chain(const TargetDensity& target, const NutsConfig& config, int chain_index,
                      const DrawCallback& callback = nullptr);

/// Run config.chains chains on up to n_threads threads; chain k seeds its own
/// random stream with config.seed + k, so results do not depend on the thread
/// count.
std::vector<ChainResult> run_chains(const TargetDensity& target, const NutsConfig& config,
                                    int n_threads, const DrawCallback& callback = nullptr);

}  // namespace fhtjm

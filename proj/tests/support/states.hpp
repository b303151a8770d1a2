#pragma once

// Assembles the constrained parameter vector that generated a simulated
// dataset. Gradient checks perturb around this point: the log posterior is
// moderate there, so central differences resolve 1e-5 relative error.

#include <Eigen/Core>
#include <cmath>

#include "fhtjm/model.hpp"
#include "fhtjm/simgen.hpp"

namespace oracles {

inline Eigen::VectorXd truth_constrained(const fhtjm::JointModel& model,
                                         const fhtjm::ScenarioConfig& cfg,
                                         const fhtjm::Dataset& ds) {
  const auto& L = model.layout();
  Eigen::VectorXd con = Eigen::VectorXd::Zero(L.dim);
  for (int q = 0; q < L.Q; ++q) {
    for (int k = 0; k < L.m[static_cast<std::size_t>(q)]; ++k) {
      con[L.beta(q, k)] = cfg.beta[static_cast<std::size_t>(q)][static_cast<std::size_t>(k)];
    }
    for (int p = 0; p < L.P; ++p) {
      con[L.log_sigma(q, p)] = cfg.sigma[static_cast<std::size_t>(q * L.P + p)];
    }
    con[L.omega(q)] = cfg.omega[static_cast<std::size_t>(q)];
    con[L.gamma(q)] = cfg.gamma[static_cast<std::size_t>(q)];
    con[L.psi(q)] = cfg.psi[static_cast<std::size_t>(q)];
  }
  for (int i = 0; i < L.N; ++i) {
    for (int q = 0; q < L.Q; ++q) {
      for (int p = 0; p < L.P; ++p) {
        con[L.z(i, q, p)] =
            ds.truth.rand_effects[static_cast<std::size_t>(i)][static_cast<std::size_t>(q * L.P + p)];
      }
      const double sd = ds.truth.resid_sd[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)];
      con[L.ell(i, q)] = sd * sd;
    }
    if (L.Q == 2) con[L.r(i)] = ds.truth.resid_corr[static_cast<std::size_t>(i)];
  }
  if (L.Q == 2) {
    con[L.ab0] = cfg.corr_shape_a;
    con[L.ab0 + 1] = cfg.corr_shape_b;
  }
  if (L.with_survival) {
    for (int d = 0; d < L.D; ++d) {
      con[L.alpha(d)] = cfg.alpha[static_cast<std::size_t>(d)];
      con[L.eta(d)] = cfg.eta[static_cast<std::size_t>(d)];
    }
  }
  // latent below-limit values, in the model's scan order
  {
    std::size_t cursor = 0;
    int prev_subject = -1;
    std::size_t within = 0;
    for (const auto& fe : model.flagged_entries()) {
      if (fe.subject != prev_subject) {
        prev_subject = fe.subject;
        within = 0;
      }
      con[L.u(static_cast<int>(cursor))] =
          ds.truth.censored_values[static_cast<std::size_t>(fe.subject)][within];
      ++cursor;
      ++within;
    }
  }
  if (L.with_survival) {
    for (int c = 0; c < L.n_censored; ++c) {
      const int i = model.censored_subjects()[static_cast<std::size_t>(c)];
      const double t_true = ds.truth.event_time[static_cast<std::size_t>(i)];
      const double floor = ds.records[static_cast<std::size_t>(i)].time;
      con[L.v(c)] = (std::isfinite(t_true) && t_true > floor) ? t_true : floor + 1.0;
    }
  }
  return con;
}

}  // namespace oracles

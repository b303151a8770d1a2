#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fhtjm/diagnostics.hpp"
#include "fhtjm/nuts.hpp"
#include "support/oracles.hpp"
#include "support/targets.hpp"

using namespace fhtjm;

TEST_CASE("ten-dimensional standard Gaussian is recovered") {
  oracles::GaussianTarget target(10);
  NutsConfig cfg;
  cfg.iter = 3000;
  cfg.warmup = 1000;
  cfg.chains = 2;
  cfg.seed = 17;
  const auto chains = run_chains(target, cfg, 2);
  REQUIRE(chains.size() == 2);
  for (const auto& c : chains) {
    CHECK(c.draws.rows() == 2000);
    CHECK(c.divergences == 0);
  }
  const auto diag = rhat_ess(chains);
  for (int d = 0; d < 10; ++d) {
    std::vector<double> pooled;
    for (const auto& c : chains) {
      for (Eigen::Index t = 0; t < c.draws.rows(); ++t) pooled.push_back(c.draws(t, d));
    }
    const double mean = oracles::mean(pooled);
    const double var = oracles::variance(pooled);
    const double mcse = std::sqrt(var / diag[static_cast<std::size_t>(d)].ess);
    CHECK(std::fabs(mean) < 3.0 * mcse);
    CHECK(var > 0.8);
    CHECK(var < 1.2);
    CHECK(diag[static_cast<std::size_t>(d)].rhat < 1.02);
  }
}

TEST_CASE("warmup bookkeeping: iter - warmup kept draws") {
  oracles::GaussianTarget target(3);
  NutsConfig cfg;
  cfg.iter = 301;
  cfg.warmup = 300;
  cfg.chains = 1;
  cfg.seed = 5;
  const auto res = run_chain(target, cfg, 0);
  CHECK(res.draws.rows() == 1);
  CHECK(res.iter == 301);
  CHECK(res.warmup == 300);
}

TEST_CASE("config validation") {
  NutsConfig cfg;
  cfg.iter = 100;
  cfg.warmup = 100;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.iter = 150;
  cfg.warmup = 50;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("same seed reproduces the chain bitwise") {
  oracles::GaussianTarget target(4);
  NutsConfig cfg;
  cfg.iter = 400;
  cfg.warmup = 200;
  cfg.chains = 1;
  cfg.seed = 99;
  const auto a = run_chain(target, cfg, 0);
  const auto b = run_chain(target, cfg, 0);
  CHECK((a.draws - b.draws).cwiseAbs().maxCoeff() == 0.0);
  const auto c = run_chain(target, cfg, 1);  // different chain index, different stream
  CHECK((a.draws - c.draws).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("transform Jacobians reproduce 1D prior quantiles") {
  // quantile MCSE: sqrt(p(1-p)/ess) / pdf(q)
  NutsConfig cfg;
  cfg.iter = 6000;
  cfg.warmup = 1000;
  cfg.chains = 2;
  cfg.seed = 31;

  SUBCASE("Half-Cauchy(0, 2.5) via log transform") {
    oracles::LogHalfCauchyTarget target(2.5);
    const auto chains = run_chains(target, cfg, 2);
    std::vector<double> pooled;
    for (const auto& c : chains) {
      for (Eigen::Index t = 0; t < c.draws.rows(); ++t) pooled.push_back(c.draws(t, 0));
    }
    // use the log-scale chain for the ESS (heavy-tailed raw scale)
    std::vector<ChainResult> logged = chains;
    for (auto& c : logged) {
      c.draws = c.draws.array().log().matrix();
    }
    const double ess = rhat_ess(logged)[0].ess;
    REQUIRE(ess > 200.0);
    for (double p : {0.25, 0.5, 0.75}) {
      const double exact = 2.5 * std::tan(M_PI * p / 2.0);
      const double pdf = (2.0 / (M_PI * 2.5)) / (1.0 + exact * exact / 6.25);
      const double se = std::sqrt(p * (1.0 - p) / ess) / pdf;
      CHECK(std::fabs(quantile(pooled, p) - exact) < 3.0 * se);
    }
  }
  SUBCASE("Exponential(0.1) via log transform") {
    oracles::LogExponentialTarget target(0.1);
    const auto chains = run_chains(target, cfg, 2);
    std::vector<double> pooled;
    for (const auto& c : chains) {
      for (Eigen::Index t = 0; t < c.draws.rows(); ++t) pooled.push_back(c.draws(t, 0));
    }
    std::vector<ChainResult> logged = chains;
    for (auto& c : logged) c.draws = c.draws.array().log().matrix();
    const double ess = rhat_ess(logged)[0].ess;
    REQUIRE(ess > 200.0);
    for (double p : {0.25, 0.5, 0.75}) {
      const double exact = -std::log(1.0 - p) / 0.1;
      const double pdf = 0.1 * std::exp(-0.1 * exact);
      const double se = std::sqrt(p * (1.0 - p) / ess) / pdf;
      CHECK(std::fabs(quantile(pooled, p) - exact) < 3.0 * se);
    }
  }
}

TEST_CASE("split R-hat separates mixed from unmixed chains") {
  Rng rng(3);
  const int n = 10000;
  SUBCASE("iid chains agree") {
    Eigen::VectorXd a(n), b(n);
    for (int t = 0; t < n; ++t) {
      a[t] = rng.normal();
      b[t] = rng.normal();
    }
    const auto d = rhat_ess_single({&a, &b});
    CHECK(d.rhat < 1.01);
    CHECK(d.ess > 0.5 * 2 * n);
    CHECK(d.ess < 1.5 * 2 * n);
  }
  SUBCASE("separated means are flagged") {
    Eigen::VectorXd a(n), b(n);
    for (int t = 0; t < n; ++t) {
      a[t] = rng.normal();
      b[t] = rng.normal() + 5.0;
    }
    const auto d = rhat_ess_single({&a, &b});
    CHECK(d.rhat > 1.1);
  }
  SUBCASE("within-chain trend is flagged by splitting") {
    Eigen::VectorXd a(n), b(n);
    for (int t = 0; t < n; ++t) {
      const double drift = 6.0 * static_cast<double>(t) / n;
      a[t] = rng.normal() + drift;
      b[t] = rng.normal() + drift;
    }
    const auto d = rhat_ess_single({&a, &b});
    CHECK(d.rhat > 1.1);
  }
  SUBCASE("constant chains signal degeneracy") {
    Eigen::VectorXd a = Eigen::VectorXd::Ones(100);
    Eigen::VectorXd b = Eigen::VectorXd::Ones(100);
    const auto d = rhat_ess_single({&a, &b});
    CHECK(std::isnan(d.rhat));
  }
  SUBCASE("autocorrelated chains have reduced ESS") {
    Eigen::VectorXd a(n), b(n);
    double xa = 0.0, xb = 0.0;
    for (int t = 0; t < n; ++t) {
      xa = 0.9 * xa + rng.normal();
      xb = 0.9 * xb + rng.normal();
      a[t] = xa;
      b[t] = xb;
    }
    const auto d = rhat_ess_single({&a, &b});
    // AR(1) with rho=0.9: ESS factor (1-rho)/(1+rho) ~ 1/19
    CHECK(d.ess < 0.15 * 2 * n);
    CHECK(d.ess > 0.02 * 2 * n);
  }
  SUBCASE("input validation") {
    Eigen::VectorXd a(10);
    CHECK_THROWS_AS(rhat_ess_single({&a}), std::invalid_argument);
    Eigen::VectorXd b(8);
    CHECK_THROWS_AS(rhat_ess_single({&a, &b}), std::invalid_argument);
  }
}

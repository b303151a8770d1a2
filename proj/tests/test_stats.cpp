#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fhtjm/rng.hpp"
#include "fhtjm/stats.hpp"
#include "support/oracles.hpp"

using namespace fhtjm;

TEST_CASE("normal cdf/quantile are mutual inverses") {
  for (double p : {1e-12, 1e-6, 0.01, 0.25, 0.5, 0.75, 0.99, 1.0 - 1e-9}) {
    const double z = stats::norm_quantile(p);
    CHECK(stats::norm_cdf(z) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK(stats::norm_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("log cdf deep tail matches the asymptotic regime continuously") {
  // continuity across the switch at z = -20
  const double a = stats::norm_logcdf(-19.999999);
  const double b = stats::norm_logcdf(-20.000001);
  CHECK(a == doctest::Approx(b).epsilon(1e-9));
  // against erfc while it still has range
  for (double z : {-5.0, -12.0, -20.0, -35.0}) {
    const double direct = std::log(0.5 * std::erfc(-z / std::sqrt(2.0)));
    CHECK(stats::norm_logcdf(z) == doctest::Approx(direct).epsilon(1e-8));
  }
  // far beyond erfc range it must stay finite and ordered
  CHECK(std::isfinite(stats::norm_logcdf(-100.0)));
  CHECK(stats::norm_logcdf(-100.0) < stats::norm_logcdf(-50.0));
}

TEST_CASE("quantile from log-probability covers the deep tail") {
  for (double lp : {-1.0, -10.0, -50.0, -200.0, -2000.0}) {
    const double z = stats::norm_quantile_logp(lp);
    CHECK(stats::norm_logcdf(z) == doctest::Approx(lp).epsilon(1e-8));
  }
}

TEST_CASE("digamma against known values") {
  const double euler = 0.57721566490153286;
  CHECK(stats::digamma(1.0) == doctest::Approx(-euler).epsilon(1e-10));
  CHECK(stats::digamma(0.5) == doctest::Approx(-euler - 2.0 * std::log(2.0)).epsilon(1e-10));
  CHECK(stats::digamma(10.0) == doctest::Approx(2.2517525890667211).epsilon(1e-10));
  // recurrence psi(x+1) = psi(x) + 1/x
  for (double x : {0.3, 1.7, 4.2}) {
    CHECK(stats::digamma(x + 1.0) == doctest::Approx(stats::digamma(x) + 1.0 / x).epsilon(1e-10));
  }
}

TEST_CASE("distribution log-densities normalize to one") {
  auto mass = [](auto lpdf, double lo, double hi) {
    return oracles::adaptive_simpson([&](double x) { return std::exp(lpdf(x)); }, lo, hi, 1e-10);
  };
  CHECK(mass([](double x) { return stats::half_cauchy_lpdf(x, 2.5); }, 0.0, 1e6) ==
        doctest::Approx(1.0).epsilon(1e-5));
  CHECK(mass([](double x) { return stats::beta_lpdf(x, 5.3, 12.0); }, 1e-12, 1.0 - 1e-12) ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mass([](double x) { return stats::exponential_lpdf(x, 0.1); }, 0.0, 1e4) ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mass([](double w) { return stats::lkj2_lpdf(w, 1.0); }, -1.0 + 1e-12, 1.0 - 1e-12) ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mass([](double w) { return stats::lkj2_lpdf(w, 2.5); }, -1.0 + 1e-10, 1.0 - 1e-10) ==
        doctest::Approx(1.0).epsilon(1e-4));
  // LKJ(1) is flat at density 1/2
  CHECK(stats::lkj2_lpdf(0.0, 1.0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(stats::lkj2_lpdf(0.7, 1.0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("rng moments and determinism") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng rng(3);
  std::vector<double> z;
  for (int i = 0; i < 200000; ++i) z.push_back(rng.normal());
  CHECK(std::fabs(oracles::mean(z)) < 0.01);
  CHECK(oracles::variance(z) == doctest::Approx(1.0).epsilon(0.02));

  std::vector<double> g;
  for (int i = 0; i < 100000; ++i) g.push_back(rng.gamma(3.0, 2.0));
  CHECK(oracles::mean(g) == doctest::Approx(1.5).epsilon(0.02));
  CHECK(oracles::variance(g) == doctest::Approx(0.75).epsilon(0.05));

  std::vector<double> be;
  for (int i = 0; i < 100000; ++i) be.push_back(rng.beta(5.3, 12.0));
  CHECK(oracles::mean(be) == doctest::Approx(5.3 / 17.3).epsilon(0.02));

  // uniform_int covers the range uniformly
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 100000; ++i) ++counts[static_cast<std::size_t>(rng.uniform_int(6, 15)) - 6];
  for (int c : counts) CHECK(std::fabs(c - 10000) < 500);
}

TEST_CASE("truncated normal sampling matches rejection in mean and bound") {
  Rng rng(11);
  // moderate truncation
  {
    std::vector<double> draws;
    for (int i = 0; i < 100000; ++i) {
      const double x = stats::truncated_normal_below(rng, 1.0, 2.0, 0.5);
      REQUIRE(x <= 0.5);
      draws.push_back(x);
    }
    Rng rej_rng(12);
    std::vector<double> rej;
    while (rej.size() < 100000) {
      const double x = rej_rng.normal(1.0, 2.0);
      if (x <= 0.5) rej.push_back(x);
    }
    const double se = std::sqrt(oracles::variance(draws) / draws.size() +
                                oracles::variance(rej) / rej.size());
    CHECK(std::fabs(oracles::mean(draws) - oracles::mean(rej)) < 3.5 * se);
  }
  // deep-tail truncation stays finite, bounded, non-degenerate
  {
    std::vector<double> draws;
    for (int i = 0; i < 2000; ++i) {
      const double x = stats::truncated_normal_below(rng, 0.0, 1.0, -12.0);
      REQUIRE(std::isfinite(x));
      REQUIRE(x <= -12.0);
      draws.push_back(x);
    }
    CHECK(oracles::variance(draws) > 0.0);
    CHECK(oracles::mean(draws) > -12.2);
  }
  // the mirrored direction
  const double above = stats::truncated_normal_above(rng, 2.0, 1.5, 5.0);
  CHECK(above >= 5.0);
}

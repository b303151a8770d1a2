#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fhtjm/longitudinal.hpp"
#include "fhtjm/stats.hpp"
#include "support/oracles.hpp"

using namespace fhtjm;

namespace {

// Dense multivariate-normal log-density, the brute-force oracle.
double dense_mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                        const Eigen::MatrixXd& cov) {
  const auto n = x.size();
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const Eigen::VectorXd dev = x - mu;
  const Eigen::VectorXd half = llt.matrixL().solve(dev);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (static_cast<double>(n) * stats::kLogTwoPi + logdet + half.squaredNorm());
}

ModelSpec make_spec_q2() {
  ModelSpec spec;
  spec.n_biomarkers = 2;
  spec.poly_degrees = {2, 2};
  spec.detection_limits = {kNoDetectionLimit, -1.0};
  return spec;
}

LongitudinalParams random_params(const ModelSpec& spec, std::size_t n_subjects, Rng& rng) {
  const int Q = spec.n_biomarkers;
  const int P = ModelSpec::n_random;
  LongitudinalParams par;
  for (int q = 0; q < Q; ++q) {
    std::vector<double> bq(static_cast<std::size_t>(spec.poly_degrees[static_cast<std::size_t>(q)]));
    for (auto& c : bq) c = rng.normal(0.0, 1.0);
    par.beta.push_back(bq);
    par.gamma.push_back(rng.normal(0.0, 0.5));
    par.psi.push_back(0.5 + rng.uniform());
    par.omega.push_back(rng.uniform(-0.6, 0.6));
    for (int p = 0; p < P; ++p) par.sigma.push_back(0.2 + rng.uniform());
  }
  par.shape_a = 2.0;
  par.shape_b = 3.0;
  for (std::size_t i = 0; i < n_subjects; ++i) {
    std::vector<double> b(static_cast<std::size_t>(Q * P));
    for (auto& v : b) v = rng.normal(0.0, 0.5);
    par.rand_effects.push_back(b);
    std::vector<double> s(static_cast<std::size_t>(Q));
    for (auto& v : s) v = 0.5 + rng.uniform();
    par.resid_sd.push_back(s);
    par.resid_corr.push_back(rng.uniform(-0.7, 0.7));
  }
  return par;
}

}  // namespace

TEST_CASE("mean_value polynomial arithmetic") {
  const std::vector<double> beta{3.0, -0.2, 0.04, -0.001};
  const std::vector<double> zero{0.0, 0.0};
  CHECK(mean_value(0.0, beta, zero) == doctest::Approx(3.0).epsilon(1e-15));
  const std::vector<double> beta0{0.0};
  const std::vector<double> b{2.0, -1.0};
  CHECK(mean_value(1.0, beta0, b) == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<double> beta2{6.6, 0.03, -0.05};
  const std::vector<double> b2{0.5, 0.1};
  CHECK(mean_value(2.0, beta2, b2) == doctest::Approx(7.16).epsilon(1e-12));
}

TEST_CASE("log-density spot values") {
  ModelSpec spec;
  spec.n_biomarkers = 1;
  spec.poly_degrees = {1};
  spec.detection_limits = {kNoDetectionLimit};

  LongitudinalPanel panel;
  panel.n_biomarkers = 1;
  panel.detection_limits = {kNoDetectionLimit};
  panel.subjects.push_back({{0.0}, {0.5}, {0}});

  LongitudinalParams par;
  par.beta = {{0.5}};
  par.sigma = {1.0, 1.0};
  par.omega = {0.0};
  par.gamma = {0.0};
  par.psi = {1.0};
  par.rand_effects = {{0.0, 0.0}};
  par.resid_sd = {{1.0}};

  // x == mu with unit sd: the standardized Gaussian peak
  CHECK(long_logdensity(panel, spec, par, {}) ==
        doctest::Approx(std::log(1.0 / std::sqrt(2.0 * M_PI))).epsilon(1e-12));
}

TEST_CASE("independent biomarkers factorize") {
  auto spec = make_spec_q2();
  spec.detection_limits = {kNoDetectionLimit, kNoDetectionLimit};
  LongitudinalPanel panel;
  panel.n_biomarkers = 2;
  panel.detection_limits = spec.detection_limits;
  Rng rng(4);
  for (int i = 0; i < 3; ++i) {
    SubjectPanel s;
    for (int j = 0; j < 2; ++j) {
      s.times.push_back(j);
      s.values.push_back(rng.normal(0.0, 2.0));
      s.values.push_back(rng.normal(0.0, 2.0));
      s.below_lod.insert(s.below_lod.end(), {0, 0});
    }
    panel.subjects.push_back(s);
  }
  auto par = random_params(spec, 3, rng);
  for (auto& r : par.resid_corr) r = 0.0;

  const double joint = long_logdensity(panel, spec, par, {});

  // split into two univariate panels
  double split_sum = 0.0;
  for (int q = 0; q < 2; ++q) {
    ModelSpec s1;
    s1.n_biomarkers = 1;
    s1.poly_degrees = {spec.poly_degrees[static_cast<std::size_t>(q)]};
    s1.detection_limits = {kNoDetectionLimit};
    LongitudinalPanel p1;
    p1.n_biomarkers = 1;
    p1.detection_limits = {kNoDetectionLimit};
    LongitudinalParams par1;
    par1.beta = {par.beta[static_cast<std::size_t>(q)]};
    par1.sigma = {par.sigma[static_cast<std::size_t>(q * 2)], par.sigma[static_cast<std::size_t>(q * 2 + 1)]};
    par1.omega = {par.omega[static_cast<std::size_t>(q)]};
    par1.gamma = {par.gamma[static_cast<std::size_t>(q)]};
    par1.psi = {par.psi[static_cast<std::size_t>(q)]};
    for (std::size_t i = 0; i < 3; ++i) {
      SubjectPanel sp;
      sp.times = panel.subjects[i].times;
      for (std::size_t j = 0; j < sp.times.size(); ++j) {
        sp.values.push_back(panel.subjects[i].values[j * 2 + static_cast<std::size_t>(q)]);
        sp.below_lod.push_back(0);
      }
      p1.subjects.push_back(sp);
      par1.rand_effects.push_back({par.rand_effects[i][static_cast<std::size_t>(q * 2)],
                                   par.rand_effects[i][static_cast<std::size_t>(q * 2 + 1)]});
      par1.resid_sd.push_back({par.resid_sd[i][static_cast<std::size_t>(q)]});
    }
    split_sum += long_logdensity(p1, s1, par1, {});
  }
  CHECK(joint == doctest::Approx(split_sum).epsilon(1e-10));
}

TEST_CASE("matches the dense multivariate-normal oracle") {
  auto spec = make_spec_q2();
  Rng rng(17);
  LongitudinalPanel panel;
  panel.n_biomarkers = 2;
  panel.detection_limits = spec.detection_limits;
  for (int i = 0; i < 3; ++i) {
    SubjectPanel s;
    for (int j = 0; j < 2; ++j) {
      s.times.push_back(j);
      s.values.push_back(rng.normal(1.0, 1.0));
      double x2 = rng.normal(0.5, 1.0);
      if (x2 < -1.0) {
        s.values.push_back(-1.0);
        s.below_lod.insert(s.below_lod.end(), {0, 1});
      } else {
        s.values.push_back(x2);
        s.below_lod.insert(s.below_lod.end(), {0, 0});
      }
    }
    panel.subjects.push_back(s);
  }
  auto par = random_params(spec, 3, rng);
  std::vector<double> aug(panel.n_flagged());
  for (auto& a : aug) a = -1.0 - rng.uniform();

  const double got = long_logdensity(panel, spec, par, aug);

  double want = 0.0;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& s = panel.subjects[i];
    for (std::size_t j = 0; j < s.n_visits(); ++j) {
      Eigen::VectorXd x(2), mu(2);
      for (int q = 0; q < 2; ++q) {
        double v = s.value(j, q, 2);
        if (s.flagged(j, q, 2)) v = aug[cursor++];
        x[q] = v;
        mu[q] = mean_value(s.times[j], par.beta[static_cast<std::size_t>(q)],
                           std::span<const double>(&par.rand_effects[i][static_cast<std::size_t>(q * 2)], 2));
      }
      Eigen::MatrixXd cov(2, 2);
      const double s1 = par.resid_sd[i][0], s2 = par.resid_sd[i][1], r = par.resid_corr[i];
      cov << s1 * s1, r * s1 * s2, r * s1 * s2, s2 * s2;
      want += dense_mvn_logpdf(x, mu, cov);
    }
  }
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("subject and visit reordering invariance") {
  auto spec = make_spec_q2();
  spec.detection_limits = {kNoDetectionLimit, kNoDetectionLimit};
  Rng rng(23);
  LongitudinalPanel panel;
  panel.n_biomarkers = 2;
  panel.detection_limits = spec.detection_limits;
  for (int i = 0; i < 4; ++i) {
    SubjectPanel s;
    for (int j = 0; j < 3; ++j) {
      s.times.push_back(j);
      s.values.push_back(rng.normal(0.0, 1.0));
      s.values.push_back(rng.normal(0.0, 1.0));
      s.below_lod.insert(s.below_lod.end(), {0, 0});
    }
    panel.subjects.push_back(s);
  }
  auto par = random_params(spec, 4, rng);
  const double base = long_logdensity(panel, spec, par, {});

  LongitudinalPanel reordered = panel;
  std::swap(reordered.subjects[0], reordered.subjects[3]);
  auto par2 = par;
  std::swap(par2.rand_effects[0], par2.rand_effects[3]);
  std::swap(par2.resid_sd[0], par2.resid_sd[3]);
  std::swap(par2.resid_corr[0], par2.resid_corr[3]);
  CHECK(long_logdensity(reordered, spec, par2, {}) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("prior log-density spot values and support guards") {
  ModelSpec spec;
  spec.n_biomarkers = 2;
  spec.poly_degrees = {2, 3};
  spec.detection_limits = {kNoDetectionLimit, kNoDetectionLimit};
  Rng rng(31);
  auto par = random_params(spec, 2, rng);

  SUBCASE("beta block at the mode") {
    auto p0 = par;
    for (auto& bq : p0.beta) {
      for (auto& c : bq) c = 0.0;
    }
    auto p1 = p0;
    p1.beta[0][0] = 1.0;  // one unit off the mode
    const double delta = prior_logdensity(spec, p0) - prior_logdensity(spec, p1);
    CHECK(delta == doctest::Approx(0.5 / (100.0 * 100.0)).epsilon(1e-9));
  }
  SUBCASE("LKJ(1) is constant in the correlation") {
    auto p0 = par;
    auto p1 = par;
    p0.omega = {0.0, 0.2};
    p1.omega = {0.8, 0.2};
    CHECK(prior_logdensity(spec, p0) == doctest::Approx(prior_logdensity(spec, p1)).epsilon(1e-12));
  }
  SUBCASE("uniform residual correlation at a=b=1 contributes log(1/2)") {
    auto p0 = par;
    p0.shape_a = 1.0;
    p0.shape_b = 1.0;
    auto p1 = p0;
    p0.resid_corr = {0.0, 0.3};
    p1.resid_corr = {0.5, 0.3};
    CHECK(prior_logdensity(spec, p0) == doctest::Approx(prior_logdensity(spec, p1)).epsilon(1e-12));
    CHECK(stats::beta_lpdf(0.5, 1.0, 1.0) + std::log(0.5) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  }
  SUBCASE("outside support yields -inf, not an exception") {
    auto bad = par;
    bad.sigma[0] = -0.1;
    CHECK(prior_logdensity(spec, bad) == -std::numeric_limits<double>::infinity());
    bad = par;
    bad.resid_corr[0] = 1.0;
    CHECK(prior_logdensity(spec, bad) == -std::numeric_limits<double>::infinity());
    bad = par;
    bad.psi[1] = 0.0;
    CHECK(prior_logdensity(spec, bad) == -std::numeric_limits<double>::infinity());
    bad = par;
    bad.shape_a = -2.0;
    CHECK(prior_logdensity(spec, bad) == -std::numeric_limits<double>::infinity());
    bad = par;
    bad.shape_b = 0.0;
    CHECK(prior_logdensity(spec, bad) == -std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("conditional imputation") {
  Rng rng(57);
  const std::vector<double> mu{0.0, 0.0};
  const std::vector<double> cov{1.0, 0.5, 0.5, 1.0};

  SUBCASE("Schur complement arithmetic via moments at infinite limit") {
    // x1 observed at 1 -> conditional N(0.5, 0.75); no truncation
    const std::vector<double> values{1.0, 0.0};
    const std::vector<std::uint8_t> flags{0, 1};
    const std::vector<double> limits{0.0, 1e10};
    std::vector<double> draws;
    for (int k = 0; k < 100000; ++k) {
      draws.push_back(impute_censored_conditional(rng, values, flags, mu, cov, limits)[0]);
    }
    CHECK(oracles::mean(draws) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(oracles::variance(draws) == doctest::Approx(0.75).epsilon(0.03));
  }
  SUBCASE("truncated moments match a rejection oracle") {
    const std::vector<double> values{1.0, 0.0};
    const std::vector<std::uint8_t> flags{0, 1};
    const std::vector<double> limits{0.0, 0.0};
    std::vector<double> draws;
    for (int k = 0; k < 100000; ++k) {
      const double d = impute_censored_conditional(rng, values, flags, mu, cov, limits)[0];
      REQUIRE(d < 0.0);
      draws.push_back(d);
    }
    Rng rej_rng(58);
    std::vector<double> rej;
    while (rej.size() < 100000) {
      const double x = rej_rng.normal(0.5, std::sqrt(0.75));
      if (x < 0.0) rej.push_back(x);
    }
    const double se_m = std::sqrt(oracles::variance(draws) / draws.size() +
                                  oracles::variance(rej) / rej.size());
    CHECK(std::fabs(oracles::mean(draws) - oracles::mean(rej)) < 3.0 * se_m);
    CHECK(oracles::variance(draws) == doctest::Approx(oracles::variance(rej)).epsilon(0.05));
  }
  SUBCASE("both entries flagged: unconditional truncated bivariate via Gibbs") {
    const std::vector<double> values{0.0, 0.0};
    const std::vector<std::uint8_t> flags{1, 1};
    const std::vector<double> limits{-0.5, 0.5};
    std::vector<double> d1, d2;
    for (int k = 0; k < 40000; ++k) {
      const auto d = impute_censored_conditional(rng, values, flags, mu, cov, limits);
      REQUIRE(d[0] < -0.5);
      REQUIRE(d[1] < 0.5);
      d1.push_back(d[0]);
      d2.push_back(d[1]);
    }
    Rng rej_rng(59);
    std::vector<double> r1, r2;
    while (r1.size() < 40000) {
      const double x1 = rej_rng.normal();
      const double x2 = 0.5 * x1 + std::sqrt(0.75) * rej_rng.normal();
      if (x1 < -0.5 && x2 < 0.5) {
        r1.push_back(x1);
        r2.push_back(x2);
      }
    }
    CHECK(std::fabs(oracles::mean(d1) - oracles::mean(r1)) <
          3.0 * std::sqrt(oracles::variance(d1) / d1.size() + oracles::variance(r1) / r1.size()) + 0.01);
    CHECK(std::fabs(oracles::mean(d2) - oracles::mean(r2)) <
          3.0 * std::sqrt(oracles::variance(d2) / d2.size() + oracles::variance(r2) / r2.size()) + 0.01);
  }
  SUBCASE("singular observed block raises") {
    const std::vector<double> values{1.0, 0.0};
    const std::vector<std::uint8_t> flags{0, 1};
    const std::vector<double> limits{0.0, 0.0};
    const std::vector<double> singular_cov{0.0, 0.0, 0.0, 1.0};
    CHECK_THROWS_AS(
        impute_censored_conditional(rng, values, flags, mu, singular_cov, limits),
        std::domain_error);
  }
  SUBCASE("no flagged entry raises") {
    const std::vector<std::uint8_t> flags{0, 0};
    const std::vector<double> vals{1.0, 1.0};
    const std::vector<double> lims{0.0, 0.0};
    CHECK_THROWS_AS(impute_censored_conditional(rng, vals, flags, mu, cov, lims),
                    std::invalid_argument);
  }
}

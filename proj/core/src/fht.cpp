#include "fhtjm/fht.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "fhtjm/stats.hpp"

namespace fhtjm {

namespace {

void check_params(const FhtParams& p) {
  if (!p.valid()) throw std::domain_error("fht: invalid parameters (need y0 > 0, var > 0)");
}

// Proper inverse-Gaussian(mean mu, shape lambda) via the
// Michael–Schucany–Haas transformation.
double sample_inverse_gaussian(Rng& rng, double mu, double lambda) {
  const double nu = rng.normal();
  const double y = nu * nu;
  const double x = mu + mu * mu * y / (2.0 * lambda) -
                   mu / (2.0 * lambda) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
  const double u = rng.uniform();
  return (u <= mu / (mu + x)) ? x : mu * mu / x;
}

}  // namespace

double fht_logpdf(double t, const FhtParams& p) {
  check_params(p);
  if (!(t > 0.0)) throw std::domain_error("fht_logpdf: t must be > 0");
  const double dev = p.y0 + p.drift * t;
  return std::log(p.y0) - 0.5 * (stats::kLogTwoPi + std::log(p.var) + 3.0 * std::log(t)) -
         dev * dev / (2.0 * p.var * t);
}

double fht_survival(double t, const FhtParams& p) {
  check_params(p);
  if (t < 0.0) throw std::domain_error("fht_survival: t must be >= 0");
  if (t == 0.0) return 1.0;
  const double sd = std::sqrt(p.var * t);
  const double z1 = (p.y0 + p.drift * t) / sd;
  const double z2 = (p.drift * t - p.y0) / sd;
  // Second term exp(-2 y0 drift / var) Φ(z2) can pair a huge exponential with
  // a vanishing Φ; combine in log scale.
  const double log_term2 = -2.0 * p.y0 * p.drift / p.var + stats::norm_logcdf(z2);
  const double s = stats::norm_cdf(z1) - std::exp(log_term2);
  return std::clamp(s, 0.0, 1.0);
}

double cure_rate(const FhtParams& p) {
  check_params(p);
  if (p.drift <= 0.0) return 0.0;
  return -std::expm1(-2.0 * p.y0 * p.drift / p.var);
}

double fht_quantile(double q, const FhtParams& p) {
  check_params(p);
  const double hit_mass = 1.0 - cure_rate(p);
  if (!(q > 0.0) || q >= hit_mass) {
    throw InfeasibleQuantileError("fht_quantile: q outside (0, 1 - cure_rate)");
  }
  const double target = 1.0 - q;  // survival value at the quantile
  // Bracket: expand the upper end until survival drops below the target.
  double lo = 1e-12;
  double hi = std::max(1.0, -p.y0 / std::min(p.drift, -1e-3));
  while (fht_survival(hi, p) > target) {
    hi *= 2.0;
    if (hi > 1e300) throw InfeasibleQuantileError("fht_quantile: failed to bracket");
  }
  // Brent's method on f(t) = S(t) - target, stopping once the survival value
  // is matched to 1e-10.
  auto f = [&](double t) { return fht_survival(t, p) - target; };
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  if (fa <= 0.0) return a;  // quantile below the bracket floor
  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int it = 0; it < 200; ++it) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a; fc = fa;
      d = e = b - a;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b) + 1e-300;
    const double xm = 0.5 * (c - b);
    if (std::fabs(fb) < 1e-10 || std::fabs(xm) <= tol1) return b;
    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      double s = fb / fa, pp, qq, rr;
      if (a == c) {
        pp = 2.0 * xm * s;
        qq = 1.0 - s;
      } else {
        qq = fa / fc;
        rr = fb / fc;
        pp = s * (2.0 * xm * qq * (qq - rr) - (b - a) * (rr - 1.0));
        qq = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
      }
      if (pp > 0.0) qq = -qq;
      pp = std::fabs(pp);
      if (2.0 * pp < std::min(3.0 * xm * qq - std::fabs(tol1 * qq), std::fabs(e * qq))) {
        e = d; d = pp / qq;
      } else {
        d = xm; e = d;
      }
    } else {
      d = xm; e = d;
    }
    a = b; fa = fb;
    b += (std::fabs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
  }
  return b;
}

FhtSample fht_sample(Rng& rng, const FhtParams& p) {
  check_params(p);
  if (p.drift < 0.0) {
    return FhtSample::at(sample_inverse_gaussian(rng, -p.y0 / p.drift, p.y0 * p.y0 / p.var));
  }
  if (p.drift == 0.0) {
    // Lévy law: T = y0² / (var · Z²), Z standard normal.
    const double z = rng.normal();
    return FhtSample::at(p.y0 * p.y0 / (p.var * z * z));
  }
  const double cure = cure_rate(p);
  if (rng.uniform() < cure) return FhtSample::never();
  // Conditional on hitting, the law matches the FHT with reflected drift.
  return FhtSample::at(sample_inverse_gaussian(rng, p.y0 / p.drift, p.y0 * p.y0 / p.var));
}

double fht_sample_truncated(Rng& rng, const FhtParams& p, double lower) {
  check_params(p);
  if (lower < 0.0) lower = 0.0;
  const double cure = cure_rate(p);
  const double mass = fht_survival(lower, p) - cure;
  if (mass < 1e-12) {
    throw NoTruncationMassError("fht_sample_truncated: no hitting mass beyond lower");
  }
  // Inverse CDF on the conditional law: F(t) = 1 - S(t) restricted to (lower, ∞).
  const double f_lower = 1.0 - fht_survival(lower, p);
  const double f_inf = 1.0 - cure;
  const double target = f_lower + rng.uniform() * (f_inf - f_lower);
  const double q = std::min(target, std::nextafter(f_inf, 0.0));
  const double t = fht_quantile(q, p);
  return std::max(t, std::nextafter(lower, std::numeric_limits<double>::infinity()));
}

McOracleResult fht_mc_oracle(const FhtParams& p, double dt, double horizon,
                             std::size_t n_paths, Rng& rng, int n_threads) {
  check_params(p);
  if (!(dt > 0.0) || !(horizon > 0.0) || n_paths == 0) {
    throw std::domain_error("fht_mc_oracle: need dt > 0, horizon > 0, n_paths > 0");
  }
  n_threads = std::max(1, n_threads);
  const auto n_steps = static_cast<std::size_t>(std::ceil(horizon / dt));
  const double step_sd = std::sqrt(p.var * dt);
  const double step_drift = p.drift * dt;

  auto run_block = [&](std::uint64_t seed, std::size_t count, McOracleResult& out) {
    Rng local(seed);
    out.hit_times.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      double y = p.y0;
      bool hit = false;
      for (std::size_t s = 1; s <= n_steps; ++s) {
        y += step_drift + step_sd * local.normal();
        if (y <= 0.0) {
          out.hit_times.push_back(static_cast<double>(s) * dt);
          hit = true;
          break;
        }
      }
      if (!hit) ++out.never_hit;
    }
    out.n_paths = count;
  };

  McOracleResult result;
  if (n_threads == 1) {
    run_block(rng.next_u64(), n_paths, result);
    return result;
  }
  std::vector<McOracleResult> parts(n_threads);
  std::vector<std::uint64_t> seeds(n_threads);
  for (auto& s : seeds) s = rng.next_u64();
  std::vector<std::thread> workers;
  const std::size_t base = n_paths / n_threads;
  std::size_t rem = n_paths % n_threads;
  for (int t = 0; t < n_threads; ++t) {
    const std::size_t count = base + (static_cast<std::size_t>(t) < rem ? 1 : 0);
    workers.emplace_back(run_block, seeds[t], count, std::ref(parts[t]));
  }
  for (auto& w : workers) w.join();
  for (const auto& part : parts) {
    result.hit_times.insert(result.hit_times.end(), part.hit_times.begin(), part.hit_times.end());
    result.never_hit += part.never_hit;
    result.n_paths += part.n_paths;
  }
  return result;
}

}  // namespace fhtjm

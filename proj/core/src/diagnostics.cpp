#include "fhtjm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fhtjm {

namespace {

// Autocovariance of one sequence at lag k (denominator n, Geyer convention).
double autocov(const Eigen::VectorXd& x, double mean, int lag) {
  const int n = static_cast<int>(x.size());
  double acc = 0.0;
  for (int t = 0; t < n - lag; ++t) acc += (x[t] - mean) * (x[t + lag] - mean);
  return acc / static_cast<double>(n);
}

}  // namespace

RhatEss rhat_ess_single(const std::vector<const Eigen::VectorXd*>& chains) {
  if (chains.size() < 2) {
    throw std::invalid_argument("rhat_ess: need at least two chains");
  }
  const auto len = chains.front()->size();
  for (const auto* c : chains) {
    if (c->size() != len) throw std::invalid_argument("rhat_ess: chains of unequal length");
  }
  if (len < 4) throw std::invalid_argument("rhat_ess: chains too short to split");

  // split each chain in half
  const int half = static_cast<int>(len) / 2;
  std::vector<Eigen::VectorXd> seqs;
  for (const auto* c : chains) {
    seqs.push_back(c->head(half));
    seqs.push_back(c->segment(half, half));
  }
  const int m = static_cast<int>(seqs.size());
  const double n = static_cast<double>(half);

  std::vector<double> means(static_cast<std::size_t>(m)), vars(static_cast<std::size_t>(m));
  double grand = 0.0;
  for (int j = 0; j < m; ++j) {
    means[static_cast<std::size_t>(j)] = seqs[static_cast<std::size_t>(j)].mean();
    grand += means[static_cast<std::size_t>(j)];
    double s2 = 0.0;
    for (int t = 0; t < half; ++t) {
      const double d = seqs[static_cast<std::size_t>(j)][t] - means[static_cast<std::size_t>(j)];
      s2 += d * d;
    }
    vars[static_cast<std::size_t>(j)] = s2 / (n - 1.0);
  }
  grand /= static_cast<double>(m);

  double w = 0.0, b = 0.0;
  for (int j = 0; j < m; ++j) {
    w += vars[static_cast<std::size_t>(j)];
    const double d = means[static_cast<std::size_t>(j)] - grand;
    b += d * d;
  }
  w /= static_cast<double>(m);
  b *= n / (static_cast<double>(m) - 1.0);

  RhatEss out;
  if (w <= 0.0) return out;  // degenerate: every half-chain constant
  const double var_plus = (n - 1.0) / n * w + b / n;
  out.rhat = std::sqrt(var_plus / w);

  // ESS via combined autocorrelations, truncated at the first negative
  // Geyer pair (rho_{2k} + rho_{2k+1}) and forced monotone.
  auto rho_at = [&](int lag) {
    double acov = 0.0;
    for (int j = 0; j < m; ++j) {
      acov += autocov(seqs[static_cast<std::size_t>(j)], means[static_cast<std::size_t>(j)], lag);
    }
    acov /= static_cast<double>(m);
    return 1.0 - (w - acov) / var_plus;
  };
  const int max_lag = half - 1;
  double pair_sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (int k = 0; 2 * k + 1 <= max_lag; ++k) {
    double pair = rho_at(2 * k) + rho_at(2 * k + 1);
    if (pair < 0.0) break;
    if (pair > prev_pair) pair = prev_pair;  // enforce monotone decay
    prev_pair = pair;
    pair_sum += pair;
  }
  const double tau = std::max(-1.0 + 2.0 * pair_sum, 1e-12);
  out.ess = static_cast<double>(m) * n / tau;
  // cap at the antithetic limit
  out.ess = std::min(out.ess, static_cast<double>(m) * n * std::log10(static_cast<double>(m) * n));
  return out;
}

std::vector<RhatEss> rhat_ess(const std::vector<ChainResult>& chains) {
  if (chains.empty()) return {};
  const auto dim = chains.front().draws.cols();
  std::vector<RhatEss> out(static_cast<std::size_t>(dim));
  std::vector<Eigen::VectorXd> cols(chains.size());
  for (Eigen::Index d = 0; d < dim; ++d) {
    std::vector<const Eigen::VectorXd*> ptrs;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      cols[c] = chains[c].draws.col(d);
      ptrs.push_back(&cols[c]);
    }
    out[static_cast<std::size_t>(d)] = rhat_ess_single(ptrs);
  }
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double idx = p * (static_cast<double>(values.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(idx));
  const auto hi = static_cast<std::size_t>(std::ceil(idx));
  const double frac = idx - std::floor(idx);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

std::vector<ParamSummary> summarize(const std::vector<ChainResult>& chains,
                                    const std::vector<std::string>& names) {
  if (chains.empty()) return {};
  const auto dim = chains.front().draws.cols();
  if (static_cast<Eigen::Index>(names.size()) != dim) {
    throw std::invalid_argument("summarize: name/draw dimension mismatch");
  }
  std::vector<RhatEss> diag;
  if (chains.size() >= 2) diag = rhat_ess(chains);

  std::vector<ParamSummary> out(static_cast<std::size_t>(dim));
  std::vector<double> pooled;
  for (Eigen::Index d = 0; d < dim; ++d) {
    pooled.clear();
    for (const auto& c : chains) {
      for (Eigen::Index t = 0; t < c.draws.rows(); ++t) pooled.push_back(c.draws(t, d));
    }
    auto& s = out[static_cast<std::size_t>(d)];
    s.name = names[static_cast<std::size_t>(d)];
    double mean = 0.0;
    for (double v : pooled) mean += v;
    mean /= static_cast<double>(pooled.size());
    double var = 0.0;
    for (double v : pooled) var += (v - mean) * (v - mean);
    var /= std::max<double>(1.0, static_cast<double>(pooled.size()) - 1.0);
    s.mean = mean;
    s.sd = std::sqrt(var);
    s.q025 = quantile(pooled, 0.025);
    s.q50 = quantile(pooled, 0.5);
    s.q975 = quantile(pooled, 0.975);
    if (!diag.empty()) {
      s.rhat = diag[static_cast<std::size_t>(d)].rhat;
      s.ess = diag[static_cast<std::size_t>(d)].ess;
    }
  }
  return out;
}

}  // namespace fhtjm

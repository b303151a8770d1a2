#include "fhtjm/nuts.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace fhtjm {

namespace {

using Eigen::VectorXd;

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// State at one end of the trajectory, advanced in place by leapfrog steps.
struct Edge {
  VectorXd theta;
  VectorXd r;
  VectorXd grad;
  double logp = 0.0;
};

struct Subtree {
  VectorXd theta_prop;
  double log_sum_w = -std::numeric_limits<double>::infinity();
  double sum_accept = 0.0;
  int n_leapfrog = 0;
  bool diverged = false;
  bool turning = false;
  // extremes for the u-turn test (rear = closest to the start, front = far end)
  VectorXd theta_rear, r_rear, theta_front, r_front;
};

class Sampler {
 public:
  Sampler(const TargetDensity& target, const NutsConfig& cfg, std::uint64_t seed)
      : target_(target), cfg_(cfg), rng_(seed), dim_(target.dim()) {
    if (cfg_.initial_inv_metric.size() == dim_) {
      inv_metric_ = cfg_.initial_inv_metric;
    } else {
      inv_metric_ = target.metric_hint();
    }
    grad_buf_.resize(dim_);
  }

  ChainResult run(int chain_index, const DrawCallback& callback);

 private:
  double kinetic(const VectorXd& r) const {
    return 0.5 * r.cwiseProduct(inv_metric_).dot(r);
  }

  void sample_momentum(VectorXd& r) {
    for (int d = 0; d < dim_; ++d) r[d] = rng_.normal() / std::sqrt(inv_metric_[d]);
  }

  // One leapfrog step of size eps in place; returns the new log density.
  double leapfrog(Edge& e, double eps) {
    e.r += 0.5 * eps * e.grad;
    e.theta += eps * inv_metric_.cwiseProduct(e.r);
    e.logp = target_.log_density_gradient(e.theta, e.grad);
    e.r += 0.5 * eps * e.grad;
    return e.logp;
  }

  // rear/front are in generation order; `sign` orients the span along the
  // trajectory (negative when the subtree was integrated backwards).
  bool uturn(const VectorXd& theta_rear, const VectorXd& theta_front, const VectorXd& r_rear,
             const VectorXd& r_front, double sign = 1.0) const {
    const VectorXd span = sign * (theta_front - theta_rear);
    return span.dot(inv_metric_.cwiseProduct(r_rear)) < 0.0 ||
           span.dot(inv_metric_.cwiseProduct(r_front)) < 0.0;
  }

  Subtree build_tree(int depth, Edge& edge, double eps, double joint0);
  double find_initial_step(const VectorXd& theta, double logp, const VectorXd& grad);
  VectorXd initialize();

  const TargetDensity& target_;
  NutsConfig cfg_;
  Rng rng_;
  int dim_;
  VectorXd inv_metric_;
  VectorXd grad_buf_;
};

Subtree Sampler::build_tree(int depth, Edge& edge, double eps, double joint0) {
  Subtree out;
  if (depth == 0) {
    const double logp = leapfrog(edge, eps);
    out.n_leapfrog = 1;
    const double joint = logp - kinetic(edge.r);
    const double delta = joint - joint0;
    if (!(delta > -cfg_.max_delta_h)) {
      out.diverged = true;
      return out;
    }
    out.log_sum_w = delta;
    out.sum_accept = std::min(1.0, std::exp(delta));
    out.theta_prop = edge.theta;
    out.theta_rear = out.theta_front = edge.theta;
    out.r_rear = out.r_front = edge.r;
    return out;
  }
  Subtree first = build_tree(depth - 1, edge, eps, joint0);
  if (first.diverged || first.turning) return first;
  Subtree second = build_tree(depth - 1, edge, eps, joint0);
  second.n_leapfrog += first.n_leapfrog;
  second.sum_accept += first.sum_accept;
  if (second.diverged) return second;

  Subtree merged;
  merged.n_leapfrog = second.n_leapfrog;
  merged.sum_accept = second.sum_accept;
  merged.log_sum_w = log_sum_exp(first.log_sum_w, second.log_sum_w);
  const double p_second = std::exp(second.log_sum_w - merged.log_sum_w);
  merged.theta_prop = (rng_.uniform() < p_second) ? second.theta_prop : first.theta_prop;
  merged.theta_rear = first.theta_rear;
  merged.r_rear = first.r_rear;
  merged.theta_front = second.theta_front;
  merged.r_front = second.r_front;
  merged.turning = second.turning ||
                   uturn(merged.theta_rear, merged.theta_front, merged.r_rear, merged.r_front,
                         eps > 0.0 ? 1.0 : -1.0);
  return merged;
}

double Sampler::find_initial_step(const VectorXd& theta, double logp, const VectorXd& grad) {
  double eps = 1.0;
  Edge probe{theta, VectorXd(dim_), grad, logp};
  sample_momentum(probe.r);
  const double joint0 = logp - kinetic(probe.r);
  Edge trial = probe;
  double joint1 = leapfrog(trial, eps) - kinetic(trial.r);
  double delta = std::isfinite(joint1) ? joint1 - joint0 : -std::numeric_limits<double>::infinity();
  const double dir = (delta > std::log(0.5)) ? 1.0 : -1.0;
  for (int it = 0; it < 100; ++it) {
    eps *= std::pow(2.0, dir);
    if (eps < 1e-10 || eps > 1e7) break;
    trial = probe;
    joint1 = leapfrog(trial, eps) - kinetic(trial.r);
    delta = std::isfinite(joint1) ? joint1 - joint0 : -std::numeric_limits<double>::infinity();
    if (dir > 0.0 ? (delta <= std::log(0.5)) : (delta > std::log(0.5))) break;
  }
  return std::clamp(eps, 1e-10, 1e7);
}

VectorXd Sampler::initialize() {
  for (int attempt = 0; attempt < 100; ++attempt) {
    VectorXd theta = target_.initial_point(rng_, cfg_.init_radius);
    const double logp = target_.log_density_gradient(theta, grad_buf_);
    if (std::isfinite(logp)) return theta;
  }
  throw std::runtime_error("nuts: failed to find a finite-density initial point");
}

ChainResult Sampler::run(int chain_index, const DrawCallback& callback) {
  cfg_.validate();
  VectorXd theta = initialize();
  double logp = target_.log_density_gradient(theta, grad_buf_);
  VectorXd grad = grad_buf_;

  // dual-averaging state
  double eps = find_initial_step(theta, logp, grad);
  double mu = std::log(10.0 * eps);
  double log_eps_bar = 0.0, h_bar = 0.0;
  const double da_gamma = 0.05, da_t0 = 10.0, da_kappa = 0.75;
  int da_count = 0;
  auto da_restart = [&]() {
    mu = std::log(10.0 * eps);
    log_eps_bar = std::log(eps);
    h_bar = 0.0;
    da_count = 0;
  };
  auto da_update = [&](double accept) {
    ++da_count;
    const double w = 1.0 / (da_count + da_t0);
    h_bar = (1.0 - w) * h_bar + w * (cfg_.target_accept - accept);
    const double log_eps = mu - std::sqrt(static_cast<double>(da_count)) / da_gamma * h_bar;
    const double w2 = std::pow(static_cast<double>(da_count), -da_kappa);
    log_eps_bar = w2 * log_eps + (1.0 - w2) * log_eps_bar;
    eps = std::exp(log_eps);
  };
  da_restart();

  // warmup window schedule (fast start, doubling covariance windows, fast tail)
  const int warmup = cfg_.warmup;
  int init_buffer = 75, term_buffer = 50, base_window = 25;
  if (init_buffer + base_window + term_buffer > warmup) {
    init_buffer = warmup / 4;
    term_buffer = warmup / 4;
    base_window = warmup - init_buffer - term_buffer;
  }
  std::vector<int> window_ends;
  if (cfg_.adapt_metric) {
    int start = init_buffer, width = base_window;
    while (start < warmup - term_buffer) {
      int end = start + width;
      if (end + 2 * width > warmup - term_buffer) end = warmup - term_buffer;
      window_ends.push_back(end);
      start = end;
      width *= 2;
    }
  }

  VectorXd welford_mean = VectorXd::Zero(dim_);
  VectorXd welford_m2 = VectorXd::Zero(dim_);
  long welford_n = 0;
  auto welford_reset = [&]() {
    welford_mean.setZero();
    welford_m2.setZero();
    welford_n = 0;
  };
  auto welford_add = [&](const VectorXd& x) {
    ++welford_n;
    const VectorXd d1 = x - welford_mean;
    welford_mean += d1 / static_cast<double>(welford_n);
    welford_m2 += d1.cwiseProduct(x - welford_mean);
  };

  const int kept_total = cfg_.iter - cfg_.warmup;
  ChainResult result;
  result.iter = cfg_.iter;
  result.warmup = cfg_.warmup;
  result.draws.resize(kept_total, target_.constrained_dim());

  std::size_t window_cursor = 0;
  int kept = 0;
  long accept_n = 0;
  double accept_sum = 0.0;

  for (int it = 0; it < cfg_.iter; ++it) {
    const bool in_warmup = it < warmup;

    Edge fwd{theta, VectorXd(dim_), grad, logp};
    sample_momentum(fwd.r);
    Edge bwd = fwd;
    const double joint0 = logp - kinetic(fwd.r);

    VectorXd prop = theta;
    double total_log_w = 0.0;  // weight of the initial point
    VectorXd theta_rear = theta, theta_front = theta, r_rear = fwd.r, r_front = fwd.r;
    bool diverged = false;
    double traj_accept_sum = 0.0;
    int traj_leapfrog = 0;

    for (int depth = 0; depth < cfg_.max_treedepth; ++depth) {
      const bool forward = rng_.uniform() < 0.5;
      Edge& edge = forward ? fwd : bwd;
      Subtree sub = build_tree(depth, edge, forward ? eps : -eps, joint0);
      traj_accept_sum += sub.sum_accept;
      traj_leapfrog += sub.n_leapfrog;
      if (sub.diverged) {
        diverged = true;
        break;
      }
      if (sub.turning) break;
      // biased progressive sampling toward the fresh subtree
      if (std::log(rng_.uniform()) < sub.log_sum_w - total_log_w) prop = sub.theta_prop;
      total_log_w = log_sum_exp(total_log_w, sub.log_sum_w);
      if (forward) {
        theta_front = sub.theta_front;
        r_front = sub.r_front;
      } else {
        // integrating backwards, the subtree's far end is the rear of the trajectory
        theta_rear = sub.theta_front;
        r_rear = sub.r_front;
      }
      if (uturn(theta_rear, theta_front, r_rear, r_front)) break;
      if (depth == cfg_.max_treedepth - 1) ++result.max_treedepth_hits;
    }

    theta = prop;
    logp = target_.log_density_gradient(theta, grad_buf_);
    grad = grad_buf_;

    const double accept_stat =
        traj_leapfrog > 0 ? traj_accept_sum / static_cast<double>(traj_leapfrog) : 0.0;
    if (in_warmup) {
      da_update(accept_stat);
      if (it >= init_buffer && window_cursor < window_ends.size()) {
        welford_add(theta);
        if (it + 1 == window_ends[window_cursor]) {
          if (welford_n >= 10) {
            const double n = static_cast<double>(welford_n);
            VectorXd var = welford_m2 / (n - 1.0);
            // shrink toward unit scale, as a guard against short windows
            inv_metric_ = (n / (n + 5.0)) * var.array().max(1e-10).matrix() +
                          (5.0 / (n + 5.0)) * 1e-3 * VectorXd::Ones(dim_);
          }
          welford_reset();
          eps = find_initial_step(theta, logp, grad);
          da_restart();
          ++window_cursor;
        }
      }
      if (it + 1 == warmup) eps = std::exp(log_eps_bar);
    } else {
      if (diverged) ++result.divergences;
      accept_sum += accept_stat;
      ++accept_n;
      const Eigen::VectorXd con = target_.constrain(theta);
      result.draws.row(kept) = con;
      if (callback) callback(chain_index, kept, con);
      ++kept;
    }
  }

  result.step_size = eps;
  result.inv_metric = inv_metric_;
  result.mean_accept = accept_n > 0 ? accept_sum / static_cast<double>(accept_n) : 0.0;
  if (kept_total > 0 &&
      result.divergences > 0.5 * static_cast<double>(kept_total)) {
    throw FatalDivergenceError("nuts: more than half of post-warmup iterations diverged");
  }
  if (!result.draws.allFinite()) {
    throw std::runtime_error("nuts: non-finite draw recorded");
  }
  return result;
}

}  // namespace

ChainResult run_chain(const TargetDensity& target, const NutsConfig& config, int chain_index,
                      const DrawCallback& callback) {
  Sampler sampler(target, config, config.seed + static_cast<std::uint64_t>(chain_index));
  return sampler.run(chain_index, callback);
}

std::vector<ChainResult> run_chains(const TargetDensity& target, const NutsConfig& config,
                                    int n_threads, const DrawCallback& callback) {
  const int n_chains = std::max(1, config.chains);
  n_threads = std::max(1, n_threads);
  std::vector<ChainResult> results(static_cast<std::size_t>(n_chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_chains));
  for (int start = 0; start < n_chains; start += n_threads) {
    const int stop = std::min(n_chains, start + n_threads);
    std::vector<std::thread> pool;
    for (int k = start; k < stop; ++k) {
      pool.emplace_back([&, k]() {
        try {
          results[static_cast<std::size_t>(k)] = run_chain(target, config, k, callback);
        } catch (...) {
          errors[static_cast<std::size_t>(k)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return results;
}

}  // namespace fhtjm

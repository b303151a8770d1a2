#include "fhtjm/bench.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "fhtjm/model.hpp"

namespace fhtjm {

MetricRow compute_metrics(const std::string& name, double truth,
                          const std::vector<double>& estimates,
                          const std::vector<std::pair<double, double>>& intervals) {
  if (estimates.empty() || estimates.size() != intervals.size()) {
    throw std::invalid_argument("compute_metrics: need matched, nonempty estimates/intervals");
  }
  MetricRow row;
  row.name = name;
  row.truth = truth;
  row.n_replications = static_cast<int>(estimates.size());
  const double n = static_cast<double>(estimates.size());
  double covered = 0.0, bias = 0.0, len = 0.0, mse = 0.0;
  for (std::size_t r = 0; r < estimates.size(); ++r) {
    const auto& [lo, hi] = intervals[r];
    if (!(lo <= hi)) throw std::invalid_argument("compute_metrics: interval bounds out of order");
    covered += (truth >= lo && truth <= hi) ? 1.0 : 0.0;
    bias += estimates[r] - truth;
    len += hi - lo;
    mse += (estimates[r] - truth) * (estimates[r] - truth);
  }
  row.coverage = covered / n;
  row.bias = bias / n;
  row.avg_interval_length = len / n;
  row.rmse = std::sqrt(mse / n);
  return row;
}

namespace {

struct FitExtract {
  std::map<std::string, double> mean;
  std::map<std::string, std::pair<double, double>> interval;
  double max_rhat = 0.0;
  bool ok = true;
};

// Pull means/intervals for the requested names and the max R-hat over them.
FitExtract extract(const std::vector<ParamSummary>& summaries,
                   const std::vector<std::string>& wanted) {
  FitExtract out;
  for (const auto& s : summaries) {
    if (std::find(wanted.begin(), wanted.end(), s.name) == wanted.end()) continue;
    out.mean[s.name] = s.mean;
    out.interval[s.name] = {s.q025, s.q975};
    if (std::isfinite(s.rhat)) out.max_rhat = std::max(out.max_rhat, s.rhat);
  }
  return out;
}

std::vector<std::string> names_of(const std::vector<std::pair<std::string, double>>& kv) {
  std::vector<std::string> names;
  names.reserve(kv.size());
  for (const auto& [k, v] : kv) names.push_back(k);
  return names;
}

}  // namespace

TwoStageFit tsim_two_stage(const Dataset& data, const ModelSpec& spec, const NutsConfig& fit,
                           int n_threads) {
  // Stage 1: longitudinal submodel alone.
  JointModel stage1(data.panel, {}, spec, {/*include_survival=*/false});
  const auto chains1 = run_chains(stage1, fit, n_threads);
  const auto names1 = stage1.param_names();
  const auto summaries1 = summarize(chains1, names1);

  // Posterior means of the subject latents.
  const auto& L = stage1.layout();
  const int N = L.N, Q = L.Q, P = L.P;
  std::vector<std::vector<double>> b_hat(static_cast<std::size_t>(N),
                                         std::vector<double>(static_cast<std::size_t>(Q * P), 0.0));
  std::vector<std::vector<double>> logvar_hat(static_cast<std::size_t>(N),
                                              std::vector<double>(static_cast<std::size_t>(Q), 0.0));
  long total_draws = 0;
  for (const auto& c : chains1) total_draws += c.draws.rows();
  for (const auto& c : chains1) {
    for (Eigen::Index t = 0; t < c.draws.rows(); ++t) {
      for (int i = 0; i < N; ++i) {
        for (int q = 0; q < Q; ++q) {
          for (int p = 0; p < P; ++p) {
            b_hat[static_cast<std::size_t>(i)][static_cast<std::size_t>(q * P + p)] +=
                c.draws(t, L.z(i, q, p));
          }
          logvar_hat[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)] +=
              std::log(c.draws(t, L.ell(i, q)));
        }
      }
    }
  }
  for (int i = 0; i < N; ++i) {
    for (auto& v : b_hat[static_cast<std::size_t>(i)]) v /= static_cast<double>(total_draws);
    for (auto& v : logvar_hat[static_cast<std::size_t>(i)]) v /= static_cast<double>(total_draws);
  }

  // Empirical standardization of the stage-1 point estimates.
  auto standardize = [N](std::vector<double>& column) {
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= static_cast<double>(N);
    double var = 0.0;
    for (double v : column) var += (v - mean) * (v - mean);
    var /= static_cast<double>(N - 1);
    if (!(var > 0.0)) {
      throw std::domain_error("tsim_two_stage: degenerate spread in a stage-1 estimate column");
    }
    const double sd = std::sqrt(var);
    for (double& v : column) v = (v - mean) / sd;
  };

  const int D = spec.design_dim();
  Eigen::MatrixXd design(N, D);
  design.col(0).setOnes();
  for (int q = 0; q < Q; ++q) {
    for (int p = 0; p < P; ++p) {
      std::vector<double> col(static_cast<std::size_t>(N));
      for (int i = 0; i < N; ++i) {
        col[static_cast<std::size_t>(i)] = b_hat[static_cast<std::size_t>(i)][static_cast<std::size_t>(q * P + p)];
      }
      standardize(col);
      for (int i = 0; i < N; ++i) design(i, 1 + q * P + p) = col[static_cast<std::size_t>(i)];
    }
  }
  for (int q = 0; q < Q; ++q) {
    std::vector<double> col(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      col[static_cast<std::size_t>(i)] = logvar_hat[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)];
    }
    standardize(col);
    for (int i = 0; i < N; ++i) design(i, 1 + Q * P + q) = col[static_cast<std::size_t>(i)];
  }
  for (int k = 0; k < spec.n_covariates; ++k) {
    for (int i = 0; i < N; ++i) {
      design(i, 1 + Q * P + Q + k) = data.records[static_cast<std::size_t>(i)].covariates[static_cast<std::size_t>(k)];
    }
  }

  // Stage 2: threshold regression on the frozen design.
  ThresholdOnlyModel stage2(design, data.records, spec.priors);
  NutsConfig fit2 = fit;
  fit2.seed = fit.seed + 7919;  // independent stream from stage 1
  const auto chains2 = run_chains(stage2, fit2, n_threads);
  const auto summaries2 = summarize(chains2, stage2.param_names());

  TwoStageFit out;
  out.stage1_summaries = summaries1;
  for (const auto& s : summaries2) {
    if (s.name.rfind("alpha_", 0) == 0 || s.name.rfind("eta_", 0) == 0) {
      out.survival_summaries.push_back(s);
      if (std::isfinite(s.rhat)) out.max_rhat = std::max(out.max_rhat, s.rhat);
    }
  }
  for (const auto& s : summaries1) {
    if (std::isfinite(s.rhat)) out.max_rhat = std::max(out.max_rhat, s.rhat);
  }
  return out;
}

BenchResult run_replications(const ReplicationConfig& config) {
  if (config.replications < 1) throw std::invalid_argument("run_replications: need R >= 1");
  config.scenario.validate();

  const auto truths = true_globals(config.scenario);
  const auto joint_names = names_of(truths);
  std::vector<std::string> surv_names;
  for (const auto& n : joint_names) {
    if (n.rfind("alpha_", 0) == 0 || n.rfind("eta_", 0) == 0) surv_names.push_back(n);
  }

  struct RepOutcome {
    FitExtract joint, tsim;
    bool joint_ok = false, tsim_ok = false;
  };
  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.replications));

  auto run_one = [&](int r) {
    auto& out = outcomes[static_cast<std::size_t>(r)];
    ScenarioConfig scen = config.scenario;
    Rng rng(config.seed + static_cast<std::uint64_t>(r));
    const Dataset ds = generate_dataset(scen, rng);
    NutsConfig fit = config.fit;
    fit.seed = config.fit.seed + static_cast<std::uint64_t>(r + 1) * 10007;

    if (config.run_joint) {
      try {
        JointModel model(ds.panel, ds.records, scen.spec);
        const auto chains = run_chains(model, fit, 1);
        const auto summ = summarize(chains, model.param_names());
        out.joint = extract(summ, joint_names);
        out.joint_ok = out.joint.max_rhat < config.rhat_limit;
      } catch (const std::exception&) {
        out.joint_ok = false;
      }
    }
    if (config.run_two_stage) {
      try {
        const auto ts = tsim_two_stage(ds, scen.spec, fit, 1);
        out.tsim = extract(ts.survival_summaries, surv_names);
        out.tsim_ok = out.tsim.max_rhat < config.rhat_limit;
      } catch (const std::exception&) {
        out.tsim_ok = false;
      }
    }
  };

  const int threads = std::max(1, config.threads);
  for (int start = 0; start < config.replications; start += threads) {
    const int stop = std::min(config.replications, start + threads);
    std::vector<std::thread> pool;
    for (int r = start; r < stop; ++r) pool.emplace_back(run_one, r);
    for (auto& t : pool) t.join();
  }

  BenchResult result;
  result.replications = config.replications;
  auto aggregate = [&](bool tsim, const std::vector<std::pair<std::string, double>>& targets)
      -> std::vector<MetricRow> {
    std::vector<MetricRow> rows;
    for (const auto& [name, truth] : targets) {
      std::vector<double> est;
      std::vector<std::pair<double, double>> ivs;
      for (const auto& o : outcomes) {
        const auto& fx = tsim ? o.tsim : o.joint;
        const bool ok = tsim ? o.tsim_ok : o.joint_ok;
        if (!ok) continue;
        const auto it = fx.mean.find(name);
        if (it == fx.mean.end()) continue;
        est.push_back(it->second);
        ivs.push_back(fx.interval.at(name));
      }
      if (!est.empty()) rows.push_back(compute_metrics(name, truth, est, ivs));
    }
    return rows;
  };

  if (config.run_joint) {
    result.joint = aggregate(false, truths);
    for (const auto& o : outcomes) result.excluded_joint += !o.joint_ok;
  }
  if (config.run_two_stage) {
    std::vector<std::pair<std::string, double>> surv_truths;
    for (const auto& [name, truth] : truths) {
      if (std::find(surv_names.begin(), surv_names.end(), name) != surv_names.end()) {
        surv_truths.emplace_back(name, truth);
      }
    }
    result.two_stage = aggregate(true, surv_truths);
    for (const auto& o : outcomes) result.excluded_two_stage += !o.tsim_ok;
  }
  return result;
}

}  // namespace fhtjm

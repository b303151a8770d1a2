#include "fhtjm/io.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

namespace fhtjm {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& tok, const std::string& file, long line) {
  double v = 0.0;
  const auto* begin = tok.data();
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ParseError(file, line, "expected a number, got '" + tok + "'");
  }
  return v;
}

long parse_long(const std::string& tok, const std::string& file, long line) {
  long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    throw ParseError(file, line, "expected an integer, got '" + tok + "'");
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return in;
}

}  // namespace

void write_panel_csv(const std::filesystem::path& path, const LongitudinalPanel& panel) {
  auto out = open_out(path);
  const int Q = panel.n_biomarkers;
  out << "subject_id,time";
  for (int q = 0; q < Q; ++q) out << ",x" << (q + 1);
  for (int q = 0; q < Q; ++q) out << ",lod" << (q + 1);
  out << "\n";
  for (std::size_t i = 0; i < panel.subjects.size(); ++i) {
    const auto& s = panel.subjects[i];
    for (std::size_t j = 0; j < s.n_visits(); ++j) {
      out << (i + 1) << ',' << fmt(s.times[j]);
      for (int q = 0; q < Q; ++q) out << ',' << fmt(s.value(j, q, Q));
      for (int q = 0; q < Q; ++q) out << ',' << (s.flagged(j, q, Q) ? 1 : 0);
      out << "\n";
    }
  }
}

LongitudinalPanel read_panel_csv(const std::filesystem::path& path,
                                 const std::vector<double>& detection_limits) {
  auto in = open_in(path);
  const std::string fname = path.string();
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError(fname, 1, "empty panel file");
  ++lineno;
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "subject_id" || header[1] != "time") {
    throw ParseError(fname, lineno, "expected header subject_id,time,x1..,lod1..");
  }
  const int Q = static_cast<int>((header.size() - 2) / 2);
  if (header.size() != 2 + 2 * static_cast<std::size_t>(Q)) {
    throw ParseError(fname, lineno, "unbalanced x/lod columns");
  }
  if (detection_limits.size() != static_cast<std::size_t>(Q)) {
    throw ParseError(fname, lineno, "detection limit count does not match panel columns");
  }

  LongitudinalPanel panel;
  panel.n_biomarkers = Q;
  panel.detection_limits = detection_limits;
  std::map<long, std::size_t> index;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tok = split_csv(line);
    if (tok.size() != header.size()) {
      throw ParseError(fname, lineno, "wrong number of columns");
    }
    const long id = parse_long(tok[0], fname, lineno);
    auto [it, inserted] = index.try_emplace(id, panel.subjects.size());
    if (inserted) panel.subjects.emplace_back();
    auto& subj = panel.subjects[it->second];
    subj.times.push_back(parse_double(tok[1], fname, lineno));
    for (int q = 0; q < Q; ++q) {
      subj.values.push_back(parse_double(tok[2 + static_cast<std::size_t>(q)], fname, lineno));
    }
    for (int q = 0; q < Q; ++q) {
      const long flag = parse_long(tok[2 + static_cast<std::size_t>(Q + q)], fname, lineno);
      if (flag != 0 && flag != 1) throw ParseError(fname, lineno, "lod flag must be 0 or 1");
      subj.below_lod.push_back(static_cast<std::uint8_t>(flag));
    }
  }
  try {
    panel.validate();
  } catch (const std::exception& e) {
    throw ParseError(fname, lineno, e.what());
  }
  return panel;
}

void write_survival_csv(const std::filesystem::path& path,
                        const std::vector<SurvivalRecord>& records) {
  auto out = open_out(path);
  const std::size_t K = records.empty() ? 0 : records.front().covariates.size();
  out << "subject_id,time,event";
  for (std::size_t k = 0; k < K; ++k) out << ",z" << (k + 1);
  out << "\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << (i + 1) << ',' << fmt(records[i].time) << ',' << (records[i].event ? 1 : 0);
    for (double z : records[i].covariates) out << ',' << fmt(z);
    out << "\n";
  }
}

std::vector<SurvivalRecord> read_survival_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string fname = path.string();
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError(fname, 1, "empty survival file");
  ++lineno;
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "subject_id" || header[1] != "time" ||
      header[2] != "event") {
    throw ParseError(fname, lineno, "expected header subject_id,time,event,z1..");
  }
  const std::size_t K = header.size() - 3;
  std::vector<SurvivalRecord> records;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tok = split_csv(line);
    if (tok.size() != header.size()) throw ParseError(fname, lineno, "wrong number of columns");
    SurvivalRecord rec;
    rec.time = parse_double(tok[1], fname, lineno);
    const long ev = parse_long(tok[2], fname, lineno);
    if (ev != 0 && ev != 1) throw ParseError(fname, lineno, "event must be 0 or 1");
    rec.event = ev == 1;
    if (!(rec.time > 0.0)) throw ParseError(fname, lineno, "times must be positive");
    for (std::size_t k = 0; k < K; ++k) {
      rec.covariates.push_back(parse_double(tok[3 + k], fname, lineno));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_truth_json(const std::filesystem::path& path, const ScenarioConfig& cfg,
                      const GroundTruth& truth) {
  json j;
  j["scenario"] = json::parse(scenario_to_json(cfg));
  json globals;
  for (const auto& [name, value] : true_globals(cfg)) globals[name] = value;
  j["globals"] = globals;
  j["subjects"] = json::array();
  for (std::size_t i = 0; i < truth.rand_effects.size(); ++i) {
    json s;
    s["rand_effects"] = truth.rand_effects[i];
    s["resid_sd"] = truth.resid_sd[i];
    s["resid_corr"] = truth.resid_corr[i];
    s["y0"] = truth.y0[i];
    s["drift"] = truth.drift[i];
    s["event_time"] = std::isfinite(truth.event_time[i]) ? json(truth.event_time[i]) : json();
    s["censored_values"] = truth.censored_values[i];
    j["subjects"].push_back(std::move(s));
  }
  j["never_hit_redraws"] = truth.never_hit_redraws;
  j["never_hit_fallbacks"] = truth.never_hit_fallbacks;
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

DrawsWriter::DrawsWriter(const std::filesystem::path& path, const std::vector<std::string>& names)
    : out_(path), width_(static_cast<Eigen::Index>(names.size())) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (k) out_ << ',';
    out_ << names[k];
  }
  out_ << "\n";
}

void DrawsWriter::append(const Eigen::VectorXd& draw) {
  if (draw.size() != width_) throw std::invalid_argument("DrawsWriter: row width mismatch");
  for (Eigen::Index d = 0; d < draw.size(); ++d) {
    if (d) out_ << ',';
    out_ << fmt(draw[d]);
  }
  out_ << "\n";
}

std::pair<Eigen::MatrixXd, std::vector<std::string>> read_draws_csv(
    const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string fname = path.string();
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError(fname, 1, "empty draws file");
  ++lineno;
  const auto names = split_csv(line);
  std::vector<double> flat;
  long rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tok = split_csv(line);
    if (tok.size() != names.size()) throw ParseError(fname, lineno, "wrong number of columns");
    for (const auto& t : tok) flat.push_back(parse_double(t, fname, lineno));
    ++rows;
  }
  Eigen::MatrixXd draws(rows, static_cast<Eigen::Index>(names.size()));
  for (long r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      draws(r, static_cast<Eigen::Index>(c)) =
          flat[static_cast<std::size_t>(r) * names.size() + c];
    }
  }
  return {std::move(draws), names};
}

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<ParamSummary>& summaries) {
  auto out = open_out(path);
  out << "parameter,mean,sd,q2.5,q50,q97.5,rhat,ess\n";
  for (const auto& s : summaries) {
    out << s.name << ',' << fmt(s.mean) << ',' << fmt(s.sd) << ',' << fmt(s.q025) << ','
        << fmt(s.q50) << ',' << fmt(s.q975) << ','
        << (std::isfinite(s.rhat) ? fmt(s.rhat) : "na") << ','
        << (std::isfinite(s.ess) ? fmt(s.ess) : "na") << "\n";
  }
}

void write_metrics_csv(const std::filesystem::path& path, const BenchResult& result) {
  auto out = open_out(path);
  out << "parameter,truth,model,coverage_pct,bias,avg_interval_length,rmse,replications\n";
  auto emit = [&](const std::vector<MetricRow>& rows, const char* model) {
    for (const auto& r : rows) {
      out << r.name << ',' << fmt(r.truth) << ',' << model << ',' << fmt(100.0 * r.coverage)
          << ',' << fmt(r.bias) << ',' << fmt(r.avg_interval_length) << ',' << fmt(r.rmse) << ','
          << r.n_replications << "\n";
    }
  };
  emit(result.joint, "joint");
  emit(result.two_stage, "tsim");
}

void write_curve_csv(const std::filesystem::path& path, const CurveTable& curve) {
  auto out = open_out(path);
  out << "time,mean,lo,hi\n";
  for (std::size_t g = 0; g < curve.time.size(); ++g) {
    out << fmt(curve.time[g]) << ',' << fmt(curve.mean[g]) << ',' << fmt(curve.lo[g]) << ','
        << fmt(curve.hi[g]) << "\n";
  }
}

void write_longitudinal_ppc_csv(const std::filesystem::path& path, const Eigen::MatrixXd& pvals) {
  auto out = open_out(path);
  out << "subject_id";
  for (Eigen::Index q = 0; q < pvals.cols(); ++q) out << ",p_x" << (q + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < pvals.rows(); ++i) {
    out << (i + 1);
    for (Eigen::Index q = 0; q < pvals.cols(); ++q) out << ',' << fmt(pvals(i, q));
    out << "\n";
  }
}

void write_survival_ppc_csv(const std::filesystem::path& path, const SurvivalPpc& ppc,
                            const std::vector<double>& age_thresholds) {
  auto out = open_out(path);
  out << "statistic,p_value\n";
  out << "median," << fmt(ppc.median_p) << "\n";
  for (std::size_t a = 0; a < age_thresholds.size(); ++a) {
    out << "events_by_" << fmt(age_thresholds[a]) << ',' << fmt(ppc.count_p[a]) << "\n";
  }
}

void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& fields) {
  json j;
  j["command"] = command;
  for (const auto& [key, value] : fields) {
    // store structured values as JSON when they parse, raw strings otherwise
    if (!value.empty() && (value.front() == '{' || value.front() == '[')) {
      j[key] = json::parse(value, nullptr, false).is_discarded() ? json(value)
                                                                 : json::parse(value);
    } else {
      j[key] = value;
    }
  }
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

std::string model_spec_to_json(const ModelSpec& spec) {
  json j;
  j["n_biomarkers"] = spec.n_biomarkers;
  j["poly_degrees"] = spec.poly_degrees;
  j["n_covariates"] = spec.n_covariates;
  json lods = json::array();
  for (double l : spec.detection_limits) {
    lods.push_back(std::isfinite(l) ? json(l) : json());
  }
  j["detection_limits"] = lods;
  j["standardize_covariates"] = spec.standardize_covariates;
  j["priors"] = {{"beta_scale", spec.priors.beta_scale},
                 {"sigma_scale", spec.priors.sigma_scale},
                 {"lkj_shape", spec.priors.lkj_shape},
                 {"gamma_scale", spec.priors.gamma_scale},
                 {"psi_scale", spec.priors.psi_scale},
                 {"shape_rate_a", spec.priors.shape_rate_a},
                 {"shape_rate_b", spec.priors.shape_rate_b},
                 {"coef_scale", spec.priors.coef_scale}};
  return j.dump();
}

ModelSpec model_spec_from_json(const std::string& text) {
  const json j = json::parse(text);
  ModelSpec spec;
  spec.n_biomarkers = j.at("n_biomarkers").get<int>();
  spec.poly_degrees = j.at("poly_degrees").get<std::vector<int>>();
  spec.n_covariates = j.value("n_covariates", 0);
  for (const auto& l : j.at("detection_limits")) {
    spec.detection_limits.push_back(l.is_null() ? kNoDetectionLimit : l.get<double>());
  }
  spec.standardize_covariates = j.value("standardize_covariates", false);
  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    spec.priors.beta_scale = p.value("beta_scale", spec.priors.beta_scale);
    spec.priors.sigma_scale = p.value("sigma_scale", spec.priors.sigma_scale);
    spec.priors.lkj_shape = p.value("lkj_shape", spec.priors.lkj_shape);
    spec.priors.gamma_scale = p.value("gamma_scale", spec.priors.gamma_scale);
    spec.priors.psi_scale = p.value("psi_scale", spec.priors.psi_scale);
    spec.priors.shape_rate_a = p.value("shape_rate_a", spec.priors.shape_rate_a);
    spec.priors.shape_rate_b = p.value("shape_rate_b", spec.priors.shape_rate_b);
    spec.priors.coef_scale = p.value("coef_scale", spec.priors.coef_scale);
  }
  spec.validate();
  return spec;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["n_subjects"] = cfg.n_subjects;
  j["visits_min"] = cfg.visits_min;
  j["visits_max"] = cfg.visits_max;
  j["visit_offset_max"] = cfg.visit_offset_max;
  j["spec"] = json::parse(model_spec_to_json(cfg.spec));
  j["beta"] = cfg.beta;
  j["sigma"] = cfg.sigma;
  j["omega"] = cfg.omega;
  j["gamma"] = cfg.gamma;
  j["psi"] = cfg.psi;
  j["corr_shape_a"] = cfg.corr_shape_a;
  j["corr_shape_b"] = cfg.corr_shape_b;
  j["alpha"] = cfg.alpha;
  j["eta"] = cfg.eta;
  j["covariate_mean"] = cfg.covariate_mean;
  j["covariate_sd"] = cfg.covariate_sd;
  j["censor_rate"] = cfg.censor_rate;
  j["never_hit_horizon"] = cfg.never_hit_horizon;
  return j.dump();
}

ScenarioConfig scenario_from_json(const std::string& text) {
  const json j = json::parse(text);
  ScenarioConfig cfg;
  cfg.name = j.value("name", std::string("custom"));
  cfg.n_subjects = j.at("n_subjects").get<int>();
  cfg.visits_min = j.value("visits_min", 6);
  cfg.visits_max = j.value("visits_max", 15);
  cfg.visit_offset_max = j.value("visit_offset_max", 6.25);
  cfg.spec = model_spec_from_json(j.at("spec").dump());
  cfg.beta = j.at("beta").get<std::vector<std::vector<double>>>();
  cfg.sigma = j.at("sigma").get<std::vector<double>>();
  cfg.omega = j.at("omega").get<std::vector<double>>();
  cfg.gamma = j.at("gamma").get<std::vector<double>>();
  cfg.psi = j.at("psi").get<std::vector<double>>();
  cfg.corr_shape_a = j.value("corr_shape_a", 1.0);
  cfg.corr_shape_b = j.value("corr_shape_b", 1.0);
  cfg.alpha = j.at("alpha").get<std::vector<double>>();
  cfg.eta = j.at("eta").get<std::vector<double>>();
  cfg.covariate_mean = j.value("covariate_mean", std::vector<double>{});
  cfg.covariate_sd = j.value("covariate_sd", std::vector<double>{});
  cfg.censor_rate = j.value("censor_rate", 0.0);
  cfg.never_hit_horizon = j.value("never_hit_horizon", 1e4);
  cfg.validate();
  return cfg;
}

}  // namespace fhtjm

#include "alrreg/cli.hpp"

#include "alrreg/errors.hpp"
#include "alrreg/format.hpp"
#include "alrreg/simulation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace alrreg::cli {

namespace {

using nlohmann::json;

std::string precise(double x) {
  if (!std::isfinite(x)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string output_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write '" + path + "'");
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::InvalidConfig, "cannot create output directory '" + dir + "'");
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json priors_json(const PriorSpec& p) {
  return {{"a", matrix_json(p.a)},
          {"b2", matrix_json(p.b2)},
          {"c", to_std(p.c)},
          {"d", to_std(p.d)},
          {"coefficient_prior", "Normal(a, b2), b2 is a variance"},
          {"variance_prior", "Inverse-Gamma(c, d), density proportional to x^-(c+1) exp(-d/x)"},
          {"correlation_prior", "Uniform(-1, 1) per correlation, restricted to positive definite"}};
}

json chain_json(const ChainConfig& c) {
  return {{"iterations", c.iterations}, {"burn_in", c.burn_in},
          {"thin", c.thin},             {"seed", c.seed},
          {"chains", c.n_chains},       {"adapt", c.adapt},
          {"target_accept", c.target_accept}, {"adapt_batch", c.adapt_batch},
          {"init_jitter_sd", c.init_jitter_sd}};
}

json criteria_json(const CriteriaReport& r, ErrorStructure s) {
  return {{"model", to_string(s)},
          {"eaic", r.eaic},
          {"ebic", r.ebic},
          {"dic", r.dic},
          {"lpml", r.lpml},
          {"mean_deviance", r.mean_deviance},
          {"deviance_at_mean", r.deviance_at_mean},
          {"p_d", r.p_d},
          {"n_params", r.n_params},
          {"reference_state", r.reference_state},
          {"cpo", to_std(r.cpo)},
          {"definitions",
           {{"deviance", "D(theta) = -2 log L(theta), Gaussian constants included"},
            {"dic", "mean D + p_D, p_D = mean D - D(posterior mean)"},
            {"eaic", "mean D + 2 q"},
            {"ebic", "mean D + q log n"},
            {"cpo", "harmonic mean of f(y_i | theta) over pooled draws"},
            {"lpml", "sum of log CPO_i"}}}};
}

void print_summary(std::ostream& log, ErrorStructure s,
                   const std::vector<PosteriorSummary>& summary, const CriteriaReport& crit) {
  log << "model: " << to_string(s) << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "  %-12s %12s %12s %12s %12s %8s %9s\n", "parameter", "mean",
                "sd", "ci_low", "ci_high", "psrf", "ess");
  log << line;
  for (const auto& p : summary) {
    std::snprintf(line, sizeof line, "  %-12s %12.6g %12.6g %12.6g %12.6g %8.4f %9.1f\n",
                  p.name.c_str(), p.mean, p.sd, p.lower, p.upper, p.psrf, p.ess);
    log << line;
  }
  log << "  EAIC " << format_number(crit.eaic) << "  EBIC " << format_number(crit.ebic)
      << "  DIC " << format_number(crit.dic) << "  LPML " << format_number(crit.lpml) << '\n';
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Maps a failure to an exit status; `data_phase` marks failures caused by
// the input data rather than by flags.
int report(std::ostream& log, const std::exception& e, int status) {
  log << "error: " << e.what() << '\n';
  return status;
}

}  // namespace

PriorSpec PriorOverrides::build(Eigen::Index p, Eigen::Index g) const {
  PriorSpec ps = PriorSpec::constant(p, g, a.value_or(0.0), b2.value_or(1000.0), c.value_or(0.1),
                                     d.value_or(100.0));
  if (a_intercept) ps.a.row(0).setConstant(*a_intercept);
  if (b2_intercept) ps.b2.row(0).setConstant(*b2_intercept);
  if (p > 0) {
    if (a_slope) ps.a.bottomRows(p).setConstant(*a_slope);
    if (b2_slope) ps.b2.bottomRows(p).setConstant(*b2_slope);
  }
  ps.validate();
  return ps;
}

ChainConfig RunConfig::default_chain() {
  ChainConfig c;
  c.iterations = 100000;
  c.burn_in = 10000;
  c.thin = 20;
  c.n_chains = 3;
  return c;
}

ChainConfig SimulateOptions::desk_chain() {
  ChainConfig c;
  c.iterations = 6000;
  c.burn_in = 1000;
  c.thin = 5;
  c.n_chains = 1;
  return c;
}

std::vector<ErrorStructure> parse_models(const std::string& name) {
  if (name == "both") return {ErrorStructure::Uncorrelated, ErrorStructure::Correlated};
  return {parse_error_structure(name)};
}

LoadedData load_data(const std::string& path, const std::vector<std::string>& components,
                     const std::vector<std::string>& covariates) {
  if (components.size() < 2) {
    throw Error(ErrorCode::InvalidConfig, "at least 2 component columns are required");
  }
  const CsvTable t = read_csv_file(path);
  if (t.rows.empty()) throw ParseError("no data rows in '" + path + "'");
  std::vector<std::size_t> comp_cols, cov_cols;
  for (const auto& c : components) comp_cols.push_back(t.column(c));
  for (const auto& c : covariates) cov_cols.push_back(t.column(c));

  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Eigen::MatrixXd raw(n, static_cast<Eigen::Index>(comp_cols.size()));
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(cov_cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < comp_cols.size(); ++j) raw(i, j) = t.number(i, comp_cols[j]);
    for (std::size_t l = 0; l < cov_cols.size(); ++l) z(i, l) = t.number(i, cov_cols[l]);
  }
  std::vector<std::string> labels;
  const bool first_is_label =
      std::find(comp_cols.begin(), comp_cols.end(), 0) == comp_cols.end() &&
      std::find(cov_cols.begin(), cov_cols.end(), 0) == cov_cols.end();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    labels.push_back(first_is_label ? t.rows[i][0] : std::to_string(i + 1));
  }
  CompositionDataset comps = validate_and_normalize(raw, labels);
  RegressionDataset reg(comps.alr(), std::move(z));
  return {std::move(comps), std::move(reg), std::move(labels)};
}

ModelFit fit_model(const RegressionDataset& data, const PriorSpec& priors, ErrorStructure s,
                   const ChainConfig& chain, double level) {
  ModelFit fit{s, run_chains(data, priors, s, chain), {}, {}};
  fit.summary = summarize_chains(fit.chains, level);
  fit.criteria = compute_criteria(data, pool_chains(fit.chains), priors);
  return fit;
}

void write_summary_csv(std::ostream& os, const std::vector<PosteriorSummary>& summary) {
  os << "parameter,mean,sd,ci_low,ci_high,psrf,ess\n";
  for (const auto& p : summary) {
    os << p.name << ',' << format_number(p.mean) << ',' << format_number(p.sd) << ','
       << format_number(p.lower) << ',' << format_number(p.upper) << ','
       << format_number(p.psrf) << ',' << format_number(p.ess) << '\n';
  }
}

std::vector<PosteriorSummary> read_summary_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const std::size_t name = t.column("parameter");
  const std::size_t cols[] = {t.column("mean"),    t.column("sd"),   t.column("ci_low"),
                              t.column("ci_high"), t.column("psrf"), t.column("ess")};
  auto value = [&](std::size_t r, std::size_t c) {
    return t.rows[r][c] == "NA" ? std::numeric_limits<double>::quiet_NaN() : t.number(r, c);
  };
  std::vector<PosteriorSummary> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    PosteriorSummary s;
    s.name = t.rows[r][name];
    s.mean = value(r, cols[0]);
    s.sd = value(r, cols[1]);
    s.lower = value(r, cols[2]);
    s.upper = value(r, cols[3]);
    s.psrf = value(r, cols[4]);
    s.ess = value(r, cols[5]);
    out.push_back(std::move(s));
  }
  return out;
}

void write_draws_csv(std::ostream& os, const std::vector<ChainOutput>& chains,
                     const ChainConfig& chain) {
  if (chains.empty()) return;
  os << "iteration,chain";
  for (const auto& name : chains.front().parameter_names) os << ',' << name;
  os << '\n';
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& d = chains[c].draws;
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
      os << chain.burn_in + static_cast<std::size_t>(r + 1) * chain.thin << ',' << c + 1;
      for (Eigen::Index k = 0; k < d.cols(); ++k) os << ',' << precise(d(r, k));
      os << '\n';
    }
  }
}

int cmd_transform(const TransformOptions& opt, std::ostream& log) {
  if (opt.components.size() < 2) {
    log << "error: transform needs at least 2 component columns\n";
    return kUsage;
  }
  CsvTable t;
  std::vector<std::size_t> comp_cols;
  Eigen::MatrixXd y;
  try {
    t = read_csv_file(opt.input);
    for (const auto& c : opt.components) comp_cols.push_back(t.column(c));
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(t.rows.size()),
                        static_cast<Eigen::Index>(comp_cols.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      for (std::size_t j = 0; j < comp_cols.size(); ++j) raw(i, j) = t.number(i, comp_cols[j]);
    }
    y = validate_and_normalize(raw).alr();
  } catch (const Error& e) {
    return report(log, e, kData);
  }
  try {
    std::ofstream out = open_output(opt.output);
    bool first = true;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (std::find(comp_cols.begin(), comp_cols.end(), c) != comp_cols.end()) continue;
      out << (first ? "" : ",") << t.header[c];
      first = false;
    }
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      out << (first ? "" : ",") << "alr_" << j + 1;
      first = false;
    }
    out << '\n';
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      first = true;
      for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (std::find(comp_cols.begin(), comp_cols.end(), c) != comp_cols.end()) continue;
        out << (first ? "" : ",") << t.rows[i][c];
        first = false;
      }
      for (Eigen::Index j = 0; j < y.cols(); ++j) {
        out << (first ? "" : ",") << precise(y(i, j));
        first = false;
      }
      out << '\n';
    }
  } catch (const Error& e) {
    return report(log, e, kUsage);
  }
  log << "wrote " << t.rows.size() << " transformed rows to " << opt.output << '\n';
  return kOk;
}

int cmd_fit(const RunConfig& cfg, std::ostream& log) {
  try {
    cfg.chain.validate();
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "credible level must lie in (0, 1)");
    }
    ensure_dir(cfg.out_dir);
  } catch (const Error& e) {
    return report(log, e, kUsage);
  }

  std::optional<LoadedData> data;
  try {
    data.emplace(load_data(cfg.data_path, cfg.components, cfg.covariates));
    data->regression.require_identifiable();
  } catch (const Error& e) {
    return report(log, e, e.code() == ErrorCode::InvalidConfig ? kUsage : kData);
  }
  const RegressionDataset& reg = data->regression;

  PriorSpec priors;
  try {
    priors = cfg.priors.build(reg.p(), reg.g());
  } catch (const Error& e) {
    return report(log, e, kUsage);
  }

  bool converged = true;
  for (ErrorStructure s : cfg.models) {
    ModelFit fit;
    try {
      fit = fit_model(reg, priors, s, cfg.chain, cfg.level);
    } catch (const Error& e) {
      return report(log, e, kData);
    }
    const std::string tag = to_string(s);
    try {
      {
        auto out = open_output(output_path(cfg.out_dir, "summary_" + tag + ".csv"));
        write_summary_csv(out, fit.summary);
      }
      {
        auto out = open_output(output_path(cfg.out_dir, "criteria_" + tag + ".json"));
        out << criteria_json(fit.criteria, s).dump(2) << '\n';
      }
      {
        auto out = open_output(output_path(cfg.out_dir, "draws_" + tag + ".csv"));
        write_draws_csv(out, fit.chains, cfg.chain);
      }
      {
        json meta;
        meta["model"] = tag;
        meta["parameters"] = fit.chains.front().parameter_names;
        meta["chain_config"] = chain_json(cfg.chain);
        meta["priors"] = priors_json(priors);
        meta["level"] = cfg.level;
        meta["psrf_threshold"] = cfg.psrf_threshold;
        meta["data"] = {{"path", cfg.data_path},
                        {"n", reg.n()},
                        {"g", reg.g()},
                        {"p", reg.p()},
                        {"components", cfg.components},
                        {"reference_component", cfg.components.back()},
                        {"covariates", cfg.covariates}};
        json chains = json::array();
        for (const auto& c : fit.chains) {
          chains.push_back({{"seed", c.seed_used},
                            {"kept_draws", c.draws.rows()},
                            {"acceptance", to_std(c.acceptance)},
                            {"final_scales", to_std(c.final_scales)}});
        }
        meta["chains"] = chains;
        meta["parameter_naming"] =
            "beta_l_j: coefficient of covariate l (0 = intercept) for ALR response j; "
            "sigma2_j: error variance; rho_j_k: error correlation";
        auto out = open_output(output_path(cfg.out_dir, "metadata_" + tag + ".json"));
        out << meta.dump(2) << '\n';
      }
    } catch (const Error& e) {
      return report(log, e, kUsage);
    }
    print_summary(log, s, fit.summary, fit.criteria);
    for (const auto& p : fit.summary) {
      if (std::isfinite(p.psrf) && p.psrf > cfg.psrf_threshold) {
        log << "warning: PSRF " << format_number(p.psrf) << " for " << p.name << " exceeds "
            << format_number(cfg.psrf_threshold) << '\n';
        converged = false;
      }
    }
  }
  return converged ? kOk : kConvergence;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& log) {
  SimScenario scenario;
  PriorSpec priors;
  try {
    opt.chain.validate();
    ensure_dir(opt.out_dir);
    json j;
    try {
      j = json::parse(read_text(opt.scenario_path));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::Scenario, std::string("malformed scenario JSON: ") + e.what());
    }
    scenario = scenario_from_json(j);
    PriorOverrides po = opt.priors;
    if (!po.c) po.c = 0.1;
    if (!po.d) po.d = 0.01;
    priors = po.build(scenario.p(), scenario.g());
  } catch (const Error& e) {
    return report(log, e, kUsage);
  }

  StudyResult result;
  try {
    result = run_study(scenario, priors, opt.chain, opt.models, opt.threads);
  } catch (const Error& e) {
    return report(log, e, kData);
  }
  try {
    {
      auto out = open_output(output_path(opt.out_dir, "study.csv"));
      write_study_csv(out, result);
    }
    {
      json j = study_to_json(result);
      j["priors"] = priors_json(priors);
      auto out = open_output(output_path(opt.out_dir, "study.json"));
      out << j.dump(2) << '\n';
    }
  } catch (const Error& e) {
    return report(log, e, kUsage);
  }
  for (const auto& m : result.models) {
    log << "model: " << to_string(m.structure) << " (" << m.succeeded << " fits, " << m.failed
        << " failed)\n";
    for (const auto& p : m.parameters) {
      log << "  " << p.name << " truth " << format_number(p.truth) << " mean "
          << format_number(p.mean) << " sd " << format_number(p.sd) << " cp "
          << format_number(p.coverage) << '\n';
    }
    log << "  EAIC " << format_number(m.eaic) << "  EBIC " << format_number(m.ebic) << "  DIC "
        << format_number(m.dic) << '\n';
  }
  return kOk;
}

std::string Substitution::label() const {
  return hyperparameter + "[" + block + "]=" + format_number(value);
}

void Substitution::apply(PriorOverrides& o) const {
  const bool coef = hyperparameter == "a" || hyperparameter == "b2";
  const bool var = hyperparameter == "c" || hyperparameter == "d";
  if (!coef && !var) {
    throw Error(ErrorCode::InvalidConfig, "unknown hyperparameter '" + hyperparameter + "'");
  }
  if (var) {
    if (block != "all" && block != "variance") {
      throw Error(ErrorCode::InvalidConfig, "block '" + block + "' does not apply to " + hyperparameter);
    }
    (hyperparameter == "c" ? o.c : o.d) = value;
    return;
  }
  const bool is_a = hyperparameter == "a";
  if (block == "all") {
    (is_a ? o.a : o.b2) = value;
    (is_a ? o.a_intercept : o.b2_intercept).reset();
    (is_a ? o.a_slope : o.b2_slope).reset();
  } else if (block == "intercept") {
    (is_a ? o.a_intercept : o.b2_intercept) = value;
  } else if (block == "slope") {
    (is_a ? o.a_slope : o.b2_slope) = value;
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown block '" + block + "'");
  }
}

std::vector<Substitution> parse_sweep(const std::string& json_text) {
  std::vector<Substitution> subs;
  try {
    const json j = json::parse(json_text);
    for (const auto& e : j.at("substitutions")) {
      Substitution s;
      s.hyperparameter = e.at("hyperparameter").get<std::string>();
      s.block = e.value("block", std::string("all"));
      s.value = e.at("value").get<double>();
      PriorOverrides probe;
      s.apply(probe);
      subs.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("invalid sweep: ") + e.what());
  }
  return subs;
}

int cmd_sensitivity(const RunConfig& cfg, const std::string& sweep_path, std::ostream& log) {
  std::vector<Substitution> subs;
  try {
    cfg.chain.validate();
    ensure_dir(cfg.out_dir);
    subs = parse_sweep(read_text(sweep_path));
  } catch (const Error& e) {
    return report(log, e, kUsage);
  }
  std::optional<LoadedData> data;
  try {
    data.emplace(load_data(cfg.data_path, cfg.components, cfg.covariates));
    data->regression.require_identifiable();
  } catch (const Error& e) {
    return report(log, e, e.code() == ErrorCode::InvalidConfig ? kUsage : kData);
  }
  const RegressionDataset& reg = data->regression;

  for (ErrorStructure s : cfg.models) {
    std::ostringstream csv;
    csv << "substitution,parameter,baseline_mean,baseline_sd,mean,delta,delta_over_sd\n";
    try {
      const PriorSpec base_priors = cfg.priors.build(reg.p(), reg.g());
      const ModelFit base = fit_model(reg, base_priors, s, cfg.chain, cfg.level);
      for (const auto& p : base.summary) {
        csv << "baseline," << p.name << ',' << format_number(p.mean) << ','
            << format_number(p.sd) << ',' << format_number(p.mean) << ",,\n";
      }
      double worst = 0.0;
      for (const auto& sub : subs) {
        PriorOverrides o = cfg.priors;
        sub.apply(o);
        const ModelFit alt = fit_model(reg, o.build(reg.p(), reg.g()), s, cfg.chain, cfg.level);
        for (std::size_t k = 0; k < alt.summary.size(); ++k) {
          const double delta = alt.summary[k].mean - base.summary[k].mean;
          const double ratio = delta / base.summary[k].sd;
          worst = std::max(worst, std::abs(ratio));
          csv << sub.label() << ',' << alt.summary[k].name << ','
              << format_number(base.summary[k].mean) << ',' << format_number(base.summary[k].sd)
              << ',' << format_number(alt.summary[k].mean) << ',' << format_number(delta) << ','
              << format_number(ratio) << '\n';
        }
      }
      log << "model: " << to_string(s) << ": " << subs.size()
          << " substitutions, max |delta| / baseline sd = " << format_number(worst) << '\n';
    } catch (const Error& e) {
      return report(log, e, e.code() == ErrorCode::InvalidConfig ? kUsage : kData);
    }
    try {
      auto out = open_output(output_path(cfg.out_dir, std::string("sensitivity_") + to_string(s) + ".csv"));
      out << csv.str();
    } catch (const Error& e) {
      return report(log, e, kUsage);
    }
  }
  return kOk;
}

}  // namespace alrreg::cli

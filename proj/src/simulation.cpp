#include "alrreg/simulation.hpp"

#include "alrreg/diagnostics.hpp"
#include "alrreg/errors.hpp"
#include "alrreg/format.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace alrreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct FitOutcome {
  bool ok = false;
  std::string error;
  std::vector<PosteriorSummary> summaries;
  std::vector<bool> covered;
  CriteriaReport criteria;
};

struct ReplicateOutcome {
  std::uint64_t seed = 0;
  std::vector<FitOutcome> fits;
};

Eigen::VectorXd truth_vector(const ParameterState& truth, const SimScenario& sc,
                             ErrorStructure s) {
  ParameterState t = truth;
  t.rho = s == ErrorStructure::Correlated ? sc.true_rho : Eigen::VectorXd();
  return flatten(t);
}

ReplicateOutcome run_replicate(const SimScenario& sc, const PriorSpec& priors,
                               const ChainConfig& config,
                               const std::vector<ErrorStructure>& models, std::uint64_t seed) {
  ReplicateOutcome out;
  out.seed = seed;
  Rng rng(seed);
  const GeneratedData gen = generate_dataset(sc, rng);
  for (ErrorStructure s : models) {
    FitOutcome fit;
    try {
      ChainConfig cc = config;
      cc.seed = seed;
      const ChainOutput chain = run_chain(gen.data, priors, s, cc, rng);
      const Eigen::VectorXd truth = truth_vector(gen.truth, sc, s);
      for (Eigen::Index col = 0; col < chain.draws.cols(); ++col) {
        fit.summaries.push_back(summarize(column(chain, col), sc.level, chain.parameter_names[col]));
        fit.covered.push_back(coverage(fit.summaries.back().lower, fit.summaries.back().upper,
                                       truth[col]));
      }
      fit.criteria = compute_criteria(gen.data, chain, priors);
      fit.ok = true;
    } catch (const std::exception& e) {
      fit.error = e.what();
    }
    out.fits.push_back(std::move(fit));
  }
  return out;
}

CovariateGenerator covariate_from_json(const nlohmann::json& j) {
  CovariateGenerator c;
  const std::string type = j.at("type").get<std::string>();
  if (type == "bernoulli") {
    c.kind = CovariateGenerator::Kind::Bernoulli;
    c.prob = j.at("p").get<double>();
  } else if (type == "normal") {
    c.kind = CovariateGenerator::Kind::Normal;
    c.mean = j.at("mean").get<double>();
    c.sd = j.at("sd").get<double>();
  } else {
    throw Error(ErrorCode::Scenario, "unknown covariate generator '" + type + "'");
  }
  return c;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void SimScenario::validate() const {
  if (true_beta.rows() < 1 || true_beta.cols() < 1) {
    throw Error(ErrorCode::Scenario, "true_beta must be a non-empty (p+1) x g matrix");
  }
  if (true_sigma2.size() != g()) throw Error(ErrorCode::Scenario, "true_sigma2 needs g entries");
  if (!(true_sigma2.array() > 0.0).all()) {
    throw Error(ErrorCode::Scenario, "true_sigma2 entries must be positive");
  }
  if (true_rho.size() != rho_count(g())) {
    throw Error(ErrorCode::Scenario, "true_rho needs g(g-1)/2 entries");
  }
  if (!correlations_valid(true_rho, g())) {
    throw Error(ErrorCode::NotPositiveDefinite, "true_rho does not give a positive definite matrix");
  }
  if (static_cast<Eigen::Index>(covariates.size()) != p()) {
    throw Error(ErrorCode::Scenario, "one covariate generator per slope row is required");
  }
  for (const auto& c : covariates) {
    if (c.kind == CovariateGenerator::Kind::Bernoulli && !(c.prob >= 0.0 && c.prob <= 1.0)) {
      throw Error(ErrorCode::Scenario, "Bernoulli probability outside [0, 1]");
    }
    if (c.kind == CovariateGenerator::Kind::Normal && !(c.sd >= 0.0)) {
      throw Error(ErrorCode::Scenario, "Normal covariate sd must be non-negative");
    }
  }
  if (replicates < 1) throw Error(ErrorCode::Scenario, "replicates must be at least 1");
  if (n < 1) throw Error(ErrorCode::Scenario, "n must be at least 1");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::Scenario, "level must lie in (0, 1)");
}

SimScenario default_scenario(std::size_t n, bool correlated, std::size_t replicates) {
  SimScenario s;
  s.n = n;
  s.replicates = replicates;
  s.true_beta.resize(3, 3);
  s.true_beta << 0.5, -1.0, -2.0,  //
      0.1, 0.1, 0.1,               //
      0.1, 0.1, 0.1;
  s.true_sigma2 = Eigen::Vector3d(0.06, 0.2, 0.3);
  s.true_rho = correlated ? Eigen::VectorXd(Eigen::Vector3d(0.45, 0.37, 0.20))
                          : Eigen::VectorXd(Eigen::VectorXd::Zero(3));
  CovariateGenerator z1;
  z1.kind = CovariateGenerator::Kind::Bernoulli;
  z1.prob = 0.8;
  CovariateGenerator z2;
  z2.kind = CovariateGenerator::Kind::Normal;
  z2.mean = 0.5;
  z2.sd = 0.1;
  s.covariates = {z1, z2};
  return s;
}

PriorSpec study_priors(Eigen::Index p, Eigen::Index g) {
  return PriorSpec::constant(p, g, 0.0, 1000.0, 0.1, 0.01);
}

GeneratedData generate_dataset(const SimScenario& scenario, Rng& rng, bool emit_compositions) {
  scenario.validate();
  const auto n = static_cast<Eigen::Index>(scenario.n);
  const Eigen::Index p = scenario.p();
  const Eigen::Index g = scenario.g();

  Eigen::MatrixXd z(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index l = 0; l < p; ++l) {
      const auto& gen = scenario.covariates[l];
      if (gen.kind == CovariateGenerator::Kind::Bernoulli) {
        z(i, l) = std::bernoulli_distribution(gen.prob)(rng) ? 1.0 : 0.0;
      } else {
        z(i, l) = gen.mean + gen.sd * std::normal_distribution<double>(0.0, 1.0)(rng);
      }
    }
  }

  const Eigen::VectorXd sd = scenario.true_sigma2.cwiseSqrt();
  const Eigen::MatrixXd cov =
      sd.asDiagonal() * correlation_matrix(scenario.true_rho, g) * sd.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "true error covariance is not positive definite");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd noise(g, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < g; ++j) noise(j, i) = std::normal_distribution<double>(0.0, 1.0)(rng);
  }
  Eigen::MatrixXd x(n, p + 1);
  x.col(0).setOnes();
  x.rightCols(p) = z;
  Eigen::MatrixXd y = x * scenario.true_beta + (l * noise).transpose();

  ParameterState truth;
  truth.beta = scenario.true_beta;
  truth.sigma2 = scenario.true_sigma2;
  if (!scenario.true_rho.isZero(0.0)) truth.rho = scenario.true_rho;

  std::optional<CompositionDataset> comps;
  if (emit_compositions) {
    std::vector<Composition> rows;
    rows.reserve(n);
    for (Eigen::Index i = 0; i < n; ++i) rows.push_back(alr_inverse(y.row(i).transpose()));
    comps.emplace(std::move(rows));
  }
  return {RegressionDataset(std::move(y), std::move(z)), std::move(truth), std::move(comps)};
}

bool coverage(double lower, double upper, double truth) {
  return truth >= lower && truth <= upper;
}

StudyResult run_study(const SimScenario& scenario, const PriorSpec& priors,
                      const ChainConfig& config, const std::vector<ErrorStructure>& models,
                      std::size_t threads) {
  scenario.validate();
  config.validate();
  priors.validate();
  if (models.empty()) throw Error(ErrorCode::InvalidConfig, "no models to fit");

  const std::size_t reps = scenario.replicates;
  std::vector<ReplicateOutcome> outcomes(reps);
  std::vector<std::exception_ptr> errors(reps);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < reps; r = next++) {
      try {
        outcomes[r] = run_replicate(scenario, priors, config, models, config.seed + r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, reps);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  // data generation failures are scenario errors, not per-fit failures
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  StudyResult result;
  result.master_seed = config.seed;
  result.scenario = scenario;
  result.chain = config;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    ModelAggregate agg;
    agg.structure = models[mi];
    const auto names = parameter_names(scenario.p(), scenario.g(), models[mi]);
    ParameterState truth_state;
    truth_state.beta = scenario.true_beta;
    truth_state.sigma2 = scenario.true_sigma2;
    const Eigen::VectorXd truth = truth_vector(truth_state, scenario, models[mi]);
    for (std::size_t k = 0; k < names.size(); ++k) {
      agg.parameters.push_back({names[k], truth[static_cast<Eigen::Index>(k)], 0.0, 0.0, 0.0});
    }
    for (const auto& rep : outcomes) {
      const FitOutcome& fit = rep.fits[mi];
      if (!fit.ok) {
        ++agg.failed;
        continue;
      }
      ++agg.succeeded;
      for (std::size_t k = 0; k < names.size(); ++k) {
        agg.parameters[k].mean += fit.summaries[k].mean;
        agg.parameters[k].sd += fit.summaries[k].sd;
        agg.parameters[k].coverage += fit.covered[k] ? 1.0 : 0.0;
      }
      agg.eaic += fit.criteria.eaic;
      agg.ebic += fit.criteria.ebic;
      agg.dic += fit.criteria.dic;
      agg.lpml += fit.criteria.lpml;
    }
    const double denom = agg.succeeded > 0 ? static_cast<double>(agg.succeeded) : kNaN;
    for (auto& pa : agg.parameters) {
      pa.mean /= denom;
      pa.sd /= denom;
      pa.coverage /= denom;
    }
    agg.eaic /= denom;
    agg.ebic /= denom;
    agg.dic /= denom;
    agg.lpml /= denom;
    result.models.push_back(std::move(agg));
  }
  for (std::size_t r = 0; r < reps; ++r) {
    ReplicateRecord rec;
    rec.index = r;
    rec.seed = outcomes[r].seed;
    for (const auto& fit : outcomes[r].fits) {
      rec.dic.push_back(fit.ok ? fit.criteria.dic : kNaN);
      rec.errors.push_back(fit.error);
    }
    result.replicates.push_back(std::move(rec));
  }
  return result;
}

std::size_t correlated_dic_wins(const StudyResult& result) {
  std::optional<std::size_t> unc;
  std::optional<std::size_t> cor;
  for (std::size_t i = 0; i < result.models.size(); ++i) {
    if (result.models[i].structure == ErrorStructure::Uncorrelated) unc = i;
    if (result.models[i].structure == ErrorStructure::Correlated) cor = i;
  }
  if (!unc || !cor) throw Error(ErrorCode::InvalidConfig, "study did not fit both models");
  std::size_t wins = 0;
  for (const auto& rec : result.replicates) {
    const double du = rec.dic[*unc];
    const double dc = rec.dic[*cor];
    if (std::isfinite(du) && std::isfinite(dc) && dc < du) ++wins;
  }
  return wins;
}

SimScenario scenario_from_json(const nlohmann::json& j) {
  try {
    SimScenario s;
    s.n = j.at("n").get<std::size_t>();
    const auto beta = j.at("true_beta").get<std::vector<std::vector<double>>>();
    if (beta.empty() || beta.front().empty()) {
      throw Error(ErrorCode::Scenario, "true_beta must be a non-empty matrix");
    }
    s.true_beta.resize(static_cast<Eigen::Index>(beta.size()),
                       static_cast<Eigen::Index>(beta.front().size()));
    for (std::size_t r = 0; r < beta.size(); ++r) {
      if (beta[r].size() != beta.front().size()) {
        throw Error(ErrorCode::Scenario, "true_beta rows differ in length");
      }
      for (std::size_t c = 0; c < beta[r].size(); ++c) s.true_beta(r, c) = beta[r][c];
    }
    s.true_sigma2 = vector_from_json(j.at("true_sigma2"));
    s.true_rho = j.contains("true_rho") ? vector_from_json(j.at("true_rho"))
                                        : Eigen::VectorXd::Zero(rho_count(s.g()));
    for (const auto& c : j.at("covariates")) s.covariates.push_back(covariate_from_json(c));
    s.replicates = j.value("replicates", std::size_t{100});
    s.level = j.value("level", 0.90);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Scenario, std::string("invalid scenario: ") + e.what());
  }
}

nlohmann::json scenario_to_json(const SimScenario& s) {
  nlohmann::json j;
  j["n"] = s.n;
  std::vector<std::vector<double>> beta(s.true_beta.rows());
  for (Eigen::Index r = 0; r < s.true_beta.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.true_beta.cols(); ++c) beta[r].push_back(s.true_beta(r, c));
  }
  j["true_beta"] = beta;
  j["true_sigma2"] = std::vector<double>(s.true_sigma2.begin(), s.true_sigma2.end());
  j["true_rho"] = std::vector<double>(s.true_rho.begin(), s.true_rho.end());
  nlohmann::json covs = nlohmann::json::array();
  for (const auto& c : s.covariates) {
    if (c.kind == CovariateGenerator::Kind::Bernoulli) {
      covs.push_back({{"type", "bernoulli"}, {"p", c.prob}});
    } else {
      covs.push_back({{"type", "normal"}, {"mean", c.mean}, {"sd", c.sd}});
    }
  }
  j["covariates"] = covs;
  j["replicates"] = s.replicates;
  j["level"] = s.level;
  return j;
}

void write_study_csv(std::ostream& os, const StudyResult& result) {
  os << "model,parameter,truth,mean,sd,cp\n";
  for (const auto& m : result.models) {
    for (const auto& pa : m.parameters) {
      os << to_string(m.structure) << ',' << pa.name << ',' << format_number(pa.truth) << ','
         << format_number(pa.mean) << ',' << format_number(pa.sd) << ','
         << format_number(pa.coverage) << '\n';
    }
  }
}

nlohmann::json study_to_json(const StudyResult& result) {
  nlohmann::json j;
  j["scenario"] = scenario_to_json(result.scenario);
  j["master_seed"] = result.master_seed;
  j["chain"] = {{"iterations", result.chain.iterations},
                {"burn_in", result.chain.burn_in},
                {"thin", result.chain.thin},
                {"adapt", result.chain.adapt},
                {"target_accept", result.chain.target_accept}};
  j["coverage_rule"] = "truth inside the equal-tailed credible interval, endpoints inclusive";
  j["truth_convention"] =
      "coverage is measured against true_beta; the generating marginal response means are "
      "true_beta applied to the covariate expectations";
  nlohmann::json marginal = nlohmann::json::array();
  for (Eigen::Index j2 = 0; j2 < result.scenario.g(); ++j2) {
    double mu = result.scenario.true_beta(0, j2);
    for (Eigen::Index l = 0; l < result.scenario.p(); ++l) {
      mu += result.scenario.true_beta(l + 1, j2) * result.scenario.covariates[l].expectation();
    }
    marginal.push_back(mu);
  }
  j["marginal_response_means"] = marginal;
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : result.models) {
    nlohmann::json mj;
    mj["model"] = to_string(m.structure);
    mj["succeeded"] = m.succeeded;
    mj["failed"] = m.failed;
    mj["eaic"] = m.eaic;
    mj["ebic"] = m.ebic;
    mj["dic"] = m.dic;
    mj["lpml"] = m.lpml;
    nlohmann::json params = nlohmann::json::array();
    for (const auto& pa : m.parameters) {
      params.push_back({{"name", pa.name},
                        {"truth", pa.truth},
                        {"mean", pa.mean},
                        {"sd", pa.sd},
                        {"cp", pa.coverage}});
    }
    mj["parameters"] = params;
    models.push_back(mj);
  }
  j["models"] = models;
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& r : result.replicates) {
    nlohmann::json rj;
    rj["index"] = r.index;
    rj["seed"] = r.seed;
    nlohmann::json dics = nlohmann::json::array();
    for (double d : r.dic) dics.push_back(std::isfinite(d) ? nlohmann::json(d) : nlohmann::json());
    rj["dic"] = dics;
    rj["errors"] = r.errors;
    reps.push_back(rj);
  }
  j["replicates"] = reps;
  if (result.models.size() >= 2) j["correlated_dic_wins"] = correlated_dic_wins(result);
  return j;
}

}  // namespace alrreg

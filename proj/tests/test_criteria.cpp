#include "alrreg/criteria.hpp"
#include "alrreg/errors.hpp"
#include "alrreg/sampler.hpp"
#include "alrreg/simulation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace alrreg;

TEST_CASE("deviance examples") {
  RegressionDataset one(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd(1, 0));
  ParameterState st;
  st.beta = Eigen::MatrixXd::Zero(1, 1);
  st.sigma2 = Eigen::VectorXd::Ones(1);
  CHECK(deviance(one, st, ErrorStructure::Uncorrelated) ==
        doctest::Approx(std::log(2 * std::numbers::pi)).epsilon(1e-14));

  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    auto in = oracle::random_instance(rng, 9, 3, 2, true);
    RegressionDataset data(in.y, in.z);
    CHECK(std::abs(deviance(data, in.state, ErrorStructure::Correlated) +
                   2 * oracle::total_loglik(in.y, in.z, in.state)) < 1e-10);
    auto z = in.state;
    z.rho.setZero();
    auto u = in.state;
    u.rho.resize(0);
    CHECK(deviance(data, z, ErrorStructure::Correlated) ==
          doctest::Approx(deviance(data, u, ErrorStructure::Uncorrelated)).epsilon(1e-12));
  }
}

TEST_CASE("free parameter count") {
  CHECK(free_parameter_count(4, 3, ErrorStructure::Uncorrelated) == 18);
  CHECK(free_parameter_count(4, 3, ErrorStructure::Correlated) == 21);
}

TEST_CASE("criteria agree with a brute-force pass over raw draws") {
  Rng gen(5);
  auto sc = default_scenario(50, true, 1);
  auto gd = generate_dataset(sc, gen);
  ChainConfig cfg;
  cfg.iterations = 3000;
  cfg.burn_in = 500;
  cfg.thin = 5;
  for (auto s : {ErrorStructure::Uncorrelated, ErrorStructure::Correlated}) {
    Rng rng(9);
    const auto chain = run_chain(gd.data, study_priors(2, 3), s, cfg, rng);
    const auto r = compute_criteria(gd.data, chain, study_priors(2, 3));
    const int q = static_cast<int>(free_parameter_count(2, 3, s));
    const auto b = oracle::brute_force(gd.data, chain, q);
    CHECK(r.reference_state == "posterior_mean");
    CHECK(std::abs(r.mean_deviance - b.mean_dev) < 1e-8);
    CHECK(std::abs(r.deviance_at_mean - b.dev_at_mean) < 1e-8);
    CHECK(std::abs(r.dic - b.dic) < 1e-8);
    CHECK(std::abs(r.eaic - b.eaic) < 1e-8);
    CHECK(std::abs(r.ebic - b.ebic) < 1e-8);
    CHECK(std::abs(r.lpml - b.lpml) < 1e-8);
    CHECK(r.p_d == doctest::Approx(r.mean_deviance - r.deviance_at_mean));
    CHECK((r.cpo.array() > 0).all());
  }
}

TEST_CASE("EBIC minus EAIC on 128 observations") {
  Rng gen(6);
  SimScenario sc = default_scenario(128, false, 1);
  sc.true_beta = Eigen::MatrixXd::Constant(5, 3, 0.1);
  sc.covariates.resize(4, sc.covariates[1]);
  auto gd = generate_dataset(sc, gen);
  ChainConfig cfg;
  cfg.iterations = 400;
  cfg.burn_in = 100;
  cfg.thin = 3;
  for (auto s : {ErrorStructure::Uncorrelated, ErrorStructure::Correlated}) {
    Rng rng(1);
    const auto r = compute_criteria(gd.data, run_chain(gd.data, study_priors(4, 3), s, cfg, rng));
    const double q = s == ErrorStructure::Uncorrelated ? 18 : 21;
    CHECK(r.n_params == static_cast<Eigen::Index>(q));
    CHECK(r.ebic - r.eaic == doctest::Approx(q * (std::log(128.0) - 2)).epsilon(1e-12));
  }
}

TEST_CASE("degenerate chains") {
  Rng gen(7);
  auto gd = generate_dataset(default_scenario(20, false, 1), gen);
  auto st = least_squares_state(gd.data, ErrorStructure::Uncorrelated);
  ChainOutput c;
  c.structure = ErrorStructure::Uncorrelated;
  c.p = 2;
  c.g = 3;
  c.draws = flatten(st).transpose().replicate(2, 1);
  const auto r = compute_criteria(gd.data, c);
  const double d = deviance(gd.data, st, ErrorStructure::Uncorrelated);
  CHECK(r.p_d == doctest::Approx(0.0).scale(1.0));
  CHECK(r.dic == doctest::Approx(d).epsilon(1e-12));
  CHECK(r.eaic - 2 * 12 == doctest::Approx(d).epsilon(1e-12));
  // harmonic mean of identical values is that value
  const auto obs = observation_logliks(gd.data, st, ErrorStructure::Uncorrelated);
  for (Eigen::Index i = 0; i < obs.size(); ++i) CHECK(r.log_cpo[i] == doctest::Approx(obs[i]).epsilon(1e-12));

  c.draws = flatten(st).transpose();
  CHECK_THROWS_AS(compute_criteria(gd.data, c), Error);
}

TEST_CASE("LPML is invariant to draw order") {
  Rng gen(9);
  auto gd = generate_dataset(default_scenario(25, false, 1), gen);
  ChainConfig cfg;
  cfg.iterations = 600;
  cfg.burn_in = 100;
  cfg.thin = 5;
  Rng rng(2);
  auto chain = run_chain(gd.data, study_priors(2, 3), ErrorStructure::Uncorrelated, cfg, rng);
  const auto r1 = compute_criteria(gd.data, chain);
  chain.draws = chain.draws.colwise().reverse().eval();
  const auto r2 = compute_criteria(gd.data, chain);
  CHECK(r1.lpml == doctest::Approx(r2.lpml).epsilon(1e-12));
  CHECK(r1.dic == doctest::Approx(r2.dic).epsilon(1e-12));
}

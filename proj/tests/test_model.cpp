#include "alrreg/errors.hpp"
#include "alrreg/model.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace alrreg;

namespace {

ParameterState state1(double b0, double b1, double s2) {
  ParameterState st;
  st.beta.resize(2, 1);
  st.beta << b0, b1;
  st.sigma2 = Eigen::VectorXd::Constant(1, s2);
  return st;
}

}  // namespace

TEST_CASE("residuals") {
  RegressionDataset zero(Eigen::MatrixXd::Zero(4, 2), Eigen::MatrixXd::Ones(4, 3));
  auto st = ParameterState::zeros(3, 2, ErrorStructure::Uncorrelated);
  CHECK(residuals(zero, st).isZero());

  Eigen::MatrixXd y(1, 1), z(1, 1);
  y << 2;
  z << 3;
  RegressionDataset one(y, z);
  CHECK(residuals(one, state1(0.5, 0.25, 1.0))(0, 0) == doctest::Approx(0.75).epsilon(1e-15));

  auto wrong = ParameterState::zeros(2, 1, ErrorStructure::Uncorrelated);
  CHECK_THROWS_AS(residuals(one, wrong), Error);
}

TEST_CASE("residuals match elementwise recomputation on the bundled data shape") {
  std::mt19937_64 rng(11);
  auto in = oracle::random_instance(rng, 128, 3, 4, false);
  RegressionDataset data(in.y, in.z);
  const auto e = residuals(data, in.state);
  for (int i = 0; i < 128; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(e(i, j) - oracle::residual(in.y, in.z, in.state.beta, i, j)) < 1e-12);
}

TEST_CASE("residuals are linear in y and beta") {
  std::mt19937_64 rng(3);
  auto a = oracle::random_instance(rng, 10, 2, 2, false);
  auto b = oracle::random_instance(rng, 10, 2, 2, false);
  RegressionDataset da(a.y, a.z), db(b.y, a.z), dab(2.0 * a.y + b.y, a.z);
  ParameterState s = a.state;
  s.beta = 2.0 * a.state.beta + b.state.beta;
  const Eigen::MatrixXd lhs = residuals(dab, s);
  const Eigen::MatrixXd rhs = 2.0 * residuals(da, a.state) + residuals(db, b.state);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("uncorrelated log-likelihood examples") {
  Eigen::MatrixXd y(1, 1), z(1, 0);
  y << 0;
  RegressionDataset one(y, z);
  ParameterState st;
  st.beta = Eigen::MatrixXd::Zero(1, 1);
  st.sigma2 = Eigen::VectorXd::Ones(1);
  CHECK(loglik_uncorrelated(one, st) == doctest::Approx(-0.9189385332046727).epsilon(1e-14));

  Eigen::MatrixXd y2(2, 1), z2(2, 0);
  y2 << 1, -1;
  RegressionDataset two(y2, z2);
  st.sigma2[0] = 2.0;
  const double expect = -std::log(4 * std::numbers::pi) - 0.5;
  CHECK(loglik_uncorrelated(two, st) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(-3.0310242).epsilon(1e-7));

  st.sigma2[0] = 0.0;
  try {
    loglik_uncorrelated(two, st);
    FAIL("expected NonPositiveVariance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveVariance);
  }
}

TEST_CASE("correlated log-likelihood examples") {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(1, 2), z(1, 0);
  RegressionDataset data(y, z);
  auto st = ParameterState::zeros(0, 2, ErrorStructure::Correlated);
  st.sigma2.setOnes();
  st.rho[0] = 0.5;
  const double expect = -std::log(2 * std::numbers::pi) - 0.5 * std::log(0.75);
  CHECK(loglik_correlated(data, st) == doctest::Approx(expect).epsilon(1e-14));
  // bivariate normal at the origin: 1 / (2 pi sqrt(1 - rho^2))
  CHECK(std::exp(loglik_correlated(data, st)) ==
        doctest::Approx(1.0 / (2 * std::numbers::pi * std::sqrt(0.75))).epsilon(1e-14));

  auto bad = ParameterState::zeros(0, 3, ErrorStructure::Correlated);
  bad.sigma2.setOnes();
  bad.rho << 0.9, -0.9, 0.9;
  RegressionDataset d3(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd(2, 0));
  try {
    loglik_correlated(d3, bad);
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
  }
}

TEST_CASE("correlated with zero rho equals uncorrelated, and matches cofactor oracle") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    auto in = oracle::random_instance(rng, 12, 3, 2, true);
    RegressionDataset data(in.y, in.z);
    ParameterState zero_rho = in.state;
    zero_rho.rho.setZero();
    ParameterState unc = in.state;
    unc.rho.resize(0);
    CHECK(std::abs(loglik_correlated(data, zero_rho) - loglik_uncorrelated(data, unc)) < 1e-10);
    CHECK(std::abs(loglik_correlated(data, in.state) -
                   oracle::total_loglik(in.y, in.z, in.state)) < 1e-10);
  }
}

TEST_CASE("correlated log-likelihood is invariant under response permutation") {
  std::mt19937_64 rng(9);
  auto in = oracle::random_instance(rng, 15, 3, 1, true);
  RegressionDataset data(in.y, in.z);
  // swap responses 0 and 2: rho_01 <-> rho_12, rho_02 fixed
  Eigen::MatrixXd yp = in.y;
  yp.col(0).swap(yp.col(2));
  ParameterState sp = in.state;
  sp.beta.col(0).swap(sp.beta.col(2));
  std::swap(sp.sigma2[0], sp.sigma2[2]);
  sp.rho[rho_index(0, 1, 3)] = in.state.rho[rho_index(1, 2, 3)];
  sp.rho[rho_index(1, 2, 3)] = in.state.rho[rho_index(0, 1, 3)];
  RegressionDataset dp(yp, in.z);
  CHECK(loglik_correlated(dp, sp) == doctest::Approx(loglik_correlated(data, in.state)).epsilon(1e-12));
}

TEST_CASE("log prior examples") {
  const Eigen::Index p = 2, g = 3;
  PriorSpec pr = PriorSpec::constant(p, g, 0.3, 1.0, 0.1, 100.0);
  ParameterState st;
  st.beta = Eigen::MatrixXd::Constant(p + 1, g, 0.3);
  const double normal_part = -((p + 1) * g / 2.0) * std::log(2 * std::numbers::pi);
  st.sigma2 = Eigen::VectorXd::Ones(g);
  const double ig1 = 0.1 * std::log(100.0) - std::lgamma(0.1) - 100.0;
  CHECK(inverse_gamma_logpdf(1.0, 0.1, 100.0) == doctest::Approx(ig1).epsilon(1e-14));
  CHECK(logprior(st, pr) == doctest::Approx(normal_part + g * ig1).epsilon(1e-13));

  st.rho = Eigen::VectorXd::Zero(3);
  CHECK(logprior(st, pr) == doctest::Approx(normal_part + g * ig1 + 3 * std::log(0.5)).epsilon(1e-13));
  st.rho << 0.9, -0.9, 0.9;
  CHECK(logprior(st, pr) == -INFINITY);
  st.rho << 0.0, 0.0, 1.0;
  CHECK(logprior(st, pr) == -INFINITY);
}

TEST_CASE("log posterior decomposition and support") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const bool corr = t % 2 == 1;
    const auto s = corr ? ErrorStructure::Correlated : ErrorStructure::Uncorrelated;
    auto in = oracle::random_instance(rng, 8, 3, 2, corr);
    RegressionDataset data(in.y, in.z);
    PriorSpec pr = PriorSpec::constant(2, 3, 0.1, 4.0, 2.0, 1.5);
    const double lp = log_posterior_unnorm(data, in.state, pr, s);
    CHECK(lp == doctest::Approx(loglik(data, in.state, s) + logprior(in.state, pr)).epsilon(1e-12));
    auto bad = in.state;
    bad.sigma2[1] = -0.5;
    CHECK(log_posterior_unnorm(data, bad, pr, s) == -INFINITY);
  }
  std::mt19937_64 rng2(1);
  auto in = oracle::random_instance(rng2, 8, 3, 2, false);
  RegressionDataset data(in.y, in.z);
  auto wrong = ParameterState::zeros(1, 3, ErrorStructure::Uncorrelated);
  PriorSpec pr = PriorSpec::constant(1, 3, 0, 1, 1, 1);
  CHECK_THROWS_AS(log_posterior_unnorm(data, wrong, pr, ErrorStructure::Uncorrelated), Error);
}

TEST_CASE("beta01 slice of the log posterior normalizes to the closed-form conditional") {
  std::mt19937_64 rng(4);
  auto in = oracle::random_instance(rng, 5, 3, 2, false);
  RegressionDataset data(in.y, in.z);
  PriorSpec pr = PriorSpec::constant(2, 3, 0.2, 2.0, 1.0, 1.0);
  auto slice = [&](double b) {
    auto st = in.state;
    st.beta(0, 0) = b;
    return log_posterior_unnorm(data, st, pr, ErrorStructure::Uncorrelated);
  };
  // closed form by conjugacy, computed with loops
  double mu_sum = 0;
  for (int i = 0; i < 5; ++i) {
    double mu = in.y(i, 0);
    for (int l = 0; l < 2; ++l) mu -= in.state.beta(l + 1, 0) * in.z(i, l);
    mu_sum += mu;
  }
  const double s2 = in.state.sigma2[0];
  const double prec = 1.0 / 2.0 + 5.0 / s2;
  const double mean = (0.2 / 2.0 + mu_sum / s2) / prec;
  const double sd = std::sqrt(1.0 / prec);
  const auto m = oracle::grid_moments(slice, mean - 14 * sd, mean + 14 * sd);
  CHECK(std::abs(m.mean - mean) <= 1e-6 * std::max(1.0, std::abs(mean)));
  CHECK(std::abs(m.var - 1.0 / prec) <= 1e-6 / prec);
}

TEST_CASE("flatten, unflatten and parameter names") {
  std::mt19937_64 rng(2);
  auto in = oracle::random_instance(rng, 4, 3, 4, true);
  const auto v = flatten(in.state);
  CHECK(v.size() == parameter_count(4, 3, ErrorStructure::Correlated));
  CHECK(v.size() == 21);
  auto back = unflatten(v, 4, 3, ErrorStructure::Correlated);
  CHECK(back.beta == in.state.beta);
  CHECK(back.sigma2 == in.state.sigma2);
  CHECK(back.rho == in.state.rho);
  auto names = parameter_names(4, 3, ErrorStructure::Correlated);
  CHECK(names.front() == "beta_0_1");
  CHECK(names[3] == "beta_1_1");
  CHECK(names[15] == "sigma2_1");
  CHECK(names[18] == "rho_1_2");
  CHECK(names[20] == "rho_2_3");
  CHECK(parameter_names(2, 3, ErrorStructure::Uncorrelated).size() == 12);
}

TEST_CASE("dataset validation") {
  Eigen::MatrixXd y(3, 2), z(3, 1);
  y << 1, 2, 3, 4, 5, NAN;
  z << 1, 2, 3;
  CHECK_THROWS_AS(RegressionDataset(y, z), Error);
  CHECK_THROWS_AS(RegressionDataset(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(2, 1)), Error);
  RegressionDataset small(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 1));
  CHECK_THROWS_AS(small.require_identifiable(), Error);
}

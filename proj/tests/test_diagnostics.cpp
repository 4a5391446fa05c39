#include "alrreg/diagnostics.hpp"
#include "alrreg/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace alrreg;

TEST_CASE("PSRF of identical alternating chains") {
  const std::size_t m = 1000;
  std::vector<double> a(m);
  for (std::size_t i = 0; i < m; ++i) a[i] = static_cast<double>(i % 2);
  std::vector<std::vector<double>> chains = {a, a};
  CHECK(gelman_rubin(chains) == doctest::Approx(std::sqrt((m - 1.0) / m)).epsilon(1e-12));
}

TEST_CASE("PSRF errors") {
  std::vector<std::vector<double>> flat = {{0, 0, 0, 0}, {0, 0, 0, 0}};
  try {
    gelman_rubin(flat);
    FAIL("expected DegenerateChains");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateChains);
  }
  std::vector<std::vector<double>> one = {{1, 2, 3}};
  try {
    gelman_rubin(one);
    FAIL("expected TooFewChains");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewChains);
  }
}

TEST_CASE("PSRF of independent normal chains is close to 1") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(3.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> chains(3, std::vector<double>(10000));
    for (auto& c : chains)
      for (auto& x : c) x = nd(rng);
    const double r = gelman_rubin(chains);
    CHECK(r >= 0.99);
    CHECK(r <= 1.01);
  }
}

TEST_CASE("PSRF detects separated chains and is affine invariant") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<std::vector<double>> chains(2, std::vector<double>(500));
  for (auto& x : chains[0]) x = nd(rng);
  for (auto& x : chains[1]) x = nd(rng) + 3.0;
  const double r = gelman_rubin(chains);
  CHECK(r > 1.5);
  auto scaled = chains;
  for (auto& c : scaled)
    for (auto& x : c) x = 2.5 * x - 7.0;
  CHECK(gelman_rubin(scaled) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("summarize examples") {
  const std::vector<double> ones = {1, 1, 1, 1};
  auto s = summarize(ones);
  CHECK(s.mean == 1.0);
  CHECK(s.sd == 0.0);
  CHECK(s.lower == 1.0);
  CHECK(s.upper == 1.0);

  std::vector<double> seq(100);
  std::iota(seq.begin(), seq.end(), 1.0);
  s = summarize(seq, 0.90);
  // type-7: h = (m-1)p + 1 -> 99*0.05 + 1 = 5.95
  CHECK(s.lower == doctest::Approx(5.95).epsilon(1e-14));
  CHECK(s.upper == doctest::Approx(95.05).epsilon(1e-14));
  CHECK(quantile(seq, 0.5) == doctest::Approx(50.5));
  CHECK(quantile(seq, 0.0) == 1.0);
  CHECK(quantile(seq, 1.0) == 100.0);

  const std::vector<double> empty;
  try {
    summarize(empty);
    FAIL("expected EmptyDraws");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDraws);
  }
}

TEST_CASE("summarize on standard normal draws") {
  std::mt19937_64 rng(123);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> x(100000);
  for (auto& v : x) v = nd(rng);
  const auto s = summarize(x);
  CHECK(std::abs(s.mean) < 0.02);
  CHECK(std::abs(s.sd - 1.0) < 0.02);
  CHECK(s.lower == doctest::Approx(-1.6449).epsilon(0.03));
  CHECK(s.ess <= 100000.0);
  CHECK(s.ess / 100000.0 > 0.9);
}

TEST_CASE("summarize is affine equivariant") {
  std::mt19937_64 rng(5);
  std::gamma_distribution<double> gd(2.0, 1.0);
  std::vector<double> x(2000), y(2000);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 3.0 * (x[i] = gd(rng)) + 1.5;
  const auto a = summarize(x, 0.8), b = summarize(y, 0.8);
  CHECK(b.mean == doctest::Approx(3.0 * a.mean + 1.5).epsilon(1e-12));
  CHECK(b.sd == doctest::Approx(3.0 * a.sd).epsilon(1e-12));
  CHECK(b.lower == doctest::Approx(3.0 * a.lower + 1.5).epsilon(1e-12));
  CHECK(b.upper == doctest::Approx(3.0 * a.upper + 1.5).epsilon(1e-12));
  CHECK(b.ess == doctest::Approx(a.ess).epsilon(1e-9));
}

TEST_CASE("ESS reflects autocorrelation") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0.0, 1.0);
  const double phi = 0.9;
  std::vector<double> ar(50000);
  double v = 0;
  for (auto& x : ar) x = v = phi * v + nd(rng);
  // AR(1) theory: m (1 - phi) / (1 + phi)
  const double expect = 50000 * (1 - phi) / (1 + phi);
  const double ess = effective_sample_size(ar);
  CHECK(ess > 0.8 * expect);
  CHECK(ess < 1.2 * expect);
}

TEST_CASE("summarize_chains pools draws and reports PSRF") {
  ChainOutput a, b;
  a.draws.resize(4, 1);
  b.draws.resize(4, 1);
  a.draws << 1, 2, 3, 4;
  b.draws << 2, 3, 4, 5;
  a.parameter_names = b.parameter_names = {"x"};
  const auto s = summarize_chains({a, b});
  REQUIRE(s.size() == 1);
  CHECK(s[0].name == "x");
  CHECK(s[0].mean == doctest::Approx(3.0));
  CHECK(std::isfinite(s[0].psrf));
  CHECK(std::isnan(summarize_chains({a})[0].psrf));
  CHECK(pool_chains({a, b}).draws.rows() == 8);
}

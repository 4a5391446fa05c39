#include "alrreg/diagnostics.hpp"

#include "alrreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace alrreg {

namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x, double mean) {
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

double gelman_rubin(std::span<const std::vector<double>> chains) {
  if (chains.size() < 2) {
    throw Error(ErrorCode::TooFewChains, "Gelman-Rubin needs at least 2 chains");
  }
  const std::size_t m = chains.front().size();
  if (m < 2) throw Error(ErrorCode::TooFewChains, "each chain needs at least 2 draws");
  for (const auto& c : chains) {
    if (c.size() != m) throw Error(ErrorCode::DimensionMismatch, "chains differ in length");
  }
  const double k = static_cast<double>(chains.size());
  const double md = static_cast<double>(m);
  std::vector<double> means(chains.size());
  double w = 0.0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    means[c] = mean_of(chains[c]);
    w += variance_of(chains[c], means[c]);
  }
  w /= k;
  if (!(w > 0.0)) throw Error(ErrorCode::DegenerateChains, "within-chain variance is zero");
  const double grand = mean_of(means);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= md / (k - 1.0);
  const double v = (md - 1.0) / md * w + b / md;
  return std::sqrt(v / w);
}

double quantile(std::span<const double> draws, double prob) {
  if (draws.empty()) throw Error(ErrorCode::EmptyDraws, "quantile of no draws");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * prob;  // zero-based
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double effective_sample_size(std::span<const double> draws) {
  const std::size_t m = draws.size();
  if (m < 2) return static_cast<double>(m);
  const double mu = mean_of(draws);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < m; ++i) s += (draws[i] - mu) * (draws[i + lag] - mu);
    return s / static_cast<double>(m);
  };
  const double gamma0 = autocov(0);
  if (!(gamma0 > 0.0)) return static_cast<double>(m);
  // tau = -1 + 2 sum_k (rho_2k + rho_2k+1), truncated at the first
  // non-positive pair
  double pair_sum = 0.0;
  for (std::size_t k = 0; 2 * k + 1 < m; ++k) {
    const double pair = (autocov(2 * k) + autocov(2 * k + 1)) / gamma0;
    if (!(pair > 0.0)) break;
    pair_sum += pair;
  }
  const double tau = std::max(-1.0 + 2.0 * pair_sum, 1.0 / static_cast<double>(m));
  return std::min(static_cast<double>(m) / tau, static_cast<double>(m));
}

PosteriorSummary summarize(std::span<const double> draws, double level, std::string name) {
  if (draws.size() < 2) throw Error(ErrorCode::EmptyDraws, "summary needs at least 2 draws");
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "credible level must lie in (0, 1)");
  }
  PosteriorSummary s;
  s.name = std::move(name);
  s.mean = mean_of(draws);
  s.sd = std::sqrt(variance_of(draws, s.mean));
  const double tail = (1.0 - level) / 2.0;
  s.lower = quantile(draws, tail);
  s.upper = quantile(draws, 1.0 - tail);
  s.ess = effective_sample_size(draws);
  return s;
}

std::vector<double> column(const ChainOutput& chain, Eigen::Index col) {
  std::vector<double> out(static_cast<std::size_t>(chain.draws.rows()));
  for (Eigen::Index r = 0; r < chain.draws.rows(); ++r) out[r] = chain.draws(r, col);
  return out;
}

ChainOutput pool_chains(const std::vector<ChainOutput>& chains) {
  if (chains.empty()) throw Error(ErrorCode::EmptyDraws, "no chains to pool");
  ChainOutput pooled = chains.front();
  Eigen::Index rows = 0;
  for (const auto& c : chains) rows += c.draws.rows();
  pooled.draws.resize(rows, chains.front().draws.cols());
  Eigen::Index at = 0;
  for (const auto& c : chains) {
    if (c.draws.cols() != pooled.draws.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "chains have different parameter sets");
    }
    pooled.draws.middleRows(at, c.draws.rows()) = c.draws;
    at += c.draws.rows();
  }
  return pooled;
}

std::vector<PosteriorSummary> summarize_chains(const std::vector<ChainOutput>& chains,
                                               double level) {
  const ChainOutput pooled = pool_chains(chains);
  std::vector<PosteriorSummary> out;
  out.reserve(pooled.draws.cols());
  for (Eigen::Index col = 0; col < pooled.draws.cols(); ++col) {
    const std::vector<double> all = column(pooled, col);
    PosteriorSummary s = summarize(all, level, pooled.parameter_names[col]);
    std::vector<std::vector<double>> per_chain;
    per_chain.reserve(chains.size());
    double ess = 0.0;
    for (const auto& c : chains) {
      per_chain.push_back(column(c, col));
      ess += effective_sample_size(per_chain.back());
    }
    s.ess = ess;
    if (chains.size() >= 2) s.psrf = gelman_rubin(per_chain);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace alrreg

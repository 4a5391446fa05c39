#pragma once

#include "alrreg/sampler.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace alrreg {

struct PosteriorSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double ess = 0.0;
  double psrf = std::numeric_limits<double>::quiet_NaN();  // NaN for a single chain
};

/// Classic Gelman-Rubin potential scale reduction for one parameter:
/// W = mean within-chain variance, B = m * variance of chain means,
/// V = (m-1)/m W + B/m, PSRF = sqrt(V / W). Chains must share length m >= 2.
/// Throws Error(TooFewChains) for fewer than 2 chains, Error(DegenerateChains)
/// when W = 0.
double gelman_rubin(std::span<const std::vector<double>> chains);

/// Sample quantile with linear interpolation between order statistics at
/// h = (m-1) prob + 1 (1-based). Sorts a copy.
double quantile(std::span<const double> draws, double prob);

/// Effective sample size from the initial positive sequence of paired
/// autocorrelations; capped at the draw count. Constant draws give m.
double effective_sample_size(std::span<const double> draws);

/// Mean, SD (denominator m-1), equal-tailed interval at `level` and ESS.
/// Throws Error(EmptyDraws) with fewer than 2 draws.
PosteriorSummary summarize(std::span<const double> draws, double level = 0.90,
                           std::string name = {});

/// Pools every chain's draws of each parameter for mean/SD/interval, sums
/// per-chain ESS, and adds PSRF when there are at least 2 chains.
std::vector<PosteriorSummary> summarize_chains(const std::vector<ChainOutput>& chains,
                                               double level = 0.90);

/// Column `col` of one chain as a vector.
std::vector<double> column(const ChainOutput& chain, Eigen::Index col);

/// Concatenation of several chains' kept draws (rows appended in chain order).
ChainOutput pool_chains(const std::vector<ChainOutput>& chains);

}  // namespace alrreg

#pragma once

// MCMC for the ALR regression model.
//
// Uncorrelated errors: exact Gibbs sampling from the conjugate full
// conditionals (Normal for each coefficient, Inverse-Gamma for each variance).
// Correlated errors: single-site random-walk Metropolis within Gibbs, with
// Robbins-Monro scale adaptation during burn-in only.

#include "alrreg/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace alrreg {

using Rng = std::mt19937_64;

struct NormalParams {
  double mean;
  double var;
};

struct InverseGammaParams {
  double shape;
  double scale;
};

/// Full conditional of beta_{row,j} for the uncorrelated model. row 0 is the
/// intercept; rows 1..p are slopes. Partial residuals remove every other
/// coefficient of column j.
NormalParams coefficient_conditional(Eigen::Index row, Eigen::Index j,
                                     const RegressionDataset& data, const ParameterState& state,
                                     const PriorSpec& priors);

/// Full conditional of sigma2_j: IG(c_j + n/2, d_j + SSE_j / 2).
InverseGammaParams variance_conditional(Eigen::Index j, const RegressionDataset& data,
                                        const ParameterState& state, const PriorSpec& priors);

double gibbs_update_beta0(Eigen::Index j, const RegressionDataset& data,
                          const ParameterState& state, const PriorSpec& priors, Rng& rng);

/// l in 1..p.
double gibbs_update_beta_l(Eigen::Index l, Eigen::Index j, const RegressionDataset& data,
                           const ParameterState& state, const PriorSpec& priors, Rng& rng);

double gibbs_update_sigma2(Eigen::Index j, const RegressionDataset& data,
                           const ParameterState& state, const PriorSpec& priors, Rng& rng);

double draw_inverse_gamma(const InverseGammaParams& ig, Rng& rng);

/// One systematic Gibbs sweep, column by column: beta_0j, beta_1j..beta_pj,
/// then sigma2_j.
void gibbs_sweep(const RegressionDataset& data, ParameterState& state, const PriorSpec& priors,
                 Rng& rng);

/// Number of scalar Metropolis blocks: every beta entry, every variance,
/// every correlation, in the flattened parameter order.
Eigen::Index mwg_block_count(Eigen::Index p, Eigen::Index g);

struct MwgStepResult {
  ParameterState state;
  std::vector<bool> accepted;  // one flag per block
};

/// One sweep of random-walk Metropolis updates over all blocks. beta entries
/// move on their natural scale, variances on the log scale (with Jacobian),
/// correlations on their natural scale with proposals outside the positive
/// definite region rejected. Throws Error(InvalidState) if the incoming state
/// is outside the support.
MwgStepResult mwg_step(const RegressionDataset& data, const ParameterState& state,
                       const PriorSpec& priors, const Eigen::VectorXd& scales, Rng& rng);

/// Robbins-Monro step on log scales: log s += step^-0.6 * (rate - target).
Eigen::VectorXd adapt_scales(const Eigen::VectorXd& acceptance_rates,
                             const Eigen::VectorXd& scales, std::size_t step,
                             double target_accept);

struct ChainConfig {
  std::size_t iterations = 100000;
  std::size_t burn_in = 10000;
  std::size_t thin = 20;
  std::uint64_t seed = 1;
  std::size_t n_chains = 1;
  Eigen::VectorXd proposal_scales;  // empty: derived from the initial fit
  bool adapt = true;
  double target_accept = 0.44;
  std::size_t adapt_batch = 50;
  double init_jitter_sd = 0.5;

  /// Throws Error(InvalidConfig).
  void validate() const;
  std::size_t kept_draws() const { return (iterations - burn_in) / thin; }
};

struct ChainOutput {
  Eigen::MatrixXd draws;  // kept iterations x flattened parameters
  std::vector<std::string> parameter_names;
  ErrorStructure structure = ErrorStructure::Uncorrelated;
  Eigen::Index p = 0;
  Eigen::Index g = 0;
  Eigen::VectorXd acceptance;    // per MWG block over kept sweeps; empty for Gibbs
  Eigen::VectorXd final_scales;  // empty for Gibbs
  std::uint64_t seed_used = 0;

  ParameterState state(Eigen::Index row) const;
};

/// Least-squares coefficients per response column, residual variances with
/// denominator n - p - 1, and zero correlations.
ParameterState least_squares_state(const RegressionDataset& data, ErrorStructure s);

/// Perturbs beta by N(0, sd^2), log sigma2 by N(0, sd^2) and correlations by
/// N(0, sd^2) redrawn until the result is positive definite.
ParameterState jitter_state(const ParameterState& state, double sd, Rng& rng);

/// Default MWG proposal scales around a least-squares fit.
Eigen::VectorXd default_proposal_scales(const RegressionDataset& data,
                                        const ParameterState& init);

ChainOutput run_chain(const RegressionDataset& data, const PriorSpec& priors, ErrorStructure s,
                      const ChainConfig& config, Rng& rng,
                      std::optional<ParameterState> init = std::nullopt);

/// Runs config.n_chains chains with seeds seed, seed+1, ... from jittered
/// least-squares starting points. Chains run on separate threads.
std::vector<ChainOutput> run_chains(const RegressionDataset& data, const PriorSpec& priors,
                                    ErrorStructure s, const ChainConfig& config);

}  // namespace alrreg

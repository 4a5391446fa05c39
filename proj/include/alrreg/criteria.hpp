#pragma once

// Deviance-based model comparison from posterior draws.
//
//   D(theta)  = -2 log L(theta)            (Gaussian constants included)
//   Dbar      = mean of D over draws
//   p_D       = Dbar - D(theta_bar),        theta_bar = componentwise mean
//   DIC       = Dbar + p_D
//   EAIC      = Dbar + 2 q
//   EBIC      = Dbar + q log n
//   CPO_i     = [ (1/M) sum_m 1 / f(y_i | theta_m) ]^-1
//   LPML      = sum_i log CPO_i
//
// q counts free parameters: g(p+2) without correlations, plus g(g-1)/2 with.

#include "alrreg/model.hpp"
#include "alrreg/sampler.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace alrreg {

struct CriteriaReport {
  double eaic = 0.0;
  double ebic = 0.0;
  double dic = 0.0;
  double lpml = 0.0;
  Eigen::VectorXd cpo;
  Eigen::VectorXd log_cpo;
  double mean_deviance = 0.0;
  double deviance_at_mean = 0.0;
  double p_d = 0.0;
  Eigen::Index n_params = 0;
  /// "posterior_mean", or "max_posterior_draw" when the averaged state left
  /// the support and the fallback was used.
  std::string reference_state = "posterior_mean";
};

double deviance(const RegressionDataset& data, const ParameterState& state, ErrorStructure s);

Eigen::Index free_parameter_count(Eigen::Index p, Eigen::Index g, ErrorStructure s);

/// Requires at least 2 kept draws (Error(EmptyDraws) otherwise). If the
/// componentwise posterior mean is outside the support, D is evaluated at the
/// draw with the highest unnormalized posterior (requires `priors`; without
/// them the highest-likelihood draw is used).
CriteriaReport compute_criteria(const RegressionDataset& data, const ChainOutput& chain,
                                const std::optional<PriorSpec>& priors = std::nullopt);

}  // namespace alrreg

#include "alrreg/criteria.hpp"

#include "alrreg/errors.hpp"

#include <cmath>
#include <limits>

namespace alrreg {

double deviance(const RegressionDataset& data, const ParameterState& state, ErrorStructure s) {
  return -2.0 * loglik(data, state, s);
}

Eigen::Index free_parameter_count(Eigen::Index p, Eigen::Index g, ErrorStructure s) {
  return g * (p + 2) + (s == ErrorStructure::Correlated ? rho_count(g) : 0);
}

CriteriaReport compute_criteria(const RegressionDataset& data, const ChainOutput& chain,
                                const std::optional<PriorSpec>& priors) {
  const Eigen::Index m = chain.draws.rows();
  if (m < 2) throw Error(ErrorCode::EmptyDraws, "criteria need at least 2 kept draws");
  if (chain.p != data.p() || chain.g != data.g()) {
    throw Error(ErrorCode::DimensionMismatch, "chain does not match the dataset");
  }
  const ErrorStructure s = chain.structure;
  const Eigen::Index n = data.n();

  CriteriaReport r;
  r.n_params = free_parameter_count(data.p(), data.g(), s);

  // neg_ll(i, d) = -log f(y_i | theta_d)
  Eigen::MatrixXd neg_ll(n, m);
  double deviance_sum = 0.0;
  for (Eigen::Index d = 0; d < m; ++d) {
    const Eigen::VectorXd ll = observation_logliks(data, chain.state(d), s);
    neg_ll.col(d) = -ll;
    deviance_sum += -2.0 * ll.sum();
  }
  r.mean_deviance = deviance_sum / static_cast<double>(m);

  const Eigen::VectorXd mean_flat = chain.draws.colwise().mean().transpose();
  const ParameterState mean_state = unflatten(mean_flat, data.p(), data.g(), s);
  if (in_support(mean_state, s)) {
    r.deviance_at_mean = deviance(data, mean_state, s);
  } else {
    double best = -std::numeric_limits<double>::infinity();
    Eigen::Index best_row = 0;
    for (Eigen::Index d = 0; d < m; ++d) {
      const ParameterState st = chain.state(d);
      const double score = priors ? log_posterior_unnorm(data, st, *priors, s) : loglik(data, st, s);
      if (score > best) {
        best = score;
        best_row = d;
      }
    }
    r.deviance_at_mean = deviance(data, chain.state(best_row), s);
    r.reference_state = priors ? "max_posterior_draw" : "max_likelihood_draw";
  }

  r.p_d = r.mean_deviance - r.deviance_at_mean;
  r.dic = r.mean_deviance + r.p_d;
  const double q = static_cast<double>(r.n_params);
  r.eaic = r.mean_deviance + 2.0 * q;
  r.ebic = r.mean_deviance + q * std::log(static_cast<double>(n));

  // log CPO_i = log M - logsumexp_d(-log f_id), max-shifted
  r.log_cpo.resize(n);
  const double log_m = std::log(static_cast<double>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double top = neg_ll.row(i).maxCoeff();
    const double lse = top + std::log((neg_ll.row(i).array() - top).exp().sum());
    r.log_cpo[i] = log_m - lse;
  }
  r.cpo = r.log_cpo.array().exp();
  r.lpml = r.log_cpo.sum();
  return r;
}

}  // namespace alrreg

#include "alrreg/sampler.hpp"

#include "alrreg/errors.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

namespace alrreg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

double log_uniform(Rng& rng) {
  // (0, 1]: avoids log(0)
  return std::log(1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng));
}

void require_prior_shape(const RegressionDataset& data, const PriorSpec& priors) {
  if (priors.a.rows() != data.p() + 1 || priors.a.cols() != data.g()) {
    throw Error(ErrorCode::DimensionMismatch, "prior shape does not match the dataset");
  }
}

double column_sse(const RegressionDataset& data, const Eigen::MatrixXd& beta, Eigen::Index j) {
  const auto b = beta.col(j);
  const double sse = data.yty()(j, j) - 2.0 * b.dot(data.xty().col(j)) +
                     b.dot(data.xtx() * b);
  return std::max(sse, 0.0);
}

// Working set for one MWG sweep: residual cross-product E'E and X'E, both
// updated in O(p + g) per accepted coefficient move.
class CorrelatedKernel {
 public:
  CorrelatedKernel(const RegressionDataset& data, const PriorSpec& priors, ParameterState state)
      : data_(data), priors_(priors), state_(std::move(state)) {
    gram_ = residual_gram(data_, state_.beta);
    xte_ = data_.xty() - data_.xtx() * state_.beta;
    loglik_ = loglik_from_gram(data_.n(), gram_, state_.sigma2, state_.rho);
  }

  MwgStepResult sweep(const Eigen::VectorXd& scales, Rng& rng) {
    const Eigen::Index g = data_.g();
    const Eigen::Index rows = data_.p() + 1;
    std::vector<bool> accepted(static_cast<std::size_t>(scales.size()), false);
    Eigen::Index block = 0;

    refresh_covariance();
    for (Eigen::Index l = 0; l < rows; ++l) {
      for (Eigen::Index j = 0; j < g; ++j, ++block) {
        accepted[block] = update_coefficient(l, j, scales[block], rng);
      }
    }
    for (Eigen::Index j = 0; j < g; ++j, ++block) {
      accepted[block] = update_variance(j, scales[block], rng);
    }
    for (Eigen::Index k = 0; k < state_.rho.size(); ++k, ++block) {
      accepted[block] = update_correlation(k, scales[block], rng);
    }
    return {std::move(state_), std::move(accepted)};
  }

 private:
  void refresh_covariance() {
    const Eigen::VectorXd sd = state_.sigma2.cwiseSqrt();
    const Eigen::MatrixXd cov =
        sd.asDiagonal() * correlation_matrix(state_.rho, data_.g()) * sd.asDiagonal();
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    precision_ = llt.solve(Eigen::MatrixXd::Identity(data_.g(), data_.g()));
    const Eigen::MatrixXd l = llt.matrixL();
    loglik_const_ = -0.5 * static_cast<double>(data_.n()) *
                    (static_cast<double>(data_.g()) * std::log(2.0 * std::numbers::pi) +
                     2.0 * l.diagonal().array().log().sum());
  }

  bool update_coefficient(Eigen::Index l, Eigen::Index j, double scale, Rng& rng) {
    const double delta = scale * standard_normal(rng);
    const double old_value = state_.beta(l, j);
    const double new_value = old_value + delta;

    Eigen::MatrixXd proposal = gram_;
    for (Eigen::Index k = 0; k < data_.g(); ++k) {
      if (k == j) continue;
      proposal(j, k) -= delta * xte_(l, k);
      proposal(k, j) = proposal(j, k);
    }
    proposal(j, j) += -2.0 * delta * xte_(l, j) + delta * delta * data_.xtx()(l, l);

    const double new_loglik = loglik_const_ - 0.5 * precision_.cwiseProduct(proposal).sum();
    const double log_ratio = new_loglik - loglik_ +
                             normal_logpdf(new_value, priors_.a(l, j), priors_.b2(l, j)) -
                             normal_logpdf(old_value, priors_.a(l, j), priors_.b2(l, j));
    if (!(log_uniform(rng) < log_ratio)) return false;
    state_.beta(l, j) = new_value;
    gram_ = proposal;
    xte_.col(j) -= delta * data_.xtx().col(l);
    loglik_ = new_loglik;
    return true;
  }

  bool update_variance(Eigen::Index j, double scale, Rng& rng) {
    const double old_value = state_.sigma2[j];
    const double new_value = old_value * std::exp(scale * standard_normal(rng));
    Eigen::VectorXd sigma2 = state_.sigma2;
    sigma2[j] = new_value;
    const double new_loglik = loglik_from_gram(data_.n(), gram_, sigma2, state_.rho);
    if (new_loglik == kNegInf) return false;
    // log-scale random walk: Jacobian d sigma2 / d log sigma2 = sigma2
    const double log_ratio = new_loglik - loglik_ +
                             inverse_gamma_logpdf(new_value, priors_.c[j], priors_.d[j]) -
                             inverse_gamma_logpdf(old_value, priors_.c[j], priors_.d[j]) +
                             std::log(new_value) - std::log(old_value);
    if (!(log_uniform(rng) < log_ratio)) return false;
    state_.sigma2[j] = new_value;
    loglik_ = new_loglik;
    return true;
  }

  bool update_correlation(Eigen::Index k, double scale, Rng& rng) {
    const double new_value = state_.rho[k] + scale * standard_normal(rng);
    if (!(std::abs(new_value) < 1.0)) return false;
    Eigen::VectorXd rho = state_.rho;
    rho[k] = new_value;
    if (!correlations_valid(rho, data_.g())) return false;
    const double new_loglik = loglik_from_gram(data_.n(), gram_, state_.sigma2, rho);
    if (new_loglik == kNegInf) return false;
    // uniform prior on the valid region: only the likelihood ratio remains
    if (!(log_uniform(rng) < new_loglik - loglik_)) return false;
    state_.rho[k] = new_value;
    loglik_ = new_loglik;
    return true;
  }

  const RegressionDataset& data_;
  const PriorSpec& priors_;
  ParameterState state_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd xte_;
  Eigen::MatrixXd precision_;
  double loglik_const_ = 0.0;
  double loglik_ = 0.0;
};

}  // namespace

NormalParams coefficient_conditional(Eigen::Index row, Eigen::Index j,
                                     const RegressionDataset& data, const ParameterState& state,
                                     const PriorSpec& priors) {
  const auto& xtx = data.xtx();
  const double s2 = state.sigma2[j];
  double partial = data.xty()(row, j);
  for (Eigen::Index m = 0; m < xtx.rows(); ++m) {
    if (m != row) partial -= xtx(row, m) * state.beta(m, j);
  }
  const double b2 = priors.b2(row, j);
  const double precision = 1.0 / b2 + xtx(row, row) / s2;
  const double mean = (priors.a(row, j) / b2 + partial / s2) / precision;
  return {mean, 1.0 / precision};
}

InverseGammaParams variance_conditional(Eigen::Index j, const RegressionDataset& data,
                                        const ParameterState& state, const PriorSpec& priors) {
  const double sse = column_sse(data, state.beta, j);
  return {priors.c[j] + 0.5 * static_cast<double>(data.n()), priors.d[j] + 0.5 * sse};
}

double draw_inverse_gamma(const InverseGammaParams& ig, Rng& rng) {
  return 1.0 / std::gamma_distribution<double>(ig.shape, 1.0 / ig.scale)(rng);
}

double gibbs_update_beta0(Eigen::Index j, const RegressionDataset& data,
                          const ParameterState& state, const PriorSpec& priors, Rng& rng) {
  const NormalParams c = coefficient_conditional(0, j, data, state, priors);
  return c.mean + std::sqrt(c.var) * standard_normal(rng);
}

double gibbs_update_beta_l(Eigen::Index l, Eigen::Index j, const RegressionDataset& data,
                           const ParameterState& state, const PriorSpec& priors, Rng& rng) {
  if (l < 1 || l > data.p()) throw Error(ErrorCode::DimensionMismatch, "slope index out of range");
  const NormalParams c = coefficient_conditional(l, j, data, state, priors);
  return c.mean + std::sqrt(c.var) * standard_normal(rng);
}

double gibbs_update_sigma2(Eigen::Index j, const RegressionDataset& data,
                           const ParameterState& state, const PriorSpec& priors, Rng& rng) {
  return draw_inverse_gamma(variance_conditional(j, data, state, priors), rng);
}

void gibbs_sweep(const RegressionDataset& data, ParameterState& state, const PriorSpec& priors,
                 Rng& rng) {
  for (Eigen::Index j = 0; j < data.g(); ++j) {
    state.beta(0, j) = gibbs_update_beta0(j, data, state, priors, rng);
    for (Eigen::Index l = 1; l <= data.p(); ++l) {
      state.beta(l, j) = gibbs_update_beta_l(l, j, data, state, priors, rng);
    }
    state.sigma2[j] = gibbs_update_sigma2(j, data, state, priors, rng);
  }
}

Eigen::Index mwg_block_count(Eigen::Index p, Eigen::Index g) {
  return parameter_count(p, g, ErrorStructure::Correlated);
}

MwgStepResult mwg_step(const RegressionDataset& data, const ParameterState& state,
                       const PriorSpec& priors, const Eigen::VectorXd& scales, Rng& rng) {
  if (state.beta.rows() != data.p() + 1 || state.beta.cols() != data.g() ||
      state.sigma2.size() != data.g() || state.rho.size() != rho_count(data.g())) {
    throw Error(ErrorCode::DimensionMismatch, "state does not match the correlated model");
  }
  require_prior_shape(data, priors);
  if (!in_support(state, ErrorStructure::Correlated)) {
    throw Error(ErrorCode::InvalidState, "MWG started from a state outside the support");
  }
  if (scales.size() != mwg_block_count(data.p(), data.g())) {
    throw Error(ErrorCode::DimensionMismatch, "one proposal scale per block is required");
  }
  CorrelatedKernel kernel(data, priors, state);
  return kernel.sweep(scales, rng);
}

Eigen::VectorXd adapt_scales(const Eigen::VectorXd& acceptance_rates,
                             const Eigen::VectorXd& scales, std::size_t step,
                             double target_accept) {
  const double gain = std::pow(static_cast<double>(std::max<std::size_t>(step, 1)), -0.6);
  return (scales.array().log() + gain * (acceptance_rates.array() - target_accept)).exp();
}

void ChainConfig::validate() const {
  if (iterations == 0) throw Error(ErrorCode::InvalidConfig, "iterations must be positive");
  if (burn_in >= iterations) throw Error(ErrorCode::InvalidConfig, "burn-in must be below iterations");
  if (thin < 1) throw Error(ErrorCode::InvalidConfig, "thin must be at least 1");
  if (n_chains < 1) throw Error(ErrorCode::InvalidConfig, "need at least one chain");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "target acceptance must lie in (0, 1)");
  }
  if (adapt_batch < 1) throw Error(ErrorCode::InvalidConfig, "adaptation batch must be positive");
  if (proposal_scales.size() > 0 && !(proposal_scales.array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidConfig, "proposal scales must be positive");
  }
}

ParameterState ChainOutput::state(Eigen::Index row) const {
  return unflatten(draws.row(row).transpose(), p, g, structure);
}

ParameterState least_squares_state(const RegressionDataset& data, ErrorStructure s) {
  data.require_identifiable();
  ParameterState st = ParameterState::zeros(data.p(), data.g(), s);
  st.beta = data.xtx().ldlt().solve(data.xty());
  const double dof = static_cast<double>(data.n() - data.p() - 1);
  for (Eigen::Index j = 0; j < data.g(); ++j) {
    st.sigma2[j] = std::max(column_sse(data, st.beta, j) / dof, 1e-10);
  }
  return st;
}

ParameterState jitter_state(const ParameterState& state, double sd, Rng& rng) {
  ParameterState out = state;
  for (Eigen::Index i = 0; i < out.beta.size(); ++i) {
    out.beta.data()[i] += sd * standard_normal(rng);
  }
  for (Eigen::Index j = 0; j < out.sigma2.size(); ++j) {
    out.sigma2[j] *= std::exp(sd * standard_normal(rng));
  }
  if (out.rho.size() > 0) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Eigen::VectorXd rho = state.rho;
      for (Eigen::Index k = 0; k < rho.size(); ++k) rho[k] += sd * standard_normal(rng);
      if (correlations_valid(rho, state.g())) {
        out.rho = rho;
        break;
      }
    }
  }
  return out;
}

Eigen::VectorXd default_proposal_scales(const RegressionDataset& data,
                                        const ParameterState& init) {
  const Eigen::Index g = data.g();
  const Eigen::Index rows = data.p() + 1;
  const double n = std::max<double>(static_cast<double>(data.n()), 1.0);
  Eigen::VectorXd scales(mwg_block_count(data.p(), g));
  Eigen::Index k = 0;
  for (Eigen::Index l = 0; l < rows; ++l) {
    const double sum_x2 = std::max(data.xtx()(l, l), 1.0);
    for (Eigen::Index j = 0; j < g; ++j) scales[k++] = 2.4 * std::sqrt(init.sigma2[j] / sum_x2);
  }
  for (Eigen::Index j = 0; j < g; ++j) scales[k++] = 2.4 * std::sqrt(2.0 / n);
  while (k < scales.size()) scales[k++] = 2.4 / std::sqrt(n);
  return scales;
}

ChainOutput run_chain(const RegressionDataset& data, const PriorSpec& priors, ErrorStructure s,
                      const ChainConfig& config, Rng& rng, std::optional<ParameterState> init) {
  config.validate();
  priors.validate();
  require_prior_shape(data, priors);
  data.require_identifiable();

  ParameterState state = init ? std::move(*init) : least_squares_state(data, s);
  if (!in_support(state, s) || state.beta.rows() != data.p() + 1 ||
      state.beta.cols() != data.g()) {
    throw Error(ErrorCode::InvalidState, "initial state is outside the support");
  }

  ChainOutput out;
  out.structure = s;
  out.p = data.p();
  out.g = data.g();
  out.parameter_names = parameter_names(data.p(), data.g(), s);
  out.seed_used = config.seed;
  out.draws.resize(static_cast<Eigen::Index>(config.kept_draws()),
                   parameter_count(data.p(), data.g(), s));

  const bool correlated = s == ErrorStructure::Correlated;
  Eigen::VectorXd scales;
  Eigen::VectorXd batch_accepts;
  Eigen::VectorXd kept_accepts;
  std::size_t adapt_step = 0;
  if (correlated) {
    scales = config.proposal_scales.size() > 0 ? config.proposal_scales
                                               : default_proposal_scales(data, state);
    if (scales.size() != mwg_block_count(data.p(), data.g())) {
      throw Error(ErrorCode::InvalidConfig, "proposal scale count does not match the model");
    }
    batch_accepts = Eigen::VectorXd::Zero(scales.size());
    kept_accepts = Eigen::VectorXd::Zero(scales.size());
  }

  Eigen::Index row = 0;
  for (std::size_t t = 1; t <= config.iterations; ++t) {
    if (correlated) {
      MwgStepResult step = mwg_step(data, state, priors, scales, rng);
      state = std::move(step.state);
      for (std::size_t b = 0; b < step.accepted.size(); ++b) {
        if (!step.accepted[b]) continue;
        if (t <= config.burn_in) {
          batch_accepts[b] += 1.0;
        } else {
          kept_accepts[b] += 1.0;
        }
      }
      if (config.adapt && t <= config.burn_in && t % config.adapt_batch == 0) {
        scales = adapt_scales(batch_accepts / static_cast<double>(config.adapt_batch), scales,
                              ++adapt_step, config.target_accept);
        batch_accepts.setZero();
      }
    } else {
      gibbs_sweep(data, state, priors, rng);
    }
    if (t > config.burn_in && (t - config.burn_in) % config.thin == 0) {
      out.draws.row(row++) = flatten(state).transpose();
    }
  }
  if (correlated) {
    out.acceptance = kept_accepts / static_cast<double>(config.iterations - config.burn_in);
    out.final_scales = scales;
  }
  return out;
}

std::vector<ChainOutput> run_chains(const RegressionDataset& data, const PriorSpec& priors,
                                    ErrorStructure s, const ChainConfig& config) {
  config.validate();
  const ParameterState base = least_squares_state(data, s);
  std::vector<ChainOutput> outputs(config.n_chains);
  std::vector<std::exception_ptr> errors(config.n_chains);
  std::vector<std::thread> workers;
  workers.reserve(config.n_chains);
  for (std::size_t c = 0; c < config.n_chains; ++c) {
    workers.emplace_back([&, c] {
      try {
        ChainConfig cc = config;
        cc.seed = config.seed + c;
        Rng rng(cc.seed);
        ParameterState init = jitter_state(base, config.init_jitter_sd, rng);
        outputs[c] = run_chain(data, priors, s, cc, rng, std::move(init));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return outputs;
}

}  // namespace alrreg

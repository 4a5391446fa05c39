#include "alrreg/model.hpp"

#include "alrreg/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace alrreg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void require_dims(const RegressionDataset& data, const ParameterState& state) {
  if (state.beta.rows() != data.p() + 1 || state.beta.cols() != data.g() ||
      state.sigma2.size() != data.g()) {
    std::ostringstream os;
    os << "parameter state is " << state.beta.rows() << "x" << state.beta.cols()
       << " (beta) with " << state.sigma2.size() << " variances; data needs "
       << data.p() + 1 << "x" << data.g();
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

void require_positive_variances(const Eigen::VectorXd& sigma2) {
  for (Eigen::Index j = 0; j < sigma2.size(); ++j) {
    if (!(sigma2[j] > 0.0)) {
      throw Error(ErrorCode::NonPositiveVariance, "variance sigma2_" + std::to_string(j + 1) +
                                                      " is not positive");
    }
  }
}

// Cholesky factor of Sigma = diag(sigma) P diag(sigma); throws when not PD.
Eigen::LLT<Eigen::MatrixXd> covariance_factor(const Eigen::VectorXd& sigma2,
                                              const Eigen::VectorXd& rho) {
  const Eigen::Index g = sigma2.size();
  if (rho.size() != rho_count(g)) {
    throw Error(ErrorCode::DimensionMismatch, "correlation vector has the wrong length");
  }
  for (Eigen::Index k = 0; k < rho.size(); ++k) {
    if (!(std::abs(rho[k]) < 1.0)) {
      throw Error(ErrorCode::NotPositiveDefinite, "correlation outside (-1, 1)");
    }
  }
  const Eigen::VectorXd sd = sigma2.cwiseSqrt();
  const Eigen::MatrixXd cov = sd.asDiagonal() * correlation_matrix(rho, g) * sd.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "error covariance is not positive definite");
  }
  return llt;
}

}  // namespace

const char* to_string(ErrorStructure s) noexcept {
  return s == ErrorStructure::Uncorrelated ? "uncorrelated" : "correlated";
}

ErrorStructure parse_error_structure(const std::string& name) {
  if (name == "uncorrelated") return ErrorStructure::Uncorrelated;
  if (name == "correlated") return ErrorStructure::Correlated;
  throw Error(ErrorCode::InvalidConfig, "unknown model '" + name + "'");
}

RegressionDataset::RegressionDataset(Eigen::MatrixXd y, Eigen::MatrixXd z)
    : y_(std::move(y)), z_(std::move(z)) {
  if (z_.rows() != y_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "responses and covariates have different row counts");
  }
  if (y_.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "need at least one response");
  if (!y_.allFinite() || !z_.allFinite()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset contains non-finite values");
  }
  x_.resize(y_.rows(), z_.cols() + 1);
  x_.col(0).setOnes();
  x_.rightCols(z_.cols()) = z_;
  xtx_ = x_.transpose() * x_;
  xty_ = x_.transpose() * y_;
  yty_ = y_.transpose() * y_;
}

void RegressionDataset::require_identifiable() const {
  if (n() <= p() + 1) {
    std::ostringstream os;
    os << "need more than p + 1 = " << p() + 1 << " observations, got " << n();
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

Eigen::Index rho_index(Eigen::Index j, Eigen::Index k, Eigen::Index g) {
  if (j > k) std::swap(j, k);
  if (j == k || j < 0 || k >= g) {
    throw Error(ErrorCode::DimensionMismatch, "invalid correlation index pair");
  }
  // pairs before row j: sum_{r<j} (g-1-r)
  return j * (2 * g - j - 1) / 2 + (k - j - 1);
}

ParameterState ParameterState::zeros(Eigen::Index p, Eigen::Index g, ErrorStructure s) {
  ParameterState st;
  st.beta = Eigen::MatrixXd::Zero(p + 1, g);
  st.sigma2 = Eigen::VectorXd::Ones(g);
  st.rho = Eigen::VectorXd::Zero(s == ErrorStructure::Correlated ? rho_count(g) : 0);
  return st;
}

Eigen::MatrixXd correlation_matrix(const Eigen::Ref<const Eigen::VectorXd>& rho, Eigen::Index g) {
  if (rho.size() != rho_count(g)) {
    throw Error(ErrorCode::DimensionMismatch, "correlation vector has the wrong length");
  }
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(g, g);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < g; ++i) {
    for (Eigen::Index j = i + 1; j < g; ++j, ++k) r(i, j) = r(j, i) = rho[k];
  }
  return r;
}

bool correlations_valid(const Eigen::Ref<const Eigen::VectorXd>& rho, Eigen::Index g) {
  if (rho.size() != rho_count(g)) return false;
  for (Eigen::Index k = 0; k < rho.size(); ++k) {
    if (!(std::abs(rho[k]) < 1.0)) return false;
  }
  if (rho.size() == 0) return true;
  Eigen::LLT<Eigen::MatrixXd> llt(correlation_matrix(rho, g));
  return llt.info() == Eigen::Success;
}

bool in_support(const ParameterState& state, ErrorStructure s) {
  if (!state.beta.allFinite()) return false;
  for (Eigen::Index j = 0; j < state.sigma2.size(); ++j) {
    if (!(state.sigma2[j] > 0.0) || !std::isfinite(state.sigma2[j])) return false;
  }
  if (s == ErrorStructure::Uncorrelated) return state.rho.size() == 0;
  return correlations_valid(state.rho, state.g());
}

Eigen::Index parameter_count(Eigen::Index p, Eigen::Index g, ErrorStructure s) {
  return (p + 1) * g + g + (s == ErrorStructure::Correlated ? rho_count(g) : 0);
}

std::vector<std::string> parameter_names(Eigen::Index p, Eigen::Index g, ErrorStructure s) {
  std::vector<std::string> names;
  names.reserve(parameter_count(p, g, s));
  for (Eigen::Index l = 0; l <= p; ++l) {
    for (Eigen::Index j = 1; j <= g; ++j) {
      names.push_back("beta_" + std::to_string(l) + "_" + std::to_string(j));
    }
  }
  for (Eigen::Index j = 1; j <= g; ++j) names.push_back("sigma2_" + std::to_string(j));
  if (s == ErrorStructure::Correlated) {
    for (Eigen::Index j = 1; j <= g; ++j) {
      for (Eigen::Index k = j + 1; k <= g; ++k) {
        names.push_back("rho_" + std::to_string(j) + "_" + std::to_string(k));
      }
    }
  }
  return names;
}

Eigen::VectorXd flatten(const ParameterState& state) {
  const Eigen::Index nb = state.beta.size();
  Eigen::VectorXd v(nb + state.sigma2.size() + state.rho.size());
  Eigen::Index k = 0;
  for (Eigen::Index l = 0; l < state.beta.rows(); ++l) {
    for (Eigen::Index j = 0; j < state.beta.cols(); ++j) v[k++] = state.beta(l, j);
  }
  v.segment(k, state.sigma2.size()) = state.sigma2;
  k += state.sigma2.size();
  v.segment(k, state.rho.size()) = state.rho;
  return v;
}

ParameterState unflatten(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Index p,
                         Eigen::Index g, ErrorStructure s) {
  if (v.size() != parameter_count(p, g, s)) {
    throw Error(ErrorCode::DimensionMismatch, "flattened state has the wrong length");
  }
  ParameterState st = ParameterState::zeros(p, g, s);
  Eigen::Index k = 0;
  for (Eigen::Index l = 0; l <= p; ++l) {
    for (Eigen::Index j = 0; j < g; ++j) st.beta(l, j) = v[k++];
  }
  st.sigma2 = v.segment(k, g);
  k += g;
  st.rho = v.segment(k, st.rho.size());
  return st;
}

PriorSpec PriorSpec::constant(Eigen::Index p, Eigen::Index g, double a, double b2, double c,
                              double d) {
  PriorSpec ps;
  ps.a = Eigen::MatrixXd::Constant(p + 1, g, a);
  ps.b2 = Eigen::MatrixXd::Constant(p + 1, g, b2);
  ps.c = Eigen::VectorXd::Constant(g, c);
  ps.d = Eigen::VectorXd::Constant(g, d);
  return ps;
}

void PriorSpec::validate() const {
  if (a.rows() != b2.rows() || a.cols() != b2.cols() || c.size() != a.cols() ||
      d.size() != a.cols()) {
    throw Error(ErrorCode::InvalidConfig, "prior hyperparameter shapes disagree");
  }
  if (!a.allFinite()) throw Error(ErrorCode::InvalidConfig, "prior means must be finite");
  if (!(b2.array() > 0.0).all() || !b2.allFinite()) {
    throw Error(ErrorCode::InvalidConfig, "prior variances b2 must be positive");
  }
  if (!(c.array() > 0.0).all() || !(d.array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidConfig, "inverse-gamma hyperparameters c, d must be positive");
  }
}

Eigen::MatrixXd residuals(const RegressionDataset& data, const ParameterState& state) {
  require_dims(data, state);
  return data.y() - data.design() * state.beta;
}

double loglik_uncorrelated(const RegressionDataset& data, const ParameterState& state) {
  require_dims(data, state);
  if (state.rho.size() != 0) {
    throw Error(ErrorCode::DimensionMismatch, "uncorrelated model takes no correlations");
  }
  require_positive_variances(state.sigma2);
  const Eigen::MatrixXd e = residuals(data, state);
  const double n = static_cast<double>(data.n());
  double ll = 0.0;
  for (Eigen::Index j = 0; j < data.g(); ++j) {
    const double s2 = state.sigma2[j];
    ll += -0.5 * n * (kLog2Pi + std::log(s2)) - e.col(j).squaredNorm() / (2.0 * s2);
  }
  return ll;
}

double loglik_correlated(const RegressionDataset& data, const ParameterState& state) {
  require_dims(data, state);
  require_positive_variances(state.sigma2);
  const auto llt = covariance_factor(state.sigma2, state.rho);
  const Eigen::MatrixXd e = residuals(data, state);
  const Eigen::MatrixXd whitened = llt.matrixL().solve(e.transpose());
  const Eigen::MatrixXd l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  const double n = static_cast<double>(data.n());
  return -0.5 * n * (static_cast<double>(data.g()) * kLog2Pi + logdet) -
         0.5 * whitened.squaredNorm();
}

double loglik(const RegressionDataset& data, const ParameterState& state, ErrorStructure s) {
  return s == ErrorStructure::Uncorrelated ? loglik_uncorrelated(data, state)
                                           : loglik_correlated(data, state);
}

Eigen::VectorXd observation_logliks(const RegressionDataset& data, const ParameterState& state,
                                    ErrorStructure s) {
  require_dims(data, state);
  require_positive_variances(state.sigma2);
  const Eigen::MatrixXd e = residuals(data, state);
  const double g = static_cast<double>(data.g());
  Eigen::VectorXd out(data.n());
  if (s == ErrorStructure::Uncorrelated) {
    const double logdet = state.sigma2.array().log().sum();
    const Eigen::RowVectorXd inv = state.sigma2.cwiseInverse().transpose();
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      out[i] = -0.5 * (g * kLog2Pi + logdet) -
               0.5 * (e.row(i).array().square() * inv.array()).sum();
    }
    return out;
  }
  const auto llt = covariance_factor(state.sigma2, state.rho);
  const Eigen::MatrixXd l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  const Eigen::MatrixXd whitened = llt.matrixL().solve(e.transpose());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out[i] = -0.5 * (g * kLog2Pi + logdet) - 0.5 * whitened.col(i).squaredNorm();
  }
  return out;
}

double normal_logpdf(double x, double mean, double var) {
  const double z = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - z * z / (2.0 * var);
}

double inverse_gamma_logpdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double logprior(const ParameterState& state, const PriorSpec& priors) {
  if (priors.a.rows() != state.beta.rows() || priors.a.cols() != state.beta.cols() ||
      priors.c.size() != state.sigma2.size()) {
    throw Error(ErrorCode::DimensionMismatch, "prior shape does not match the parameter state");
  }
  double lp = 0.0;
  for (Eigen::Index l = 0; l < state.beta.rows(); ++l) {
    for (Eigen::Index j = 0; j < state.beta.cols(); ++j) {
      lp += normal_logpdf(state.beta(l, j), priors.a(l, j), priors.b2(l, j));
    }
  }
  for (Eigen::Index j = 0; j < state.sigma2.size(); ++j) {
    if (!(state.sigma2[j] > 0.0)) return kNegInf;
    lp += inverse_gamma_logpdf(state.sigma2[j], priors.c[j], priors.d[j]);
  }
  if (state.rho.size() > 0) {
    if (!correlations_valid(state.rho, state.g())) return kNegInf;
    lp += static_cast<double>(state.rho.size()) * std::log(0.5);
  }
  return lp;
}

double log_posterior_unnorm(const RegressionDataset& data, const ParameterState& state,
                            const PriorSpec& priors, ErrorStructure s) {
  require_dims(data, state);
  const double lp = logprior(state, priors);
  if (lp == kNegInf) return kNegInf;
  if (s == ErrorStructure::Uncorrelated && state.rho.size() != 0) {
    throw Error(ErrorCode::DimensionMismatch, "uncorrelated model takes no correlations");
  }
  return lp + loglik(data, state, s);
}

Eigen::MatrixXd residual_gram(const RegressionDataset& data, const Eigen::MatrixXd& beta) {
  const Eigen::MatrixXd cross = beta.transpose() * data.xty();
  return data.yty() - cross - cross.transpose() + beta.transpose() * data.xtx() * beta;
}

double loglik_from_gram(Eigen::Index n, const Eigen::MatrixXd& gram,
                        const Eigen::VectorXd& sigma2, const Eigen::VectorXd& rho) {
  const Eigen::Index g = sigma2.size();
  const double nd = static_cast<double>(n);
  if (rho.size() == 0) {
    double ll = 0.0;
    for (Eigen::Index j = 0; j < g; ++j) {
      if (!(sigma2[j] > 0.0)) return kNegInf;
      ll += -0.5 * nd * (kLog2Pi + std::log(sigma2[j])) - gram(j, j) / (2.0 * sigma2[j]);
    }
    return ll;
  }
  if (!correlations_valid(rho, g) || !(sigma2.array() > 0.0).all()) return kNegInf;
  const Eigen::VectorXd sd = sigma2.cwiseSqrt();
  const Eigen::MatrixXd cov = sd.asDiagonal() * correlation_matrix(rho, g) * sd.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return kNegInf;
  const Eigen::MatrixXd l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  const double quad = llt.solve(gram).trace();
  return -0.5 * nd * (static_cast<double>(g) * kLog2Pi + logdet) - 0.5 * quad;
}

}  // namespace alrreg

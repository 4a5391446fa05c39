#pragma once

// Multivariate linear regression on ALR-transformed responses,
//
//   y_ij = beta_0j + sum_l beta_lj z_il + eps_ij,   i = 1..n, j = 1..g,
//
// with either independent errors (eps_ij ~ N(0, sigma2_j)) or correlated
// errors (eps_i ~ N_g(0, Sigma), Sigma = diag(sigma) P diag(sigma), P the
// correlation matrix). Every density here keeps its normalizing constants.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace alrreg {

enum class ErrorStructure { Uncorrelated, Correlated };

const char* to_string(ErrorStructure s) noexcept;
ErrorStructure parse_error_structure(const std::string& name);

/// Responses y (n x g) and covariates z (n x p), with cross-product
/// matrices of the design [1 z] precomputed for the samplers.
class RegressionDataset {
 public:
  RegressionDataset(Eigen::MatrixXd y, Eigen::MatrixXd z);

  Eigen::Index n() const noexcept { return y_.rows(); }
  Eigen::Index g() const noexcept { return y_.cols(); }
  Eigen::Index p() const noexcept { return z_.cols(); }

  const Eigen::MatrixXd& y() const noexcept { return y_; }
  const Eigen::MatrixXd& z() const noexcept { return z_; }
  /// n x (p+1) design matrix with a leading column of ones.
  const Eigen::MatrixXd& design() const noexcept { return x_; }
  const Eigen::MatrixXd& xtx() const noexcept { return xtx_; }
  const Eigen::MatrixXd& xty() const noexcept { return xty_; }
  const Eigen::MatrixXd& yty() const noexcept { return yty_; }

  /// Throws Error(DimensionMismatch) unless n > p + 1.
  void require_identifiable() const;

 private:
  Eigen::MatrixXd y_;
  Eigen::MatrixXd z_;
  Eigen::MatrixXd x_;
  Eigen::MatrixXd xtx_;
  Eigen::MatrixXd xty_;
  Eigen::MatrixXd yty_;
};

/// Number of correlations for g responses, g(g-1)/2.
constexpr Eigen::Index rho_count(Eigen::Index g) noexcept { return g * (g - 1) / 2; }

/// Position of rho_jk (j < k, zero-based) in the packed vector; pairs are
/// ordered (0,1), (0,2), ..., (0,g-1), (1,2), ...
Eigen::Index rho_index(Eigen::Index j, Eigen::Index k, Eigen::Index g);

struct ParameterState {
  Eigen::MatrixXd beta;    // (p+1) x g, row 0 holds the intercepts
  Eigen::VectorXd sigma2;  // g
  Eigen::VectorXd rho;     // g(g-1)/2, empty for the uncorrelated model

  Eigen::Index g() const noexcept { return beta.cols(); }
  Eigen::Index p() const noexcept { return beta.rows() - 1; }

  static ParameterState zeros(Eigen::Index p, Eigen::Index g, ErrorStructure s);
};

/// Unit-diagonal correlation matrix assembled from packed correlations.
Eigen::MatrixXd correlation_matrix(const Eigen::Ref<const Eigen::VectorXd>& rho, Eigen::Index g);

/// True iff every |rho| < 1 and the implied correlation matrix admits a
/// Cholesky factorization (all leading minors positive).
bool correlations_valid(const Eigen::Ref<const Eigen::VectorXd>& rho, Eigen::Index g);

/// Checks positivity of sigma2 and, for the correlated model, validity of rho.
bool in_support(const ParameterState& state, ErrorStructure s);

/// Flattened layout used for chain output: beta by row (beta_01, ..., beta_0g,
/// beta_11, ...), then sigma2_1..g, then the packed correlations.
Eigen::Index parameter_count(Eigen::Index p, Eigen::Index g, ErrorStructure s);
std::vector<std::string> parameter_names(Eigen::Index p, Eigen::Index g, ErrorStructure s);
Eigen::VectorXd flatten(const ParameterState& state);
ParameterState unflatten(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Index p,
                         Eigen::Index g, ErrorStructure s);

/// Independent priors: beta_lj ~ N(a_lj, b2_lj), sigma2_j ~ IG(c_j, d_j)
/// with density proportional to x^-(c+1) exp(-d/x). Correlations get a
/// Uniform(-1, 1) prior per coordinate restricted to positive definite P.
struct PriorSpec {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b2;
  Eigen::VectorXd c;
  Eigen::VectorXd d;

  static PriorSpec constant(Eigen::Index p, Eigen::Index g, double a, double b2, double c,
                            double d);

  /// Throws Error(InvalidConfig) on non-positive b2, c or d.
  void validate() const;
};

Eigen::MatrixXd residuals(const RegressionDataset& data, const ParameterState& state);

double loglik_uncorrelated(const RegressionDataset& data, const ParameterState& state);
double loglik_correlated(const RegressionDataset& data, const ParameterState& state);
double loglik(const RegressionDataset& data, const ParameterState& state, ErrorStructure s);

/// Per-observation log densities log f(y_i | theta).
Eigen::VectorXd observation_logliks(const RegressionDataset& data, const ParameterState& state,
                                    ErrorStructure s);

/// -infinity outside the prior support.
double logprior(const ParameterState& state, const PriorSpec& priors);

double log_posterior_unnorm(const RegressionDataset& data, const ParameterState& state,
                            const PriorSpec& priors, ErrorStructure s);

// Scalar building blocks, shared with the samplers.
double normal_logpdf(double x, double mean, double var);
double inverse_gamma_logpdf(double x, double shape, double scale);

/// Residual cross-product E'E computed from the dataset's sufficient
/// statistics rather than the n x g residual matrix.
Eigen::MatrixXd residual_gram(const RegressionDataset& data, const Eigen::MatrixXd& beta);

/// Correlated-model log-likelihood from n and the residual cross-product.
/// Returns -infinity when the implied covariance is not positive definite.
double loglik_from_gram(Eigen::Index n, const Eigen::MatrixXd& gram,
                        const Eigen::VectorXd& sigma2, const Eigen::VectorXd& rho);

}  // namespace alrreg

#pragma once

#include <vector>

#include "snerv/types.hpp"

namespace snerv::probmodel {

// Zero coefficients are mapped to this sentinel after standardization.
inline constexpr double kAbsentSentinel = -3.0;

// Per-component Bernoulli presence + Box-Cox standardization parameters.
struct ComponentModel {
  double p = 0.0;     // presence probability, n_nonzero / n_total
  double beta = 1.0;  // Box-Cox power
  double mu = 0.0;    // mean of transformed nonzero coefficients
  double sigma = 0.0; // population std of same
  std::size_t n_nonzero = 0;
  std::size_t n_total = 0;
  bool has_continuous = false;  // false when the column is degenerate/too small
};

// (x^beta - 1)/beta, ln x at beta = 0. x must be > 0.
double box_cox(double x, double beta);
double inverse_box_cox(double y, double beta);

// Profile log-likelihood L(beta) = -(n/2) ln sigma_hat^2(beta)
// + (beta - 1) sum(ln x). Used by the MLE and by test oracles.
double box_cox_loglik(const Eigen::VectorXd& log_xs, double beta);

// Maximizes L(beta) on [-3, 3]: 0.01 grid, then golden-section to 1e-4.
double box_cox_mle(const Eigen::VectorXd& xs);

std::vector<ComponentModel> fit_component_models(const Matrix& W);

struct StandardizedCoefficients {
  Matrix Z;      // [N x k]; sentinel -3 where the support is false
  BoolMatrix M;  // [N x k]; M(n, j) = (W(n, j) > 0)
};

StandardizedCoefficients standardize(const Matrix& W,
                                     const std::vector<ComponentModel>& models);

}  // namespace snerv::probmodel

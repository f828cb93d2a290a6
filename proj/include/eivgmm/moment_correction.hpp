#pragma once

#include <vector>

#include "eivgmm/covariance.hpp"
#include "eivgmm/types.hpp"

namespace eivgmm {

/// Linear system behind the corrected least-squares estimating equations.
///
/// With V_j = (W_bar_j, Z_j):
///   gram = sum_j V_j V_j^T - blockdiag(sum_j n_j^{-1} Sigma_j, 0)
///   rhs  = sum_j V_j y_j
/// so that S_L(theta) = 2 n^{-1} (gram theta - rhs).
struct McSystem {
  MatrixXd gram;
  VectorXd rhs;
  Index n = 0;
  Index p = 0;
};

McSystem assemble_mc_system(const MatrixXd& v, const VectorXd& y,
                            const std::vector<MatrixXd>& sigma_j, const VectorXi& n_rep);

/// Gradient of the corrected L2 norm, ordered (beta, gamma).
VectorXd mc_gradient(const McSystem& sys, const VectorXd& theta);

/// Its Jacobian, 2 n^{-1} gram (constant in theta).
MatrixXd mc_jacobian(const McSystem& sys);

/// Corrected L2 norm n^{-1} sum (y_j - V_j^T theta)^2 - n^{-1} sum n_j^{-1} beta^T Sigma_j beta.
double corrected_norm(const MatrixXd& v, const VectorXd& y, const MatrixXd& mean_sigma,
                      const VectorXd& theta);

struct McFit {
  ParamVector theta;
  double sigma_eps_sq = 0.0;  // corrected norm at theta, clamped at 0
  MatrixXd gram;
};

/// Solves gram theta = rhs directly. Throws Error{estimation} when the
/// system's condition number exceeds 1e12.
McFit fit_mc(const Dataset& d, const CovarianceSet& cov);
McFit fit_mc(const Dataset& d, const AveragedDesign& avg, const CovarianceSet& cov);

/// Least squares of y on x. Throws Error{estimation} on rank deficiency.
VectorXd fit_ols(const VectorXd& y, const MatrixXd& x);

/// OLS of y on (W_bar, Z), ignoring measurement error.
ParamVector fit_naive(const Dataset& d);

/// OLS of y on the latent (X, Z); only available for simulated data.
ParamVector fit_true(const VectorXd& y, const MatrixXd& x_true, const MatrixXd& z);

/// Classical OLS standard errors sqrt(diag(s^2 (X^T X)^{-1})).
VectorXd ols_standard_errors(const VectorXd& y, const MatrixXd& x, const VectorXd& coef);

}  // namespace eivgmm

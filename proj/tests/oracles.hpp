#pragma once

// Independent reference computations for the tests. Each one is written
// from the defining formula with plain loops and a generic dense solver, so
// it shares no code path with the library routine it checks.

#include <functional>
#include <vector>

#include "eivgmm/types.hpp"

namespace eivgmm::oracle {

/// Corrected least squares by explicit accumulation of
///   sum_j V_j V_j^T - blockdiag(sum_j Sigma_j / n_j, 0)
/// and a full-pivot LU solve.
VectorXd dense_mc_solve(const Dataset& d, const std::vector<MatrixXd>& sigma_j);

/// Quasi-likelihood weights for scalar covariates from the (n+1) x (n+1)
/// system written entry by entry:
///   row k: sum_j (w_k A2 w_j + gamma (n delta_jk - 1)) q_j + lambda = w_k A1
///   last:  sum_j q_j = 1
/// with A2 = sum 1/omega_j and A1 = sum w_j/omega_j. Returns (q, lambda).
std::pair<VectorXd, double> explicit_ql_solve(const VectorXd& w_bar, const VectorXd& omega,
                                              double gamma);

/// Phase discrepancy by composite trapezoid over [0, t*] with `intervals`
/// panels, evaluating the outcome and weighted characteristic functions
/// directly at every node.
double trapezoid_dtilde(const VectorXd& theta, const MatrixXd& v, const VectorXd& q,
                        const VectorXd& y, double t_star, int intervals);

/// Central differences with step h (1 + |x_i|).
VectorXd central_difference(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                            double h);

/// Minimizer of a scalar function over [lo, hi] by a dense grid followed by
/// two rounds of local grid refinement.
double grid_argmin(const std::function<double(double)>& f, double lo, double hi, int points);

}  // namespace eivgmm::oracle

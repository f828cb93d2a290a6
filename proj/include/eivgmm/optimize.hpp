#pragma once

#include <functional>

#include "eivgmm/types.hpp"

namespace eivgmm {

/// Objective returning f(x) and, when `grad` is non-null, writing grad f(x).
using ValueGradient = std::function<double(const VectorXd& x, VectorXd* grad)>;

struct OptimOptions {
  int max_iter = 2000;
  double step_tol = 1e-9;       // max-norm of the accepted step
  double rel_f_tol = 1e-12;     // relative decrease of f
  // Stop when the predicted decrease -g^T d falls below this fraction of
  // (1 + |f|): further progress is below the resolution of f itself.
  double decrement_tol = 1e-13;
  int max_line_search_failures = 3;
};

struct OptimResult {
  VectorXd x;
  double f = 0.0;
  int n_iter = 0;
  bool converged = false;
  bool used_simplex = false;  // fell back to Nelder-Mead
};

/// BFGS on the inverse Hessian with Armijo backtracking. `h0_inv` seeds the
/// inverse-Hessian approximation and is restored after a failed line
/// search; after `max_line_search_failures` failures the search continues
/// with Nelder-Mead from the best point. The returned point is never worse
/// than x0.
OptimResult minimize_bfgs(const ValueGradient& fn, const VectorXd& x0, const MatrixXd& h0_inv,
                          const OptimOptions& opt = {});

/// Nelder-Mead simplex search. `scale` sets the initial simplex edge per
/// coordinate.
OptimResult minimize_nelder_mead(const std::function<double(const VectorXd&)>& fn,
                                 const VectorXd& x0, const VectorXd& scale, int max_iter,
                                 double f_tol = 1e-14, double x_tol = 1e-10);

}  // namespace eivgmm

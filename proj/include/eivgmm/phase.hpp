#pragma once

#include <complex>

#include "eivgmm/types.hpp"

namespace eivgmm {

struct PhaseConfig {
  int n_quad = 64;            // Gauss-Legendre nodes on [0, t*]
  double step_factor = 0.01;  // t* scan step = step_factor / sd(y)
  double cap_factor = 50.0;   // t* scan stops at cap_factor / sd(y)
};

struct TStar {
  double value = 0.0;
  bool capped = false;  // no crossing found before the scan cap
};

/// Frequency cutoff for the outcome's empirical characteristic function:
/// the first grid point t = step, 2 step, ... at which |phi_y(t)| drops to
/// n^{-1/2} or below. Falls back to the scan cap (50/sd(y)) with
/// `capped = true`. Throws Error{degenerate_input} for constant y.
TStar select_t_star(const VectorXd& y, double step);
TStar select_t_star(const VectorXd& y, const PhaseConfig& cfg = {});

struct Quadrature {
  VectorXd nodes;
  VectorXd weights;
};

/// n-point Gauss-Legendre rule mapped to [a, b].
Quadrature gauss_legendre(int n, double a, double b);

/// K(t) = (1 - t/t*)^2 on [0, t*], zero outside.
double phase_kernel(double t, double t_star);

/// Outcome characteristic-function components on the quadrature grid.
struct EcfOutcome {
  VectorXd grid;          // quadrature nodes in (0, t*), increasing
  VectorXd quad_weights;  // Gauss-Legendre weights
  VectorXd kernel;        // K(grid)
  VectorXd c_y;           // n^{-1} sum cos(t y_j)
  VectorXd s_y;           // n^{-1} sum sin(t y_j)
  double t_star = 0.0;
  bool capped = false;
};

EcfOutcome build_ecf(const VectorXd& y, double t_star, int n_quad);
EcfOutcome build_ecf(const VectorXd& y, const PhaseConfig& cfg = {});

/// Weighted empirical phase function of V_j^T theta at frequency t, for
/// regressor rows V_j = (W_bar_j, Z_j) and simplex weights q. Throws
/// Error{degenerate_input} when the weighted characteristic function
/// vanishes (the ratio is undefined).
std::complex<double> wepf(const VectorXd& theta, const MatrixXd& v, const VectorXd& q, double t);

struct PhaseEval {
  double value = 0.0;
  VectorXd gradient;
  MatrixXd hessian;  // empty unless requested
};

/// Trigonometric tables of the phase discrepancy at a fixed theta.
///
/// The discrepancy is
///   D(theta) = int_0^{t*} B(t, theta)^2 K(t) dt,
///   B = C_y(t) sum_j q_j sin(t V_j^T theta) - S_y(t) sum_j q_j cos(t V_j^T theta),
/// integrated with the Gauss-Legendre rule stored in the EcfOutcome. The
/// tables do not depend on q, so several weight vectors can be evaluated at
/// the cost of one set of sin/cos evaluations. Holds references: `v` and
/// `ecf` must outlive the basis.
class PhaseBasis {
 public:
  PhaseBasis(const VectorXd& theta, const MatrixXd& v, const EcfOutcome& ecf);

  PhaseEval evaluate(const VectorXd& q, bool with_hessian = false) const;

 private:
  const MatrixXd& v_;
  const EcfOutcome& ecf_;
  MatrixXd bracket_;  // n_quad x n: C_y sin - S_y cos  (B = bracket_ q)
  MatrixXd slope_;    // n_quad x n: C_y cos + S_y sin  (dB = t slope_ diag(q) V)
};

double dtilde(const VectorXd& theta, const MatrixXd& v, const VectorXd& q, const EcfOutcome& ecf);
VectorXd grad_dtilde(const VectorXd& theta, const MatrixXd& v, const VectorXd& q,
                     const EcfOutcome& ecf);
MatrixXd hess_dtilde(const VectorXd& theta, const MatrixXd& v, const VectorXd& q,
                     const EcfOutcome& ecf);

}  // namespace eivgmm

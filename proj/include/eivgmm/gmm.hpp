#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eivgmm/covariance.hpp"
#include "eivgmm/moment_correction.hpp"
#include "eivgmm/optimize.hpp"
#include "eivgmm/phase.hpp"
#include "eivgmm/types.hpp"
#include "eivgmm/weights.hpp"

namespace eivgmm {

/// Everything derived from a dataset that the estimators share: replicate
/// means, regressor matrix, covariance estimates, the corrected
/// least-squares system and the outcome's characteristic function.
struct EstimationInputs {
  AveragedDesign avg;
  MatrixXd v;
  CovarianceSet cov;
  McSystem mc;
  EcfOutcome ecf;
};

EstimationInputs prepare_inputs(const Dataset& d, const PhaseConfig& cfg = {});

/// Stacked estimating equations S(theta), length 2(p+q+1), ordered
///   [S_L,beta, S_L,gamma, S_D,beta, S_D,gamma]
/// where S_L is the corrected least-squares gradient and S_D the gradient
/// of the phase discrepancy under weights q.
VectorXd stacked_gradient(const VectorXd& theta, const EstimationInputs& in, const VectorXd& q);
VectorXd stacked_gradient(const ParamVector& theta, const Dataset& d, const CovarianceSet& cov,
                          const WeightVector& q, const EcfOutcome& ecf);

/// Symmetrizes and raises every eigenvalue to at least 1e-10 trace/dim.
MatrixXd floor_spd(const MatrixXd& a);
/// Inverse of a symmetric positive definite matrix via its eigendecomposition.
/// Throws Error{estimation} if an eigenvalue is not positive.
MatrixXd spd_inverse(const MatrixXd& a);

struct BootstrapOmega {
  MatrixXd omega;    // floored bootstrap second-moment (or covariance) matrix of S*
  int b_used = 0;
  int b_skipped = 0;
};

/// Estimating-function bootstrap of Cov(S) at theta_init, one result per
/// weight scheme. Observations are resampled with replacement (replicates
/// travel with their observation, and so do their Sigma_j estimates); the
/// pooled Sigma_x, the weights and the outcome ECF with its t* are
/// recomputed on every resample. All schemes share the resample indices, so
/// each entry equals the single-scheme result for the same seed. Failed
/// resamples are skipped; more than 10% skipped raises
/// Error{bootstrap_instability}.
///
/// With `center` (the default) the result is the bootstrap covariance
/// B^{-1} sum (S* - mean)(S* - mean)^T. Without it, the raw second moment
/// B^{-1} sum S* S*^T is returned. The two differ by mean mean^T, which is
/// not negligible here: theta_init solves the least-squares block but not
/// the phase block, whose resampled mean is then of the same order as its
/// spread.
std::vector<BootstrapOmega> bootstrap_omega(const Dataset& d, const EstimationInputs& in,
                                            const VectorXd& theta_init, int b,
                                            std::uint64_t seed,
                                            const std::vector<WeightScheme>& schemes,
                                            const PhaseConfig& cfg = {},
                                            std::optional<double> ql_gamma = std::nullopt,
                                            int workers = 1, bool center = true);
MatrixXd bootstrap_omega(const Dataset& d, const ParamVector& theta_init, int b,
                         std::uint64_t seed, WeightScheme scheme, bool center = true);

/// Q(theta) = S^T Omega^{-1} S with its analytic gradient 2 J^T Omega^{-1} S.
///
/// J = dS/dtheta stacks the constant corrected least-squares Jacobian on the
/// Hessian of the phase discrepancy. `use_phase = false` drops the phase
/// block (Omega^{-1} must then be k x k); used to check that the quadratic
/// form alone reproduces the moment-corrected solution.
class GmmObjective {
 public:
  GmmObjective(const EstimationInputs& in, VectorXd q, MatrixXd omega_inv, bool use_phase = true);

  VectorXd moments(const VectorXd& theta) const;
  MatrixXd jacobian(const VectorXd& theta) const;
  double value(const VectorXd& theta) const;
  double value_gradient(const VectorXd& theta, VectorXd* grad) const;

  const MatrixXd& omega_inv() const { return omega_inv_; }

 private:
  const EstimationInputs& in_;
  VectorXd q_;
  MatrixXd omega_inv_;
  MatrixXd mc_jac_;
  bool use_phase_;
};

struct GmmOptions {
  int bootstrap_b = 100;
  std::uint64_t seed = 0;
  PhaseConfig phase;
  std::optional<double> ql_gamma;
  OptimOptions optim;
  bool compute_se = true;
  bool center_bootstrap = true;  // see bootstrap_omega
  int workers = 1;               // bootstrap threads
};

struct GmmFit {
  ParamVector theta;
  WeightScheme scheme = WeightScheme::equal;
  WeightVector weights;
  MatrixXd omega_hat;  // 2k x 2k
  MatrixXd p1_hat;     // k x 2k, transpose of dS/dtheta at theta
  VectorXd se;         // empty if not computed or failed
  std::string se_error;
  double q_value = 0.0;
  double q_start = 0.0;  // Q at the moment-corrected start, same Omega
  int bootstrap_b = 0;
  int bootstrap_skipped = 0;
  bool converged = false;
  bool used_simplex = false;
  int n_iter = 0;
};

/// Second stage with a given bootstrap covariance: minimizes Q from
/// theta_start and, if requested, attaches standard errors.
GmmFit fit_gmm_given_omega(const EstimationInputs& in, const VectorXd& theta_start,
                           const WeightVector& q, const MatrixXd& omega, const GmmOptions& opt);

/// Two-step GMM for several weight schemes sharing one moment-corrected
/// start and one set of bootstrap resamples.
std::vector<GmmFit> fit_gmm(const Dataset& d, const std::vector<WeightScheme>& schemes,
                            const GmmOptions& opt = {});
GmmFit fit_gmm(const Dataset& d, WeightScheme scheme, const GmmOptions& opt = {});

/// Sandwich standard errors sqrt(diag((P1 Omega^{-1} P1^T)^{-1})) at
/// fit.theta, with P1 = J^T. The corrected least-squares block of J is
/// exact; the phase block is a central-difference Jacobian of the phase
/// gradient (h = 1e-5 (1 + |theta_i|)). Fills fit.p1_hat. Throws
/// Error{se_failure} if the sandwich is singular.
VectorXd gmm_standard_errors(GmmFit& fit, const EstimationInputs& in, const VectorXd& q);

}  // namespace eivgmm

#pragma once

#include <vector>

#include "eivgmm/types.hpp"

namespace eivgmm {

/// Replicate-based measurement-error covariances.
struct CovarianceSet {
  std::vector<MatrixXd> sigma_j;  // per observation, p x p, PSD
  MatrixXd sigma_x;               // pooled true-covariate covariance; may be indefinite
};

/// Pairwise-difference estimator of one observation's error covariance:
/// [n_j(n_j-1)]^{-1} sum_{k<k'} (W_k - W_k')(W_k - W_k')^T for the n_j x p
/// replicate matrix.
MatrixXd estimate_sigma_j(const MatrixXd& replicates);
MatrixXd estimate_sigma_j(const Dataset& d, Index j);

/// Sample covariance of the replicate means minus the mean per-observation
/// error covariance of a mean, n^{-1} sum_j n_j^{-1} Sigma_j.
MatrixXd estimate_sigma_x(const AveragedDesign& avg, const std::vector<MatrixXd>& sigma_j);

CovarianceSet estimate_covariances(const Dataset& d, const AveragedDesign& avg);

/// n^{-1} sum_j n_j^{-1} Sigma_j.
MatrixXd mean_error_covariance(const std::vector<MatrixXd>& sigma_j, const VectorXi& n_rep);

/// Symmetric part with negative eigenvalues truncated at zero.
MatrixXd project_psd(const MatrixXd& a);

/// Omega_j = PSD(Sigma_x) + n_j^{-1} Sigma_j + eps I, eps = 1e-8 trace/p.
/// This is the covariance of the replicate mean W_bar_j used by both
/// heteroscedastic weighting schemes.
std::vector<MatrixXd> mean_covariances(const CovarianceSet& cov, const VectorXi& n_rep);

}  // namespace eivgmm

#pragma once

#include <cstdint>

#include "eivgmm/types.hpp"

namespace eivgmm {

/// Minimum covariance determinant fit.
struct McdResult {
  VectorXd location;
  MatrixXd scatter;  // raw covariance of the best h-subset (no consistency factor)
  double log_det = 0.0;
  bool singular = false;
};

/// FastMCD with h = ceil(h_fraction * M): `n_starts` random (k+1)-subsets,
/// two C-steps each, then the 10 best candidates iterated to convergence.
/// Deterministic for a given seed; ties resolved by start index.
McdResult fast_mcd(const MatrixXd& a, double h_fraction = 0.75, int n_starts = 500,
                   std::uint64_t seed = 20240601);

struct RobustMse {
  MatrixXd mse_rob;
  double det_metric = 0.0;  // det(1000 MSE_rob)
  Index kept_rows = 0;
  double trim_quantile = 0.9;
  bool scatter_fallback = false;  // MCD singular; diagonal MAD^2 scatter used
};

/// Robust mean squared error of M estimates (rows) around `truth`.
///
/// Rows of A = estimates - truth are ranked by Mahalanobis distance to the
/// column medians of A under the MCD scatter; rows beyond the nearest-rank
/// 90th percentile are dropped (ties kept) and MSE_rob = A~^T A~ / M~.
/// Throws Error{validation} for M < 20.
RobustMse robust_mse(const MatrixXd& estimates, const VectorXd& truth);

struct SeSummary {
  VectorXd mc_se;   // column standard deviation of the estimates
  VectorXd avg_se;  // column mean of the reported SEs (non-finite entries skipped)
};

SeSummary mc_se_summary(const MatrixXd& estimates, const MatrixXd& reported_se);

}  // namespace eivgmm

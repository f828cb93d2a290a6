#pragma once

#include <Eigen/Dense>

#include <vector>

#include "eivgmm/errors.hpp"

namespace eivgmm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

/// Coefficients of the error-prone covariates (beta, length p) and of the
/// error-free covariates including the intercept (gamma, length q+1,
/// gamma[0] is the intercept).
struct ParamVector {
  VectorXd beta;
  VectorXd gamma;

  Index size() const { return beta.size() + gamma.size(); }

  /// (beta, gamma) concatenated; this is the ordering used everywhere a
  /// parameter appears as a plain vector.
  VectorXd stacked() const;
  static ParamVector from_stacked(const VectorXd& theta, Index p);
};

/// Replicate-structured errors-in-variables sample.
///
/// Holds outcomes y (n), error-free covariates z (n x (q+1), first column
/// the synthesized intercept) and, per observation, an n_j x p matrix of
/// replicate surrogate measurements. Validated on construction and
/// immutable afterwards.
class Dataset {
 public:
  /// `z_free` excludes the intercept (n x q, q may be 0). Throws
  /// Error{validation} if any invariant fails.
  Dataset(VectorXd y, const MatrixXd& z_free, std::vector<MatrixXd> w_reps);

  const VectorXd& y() const { return y_; }
  const MatrixXd& z() const { return z_; }
  const std::vector<MatrixXd>& w_reps() const { return w_reps_; }
  const MatrixXd& replicates(Index j) const { return w_reps_[static_cast<std::size_t>(j)]; }

  Index n() const { return y_.size(); }
  Index p() const { return p_; }
  Index q() const { return z_.cols() - 1; }
  Index n_params() const { return p_ + z_.cols(); }
  Index n_rep(Index j) const { return replicates(j).rows(); }

  /// Error-free covariates without the intercept column.
  MatrixXd z_free() const { return z_.rightCols(z_.cols() - 1); }

  /// Observations drawn by index (with repetition allowed); replicates are
  /// carried intact.
  Dataset resample(const std::vector<Index>& rows) const;

 private:
  VectorXd y_;
  MatrixXd z_;
  std::vector<MatrixXd> w_reps_;
  Index p_ = 0;
};

/// Per-observation replicate means and replicate counts.
struct AveragedDesign {
  MatrixXd w_bar;  // n x p
  VectorXi n_rep;  // n
};

AveragedDesign average_replicates(const Dataset& d);

/// Regressor matrix [w_bar | z], n x (p+q+1), matching ParamVector::stacked().
MatrixXd regressors(const AveragedDesign& avg, const MatrixXd& z);

}  // namespace eivgmm

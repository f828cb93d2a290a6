#pragma once

#include <optional>
#include <string>
#include <utility>

#include "eivgmm/covariance.hpp"
#include "eivgmm/types.hpp"

namespace eivgmm {

enum class WeightScheme { equal, minimax, quasi_likelihood };

std::string to_string(WeightScheme scheme);
/// Accepts "equal", "mm"/"minimax", "ql"/"quasi_likelihood".
WeightScheme parse_weight_scheme(const std::string& name);

/// Simplex weights of the weighted empirical phase function.
struct WeightVector {
  VectorXd q;
  WeightScheme scheme = WeightScheme::equal;
  bool fell_back = false;      // QL solve failed; equal weights returned
  int n_clamped = 0;           // negative QL weights clamped to 0
  double max_clamp = 0.0;      // largest clamped magnitude
  bool clamp_warning = false;  // some clamp exceeded 1e-3

  /// max_j q_j * n; stays O(1) for well-behaved weights.
  double max_ratio() const { return q.maxCoeff() * static_cast<double>(q.size()); }
};

WeightVector weights_equal(Index n);

/// q_j proportional to 1/lambda_j, lambda_j the largest eigenvalue of
/// Omega_j = PSD(Sigma_x) + n_j^{-1} Sigma_j. Throws Error{degenerate_input}
/// if some lambda_j is not positive.
WeightVector weights_minimax(const CovarianceSet& cov, const VectorXi& n_rep);

/// Raw solution (q, lambda) of the bordered quasi-likelihood system.
struct QlSolution {
  VectorXd q;
  double lambda = 0.0;
};

/// Bordered (n+1) x (n+1) system whose solution gives the quasi-likelihood
/// weights:
///   [ M + gamma (n I - 1 1^T)   1 ] [q     ]   [W_bar A1]
///   [ 1^T                       0 ] [lambda] = [   1    ]
/// with A2 = sum_j Omega_j^{-1}, A1 = sum_j Omega_j^{-1} W_bar_j and
/// M = W_bar A2 W_bar^T. Dense; intended for checks and small n.
std::pair<MatrixXd, VectorXd> ql_bordered_system(const CovarianceSet& cov, const MatrixXd& w_bar,
                                                 const VectorXi& n_rep, double gamma);

/// Solves the bordered system in O(n p^2): on the simplex the -gamma 1 1^T
/// block folds into lambda, leaving a rank-p update of (n gamma) I.
/// Throws Error{weight_solve} if the reduced system is singular.
QlSolution solve_ql_system(const CovarianceSet& cov, const MatrixXd& w_bar, const VectorXi& n_rep,
                           double gamma);

/// Quasi-likelihood weights; `gamma` defaults to 1/n. Negative entries are
/// clamped to zero and the vector renormalized. Falls back to equal weights
/// (fell_back = true) when the system cannot be solved.
WeightVector weights_ql(const CovarianceSet& cov, const MatrixXd& w_bar, const VectorXi& n_rep,
                        std::optional<double> gamma = std::nullopt);

WeightVector compute_weights(WeightScheme scheme, const CovarianceSet& cov,
                             const AveragedDesign& avg, std::optional<double> ql_gamma = std::nullopt);

}  // namespace eivgmm

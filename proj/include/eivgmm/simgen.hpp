#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "eivgmm/rng.hpp"
#include "eivgmm/types.hpp"

namespace eivgmm {

enum class Setting { simple, I, II, III };
enum class ErrorLaw { normal, t2_5, contaminated_normal };

std::string to_string(Setting s);
std::string to_string(ErrorLaw e);
/// "simple", "I", "II", "III" (case-insensitive roman numerals).
Setting parse_setting(const std::string& name);
/// "normal", "t2.5", "contnormal".
ErrorLaw parse_error_law(const std::string& name);

/// Simulation design. `defaults(setting)` fills the true coefficients:
/// simple beta = 1, gamma = 2; I beta = (1, 0.5), gamma = 2;
/// II/III beta = (1, 0.5), gamma = (2, 1, 0.5).
struct SimConfig {
  Setting setting = Setting::I;
  ErrorLaw error_law = ErrorLaw::normal;
  Index n = 1000;
  int n_rep = 2;
  int m_reps = 100;
  double rho = 0.0;          // correlation between measurement-error components
  double copula_corr = 0.5;  // Gaussian-scale correlation between predictors
  double sigma_eps_sq = 0.25;
  std::uint64_t seed = 1;
  VectorXd beta0;
  VectorXd gamma0;  // gamma0[0] is the intercept

  static SimConfig defaults(Setting setting);
  Index p() const { return setting == Setting::simple ? 1 : 2; }
  Index q() const { return setting == Setting::II || setting == Setting::III ? 2 : 0; }
  VectorXd theta0() const;
  /// Throws Error{validation} on inconsistent dimensions or ranges.
  void validate() const;
};

/// Standard deviation scaling that gives |N(0,1)| unit variance.
inline double half_normal_scale() { return 1.0 / std::sqrt(1.0 - 2.0 / std::numbers::pi); }

/// Gaussian copula sample: MVN with unit variances and common pairwise
/// correlation `corr`, each column then mapped through Phi and the inverse
/// CDF of its marginal. Columns flagged in `half_normal` get the unit
/// variance scaled half-normal; the others keep standard normal marginals.
MatrixXd gen_copula(Index n, double corr, const std::vector<bool>& half_normal, Rng& rng);
MatrixXd gen_half_normal_copula(Index n, Index dim, double corr, Rng& rng);
MatrixXd gen_half_normal_copula(Index n, Index dim, double corr, std::uint64_t seed);

/// Sigma_j = D_j R D_j with R = (1-rho) I + rho 1 1^T and diag(D_j) drawn
/// iid from sqrt(n_rep) U(sqrt(0.2), sqrt(1.5)).
std::vector<MatrixXd> gen_error_matrices(Index n, int n_rep, Index p, double rho, Rng& rng);
std::vector<MatrixXd> gen_error_matrices(Index n, int n_rep, Index p, double rho,
                                         std::uint64_t seed);

/// `count` draws (rows) with mean zero and covariance sigma under `law`:
///   normal        N(0, Sigma)
///   t2_5          N(0, 0.2 Sigma) / sqrt(chi2_2.5 / 2.5)
///   contaminated  0.9 N(0, Sigma/10.9) + 0.1 N(0, 100 Sigma/10.9)
/// The mixture component and the chi-square are shared across the
/// coordinates of one draw, so all laws are elliptically symmetric.
MatrixXd draw_errors(ErrorLaw law, const MatrixXd& sigma, Index count, Rng& rng);
MatrixXd draw_errors(ErrorLaw law, const MatrixXd& sigma, Index count, std::uint64_t seed);

struct SimSample {
  Dataset data;
  MatrixXd x_true;                   // latent error-prone covariates, n x p
  std::vector<MatrixXd> sigma_true;  // generating error covariances
};

/// Replication `rep_index` of the design: latent covariates, per-observation
/// error covariances, replicates W_jk = X_j + U_jk and outcomes
/// y = X beta0 + Z gamma0 + eps with eps from the same law (variance
/// sigma_eps_sq). Every random component has its own stream keyed on
/// (seed, setting, rep_index).
SimSample gen_dataset(const SimConfig& cfg, int rep_index);

}  // namespace eivgmm

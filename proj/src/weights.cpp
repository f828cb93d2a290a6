#include "eivgmm/weights.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>

namespace eivgmm {

std::string to_string(WeightScheme scheme) {
  switch (scheme) {
    case WeightScheme::equal: return "equal";
    case WeightScheme::minimax: return "mm";
    case WeightScheme::quasi_likelihood: return "ql";
  }
  return "?";
}

WeightScheme parse_weight_scheme(const std::string& name) {
  if (name == "equal" || name == "eq") return WeightScheme::equal;
  if (name == "mm" || name == "minimax") return WeightScheme::minimax;
  if (name == "ql" || name == "quasi_likelihood") return WeightScheme::quasi_likelihood;
  throw Error(ErrorKind::usage, "unknown weight scheme '" + name + "'");
}

WeightVector weights_equal(Index n) {
  if (n < 1) throw Error(ErrorKind::validation, "need n >= 1 weights");
  WeightVector w;
  w.q = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  w.scheme = WeightScheme::equal;
  return w;
}

namespace {

double largest_eigenvalue(const MatrixXd& a) {
  if (a.rows() == 1) return a(0, 0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  if (a.rows() <= 3) {
    es.computeDirect(a, Eigen::EigenvaluesOnly);
  } else {
    es.compute(a, Eigen::EigenvaluesOnly);
  }
  return es.eigenvalues().maxCoeff();
}

}  // namespace

WeightVector weights_minimax(const CovarianceSet& cov, const VectorXi& n_rep) {
  const std::vector<MatrixXd> omega = mean_covariances(cov, n_rep);
  const auto n = static_cast<Index>(omega.size());
  VectorXd inv_lambda(n);
  for (Index j = 0; j < n; ++j) {
    const double lambda = largest_eigenvalue(omega[static_cast<std::size_t>(j)]);
    if (!(lambda > 0.0)) {
      throw Error(ErrorKind::degenerate_input,
                  "minimax weights: zero covariance for observation " + std::to_string(j));
    }
    inv_lambda(j) = 1.0 / lambda;
  }
  WeightVector w;
  w.q = inv_lambda / inv_lambda.sum();
  w.scheme = WeightScheme::minimax;
  return w;
}

namespace {

struct QlTerms {
  MatrixXd a2;  // sum_j Omega_j^{-1}
  VectorXd a1;  // sum_j Omega_j^{-1} W_bar_j
};

QlTerms ql_terms(const CovarianceSet& cov, const MatrixXd& w_bar, const VectorXi& n_rep) {
  const std::vector<MatrixXd> omega = mean_covariances(cov, n_rep);
  const Index p = w_bar.cols();
  QlTerms t{MatrixXd::Zero(p, p), VectorXd::Zero(p)};
  for (std::size_t j = 0; j < omega.size(); ++j) {
    const Eigen::LDLT<MatrixXd> ldlt(omega[j]);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
      throw Error(ErrorKind::weight_solve,
                  "Omega_j not invertible for observation " + std::to_string(j));
    }
    t.a2 += ldlt.solve(MatrixXd::Identity(p, p));
    t.a1 += ldlt.solve(w_bar.row(static_cast<Index>(j)).transpose());
  }
  t.a2 = 0.5 * (t.a2 + t.a2.transpose()).eval();
  return t;
}

}  // namespace

std::pair<MatrixXd, VectorXd> ql_bordered_system(const CovarianceSet& cov, const MatrixXd& w_bar,
                                                 const VectorXi& n_rep, double gamma) {
  const QlTerms t = ql_terms(cov, w_bar, n_rep);
  const Index n = w_bar.rows();
  MatrixXd a(n + 1, n + 1);
  a.topLeftCorner(n, n) = w_bar * t.a2 * w_bar.transpose();
  a.topLeftCorner(n, n).array() -= gamma;
  a.topLeftCorner(n, n).diagonal().array() += static_cast<double>(n) * gamma;
  a.col(n).head(n).setOnes();
  a.row(n).head(n).setOnes();
  a(n, n) = 0.0;
  VectorXd b(n + 1);
  b.head(n) = w_bar * t.a1;
  b(n) = 1.0;
  return {a, b};
}

QlSolution solve_ql_system(const CovarianceSet& cov, const MatrixXd& w_bar, const VectorXi& n_rep,
                           double gamma) {
  const Index n = w_bar.rows();
  const double c = static_cast<double>(n) * gamma;
  if (!(c > 0.0)) throw Error(ErrorKind::weight_solve, "QL penalty gamma must be positive");

  const QlTerms t = ql_terms(cov, w_bar, n_rep);
  const Eigen::LLT<MatrixXd> chol(t.a2);
  if (chol.info() != Eigen::Success) {
    throw Error(ErrorKind::weight_solve, "sum of Omega_j^{-1} is not positive definite");
  }
  // M = U U^T with U = W_bar L. Split R^n into span(U) = span(Qu) and its
  // complement:  (c I + U U^T)^{-1} = Qu (c I + R R^T)^{-1} Qu^T + c^{-1} (I - Qu Qu^T).
  const MatrixXd u = w_bar * chol.matrixL().toDenseMatrix();
  const Eigen::HouseholderQR<MatrixXd> qr(u);
  const Index p = u.cols();
  const MatrixXd qu = qr.householderQ() * MatrixXd::Identity(n, p);
  const MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  MatrixXd inner = r * r.transpose();
  inner.diagonal().array() += c;
  const Eigen::LLT<MatrixXd> inner_chol(inner);
  if (inner_chol.info() != Eigen::Success) {
    throw Error(ErrorKind::weight_solve, "QL reduced system is singular");
  }
  auto apply_inverse = [&](const VectorXd& rhs) -> VectorXd {
    const VectorXd a = qu.transpose() * rhs;
    return qu * inner_chol.solve(a) + (rhs - qu * a) / c;
  };
  auto apply_operator = [&](const VectorXd& x) -> VectorXd {
    return u * (u.transpose() * x) + c * x;
  };

  const VectorXd rhs = w_bar * t.a1;
  const VectorXd x_1 = apply_inverse(VectorXd::Ones(n));
  const double denom = x_1.sum();
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    throw Error(ErrorKind::weight_solve, "QL bordered system is singular");
  }
  // Eliminate mu from (M + cI) q + mu 1 = rhs, 1^T q = 1.
  auto solve_folded = [&](const VectorXd& top, double bottom, double& mu) -> VectorXd {
    const VectorXd x_b = apply_inverse(top);
    mu = (x_b.sum() - bottom) / denom;
    return x_b - mu * x_1;
  };
  double mu = 0.0;
  VectorXd q = solve_folded(rhs, 1.0, mu);
  {
    double dmu = 0.0;
    const VectorXd res_top = rhs - apply_operator(q) - VectorXd::Constant(n, mu);
    const double res_bottom = 1.0 - q.sum();
    q += solve_folded(res_top, res_bottom, dmu);
    mu += dmu;
  }

  QlSolution sol;
  sol.q = q;
  sol.lambda = mu + gamma;
  if (!sol.q.allFinite()) throw Error(ErrorKind::weight_solve, "QL solution is not finite");
  return sol;
}

WeightVector weights_ql(const CovarianceSet& cov, const MatrixXd& w_bar, const VectorXi& n_rep,
                        std::optional<double> gamma) {
  const Index n = w_bar.rows();
  WeightVector w;
  w.scheme = WeightScheme::quasi_likelihood;
  QlSolution sol;
  try {
    sol = solve_ql_system(cov, w_bar, n_rep, gamma.value_or(1.0 / static_cast<double>(n)));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::weight_solve) throw;
    w.q = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    w.fell_back = true;
    return w;
  }

  const double tiny = 1e-12 / static_cast<double>(n);
  w.q = sol.q;
  bool any_negative = false;
  for (Index j = 0; j < n; ++j) {
    if (w.q(j) < 0.0) {
      any_negative = true;
      if (w.q(j) < -tiny) {
        ++w.n_clamped;
        w.max_clamp = std::max(w.max_clamp, -w.q(j));
      }
      w.q(j) = 0.0;
    }
  }
  if (any_negative) w.q /= w.q.sum();
  w.clamp_warning = w.max_clamp > 1e-3;
  return w;
}

WeightVector compute_weights(WeightScheme scheme, const CovarianceSet& cov,
                             const AveragedDesign& avg, std::optional<double> ql_gamma) {
  switch (scheme) {
    case WeightScheme::equal: return weights_equal(avg.w_bar.rows());
    case WeightScheme::minimax: return weights_minimax(cov, avg.n_rep);
    case WeightScheme::quasi_likelihood: return weights_ql(cov, avg.w_bar, avg.n_rep, ql_gamma);
  }
  throw Error(ErrorKind::validation, "unknown weight scheme");
}

}  // namespace eivgmm

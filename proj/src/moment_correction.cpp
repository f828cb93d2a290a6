#include "eivgmm/moment_correction.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <sstream>

namespace eivgmm {

McSystem assemble_mc_system(const MatrixXd& v, const VectorXd& y,
                            const std::vector<MatrixXd>& sigma_j, const VectorXi& n_rep) {
  McSystem sys;
  sys.n = v.rows();
  sys.p = sigma_j.front().rows();
  sys.gram = v.transpose() * v;
  sys.rhs = v.transpose() * y;
  for (std::size_t j = 0; j < sigma_j.size(); ++j) {
    sys.gram.topLeftCorner(sys.p, sys.p) -=
        sigma_j[j] / static_cast<double>(n_rep(static_cast<Index>(j)));
  }
  return sys;
}

VectorXd mc_gradient(const McSystem& sys, const VectorXd& theta) {
  return (2.0 / static_cast<double>(sys.n)) * (sys.gram * theta - sys.rhs);
}

MatrixXd mc_jacobian(const McSystem& sys) {
  return (2.0 / static_cast<double>(sys.n)) * sys.gram;
}

double corrected_norm(const MatrixXd& v, const VectorXd& y, const MatrixXd& mean_sigma,
                      const VectorXd& theta) {
  const Index p = mean_sigma.rows();
  const VectorXd resid = y - v * theta;
  const VectorXd beta = theta.head(p);
  return resid.squaredNorm() / static_cast<double>(y.size()) - beta.dot(mean_sigma * beta);
}

McFit fit_mc(const Dataset& d, const AveragedDesign& avg, const CovarianceSet& cov) {
  const MatrixXd v = regressors(avg, d.z());
  const McSystem sys = assemble_mc_system(v, d.y(), cov.sigma_j, avg.n_rep);

  Eigen::JacobiSVD<MatrixXd> svd(sys.gram);
  const VectorXd sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                              : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12)) {
    std::ostringstream msg;
    msg << "moment-corrected system is singular or near-singular (condition number " << cond
        << "); more observations or less collinear covariates are needed";
    throw Error(ErrorKind::estimation, msg.str());
  }

  const Eigen::PartialPivLU<MatrixXd> lu(sys.gram);
  VectorXd theta = lu.solve(sys.rhs);
  theta += lu.solve(sys.rhs - sys.gram * theta);  // one refinement step

  McFit fit;
  fit.theta = ParamVector::from_stacked(theta, d.p());
  fit.sigma_eps_sq =
      std::max(0.0, corrected_norm(v, d.y(), mean_error_covariance(cov.sigma_j, avg.n_rep), theta));
  fit.gram = sys.gram;
  return fit;
}

McFit fit_mc(const Dataset& d, const CovarianceSet& cov) {
  return fit_mc(d, average_replicates(d), cov);
}

VectorXd fit_ols(const VectorXd& y, const MatrixXd& x) {
  const Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
  if (qr.rank() < x.cols()) {
    throw Error(ErrorKind::estimation, "OLS design is rank deficient (rank " +
                                           std::to_string(qr.rank()) + " < " +
                                           std::to_string(x.cols()) + ")");
  }
  return qr.solve(y);
}

ParamVector fit_naive(const Dataset& d) {
  const MatrixXd v = regressors(average_replicates(d), d.z());
  return ParamVector::from_stacked(fit_ols(d.y(), v), d.p());
}

ParamVector fit_true(const VectorXd& y, const MatrixXd& x_true, const MatrixXd& z) {
  MatrixXd v(x_true.rows(), x_true.cols() + z.cols());
  v << x_true, z;
  return ParamVector::from_stacked(fit_ols(y, v), x_true.cols());
}

VectorXd ols_standard_errors(const VectorXd& y, const MatrixXd& x, const VectorXd& coef) {
  const Index n = x.rows();
  const Index k = x.cols();
  const double s2 = (y - x * coef).squaredNorm() / static_cast<double>(n - k);
  const MatrixXd xtx_inv = (x.transpose() * x).ldlt().solve(MatrixXd::Identity(k, k));
  return (s2 * xtx_inv.diagonal()).cwiseSqrt();
}

}  // namespace eivgmm

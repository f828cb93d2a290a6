#include "eivgmm/covariance.hpp"

#include <Eigen/Eigenvalues>

namespace eivgmm {

MatrixXd estimate_sigma_j(const MatrixXd& replicates) {
  const Index nj = replicates.rows();
  const Index p = replicates.cols();
  if (nj < 2) throw Error(ErrorKind::validation, "need at least 2 replicates");
  MatrixXd s = MatrixXd::Zero(p, p);
  for (Index k = 0; k + 1 < nj; ++k) {
    for (Index l = k + 1; l < nj; ++l) {
      const VectorXd diff = (replicates.row(k) - replicates.row(l)).transpose();
      s.selfadjointView<Eigen::Lower>().rankUpdate(diff);
    }
  }
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return s / static_cast<double>(nj * (nj - 1));
}

MatrixXd estimate_sigma_j(const Dataset& d, Index j) { return estimate_sigma_j(d.replicates(j)); }

MatrixXd mean_error_covariance(const std::vector<MatrixXd>& sigma_j, const VectorXi& n_rep) {
  const Index p = sigma_j.front().rows();
  MatrixXd acc = MatrixXd::Zero(p, p);
  for (std::size_t j = 0; j < sigma_j.size(); ++j) {
    acc += sigma_j[j] / static_cast<double>(n_rep(static_cast<Index>(j)));
  }
  return acc / static_cast<double>(sigma_j.size());
}

MatrixXd estimate_sigma_x(const AveragedDesign& avg, const std::vector<MatrixXd>& sigma_j) {
  const Index n = avg.w_bar.rows();
  const MatrixXd centered = avg.w_bar.rowwise() - avg.w_bar.colwise().mean();
  MatrixXd sx = (centered.transpose() * centered) / static_cast<double>(n - 1);
  sx -= mean_error_covariance(sigma_j, avg.n_rep);
  return 0.5 * (sx + sx.transpose());
}

CovarianceSet estimate_covariances(const Dataset& d, const AveragedDesign& avg) {
  CovarianceSet cov;
  cov.sigma_j.reserve(static_cast<std::size_t>(d.n()));
  for (Index j = 0; j < d.n(); ++j) cov.sigma_j.push_back(estimate_sigma_j(d, j));
  cov.sigma_x = estimate_sigma_x(avg, cov.sigma_j);
  return cov;
}

MatrixXd project_psd(const MatrixXd& a) {
  const MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  const VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
}

std::vector<MatrixXd> mean_covariances(const CovarianceSet& cov, const VectorXi& n_rep) {
  const MatrixXd sx = project_psd(cov.sigma_x);
  const Index p = sx.rows();
  std::vector<MatrixXd> omega;
  omega.reserve(cov.sigma_j.size());
  for (std::size_t j = 0; j < cov.sigma_j.size(); ++j) {
    MatrixXd o = sx + cov.sigma_j[j] / static_cast<double>(n_rep(static_cast<Index>(j)));
    const double ridge = 1e-8 * o.trace() / static_cast<double>(p);
    o.diagonal().array() += ridge;
    omega.push_back(std::move(o));
  }
  return omega;
}

}  // namespace eivgmm

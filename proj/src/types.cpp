#include "eivgmm/types.hpp"

#include <cmath>
#include <sstream>

namespace eivgmm {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parse: return "parse_error";
    case ErrorKind::validation: return "validation_error";
    case ErrorKind::degenerate_input: return "degenerate_input";
    case ErrorKind::estimation: return "estimation_error";
    case ErrorKind::weight_solve: return "weight_solve_error";
    case ErrorKind::bootstrap_instability: return "bootstrap_instability";
    case ErrorKind::se_failure: return "se_failure";
    case ErrorKind::usage: return "usage_error";
  }
  return "error";
}

VectorXd ParamVector::stacked() const {
  VectorXd theta(size());
  theta << beta, gamma;
  return theta;
}

ParamVector ParamVector::from_stacked(const VectorXd& theta, Index p) {
  if (p < 0 || p > theta.size()) {
    throw Error(ErrorKind::validation, "parameter split out of range");
  }
  return ParamVector{theta.head(p), theta.tail(theta.size() - p)};
}

Dataset::Dataset(VectorXd y, const MatrixXd& z_free, std::vector<MatrixXd> w_reps)
    : y_(std::move(y)), w_reps_(std::move(w_reps)) {
  const Index n = y_.size();
  if (z_free.rows() != n || static_cast<Index>(w_reps_.size()) != n) {
    throw Error(ErrorKind::validation, "y, z and replicate lists disagree on n");
  }
  if (n == 0) throw Error(ErrorKind::validation, "empty dataset");

  p_ = w_reps_.front().cols();
  if (p_ < 1) throw Error(ErrorKind::validation, "need at least one error-prone covariate");

  z_.resize(n, z_free.cols() + 1);
  z_.col(0).setOnes();
  z_.rightCols(z_free.cols()) = z_free;

  if (!y_.allFinite() || !z_.allFinite()) {
    throw Error(ErrorKind::validation, "non-finite value in y or z");
  }

  std::ostringstream bad;
  int n_bad = 0;
  for (Index j = 0; j < n; ++j) {
    const MatrixXd& w = w_reps_[static_cast<std::size_t>(j)];
    if (w.cols() != p_) {
      throw Error(ErrorKind::validation, "observation " + std::to_string(j) +
                                             " has inconsistent replicate width");
    }
    if (!w.allFinite()) {
      throw Error(ErrorKind::validation,
                  "non-finite replicate value in observation " + std::to_string(j));
    }
    if (w.rows() < 2) {
      if (n_bad++ < 20) bad << (n_bad > 1 ? "," : "") << j;
    }
  }
  if (n_bad > 0) {
    throw Error(ErrorKind::validation,
                "n_j<2 for " + std::to_string(n_bad) + " observation(s): " + bad.str());
  }
  if (n < p_ + z_.cols() + 1) {
    throw Error(ErrorKind::validation, "need n >= p+q+2 observations, got n=" +
                                           std::to_string(n));
  }
}

Dataset Dataset::resample(const std::vector<Index>& rows) const {
  const Index m = static_cast<Index>(rows.size());
  VectorXd y(m);
  MatrixXd zf(m, q());
  std::vector<MatrixXd> w;
  w.reserve(rows.size());
  for (Index i = 0; i < m; ++i) {
    const Index j = rows[static_cast<std::size_t>(i)];
    y(i) = y_(j);
    zf.row(i) = z_.row(j).tail(q());
    w.push_back(replicates(j));
  }
  return Dataset(std::move(y), zf, std::move(w));
}

AveragedDesign average_replicates(const Dataset& d) {
  AveragedDesign avg;
  avg.w_bar.resize(d.n(), d.p());
  avg.n_rep.resize(d.n());
  for (Index j = 0; j < d.n(); ++j) {
    const MatrixXd& w = d.replicates(j);
    avg.w_bar.row(j) = w.colwise().mean();
    avg.n_rep(j) = static_cast<int>(w.rows());
  }
  return avg;
}

MatrixXd regressors(const AveragedDesign& avg, const MatrixXd& z) {
  MatrixXd v(avg.w_bar.rows(), avg.w_bar.cols() + z.cols());
  v << avg.w_bar, z;
  return v;
}

}  // namespace eivgmm

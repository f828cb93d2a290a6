#include "eivgmm/metrics.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "eivgmm/rng.hpp"

namespace eivgmm {

namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(mid)));
}

VectorXd column_medians(const MatrixXd& a) {
  VectorXd med(a.cols());
  for (Index c = 0; c < a.cols(); ++c) {
    med(c) = median(std::vector<double>(a.col(c).data(), a.col(c).data() + a.rows()));
  }
  return med;
}

struct Subset {
  std::vector<Index> rows;
  VectorXd mean;
  MatrixXd cov;
  double log_det = std::numeric_limits<double>::infinity();
  bool ok = false;
};

void fit_subset(const MatrixXd& a, Subset& s) {
  const Index k = a.cols();
  s.mean = VectorXd::Zero(k);
  for (const Index r : s.rows) s.mean += a.row(r).transpose();
  s.mean /= static_cast<double>(s.rows.size());
  s.cov = MatrixXd::Zero(k, k);
  for (const Index r : s.rows) {
    const VectorXd d = a.row(r).transpose() - s.mean;
    s.cov.selfadjointView<Eigen::Lower>().rankUpdate(d);
  }
  s.cov = s.cov.selfadjointView<Eigen::Lower>();
  s.cov /= static_cast<double>(s.rows.size());
  const Eigen::LLT<MatrixXd> llt(s.cov);
  s.ok = llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0;
  s.log_det = s.ok ? 2.0 * llt.matrixLLT().diagonal().array().log().sum()
                   : -std::numeric_limits<double>::infinity();
}

VectorXd sq_distances(const MatrixXd& a, const VectorXd& center, const MatrixXd& scatter) {
  const Eigen::LLT<MatrixXd> llt(scatter);
  const MatrixXd centered = (a.rowwise() - center.transpose()).transpose();  // k x M
  const MatrixXd z = llt.matrixL().solve(centered);
  return z.colwise().squaredNorm().transpose();
}

// Indices of the h smallest distances; ties broken by row index.
std::vector<Index> smallest(const VectorXd& d, Index h) {
  std::vector<Index> idx(static_cast<std::size_t>(d.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Index x, Index y) { return d(x) < d(y); });
  idx.resize(static_cast<std::size_t>(h));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// One concentration step; returns false when the subset stopped changing.
bool c_step(const MatrixXd& a, Index h, Subset& s) {
  std::vector<Index> next = smallest(sq_distances(a, s.mean, s.cov), h);
  if (next == s.rows) return false;
  s.rows = std::move(next);
  fit_subset(a, s);
  return s.ok;
}

}  // namespace

McdResult fast_mcd(const MatrixXd& a, double h_fraction, int n_starts, std::uint64_t seed) {
  const Index m = a.rows();
  const Index k = a.cols();
  const auto h = std::min<Index>(m, static_cast<Index>(std::ceil(h_fraction * static_cast<double>(m))));
  if (h <= k) throw Error(ErrorKind::validation, "MCD needs more rows than dimensions");

  Rng rng = make_stream({seed, tag(StreamTag::mcd)});
  std::vector<Subset> candidates;
  candidates.reserve(static_cast<std::size_t>(n_starts));
  std::vector<Index> perm(static_cast<std::size_t>(m));
  for (int start = 0; start < n_starts; ++start) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Subset s;
    // Grow the elemental subset until its covariance is nonsingular.
    for (Index size = k + 1; size <= m; ++size) {
      s.rows.assign(perm.begin(), perm.begin() + size);
      fit_subset(a, s);
      if (s.ok) break;
    }
    if (!s.ok) continue;
    s.rows = smallest(sq_distances(a, s.mean, s.cov), h);
    fit_subset(a, s);
    for (int step = 0; step < 2 && s.ok; ++step) c_step(a, h, s);
    if (s.ok) candidates.push_back(std::move(s));
  }

  McdResult out;
  if (candidates.empty()) {
    out.singular = true;
    return out;
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Subset& x, const Subset& y) { return x.log_det < y.log_det; });
  candidates.resize(std::min<std::size_t>(10, candidates.size()));
  const Subset* best = nullptr;
  for (Subset& s : candidates) {
    for (int step = 0; step < 100 && s.ok; ++step) {
      if (!c_step(a, h, s)) break;
    }
    if (s.ok && (!best || s.log_det < best->log_det)) best = &s;
  }
  if (!best) {
    out.singular = true;
    return out;
  }
  out.location = best->mean;
  out.scatter = best->cov;
  out.log_det = best->log_det;
  return out;
}

RobustMse robust_mse(const MatrixXd& estimates, const VectorXd& truth) {
  const Index m = estimates.rows();
  const Index k = estimates.cols();
  if (m < 20) throw Error(ErrorKind::validation, "robust MSE needs at least 20 estimates");
  if (truth.size() != k) throw Error(ErrorKind::validation, "truth has the wrong dimension");

  const MatrixXd a = estimates.rowwise() - truth.transpose();
  const VectorXd med = column_medians(a);

  RobustMse out;
  MatrixXd scatter;
  const McdResult mcd = fast_mcd(a);
  if (!mcd.singular && std::isfinite(mcd.log_det)) {
    scatter = mcd.scatter;
  } else {
    out.scatter_fallback = true;
    scatter = MatrixXd::Zero(k, k);
    for (Index c = 0; c < k; ++c) {
      std::vector<double> dev(static_cast<std::size_t>(m));
      for (Index i = 0; i < m; ++i) dev[static_cast<std::size_t>(i)] = std::abs(a(i, c) - med(c));
      double mad = median(dev);
      if (!(mad > 0.0)) mad = std::sqrt(std::inner_product(dev.begin(), dev.end(), dev.begin(), 0.0) / static_cast<double>(m));
      scatter(c, c) = mad > 0.0 ? mad * mad : 1.0;
    }
  }

  const VectorXd d = sq_distances(a, med, scatter);
  std::vector<double> sorted(d.data(), d.data() + m);
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(out.trim_quantile * static_cast<double>(m)));
  const double cut = sorted[std::max<std::size_t>(rank, 1) - 1];

  out.mse_rob = MatrixXd::Zero(k, k);
  for (Index i = 0; i < m; ++i) {
    if (d(i) <= cut) {
      out.mse_rob.selfadjointView<Eigen::Lower>().rankUpdate(a.row(i).transpose());
      ++out.kept_rows;
    }
  }
  out.mse_rob = out.mse_rob.selfadjointView<Eigen::Lower>();
  out.mse_rob /= static_cast<double>(out.kept_rows);
  out.det_metric = std::max(0.0, (1000.0 * out.mse_rob).determinant());
  return out;
}

SeSummary mc_se_summary(const MatrixXd& estimates, const MatrixXd& reported_se) {
  const Index m = estimates.rows();
  if (m < 2) throw Error(ErrorKind::validation, "Monte Carlo SE needs at least 2 estimates");
  SeSummary out;
  const VectorXd mean = estimates.colwise().mean();
  out.mc_se = ((estimates.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() /
               static_cast<double>(m - 1))
                  .cwiseSqrt();
  out.avg_se = VectorXd::Constant(reported_se.cols(), std::numeric_limits<double>::quiet_NaN());
  for (Index c = 0; c < reported_se.cols(); ++c) {
    double sum = 0.0;
    int count = 0;
    for (Index i = 0; i < reported_se.rows(); ++i) {
      if (std::isfinite(reported_se(i, c))) {
        sum += reported_se(i, c);
        ++count;
      }
    }
    if (count > 0) out.avg_se(c) = sum / count;
  }
  return out;
}

}  // namespace eivgmm

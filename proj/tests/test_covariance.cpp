#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/erf.hpp>

#include "eivgmm/covariance.hpp"
#include "eivgmm/simgen.hpp"
#include "fixtures.hpp"

using namespace eivgmm;

TEST_CASE("sigma_j: single pair") {
  MatrixXd w(2, 2);
  w << 1, 0, 0, 1;
  const MatrixXd s = estimate_sigma_j(w);
  CHECK(s(0, 0) == doctest::Approx(0.5));
  CHECK(s(0, 1) == doctest::Approx(-0.5));
  CHECK(s(1, 0) == doctest::Approx(-0.5));
  CHECK(s(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("sigma_j: two replicates equal half the outer product of the difference") {
  Rng rng = make_stream({17});
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd w(2, 3);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = nd(rng);
    const VectorXd diff = (w.row(0) - w.row(1)).transpose();
    const MatrixXd closed = 0.5 * diff * diff.transpose();
    CHECK((estimate_sigma_j(w) - closed).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("sigma_j: identical replicates give zero") {
  MatrixXd w(3, 2);
  w << 0.3, 1.2, 0.3, 1.2, 0.3, 1.2;
  CHECK(estimate_sigma_j(w).isZero(0.0));
}

TEST_CASE("sigma_j equals the sample covariance of the replicates") {
  Rng rng = make_stream({18});
  std::normal_distribution<double> nd;
  MatrixXd w(5, 2);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = nd(rng);
  const MatrixXd c = w.rowwise() - w.colwise().mean();
  const MatrixXd sample = c.transpose() * c / 4.0;
  // Pairwise differences reproduce the usual unbiased sample covariance.
  CHECK((estimate_sigma_j(w) - sample).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("sigma_j is unbiased for the error covariance (Monte Carlo)") {
  // Sigma = diag(0.5, 1.5), n_j = 3, 1e5 draws: mean within 1% per entry.
  Rng rng = make_stream({19});
  std::normal_distribution<double> nd;
  const double sd0 = std::sqrt(0.5);
  const double sd1 = std::sqrt(1.5);
  MatrixXd acc = MatrixXd::Zero(2, 2);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    MatrixXd w(3, 2);
    for (Index r = 0; r < 3; ++r) {
      w(r, 0) = 2.0 + sd0 * nd(rng);
      w(r, 1) = -1.0 + sd1 * nd(rng);
    }
    acc += estimate_sigma_j(w);
  }
  acc /= draws;
  CHECK(acc(0, 0) == doctest::Approx(0.5).epsilon(0.01));
  CHECK(acc(1, 1) == doctest::Approx(1.5).epsilon(0.01));
  CHECK(std::abs(acc(0, 1)) < 0.01);
}

TEST_CASE("sigma_x without measurement error is the sample covariance of the means") {
  Rng rng = make_stream({20});
  std::normal_distribution<double> nd;
  std::vector<MatrixXd> reps;
  MatrixXd x(30, 2);
  for (Index j = 0; j < 30; ++j) {
    x(j, 0) = nd(rng);
    x(j, 1) = x(j, 0) + nd(rng);
    reps.push_back(MatrixXd(x.row(j).replicate(2, 1)));
  }
  const Dataset d(VectorXd::Ones(30), MatrixXd(30, 0), reps);
  const AveragedDesign avg = average_replicates(d);
  const CovarianceSet cov = estimate_covariances(d, avg);
  const MatrixXd c = x.rowwise() - x.colwise().mean();
  CHECK((cov.sigma_x - c.transpose() * c / 29.0).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("sigma_x recovers the covariate covariance in Setting I at n = 1e4") {
  SimConfig cfg = SimConfig::defaults(Setting::I);
  cfg.n = 10000;
  cfg.rho = 0.5;
  const SimSample s = gen_dataset(cfg, 0);
  const AveragedDesign avg = average_replicates(s.data);
  const CovarianceSet cov = estimate_covariances(s.data, avg);
  // Pearson covariance of the two marginals: E[g(Z1) g(Z2)] - E[g]^2 for the
  // half-normal quantile map g and Gaussian correlation 0.5, by a tensor
  // trapezoid rule on [-8, 8]^2.
  const double r = 0.5;
  const int nodes = 1601;
  const double h = 16.0 / (nodes - 1);
  VectorXd z(nodes), g(nodes), w(nodes);
  for (int i = 0; i < nodes; ++i) {
    z(i) = -8.0 + h * i;
    g(i) = half_normal_scale() * std::numbers::sqrt2 *
           boost::math::erfc_inv(0.5 * std::erfc(z(i) / std::numbers::sqrt2));
    w(i) = (i == 0 || i == nodes - 1) ? 0.5 * h : h;
  }
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(1.0 - r * r));
  double e12 = 0.0;
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) {
      const double q = (z(i) * z(i) - 2.0 * r * z(i) * z(j) + z(j) * z(j)) / (1.0 - r * r);
      e12 += w(i) * w(j) * g(i) * g(j) * norm * std::exp(-0.5 * q);
    }
  }
  const double mean = std::sqrt(2.0 / std::numbers::pi) * half_normal_scale();
  const double off = e12 - mean * mean;
  CHECK(cov.sigma_x(0, 0) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(cov.sigma_x(1, 1) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(cov.sigma_x(0, 1) - off) < 0.025);
}

TEST_CASE("sigma_x can be indefinite; PSD projection repairs it") {
  // Observations sharing one mean, each with nonzero replicate spread.
  MatrixXd a(2, 2), b(2, 2);
  a << 0, 0, 2, 2;
  b << 2, 0, 0, 2;
  const Dataset d(VectorXd::LinSpaced(4, 0, 1), MatrixXd(4, 0), {a, b, a, b});
  const AveragedDesign avg = average_replicates(d);
  const CovarianceSet cov = estimate_covariances(d, avg);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov.sigma_x);
  CHECK(es.eigenvalues().maxCoeff() < 0.0);
  const MatrixXd proj = project_psd(cov.sigma_x);
  CHECK(proj.isZero(1e-14));
  const auto omega = mean_covariances(cov, avg.n_rep);
  for (const auto& o : omega) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eo(o);
    CHECK(eo.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("mean covariances add the replicate-mean error and a tiny ridge") {
  CovarianceSet cov;
  cov.sigma_x = MatrixXd::Identity(2, 2);
  MatrixXd s(2, 2);
  s << 2, 0.4, 0.4, 1;
  cov.sigma_j = {s, 2 * s};
  VectorXi n_rep(2);
  n_rep << 2, 4;
  const auto omega = mean_covariances(cov, n_rep);
  const MatrixXd expect0 = MatrixXd::Identity(2, 2) + s / 2.0;
  const double ridge0 = 1e-8 * expect0.trace() / 2.0;
  CHECK((omega[0] - expect0 - ridge0 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((omega[1] - expect0).cwiseAbs().maxCoeff() < 1e-7);
}

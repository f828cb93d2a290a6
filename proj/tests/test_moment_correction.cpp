#include <doctest.h>

#include "eivgmm/covariance.hpp"
#include "eivgmm/moment_correction.hpp"
#include "eivgmm/simgen.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace eivgmm;

namespace {

Dataset toy_five() {
  // n = 5, p = 1, q = 0.
  const double w[5][2] = {{0.2, 0.6}, {1.1, 0.7}, {2.3, 1.9}, {-0.4, 0.2}, {1.6, 2.4}};
  VectorXd y(5);
  y << 1.3, 2.0, 3.1, 0.9, 3.0;
  std::vector<MatrixXd> reps;
  for (const auto& row : w) {
    MatrixXd m(2, 1);
    m << row[0], row[1];
    reps.push_back(m);
  }
  return Dataset(y, MatrixXd(5, 0), reps);
}

}  // namespace

TEST_CASE("fit_mc matches an independent dense solve on five observations") {
  const Dataset d = toy_five();
  const AveragedDesign avg = average_replicates(d);
  CovarianceSet cov;
  for (double s : {0.10, 0.05, 0.20, 0.15, 0.08}) cov.sigma_j.push_back(MatrixXd::Constant(1, 1, s));
  cov.sigma_x = MatrixXd::Identity(1, 1);
  const McFit fit = fit_mc(d, avg, cov);
  const VectorXd ref = oracle::dense_mc_solve(d, cov.sigma_j);
  CHECK((fit.theta.stacked() - ref).cwiseAbs().maxCoeff() < 1e-12);

  // Same check with the replicate-based covariances.
  const CovarianceSet est = estimate_covariances(d, avg);
  const VectorXd ref2 = oracle::dense_mc_solve(d, est.sigma_j);
  CHECK((fit_mc(d, avg, est).theta.stacked() - ref2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_mc matches the dense solve with several covariates") {
  const Dataset d = fixture::small_sample(40, 2, 2, 31, 3);
  const AveragedDesign avg = average_replicates(d);
  const CovarianceSet cov = estimate_covariances(d, avg);
  const VectorXd ref = oracle::dense_mc_solve(d, cov.sigma_j);
  CHECK((fit_mc(d, avg, cov).theta.stacked() - ref).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("without measurement error the corrected fit is OLS on the means") {
  Dataset noisy = fixture::small_sample(25, 2, 1, 5);
  std::vector<MatrixXd> reps;
  for (Index j = 0; j < noisy.n(); ++j) reps.push_back(noisy.replicates(j).row(0).replicate(2, 1));
  const Dataset d(noisy.y(), noisy.z_free(), reps);
  const McFit mc = fit_mc(d, estimate_covariances(d, average_replicates(d)));
  CHECK((mc.theta.stacked() - fit_naive(d).stacked()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("moment-corrected gradient vanishes at the fit") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Dataset d = fixture::small_sample(200, 2, 1, seed);
    const AveragedDesign avg = average_replicates(d);
    const CovarianceSet cov = estimate_covariances(d, avg);
    const McSystem sys = assemble_mc_system(regressors(avg, d.z()), d.y(), cov.sigma_j, avg.n_rep);
    const McFit fit = fit_mc(d, avg, cov);
    CHECK(mc_gradient(sys, fit.theta.stacked()).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("mc_gradient is the derivative of the corrected norm") {
  const Dataset d = fixture::small_sample(50, 2, 1, 7);
  const AveragedDesign avg = average_replicates(d);
  const CovarianceSet cov = estimate_covariances(d, avg);
  const MatrixXd v = regressors(avg, d.z());
  const McSystem sys = assemble_mc_system(v, d.y(), cov.sigma_j, avg.n_rep);
  const MatrixXd mean_sigma = mean_error_covariance(cov.sigma_j, avg.n_rep);
  VectorXd theta(4);
  theta << 0.7, 1.2, 0.9, -0.3;
  const VectorXd fd = oracle::central_difference(
      [&](const VectorXd& t) { return corrected_norm(v, d.y(), mean_sigma, t); }, theta, 1e-6);
  const VectorXd g = mc_gradient(sys, theta);
  CHECK((g - fd).cwiseAbs().maxCoeff() < 1e-7 * (1.0 + g.cwiseAbs().maxCoeff()));
  CHECK((mc_jacobian(sys) - 2.0 / 50.0 * sys.gram).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("corrected slope is consistent where OLS attenuates") {
  SimConfig cfg = SimConfig::defaults(Setting::simple);
  cfg.n = 10000;
  const SimSample s = gen_dataset(cfg, 0);
  const McFit mc = fit_mc(s.data, estimate_covariances(s.data, average_replicates(s.data)));
  CHECK(mc.theta.beta(0) == doctest::Approx(1.0).epsilon(0.03));
  // Var(X) = 1 and E[sigma_j^2 / n_j] = E[U(0.2, 1.5)] = 0.85.
  const double attenuation = 1.0 / (1.0 + 0.85);
  CHECK(fit_naive(s.data).beta(0) == doctest::Approx(attenuation).epsilon(0.05));
}

TEST_CASE("ols: exact fit and textbook slope") {
  VectorXd x = VectorXd::LinSpaced(6, -1, 4);
  MatrixXd design(6, 2);
  design.col(0).setOnes();
  design.col(1) = x;
  const VectorXd coef = fit_ols((2.0 + 3.0 * x.array()).matrix(), design);
  CHECK(coef(0) == doctest::Approx(2.0));
  CHECK(coef(1) == doctest::Approx(3.0));

  VectorXd xc(4), yc(4);
  xc << -1.5, -0.5, 0.5, 1.5;
  yc << -1.0, 0.4, -0.2, 0.8;
  design.resize(4, 2);
  design.col(0).setOnes();
  design.col(1) = xc;
  const double slope = xc.dot(yc) / xc.squaredNorm();
  CHECK(fit_ols(yc, design)(1) == doctest::Approx(slope));
}

TEST_CASE("rank deficiency is an estimation error") {
  MatrixXd design(5, 2);
  design.col(0).setOnes();
  design.col(1).setOnes();
  try {
    fit_ols(VectorXd::LinSpaced(5, 0, 1), design);
    FAIL("expected an estimation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::estimation);
  }

  // Identical constant replicates make the corrected system singular.
  std::vector<MatrixXd> reps;
  for (int j = 0; j < 6; ++j) {
    MatrixXd m(2, 1);
    m << 1.0, 1.0;
    reps.push_back(m);
  }
  const Dataset d(VectorXd::LinSpaced(6, 0, 1), MatrixXd(6, 0), reps);
  try {
    fit_mc(d, estimate_covariances(d, average_replicates(d)));
    FAIL("expected an estimation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::estimation);
  }
}

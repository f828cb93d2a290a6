#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cstring>
#include <random>

#include "eivgmm/gmm.hpp"
#include "eivgmm/simgen.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace eivgmm;

namespace {

Dataset setting_i(Index n, int rep, double rho = 0.5, ErrorLaw law = ErrorLaw::normal) {
  SimConfig cfg = SimConfig::defaults(Setting::I);
  cfg.n = n;
  cfg.rho = rho;
  cfg.error_law = law;
  return gen_dataset(cfg, rep).data;
}

bool bitwise_equal(const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (Index i = 0; i < a.size(); ++i) {
    if (std::memcmp(&a(i), &b(i), sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("stacked estimating equations have length 2(p + q + 1)") {
  SimConfig cfg = SimConfig::defaults(Setting::II);
  cfg.n = 200;
  const Dataset d = gen_dataset(cfg, 0).data;
  const EstimationInputs in = prepare_inputs(d);
  const VectorXd s = stacked_gradient(cfg.theta0(), in, weights_equal(d.n()).q);
  CHECK(s.size() == 10);
}

TEST_CASE("objective gradient and jacobian match finite differences") {
  const Dataset d = setting_i(300, 0);
  const EstimationInputs in = prepare_inputs(d);
  const WeightVector q = compute_weights(WeightScheme::minimax, in.cov, in.avg);
  const MatrixXd omega = bootstrap_omega(d, in, fit_mc(d, in.avg, in.cov).theta.stacked(), 50, 3,
                                         {WeightScheme::minimax})
                             .front()
                             .omega;
  const GmmObjective obj(in, q.q, spd_inverse(omega));
  VectorXd theta(3);
  theta << 0.9, 0.6, 0.1;
  VectorXd g;
  obj.value_gradient(theta, &g);
  const VectorXd fd =
      oracle::central_difference([&](const VectorXd& t) { return obj.value(t); }, theta, 1e-6);
  CHECK((g - fd).norm() <= 1e-5 * g.norm());

  const MatrixXd jac = obj.jacobian(theta);
  MatrixXd jfd(6, 3);
  for (Index i = 0; i < 6; ++i) {
    jfd.row(i) = oracle::central_difference(
                     [&](const VectorXd& t) { return obj.moments(t)(i); }, theta, 1e-6)
                     .transpose();
  }
  CHECK((jac - jfd).norm() <= 1e-5 * jac.norm());
}

TEST_CASE("identity weighting without the phase block returns the corrected fit") {
  const Dataset d = setting_i(400, 1);
  const EstimationInputs in = prepare_inputs(d);
  const VectorXd mc = fit_mc(d, in.avg, in.cov).theta.stacked();
  const GmmObjective obj(in, weights_equal(d.n()).q, MatrixXd::Identity(3, 3), false);
  const OptimResult res = minimize_bfgs(
      [&](const VectorXd& t, VectorXd* g) { return obj.value_gradient(t, g); },
      mc + VectorXd::Constant(3, 0.3), MatrixXd::Identity(3, 3));
  CHECK((res.x - mc).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("GMM never ends above its moment-corrected start") {
  for (int rep = 0; rep < 3; ++rep) {
    const Dataset d = setting_i(300, rep, 0.0, ErrorLaw::t2_5);
    GmmOptions opt;
    opt.bootstrap_b = 40;
    opt.seed = 5;
    opt.compute_se = false;
    for (const GmmFit& f : fit_gmm(d, {WeightScheme::equal, WeightScheme::minimax,
                                       WeightScheme::quasi_likelihood},
                                   opt)) {
      CHECK(f.q_value <= f.q_start);
      CHECK(std::isfinite(f.q_value));
    }
  }
}

TEST_CASE("centering removes a rank-one term from the bootstrap matrix") {
  const Dataset d = setting_i(300, 2);
  const EstimationInputs in = prepare_inputs(d);
  const VectorXd mc = fit_mc(d, in.avg, in.cov).theta.stacked();
  const auto raw = bootstrap_omega(d, in, mc, 60, 9, {WeightScheme::minimax}, {}, std::nullopt, 1,
                                   false);
  const auto cen = bootstrap_omega(d, in, mc, 60, 9, {WeightScheme::minimax}, {}, std::nullopt, 1,
                                   true);
  const MatrixXd diff = raw.front().omega - cen.front().omega;
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (diff + diff.transpose()));
  const VectorXd ev = es.eigenvalues();
  CHECK(ev(ev.size() - 1) > 0.0);
  CHECK(ev.head(ev.size() - 1).cwiseAbs().maxCoeff() <= 1e-9 * ev(ev.size() - 1));
  CHECK(raw.front().b_used == 60);
}

TEST_CASE("bootstrap with mostly degenerate resamples is unstable") {
  // Three of four outcomes coincide, so about a third of all resamples have
  // a constant outcome and no frequency cutoff.
  MatrixXd a(2, 1), b(2, 1), c(2, 1), e(2, 1);
  a << 0.0, 0.4;
  b << 1.0, 1.3;
  c << -0.5, 0.1;
  e << 2.0, 1.6;
  VectorXd y(4);
  y << 0.0, 0.0, 0.0, 1.0;
  const Dataset d(y, MatrixXd(4, 0), {a, b, c, e});
  const EstimationInputs in = prepare_inputs(d);
  try {
    bootstrap_omega(d, in, VectorXd::Ones(2), 100, 1, {WeightScheme::equal});
    FAIL("expected bootstrap instability");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::bootstrap_instability);
  }
}

TEST_CASE("zero measurement error and an exact linear fit: all estimators agree") {
  SimConfig cfg = SimConfig::defaults(Setting::I);
  cfg.n = 300;
  const SimSample s = gen_dataset(cfg, 0);
  Rng rng = make_stream({77});
  std::normal_distribution<double> nd;
  VectorXd y = VectorXd::Constant(300, cfg.gamma0(0)) + s.x_true * cfg.beta0;
  for (Index j = 0; j < 300; ++j) y(j) += 1e-3 * nd(rng);
  std::vector<MatrixXd> reps;
  for (Index j = 0; j < 300; ++j) reps.push_back(s.x_true.row(j).replicate(2, 1));
  const Dataset d(y, MatrixXd(300, 0), reps);
  GmmOptions opt;
  opt.bootstrap_b = 50;
  opt.compute_se = false;
  const GmmFit g = fit_gmm(d, WeightScheme::equal, opt);
  const EstimationInputs in = prepare_inputs(d);
  const VectorXd mc = fit_mc(d, in.avg, in.cov).theta.stacked();
  const VectorXd ols = fit_naive(d).stacked();
  CHECK((mc - ols).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((g.theta.stacked() - mc).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("fixed-seed fits are bit-identical, also across thread counts") {
  const Dataset d = setting_i(250, 3);
  GmmOptions opt;
  opt.bootstrap_b = 30;
  opt.seed = 42;
  const GmmFit a = fit_gmm(d, WeightScheme::minimax, opt);
  const GmmFit b = fit_gmm(d, WeightScheme::minimax, opt);
  opt.workers = 3;
  const GmmFit c = fit_gmm(d, WeightScheme::minimax, opt);
  CHECK(bitwise_equal(a.theta.stacked(), b.theta.stacked()));
  CHECK(bitwise_equal(a.theta.stacked(), c.theta.stacked()));
  CHECK(bitwise_equal(a.se, c.se));
  CHECK(a.omega_hat == c.omega_hat);
}

TEST_CASE("standard errors are positive and P1 has the stacked shape") {
  const Dataset d = setting_i(500, 4);
  GmmOptions opt;
  opt.bootstrap_b = 60;
  const GmmFit f = fit_gmm(d, WeightScheme::minimax, opt);
  REQUIRE(f.se_error.empty());
  CHECK(f.se.size() == 3);
  CHECK(f.se.minCoeff() > 0.0);
  CHECK(f.p1_hat.rows() == 3);
  CHECK(f.p1_hat.cols() == 6);
}

TEST_CASE("bootstrap and SE scaling with sample size") {
  // Omega diagonals scale like 1/n and SEs like n^{-1/2}; averaged over
  // replications to damp the Monte Carlo noise.
  VectorXd diag_1000 = VectorXd::Zero(6), diag_2000 = VectorXd::Zero(6);
  VectorXd se_500 = VectorXd::Zero(3), se_1000 = VectorXd::Zero(3);
  GmmOptions opt;
  opt.bootstrap_b = 50;
  for (int r = 0; r < 50; ++r) {
    for (Index n : {1000, 2000}) {
      const Dataset d = setting_i(n, r);
      const EstimationInputs in = prepare_inputs(d);
      const VectorXd mc = fit_mc(d, in.avg, in.cov).theta.stacked();
      const MatrixXd om =
          bootstrap_omega(d, in, mc, 50, 1000 + r, {WeightScheme::equal}).front().omega;
      (n == 1000 ? diag_1000 : diag_2000) += om.diagonal();
    }
  }
  for (int r = 0; r < 20; ++r) {
    for (Index n : {500, 1000}) {
      const GmmFit f = fit_gmm(setting_i(n, 100 + r), WeightScheme::minimax, opt);
      REQUIRE(f.se.size() == 3);
      (n == 500 ? se_500 : se_1000) += f.se;
    }
  }
  const VectorXd ratio = diag_2000.cwiseQuotient(diag_1000);
  CHECK(ratio.minCoeff() >= 0.35);
  CHECK(ratio.maxCoeff() <= 0.65);
  const VectorXd shrink = se_500.cwiseQuotient(se_1000);
  CHECK(shrink.minCoeff() >= 1.25);
  CHECK(shrink.maxCoeff() <= 1.6);
}

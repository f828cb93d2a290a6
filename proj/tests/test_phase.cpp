#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "eivgmm/phase.hpp"
#include "eivgmm/rng.hpp"
#include "oracles.hpp"

using namespace eivgmm;

namespace {

struct PhaseProblem {
  MatrixXd v;
  VectorXd y;
  VectorXd q;
};

PhaseProblem random_problem(Index n, Index k, std::uint64_t seed) {
  Rng rng = make_stream({seed, 7});
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.5, 1.5);
  PhaseProblem p{MatrixXd(n, k), VectorXd(n), VectorXd(n)};
  for (Index j = 0; j < n; ++j) {
    p.v(j, 0) = 1.0;
    for (Index c = 1; c < k; ++c) p.v(j, c) = nd(rng);
    p.y(j) = p.v.row(j).sum() + 0.5 * nd(rng);
    p.q(j) = ud(rng);
  }
  p.q /= p.q.sum();
  return p;
}

}  // namespace

TEST_CASE("t*: two-point outcome crosses at pi/4") {
  VectorXd y(2);
  y << -1.0, 1.0;
  const TStar ts = select_t_star(y);
  const double step = 0.01 / std::sqrt(2.0);
  CHECK_FALSE(ts.capped);
  CHECK(std::abs(ts.value - std::numbers::pi / 4.0) <= step);
  CHECK(ts.value >= std::numbers::pi / 4.0);
}

TEST_CASE("t*: standard normal outcomes") {
  // |phi(t)| = exp(-t^2/2) meets n^{-1/2} at t = sqrt(log n). The empirical
  // modulus carries O(n^{-1/2}) noise of the same size as the threshold, so
  // the average over 50 samples is compared with a 10% band.
  const Index n = 500;
  const double target = std::sqrt(std::log(static_cast<double>(n)));
  double sum = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    Rng rng = make_stream({2024, static_cast<std::uint64_t>(rep)});
    std::normal_distribution<double> nd;
    VectorXd y(n);
    for (Index j = 0; j < n; ++j) y(j) = nd(rng);
    const TStar ts = select_t_star(y);
    CHECK_FALSE(ts.capped);
    sum += ts.value;
  }
  CHECK(sum / 50.0 == doctest::Approx(target).epsilon(0.10));
}

TEST_CASE("t*: lattice outcome never decays and hits the cap") {
  VectorXd y = VectorXd::Zero(100);
  y.head(10).setOnes();
  const TStar ts = select_t_star(y);
  CHECK(ts.capped);
  const double sd = std::sqrt(0.09 * 100.0 / 99.0);
  CHECK(ts.value == doctest::Approx(50.0 / sd));
}

TEST_CASE("t*: constant outcome is degenerate") {
  try {
    select_t_star(VectorXd::Constant(10, 3.0));
    FAIL("expected degenerate input");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_input);
  }
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  const Quadrature rule = gauss_legendre(64, 0.0, 2.0);
  CHECK(rule.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
  // int_0^2 t^9 dt = 102.4
  CHECK((rule.nodes.array().pow(9) * rule.weights.array()).sum() ==
        doctest::Approx(102.4).epsilon(1e-13));
  for (Index i = 1; i < 64; ++i) CHECK(rule.nodes(i) > rule.nodes(i - 1));
}

TEST_CASE("kernel") {
  CHECK(phase_kernel(0.0, 2.0) == 1.0);
  CHECK(phase_kernel(1.0, 2.0) == 0.25);
  CHECK(phase_kernel(2.0, 2.0) == 0.0);
  CHECK(phase_kernel(2.5, 2.0) == 0.0);
}

TEST_CASE("wepf: single atom and unit modulus") {
  MatrixXd v(1, 2);
  v << 1.0, 0.4;
  VectorXd theta(2);
  theta << 0.3, 2.0;
  const auto w = wepf(theta, v, VectorXd::Ones(1), 1.7);
  const double arg = 1.7 * (0.3 + 0.8);
  CHECK(w.real() == doctest::Approx(std::cos(arg)));
  CHECK(w.imag() == doctest::Approx(std::sin(arg)));

  const PhaseProblem p = random_problem(300, 3, 1);
  for (double t : {0.01, 0.3, 1.0, 2.0}) {
    const auto z = wepf(VectorXd::Ones(3), p.v, p.q, t);
    CHECK(std::abs(std::abs(z) - 1.0) <= 1e-10);
  }
}

TEST_CASE("wepf: symmetric sample has zero imaginary part") {
  MatrixXd v(6, 1);
  v << -2.0, -0.5, -0.1, 0.1, 0.5, 2.0;
  const auto z = wepf(VectorXd::Ones(1), v, VectorXd::Constant(6, 1.0 / 6.0), 0.7);
  CHECK(std::abs(z.imag()) < 1e-15);
}

TEST_CASE("dtilde: exact linear fit gives zero") {
  const PhaseProblem p = random_problem(50, 3, 2);
  VectorXd theta(3);
  theta << 0.5, 1.0, -2.0;
  const VectorXd y = p.v * theta;
  const EcfOutcome ecf = build_ecf(y);
  CHECK(dtilde(theta, p.v, VectorXd::Constant(50, 1.0 / 50.0), ecf) <= 1e-20);
}

TEST_CASE("dtilde matches refined trapezoid quadrature") {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const PhaseProblem p = random_problem(80, 3, seed);
    const EcfOutcome ecf = build_ecf(p.y);
    VectorXd theta(3);
    theta << 0.8, 1.1, 0.9;
    const double gl = dtilde(theta, p.v, p.q, ecf);
    const double coarse = oracle::trapezoid_dtilde(theta, p.v, p.q, p.y, ecf.t_star, 8192);
    const double fine = oracle::trapezoid_dtilde(theta, p.v, p.q, p.y, ecf.t_star, 16384);
    // Richardson step for the O(h^2) trapezoid error.
    const double ref = fine + (fine - coarse) / 3.0;
    CHECK(std::abs(fine - coarse) / ref < 1e-6);
    CHECK(std::abs(gl - ref) / ref <= 1e-6);
  }
}

TEST_CASE("grad_dtilde matches central differences") {
  for (std::uint64_t seed : {6u, 7u, 8u}) {
    const PhaseProblem p = random_problem(120, 4, seed);
    const EcfOutcome ecf = build_ecf(p.y);
    VectorXd theta(4);
    theta << 0.2, 0.7, 1.4, 1.0;
    const VectorXd g = grad_dtilde(theta, p.v, p.q, ecf);
    const VectorXd fd = oracle::central_difference(
        [&](const VectorXd& t) { return dtilde(t, p.v, p.q, ecf); }, theta, 1e-5);
    CHECK((g - fd).norm() <= 1e-5 * g.norm());

    const MatrixXd h = hess_dtilde(theta, p.v, p.q, ecf);
    MatrixXd hfd(4, 4);
    for (Index i = 0; i < 4; ++i) {
      hfd.row(i) = oracle::central_difference(
                       [&](const VectorXd& t) { return grad_dtilde(t, p.v, p.q, ecf)(i); }, theta,
                       1e-5)
                       .transpose();
    }
    CHECK((h - hfd).norm() <= 1e-5 * h.norm());
  }
}

TEST_CASE("gradient vanishes at a grid-search minimizer") {
  // One slope, no intercept.
  const PhaseProblem p = random_problem(200, 2, 9);
  const MatrixXd v = p.v.rightCols(1);
  const VectorXd y = v.col(0) * 1.3 + 0.3 * (p.y - p.v.rowwise().sum());
  const EcfOutcome ecf = build_ecf(y);
  auto f = [&](double b) { return dtilde(VectorXd::Constant(1, b), v, p.q, ecf); };
  const double b_star = oracle::grid_argmin(f, 0.5, 2.0, 2001);
  CHECK(std::abs(grad_dtilde(VectorXd::Constant(1, b_star), v, p.q, ecf)(0)) <= 1e-6);
}

TEST_CASE("dtilde is even in theta for symmetric data without intercept") {
  MatrixXd v(8, 2);
  v << 1, 0.5, -1, -0.5, 2, -1, -2, 1, 0.3, 0.2, -0.3, -0.2, 1.5, 1, -1.5, -1;
  VectorXd y(8);
  y << 1.2, -1.2, 0.4, -0.4, 2.0, -2.0, 0.1, -0.1;
  const VectorXd q = VectorXd::Constant(8, 0.125);
  const EcfOutcome ecf = build_ecf(y);
  VectorXd theta(2);
  theta << 0.6, -0.9;
  CHECK(dtilde(theta, v, q, ecf) == doctest::Approx(dtilde(-theta, v, q, ecf)).epsilon(1e-12));
}

#include "eivgmm/phase.hpp"

#include <cmath>
#include <numbers>

namespace eivgmm {

namespace {

double sample_sd(const VectorXd& y) {
  const double mean = y.mean();
  return std::sqrt((y.array() - mean).square().sum() / static_cast<double>(y.size() - 1));
}

}  // namespace

TStar select_t_star(const VectorXd& y, double step) {
  const Index n = y.size();
  if (n < 2) throw Error(ErrorKind::degenerate_input, "t* needs at least 2 outcomes");
  const double sd = sample_sd(y);
  if (!(sd > 0.0) || !std::isfinite(sd)) {
    throw Error(ErrorKind::degenerate_input, "outcome is constant; t* is undefined");
  }
  if (!(step > 0.0)) throw Error(ErrorKind::validation, "t* scan step must be positive");

  const double cap = 50.0 / sd;
  const double threshold = 1.0 / std::sqrt(static_cast<double>(n));
  // |phi_y| is shift invariant; centering keeps the phases small.
  const Eigen::ArrayXd yc = y.array() - y.mean();

  // Phases are advanced by a fixed rotation and re-anchored every 64 steps.
  const Eigen::ArrayXd rot_re = (step * yc).cos();
  const Eigen::ArrayXd rot_im = (step * yc).sin();
  Eigen::ArrayXd re(n), im(n);
  const auto n_steps = static_cast<long>(std::floor(cap / step + 1e-9));
  for (long i = 1; i <= n_steps; ++i) {
    const double t = step * static_cast<double>(i);
    if (i % 64 == 1) {
      re = (t * yc).cos();
      im = (t * yc).sin();
    } else {
      const Eigen::ArrayXd next_re = re * rot_re - im * rot_im;
      im = re * rot_im + im * rot_re;
      re = next_re;
    }
    const double modulus = std::hypot(re.sum(), im.sum()) / static_cast<double>(n);
    if (modulus <= threshold) return TStar{t, false};
  }
  return TStar{cap, true};
}

TStar select_t_star(const VectorXd& y, const PhaseConfig& cfg) {
  if (y.size() < 2) throw Error(ErrorKind::degenerate_input, "t* needs at least 2 outcomes");
  const double sd = sample_sd(y);
  if (!(sd > 0.0)) throw Error(ErrorKind::degenerate_input, "outcome is constant; t* is undefined");
  return select_t_star(y, cfg.step_factor / sd);
}

Quadrature gauss_legendre(int n, double a, double b) {
  if (n < 1) throw Error(ErrorKind::validation, "quadrature needs at least one node");
  Quadrature rule{VectorXd(n), VectorXd(n)};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Ascending order: node i from the left is -x.
    rule.nodes(i) = mid - half * x;
    rule.nodes(n - 1 - i) = mid + half * x;
    rule.weights(i) = half * w;
    rule.weights(n - 1 - i) = half * w;
  }
  return rule;
}

double phase_kernel(double t, double t_star) {
  if (t < 0.0 || t > t_star) return 0.0;
  const double u = 1.0 - t / t_star;
  return u * u;
}

EcfOutcome build_ecf(const VectorXd& y, double t_star, int n_quad) {
  if (n_quad < 16) throw Error(ErrorKind::validation, "n_quad must be at least 16");
  if (!(t_star > 0.0)) throw Error(ErrorKind::validation, "t* must be positive");
  const Quadrature rule = gauss_legendre(n_quad, 0.0, t_star);
  EcfOutcome ecf;
  ecf.grid = rule.nodes;
  ecf.quad_weights = rule.weights;
  ecf.t_star = t_star;
  ecf.kernel.resize(n_quad);
  ecf.c_y.resize(n_quad);
  ecf.s_y.resize(n_quad);
  const double inv_n = 1.0 / static_cast<double>(y.size());
  for (int m = 0; m < n_quad; ++m) {
    const double t = ecf.grid(m);
    ecf.kernel(m) = phase_kernel(t, t_star);
    ecf.c_y(m) = (t * y.array()).cos().sum() * inv_n;
    ecf.s_y(m) = (t * y.array()).sin().sum() * inv_n;
  }
  return ecf;
}

EcfOutcome build_ecf(const VectorXd& y, const PhaseConfig& cfg) {
  const TStar ts = select_t_star(y, cfg);
  EcfOutcome ecf = build_ecf(y, ts.value, cfg.n_quad);
  ecf.capped = ts.capped;
  return ecf;
}

std::complex<double> wepf(const VectorXd& theta, const MatrixXd& v, const VectorXd& q, double t) {
  const Eigen::ArrayXd arg = t * (v * theta).array();
  const std::complex<double> num{(q.array() * arg.cos()).sum(), (q.array() * arg.sin()).sum()};
  // The double sum over (j, k) in the denominator equals |num|^2.
  const double denom = std::abs(num);
  if (!(denom > 1e-14 * q.array().abs().sum())) {
    throw Error(ErrorKind::degenerate_input,
                "weighted phase function undefined: characteristic function vanishes at t=" +
                    std::to_string(t));
  }
  return num / denom;
}

PhaseBasis::PhaseBasis(const VectorXd& theta, const MatrixXd& v, const EcfOutcome& ecf)
    : v_(v), ecf_(ecf) {
  const VectorXd lin = v * theta;
  const MatrixXd arg = ecf.grid * lin.transpose();  // n_quad x n
  const Eigen::ArrayXXd s = arg.array().sin();
  const Eigen::ArrayXXd c = arg.array().cos();
  bracket_ = (s.colwise() * ecf.c_y.array() - c.colwise() * ecf.s_y.array()).matrix();
  slope_ = (c.colwise() * ecf.c_y.array() + s.colwise() * ecf.s_y.array()).matrix();
}

PhaseEval PhaseBasis::evaluate(const VectorXd& q, bool with_hessian) const {
  const VectorXd b = bracket_ * q;
  const VectorXd wk = ecf_.quad_weights.cwiseProduct(ecf_.kernel);
  const MatrixXd db = ecf_.grid.asDiagonal() * (slope_ * q.asDiagonal()) * v_;  // n_quad x k

  PhaseEval out;
  out.value = wk.dot(b.cwiseAbs2());
  out.gradient = 2.0 * db.transpose() * wk.cwiseProduct(b);
  if (with_hessian) {
    const VectorXd c = wk.cwiseProduct(b).cwiseProduct(ecf_.grid.cwiseAbs2());
    const VectorXd obs = q.cwiseProduct(bracket_.transpose() * c);
    out.hessian = 2.0 * db.transpose() * wk.asDiagonal() * db -
                  2.0 * v_.transpose() * obs.asDiagonal() * v_;
    out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  }
  return out;
}

double dtilde(const VectorXd& theta, const MatrixXd& v, const VectorXd& q, const EcfOutcome& ecf) {
  return PhaseBasis(theta, v, ecf).evaluate(q).value;
}

VectorXd grad_dtilde(const VectorXd& theta, const MatrixXd& v, const VectorXd& q,
                     const EcfOutcome& ecf) {
  return PhaseBasis(theta, v, ecf).evaluate(q).gradient;
}

MatrixXd hess_dtilde(const VectorXd& theta, const MatrixXd& v, const VectorXd& q,
                     const EcfOutcome& ecf) {
  return PhaseBasis(theta, v, ecf).evaluate(q, true).hessian;
}

}  // namespace eivgmm

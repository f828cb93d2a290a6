#include "oracles.hpp"

#include <Eigen/LU>

#include <cmath>
#include <complex>

namespace eivgmm::oracle {

VectorXd dense_mc_solve(const Dataset& d, const std::vector<MatrixXd>& sigma_j) {
  const Index n = d.n();
  const Index p = d.p();
  const Index k = d.n_params();
  MatrixXd g = MatrixXd::Zero(k, k);
  VectorXd r = VectorXd::Zero(k);
  for (Index j = 0; j < n; ++j) {
    const MatrixXd& w = d.replicates(j);
    VectorXd vj(k);
    for (Index c = 0; c < p; ++c) {
      double s = 0.0;
      for (Index rr = 0; rr < w.rows(); ++rr) s += w(rr, c);
      vj(c) = s / static_cast<double>(w.rows());
    }
    for (Index c = 0; c < d.z().cols(); ++c) vj(p + c) = d.z()(j, c);
    for (Index a = 0; a < k; ++a) {
      r(a) += vj(a) * d.y()(j);
      for (Index b = 0; b < k; ++b) g(a, b) += vj(a) * vj(b);
    }
    for (Index a = 0; a < p; ++a) {
      for (Index b = 0; b < p; ++b) {
        g(a, b) -= sigma_j[static_cast<std::size_t>(j)](a, b) / static_cast<double>(w.rows());
      }
    }
  }
  return g.fullPivLu().solve(r);
}

std::pair<VectorXd, double> explicit_ql_solve(const VectorXd& w_bar, const VectorXd& omega,
                                              double gamma) {
  const Index n = w_bar.size();
  double a1 = 0.0;
  double a2 = 0.0;
  for (Index j = 0; j < n; ++j) {
    a1 += w_bar(j) / omega(j);
    a2 += 1.0 / omega(j);
  }
  MatrixXd sys = MatrixXd::Zero(n + 1, n + 1);
  VectorXd rhs(n + 1);
  for (Index kk = 0; kk < n; ++kk) {
    for (Index j = 0; j < n; ++j) {
      sys(kk, j) = w_bar(kk) * a2 * w_bar(j) + (kk == j ? (n - 1) * gamma : -gamma);
    }
    sys(kk, n) = 1.0;
    sys(n, kk) = 1.0;
    rhs(kk) = w_bar(kk) * a1;
  }
  rhs(n) = 1.0;
  const VectorXd sol = sys.fullPivLu().solve(rhs);
  return {sol.head(n), sol(n)};
}

double trapezoid_dtilde(const VectorXd& theta, const MatrixXd& v, const VectorXd& q,
                        const VectorXd& y, double t_star, int intervals) {
  const Index n = v.rows();
  auto integrand = [&](double t) {
    std::complex<double> phi_y{0.0, 0.0};
    std::complex<double> phi_v{0.0, 0.0};
    for (Index j = 0; j < n; ++j) {
      phi_y += std::polar(1.0, t * y(j)) / static_cast<double>(n);
      phi_v += q(j) * std::polar(1.0, t * v.row(j).dot(theta));
    }
    // Im(phi_v conj(phi_y)) is the cross term C_y S_v - S_y C_v.
    const double b = phi_v.imag() * phi_y.real() - phi_y.imag() * phi_v.real();
    const double kern = (1.0 - t / t_star) * (1.0 - t / t_star);
    return b * b * kern;
  };
  const double h = t_star / intervals;
  double sum = 0.5 * (integrand(0.0) + integrand(t_star));
  for (int i = 1; i < intervals; ++i) sum += integrand(h * i);
  return sum * h;
}

VectorXd central_difference(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                            double h) {
  VectorXd g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double step = h * (1.0 + std::abs(x(i)));
    VectorXd up = x;
    VectorXd down = x;
    up(i) += step;
    down(i) -= step;
    g(i) = (f(up) - f(down)) / (2.0 * step);
  }
  return g;
}

double grid_argmin(const std::function<double(double)>& f, double lo, double hi, int points) {
  double best = lo;
  for (int round = 0; round < 3; ++round) {
    const double h = (hi - lo) / (points - 1);
    double best_f = f(lo);
    best = lo;
    for (int i = 1; i < points; ++i) {
      const double x = lo + h * i;
      const double fx = f(x);
      if (fx < best_f) {
        best_f = fx;
        best = x;
      }
    }
    lo = best - h;
    hi = best + h;
  }
  return best;
}

}  // namespace eivgmm::oracle

#include "eivgmm/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace eivgmm {

OptimResult minimize_bfgs(const ValueGradient& fn, const VectorXd& x0, const MatrixXd& h0_inv,
                          const OptimOptions& opt) {
  const Index k = x0.size();
  OptimResult res;
  res.x = x0;
  VectorXd g(k);
  res.f = fn(res.x, &g);
  if (!std::isfinite(res.f) || !g.allFinite()) return res;

  MatrixXd h = h0_inv;
  int ls_failures = 0;
  VectorXd g_new(k);
  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    res.n_iter = iter;
    VectorXd d = -h * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {  // not a descent direction: restart from the seed metric
      h = h0_inv;
      d = -h * g;
      slope = g.dot(d);
    }
    if (!(slope < 0.0) || -slope <= opt.decrement_tol * (1.0 + std::abs(res.f))) {
      res.converged = true;
      return res;
    }

    // Armijo backtracking.
    double alpha = 1.0;
    bool accepted = false;
    VectorXd x_new;
    double f_new = 0.0;
    for (int bt = 0; bt < 50; ++bt) {
      x_new = res.x + alpha * d;
      f_new = fn(x_new, &g_new);
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= res.f + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (++ls_failures >= opt.max_line_search_failures) break;
      h = h0_inv;
      continue;
    }

    const VectorXd s = x_new - res.x;
    const VectorXd yv = g_new - g;
    const double rel_drop = (res.f - f_new) / std::max(std::abs(res.f), 1e-300);
    res.x = x_new;
    g = g_new;
    const double f_old = res.f;
    res.f = f_new;
    if (s.lpNorm<Eigen::Infinity>() <= opt.step_tol && (rel_drop <= opt.rel_f_tol || f_old == 0.0)) {
      res.converged = true;
      return res;
    }

    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const VectorXd hy = h * yv;
      h += (rho * rho * yv.dot(hy) + rho) * (s * s.transpose()) -
           rho * (hy * s.transpose() + s * hy.transpose());
      h = 0.5 * (h + h.transpose()).eval();
    }
  }
  if (res.converged) return res;

  // Line search kept failing (or iterations ran out): simplex search from the best point.
  VectorXd scale = h0_inv.diagonal().cwiseAbs().cwiseSqrt();
  for (Index i = 0; i < k; ++i) {
    if (!(scale(i) > 0.0) || !std::isfinite(scale(i))) scale(i) = 1e-3 * (1.0 + std::abs(res.x(i)));
  }
  const int remaining = std::max(200, opt.max_iter - res.n_iter);
  OptimResult nm = minimize_nelder_mead([&](const VectorXd& x) { return fn(x, nullptr); }, res.x,
                                        scale, remaining);
  nm.n_iter += res.n_iter;
  nm.used_simplex = true;
  if (!(nm.f <= res.f)) {
    nm.x = res.x;
    nm.f = res.f;
  }
  return nm;
}

OptimResult minimize_nelder_mead(const std::function<double(const VectorXd&)>& fn,
                                 const VectorXd& x0, const VectorXd& scale, int max_iter,
                                 double f_tol, double x_tol) {
  const Index k = x0.size();
  std::vector<VectorXd> pts(static_cast<std::size_t>(k + 1), x0);
  std::vector<double> fv(static_cast<std::size_t>(k + 1));
  for (Index i = 0; i < k; ++i) pts[static_cast<std::size_t>(i + 1)](i) += scale(i);
  auto eval = [&](const VectorXd& x) {
    const double f = fn(x);
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  };
  for (std::size_t i = 0; i < pts.size(); ++i) fv[i] = eval(pts[i]);

  std::vector<std::size_t> order(pts.size());
  OptimResult res;
  for (int iter = 1; iter <= max_iter; ++iter) {
    res.n_iter = iter;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double spread = 0.0;
    for (const auto& pt : pts) spread = std::max(spread, (pt - pts[best]).lpNorm<Eigen::Infinity>());
    if (std::abs(fv[worst] - fv[best]) <= f_tol * (1.0 + std::abs(fv[best])) && spread <= x_tol) {
      res.converged = true;
      break;
    }

    VectorXd centroid = VectorXd::Zero(k);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= static_cast<double>(k);

    const VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      const VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const VectorXd xc = outside ? VectorXd(centroid + 0.5 * (xr - centroid))
                                : VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      pts[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      fv[i] = eval(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  res.x = pts[best];
  res.f = fv[best];
  return res;
}

}  // namespace eivgmm

#include "eivgmm/gmm.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eivgmm/parallel.hpp"
#include "eivgmm/rng.hpp"

namespace eivgmm {

EstimationInputs prepare_inputs(const Dataset& d, const PhaseConfig& cfg) {
  EstimationInputs in;
  in.avg = average_replicates(d);
  in.v = regressors(in.avg, d.z());
  in.cov = estimate_covariances(d, in.avg);
  in.mc = assemble_mc_system(in.v, d.y(), in.cov.sigma_j, in.avg.n_rep);
  in.ecf = build_ecf(d.y(), cfg);
  return in;
}

VectorXd stacked_gradient(const VectorXd& theta, const EstimationInputs& in, const VectorXd& q) {
  const Index k = theta.size();
  VectorXd s(2 * k);
  s.head(k) = mc_gradient(in.mc, theta);
  s.tail(k) = PhaseBasis(theta, in.v, in.ecf).evaluate(q).gradient;
  return s;
}

VectorXd stacked_gradient(const ParamVector& theta, const Dataset& d, const CovarianceSet& cov,
                          const WeightVector& q, const EcfOutcome& ecf) {
  EstimationInputs in;
  in.avg = average_replicates(d);
  in.v = regressors(in.avg, d.z());
  in.cov = cov;
  in.mc = assemble_mc_system(in.v, d.y(), cov.sigma_j, in.avg.n_rep);
  in.ecf = ecf;
  return stacked_gradient(theta.stacked(), in, q.q);
}

// ---------------------------------------------------------------------------
// SPD helpers

MatrixXd floor_spd(const MatrixXd& a) {
  const MatrixXd sym = 0.5 * (a + a.transpose());
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  const double floor = 1e-10 * std::max(sym.trace(), 0.0) / static_cast<double>(sym.rows());
  const VectorXd ev = es.eigenvalues().cwiseMax(floor);
  MatrixXd out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

MatrixXd spd_inverse(const MatrixXd& a) {
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (a + a.transpose()));
  if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0)) {
    throw Error(ErrorKind::estimation, "bootstrap covariance of the estimating equations is not "
                                       "positive definite; cannot invert");
  }
  MatrixXd out = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                 es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

// ---------------------------------------------------------------------------
// Estimating-function bootstrap

namespace {

// One resample's S*(theta) per scheme; empty vectors mark a failed scheme.
std::vector<VectorXd> bootstrap_draw(const Dataset& d, const EstimationInputs& in,
                                     const VectorXd& theta, const std::vector<Index>& rows,
                                     const std::vector<WeightScheme>& schemes,
                                     const PhaseConfig& cfg, std::optional<double> ql_gamma) {
  const auto n = static_cast<Index>(rows.size());
  const Index k = theta.size();
  AveragedDesign avg;
  avg.w_bar.resize(n, in.avg.w_bar.cols());
  avg.n_rep.resize(n);
  MatrixXd v(n, in.v.cols());
  VectorXd y(n);
  CovarianceSet cov;
  cov.sigma_j.reserve(rows.size());
  for (Index i = 0; i < n; ++i) {
    const Index j = rows[static_cast<std::size_t>(i)];
    avg.w_bar.row(i) = in.avg.w_bar.row(j);
    avg.n_rep(i) = in.avg.n_rep(j);
    v.row(i) = in.v.row(j);
    y(i) = d.y()(j);
    cov.sigma_j.push_back(in.cov.sigma_j[static_cast<std::size_t>(j)]);
  }

  std::vector<VectorXd> out(schemes.size());
  VectorXd s_l;
  EcfOutcome ecf;
  try {
    cov.sigma_x = estimate_sigma_x(avg, cov.sigma_j);
    s_l = mc_gradient(assemble_mc_system(v, y, cov.sigma_j, avg.n_rep), theta);
    ecf = build_ecf(y, cfg);
  } catch (const Error&) {
    return out;
  }
  const PhaseBasis basis(theta, v, ecf);
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    try {
      const WeightVector w = compute_weights(schemes[s], cov, avg, ql_gamma);
      if (w.fell_back) continue;
      VectorXd stacked(2 * k);
      stacked.head(k) = s_l;
      stacked.tail(k) = basis.evaluate(w.q).gradient;
      if (stacked.allFinite()) out[s] = std::move(stacked);
    } catch (const Error&) {
      // recorded as skipped by the caller
    }
  }
  return out;
}

}  // namespace

std::vector<BootstrapOmega> bootstrap_omega(const Dataset& d, const EstimationInputs& in,
                                            const VectorXd& theta_init, int b,
                                            std::uint64_t seed,
                                            const std::vector<WeightScheme>& schemes,
                                            const PhaseConfig& cfg,
                                            std::optional<double> ql_gamma, int workers,
                                            bool center) {
  if (b < 1) throw Error(ErrorKind::validation, "bootstrap needs B >= 1 resamples");
  const Index n = d.n();
  const auto bs = static_cast<std::size_t>(b);
  std::vector<std::vector<VectorXd>> draws(bs);
  parallel_for(bs, workers, [&](std::size_t r) {
    Rng rng = make_stream({seed, tag(StreamTag::bootstrap), static_cast<std::uint64_t>(r)});
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (auto& row : rows) row = pick(rng);
    draws[r] = bootstrap_draw(d, in, theta_init, rows, schemes, cfg, ql_gamma);
  });

  const Index dim = 2 * theta_init.size();
  std::vector<BootstrapOmega> out(schemes.size());
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    MatrixXd acc = MatrixXd::Zero(dim, dim);
    for (std::size_t r = 0; r < bs; ++r) {  // fixed reduction order
      const VectorXd& v = draws[r][s];
      if (v.size() == 0) {
        ++out[s].b_skipped;
        continue;
      }
      acc.selfadjointView<Eigen::Lower>().rankUpdate(v);
      ++out[s].b_used;
    }
    if (out[s].b_skipped * 10 > b || out[s].b_used == 0) {
      std::ostringstream msg;
      msg << "bootstrap unstable for " << to_string(schemes[s]) << " weights: " << out[s].b_skipped
          << " of " << b << " resamples failed";
      throw Error(ErrorKind::bootstrap_instability, msg.str());
    }
    acc = acc.selfadjointView<Eigen::Lower>();
    acc /= static_cast<double>(out[s].b_used);
    if (center) {
      VectorXd mean = VectorXd::Zero(dim);
      for (std::size_t r = 0; r < bs; ++r) {
        if (draws[r][s].size() > 0) mean += draws[r][s];
      }
      mean /= static_cast<double>(out[s].b_used);
      acc -= mean * mean.transpose();
    }
    out[s].omega = floor_spd(acc);
  }
  return out;
}

MatrixXd bootstrap_omega(const Dataset& d, const ParamVector& theta_init, int b,
                         std::uint64_t seed, WeightScheme scheme, bool center) {
  const EstimationInputs in = prepare_inputs(d);
  return bootstrap_omega(d, in, theta_init.stacked(), b, seed, {scheme}, {}, std::nullopt, 1, center)
      .front()
      .omega;
}

// ---------------------------------------------------------------------------
// Quadratic form

GmmObjective::GmmObjective(const EstimationInputs& in, VectorXd q, MatrixXd omega_inv,
                           bool use_phase)
    : in_(in), q_(std::move(q)), omega_inv_(std::move(omega_inv)), mc_jac_(mc_jacobian(in.mc)),
      use_phase_(use_phase) {
  const Index k = in.v.cols();
  if (omega_inv_.rows() != (use_phase_ ? 2 * k : k) || omega_inv_.cols() != omega_inv_.rows()) {
    throw Error(ErrorKind::validation, "weighting matrix has the wrong dimension");
  }
}

VectorXd GmmObjective::moments(const VectorXd& theta) const {
  return use_phase_ ? stacked_gradient(theta, in_, q_) : mc_gradient(in_.mc, theta);
}

MatrixXd GmmObjective::jacobian(const VectorXd& theta) const {
  const Index k = theta.size();
  if (!use_phase_) return mc_jac_;
  MatrixXd j(2 * k, k);
  j.topRows(k) = mc_jac_;
  j.bottomRows(k) = PhaseBasis(theta, in_.v, in_.ecf).evaluate(q_, true).hessian;
  return j;
}

double GmmObjective::value(const VectorXd& theta) const {
  const VectorXd s = moments(theta);
  return s.dot(omega_inv_ * s);
}

double GmmObjective::value_gradient(const VectorXd& theta, VectorXd* grad) const {
  const Index k = theta.size();
  if (!use_phase_) {
    const VectorXd s = mc_gradient(in_.mc, theta);
    const VectorXd ws = omega_inv_ * s;
    if (grad) *grad = 2.0 * mc_jac_.transpose() * ws;
    return s.dot(ws);
  }
  const PhaseEval ph = PhaseBasis(theta, in_.v, in_.ecf).evaluate(q_, grad != nullptr);
  VectorXd s(2 * k);
  s.head(k) = mc_gradient(in_.mc, theta);
  s.tail(k) = ph.gradient;
  const VectorXd ws = omega_inv_ * s;
  if (grad) *grad = 2.0 * (mc_jac_.transpose() * ws.head(k) + ph.hessian.transpose() * ws.tail(k));
  return s.dot(ws);
}

// ---------------------------------------------------------------------------
// Fitting

VectorXd gmm_standard_errors(GmmFit& fit, const EstimationInputs& in, const VectorXd& q) {
  const VectorXd theta = fit.theta.stacked();
  const Index k = theta.size();
  MatrixXd jac(2 * k, k);
  jac.topRows(k) = mc_jacobian(in.mc);
  for (Index i = 0; i < k; ++i) {
    const double h = 1e-5 * (1.0 + std::abs(theta(i)));
    VectorXd up = theta;
    VectorXd down = theta;
    up(i) += h;
    down(i) -= h;
    jac.block(k, i, k, 1) = (grad_dtilde(up, in.v, q, in.ecf) - grad_dtilde(down, in.v, q, in.ecf)) /
                            (up(i) - down(i));
  }
  fit.p1_hat = jac.transpose();

  const MatrixXd info = fit.p1_hat * spd_inverse(fit.omega_hat) * jac;
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (info + info.transpose()));
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (es.info() != Eigen::Success || !(lo > 0.0) || !(hi / lo < 1e14)) {
    std::ostringstream msg;
    msg << "sandwich matrix is singular (eigenvalues in [" << lo << ", " << hi
        << "]); standard errors unavailable";
    throw Error(ErrorKind::se_failure, msg.str());
  }
  const MatrixXd cov = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                       es.eigenvectors().transpose();
  return cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

GmmFit fit_gmm_given_omega(const EstimationInputs& in, const VectorXd& theta_start,
                           const WeightVector& q, const MatrixXd& omega, const GmmOptions& opt) {
  GmmFit fit;
  fit.scheme = q.scheme;
  fit.weights = q;
  fit.omega_hat = omega;
  const GmmObjective obj(in, q.q, spd_inverse(omega));

  // Gauss-Newton curvature 2 J^T Omega^{-1} J seeds the inverse Hessian.
  const MatrixXd jac = obj.jacobian(theta_start);
  const MatrixXd gn = 2.0 * jac.transpose() * obj.omega_inv() * jac;
  const Index k = theta_start.size();
  MatrixXd h0 = gn.ldlt().solve(MatrixXd::Identity(k, k));
  if (!h0.allFinite() || !(Eigen::SelfAdjointEigenSolver<MatrixXd>(h0).eigenvalues().minCoeff() > 0.0)) {
    h0 = MatrixXd::Identity(k, k) * 1e-6;
  }

  const OptimResult res = minimize_bfgs(
      [&](const VectorXd& x, VectorXd* g) { return obj.value_gradient(x, g); }, theta_start, h0,
      opt.optim);
  fit.theta = ParamVector::from_stacked(res.x, in.cov.sigma_x.rows());
  fit.q_start = obj.value(theta_start);
  fit.q_value = std::max(0.0, res.f);
  fit.converged = res.converged;
  fit.used_simplex = res.used_simplex;
  fit.n_iter = res.n_iter;

  if (opt.compute_se) {
    try {
      fit.se = gmm_standard_errors(fit, in, q.q);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::se_failure && e.kind() != ErrorKind::estimation) throw;
      fit.se.resize(0);
      fit.se_error = e.what();
    }
  }
  return fit;
}

std::vector<GmmFit> fit_gmm(const Dataset& d, const std::vector<WeightScheme>& schemes,
                            const GmmOptions& opt) {
  const EstimationInputs in = prepare_inputs(d, opt.phase);
  const McFit mc = fit_mc(d, in.avg, in.cov);
  const VectorXd start = mc.theta.stacked();
  const std::vector<BootstrapOmega> omegas = bootstrap_omega(
      d, in, start, opt.bootstrap_b, opt.seed, schemes, opt.phase, opt.ql_gamma, opt.workers,
      opt.center_bootstrap);
  std::vector<GmmFit> fits;
  fits.reserve(schemes.size());
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    const WeightVector q = compute_weights(schemes[s], in.cov, in.avg, opt.ql_gamma);
    GmmFit fit = fit_gmm_given_omega(in, start, q, omegas[s].omega, opt);
    fit.bootstrap_b = omegas[s].b_used;
    fit.bootstrap_skipped = omegas[s].b_skipped;
    fits.push_back(std::move(fit));
  }
  return fits;
}

GmmFit fit_gmm(const Dataset& d, WeightScheme scheme, const GmmOptions& opt) {
  return fit_gmm(d, std::vector<WeightScheme>{scheme}, opt).front();
}

}  // namespace eivgmm

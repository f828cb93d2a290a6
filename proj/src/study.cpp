#include "eivgmm/study.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eivgmm/gmm.hpp"
#include "eivgmm/moment_correction.hpp"
#include "eivgmm/parallel.hpp"
#include "eivgmm/rng.hpp"

namespace eivgmm {

std::string estimator_name(WeightScheme scheme) { return "gmm_" + to_string(scheme); }

MatrixXd EstimatorRuns::successful_estimates() const {
  std::vector<Index> ok;
  for (Index i = 0; i < estimates.rows(); ++i) {
    if (estimates.row(i).allFinite()) ok.push_back(i);
  }
  MatrixXd out(static_cast<Index>(ok.size()), estimates.cols());
  for (std::size_t r = 0; r < ok.size(); ++r) out.row(static_cast<Index>(r)) = estimates.row(ok[r]);
  return out;
}

const EstimatorRuns& StudyResult::get(const std::string& name) const {
  for (const auto& r : runs) {
    if (r.name == name) return r;
  }
  throw Error(ErrorKind::validation, "study has no estimator '" + name + "'");
}

double StudyResult::failure_rate() const {
  double worst = 0.0;
  for (const auto& r : runs) {
    worst = std::max(worst, static_cast<double>(r.failures) / std::max(1, cfg.m_reps));
  }
  return worst;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RepOutcome {
  std::vector<VectorXd> theta;  // per estimator, empty on failure
  std::vector<VectorXd> se;
  std::vector<std::string> error;
  bool capped = false;
  bool ql_fallback = false;
  bool ql_clamp_warning = false;
  int nonconverged = 0;
};

RepOutcome run_replication(const SimConfig& cfg, const StudyOptions& opt, int rep,
                           std::size_t n_est) {
  RepOutcome out;
  out.theta.resize(n_est);
  out.se.resize(n_est);
  out.error.resize(n_est);
  const SimSample sample = gen_dataset(cfg, rep);
  const Dataset& d = sample.data;
  auto record_error = [&](std::size_t from, std::size_t to, const std::string& msg) {
    for (std::size_t e = from; e < to; ++e) out.error[e] = msg;
  };

  // 0: OLS on the latent covariates, 1: naive OLS on replicate means.
  try {
    out.theta[0] = fit_true(d.y(), sample.x_true, d.z()).stacked();
  } catch (const Error& e) {
    out.error[0] = e.what();
  }
  try {
    const MatrixXd v = regressors(average_replicates(d), d.z());
    out.theta[1] = fit_ols(d.y(), v);
    out.se[1] = ols_standard_errors(d.y(), v, out.theta[1]);
  } catch (const Error& e) {
    out.error[1] = e.what();
  }

  // 2: moment corrected, 3..: GMM per scheme.
  try {
    GmmOptions gopt;
    gopt.bootstrap_b = opt.bootstrap_b;
    gopt.compute_se = opt.compute_se;
    gopt.seed = splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(rep) + 0x51ED270B27ULL));
    const EstimationInputs in = prepare_inputs(d, gopt.phase);
    out.capped = in.ecf.capped;
    const McFit mc = fit_mc(d, in.avg, in.cov);
    out.theta[2] = mc.theta.stacked();
    if (!opt.schemes.empty()) {
      try {
        const std::vector<BootstrapOmega> omegas =
            bootstrap_omega(d, in, out.theta[2], opt.bootstrap_b, gopt.seed, opt.schemes,
                            gopt.phase, gopt.ql_gamma, 1, opt.center_bootstrap);
        for (std::size_t s = 0; s < opt.schemes.size(); ++s) {
          const std::size_t e = 3 + s;
          try {
            const WeightVector q = compute_weights(opt.schemes[s], in.cov, in.avg);
            if (q.fell_back) out.ql_fallback = true;
            if (q.clamp_warning) out.ql_clamp_warning = true;
            const GmmFit fit = fit_gmm_given_omega(in, out.theta[2], q, omegas[s].omega, gopt);
            if (!fit.converged) ++out.nonconverged;
            out.theta[e] = fit.theta.stacked();
            if (fit.se.size() > 0) out.se[e] = fit.se;
          } catch (const Error& err) {
            out.error[e] = err.what();
          }
        }
      } catch (const Error& err) {
        record_error(3, n_est, err.what());
      }
    }
  } catch (const Error& e) {
    record_error(2, n_est, e.what());
  }
  return out;
}

}  // namespace

StudyResult run_study(const SimConfig& cfg, const StudyOptions& opt) {
  cfg.validate();
  StudyResult res;
  res.cfg = cfg;
  res.opt = opt;
  std::vector<std::string> names{"true", "naive", "mc"};
  for (const auto s : opt.schemes) names.push_back(estimator_name(s));
  const std::size_t n_est = names.size();
  const Index k = cfg.p() + cfg.q() + 1;

  std::vector<RepOutcome> reps(static_cast<std::size_t>(cfg.m_reps));
  parallel_for(reps.size(), opt.workers, [&](std::size_t m) {
    reps[m] = run_replication(cfg, opt, static_cast<int>(m), n_est);
  });

  for (std::size_t e = 0; e < n_est; ++e) {
    EstimatorRuns run;
    run.name = names[e];
    run.estimates = MatrixXd::Constant(cfg.m_reps, k, kNaN);
    run.se = MatrixXd::Constant(cfg.m_reps, k, kNaN);
    for (std::size_t m = 0; m < reps.size(); ++m) {
      const auto row = static_cast<Index>(m);
      if (reps[m].theta[e].size() == k) {
        run.estimates.row(row) = reps[m].theta[e].transpose();
        if (reps[m].se[e].size() == k) run.se.row(row) = reps[m].se[e].transpose();
      } else {
        ++run.failures;
        run.failure_messages.push_back("rep " + std::to_string(m) + ": " + reps[m].error[e]);
      }
    }
    const MatrixXd ok = run.successful_estimates();
    if (ok.rows() >= 20) run.robust = robust_mse(ok, cfg.theta0());
    if (ok.rows() >= 2) run.se_summary = mc_se_summary(ok, run.se);
    res.runs.push_back(std::move(run));
  }
  for (const auto& r : reps) {
    res.capped_t_star += r.capped ? 1 : 0;
    res.ql_fallbacks += r.ql_fallback ? 1 : 0;
    res.ql_clamp_warnings += r.ql_clamp_warning ? 1 : 0;
    res.nonconverged += r.nonconverged;
  }
  return res;
}

}  // namespace eivgmm

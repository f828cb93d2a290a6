#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eivgmm/metrics.hpp"
#include "eivgmm/simgen.hpp"
#include "eivgmm/weights.hpp"

namespace eivgmm {

struct StudyOptions {
  std::vector<WeightScheme> schemes{WeightScheme::equal, WeightScheme::minimax,
                                    WeightScheme::quasi_likelihood};
  int bootstrap_b = 100;
  bool compute_se = true;
  bool center_bootstrap = true;
  int workers = 1;  // replications in flight
};

/// Estimates of one estimator across the Monte Carlo replications. Rows of
/// failed replications hold NaN.
struct EstimatorRuns {
  std::string name;  // "true", "naive", "mc", "gmm_equal", "gmm_mm", "gmm_ql"
  MatrixXd estimates;
  MatrixXd se;  // NaN where no SE is reported
  int failures = 0;
  std::vector<std::string> failure_messages;  // "rep <m>: <message>"
  std::optional<RobustMse> robust;            // M_ok >= 20 only
  std::optional<SeSummary> se_summary;        // M_ok >= 2 only

  /// Rows without NaN.
  MatrixXd successful_estimates() const;
};

struct StudyResult {
  SimConfig cfg;
  StudyOptions opt;
  std::vector<EstimatorRuns> runs;
  int capped_t_star = 0;        // replications whose t* scan hit the cap
  int ql_fallbacks = 0;         // replications where QL weights fell back to equal
  int ql_clamp_warnings = 0;    // replications with a QL clamp above 1e-3
  int nonconverged = 0;         // GMM fits that hit the iteration limit

  const EstimatorRuns& get(const std::string& name) const;
  /// Largest failure fraction over estimators.
  double failure_rate() const;
};

/// Runs cfg.m_reps replications of generate -> fit every estimator ->
/// collect, then summarizes each estimator with the robust MSE metric and
/// the Monte Carlo vs average SE comparison. Replications are independent
/// streams, so the result does not depend on opt.workers.
StudyResult run_study(const SimConfig& cfg, const StudyOptions& opt);

std::string estimator_name(WeightScheme scheme);

}  // namespace eivgmm

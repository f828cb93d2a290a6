#pragma once

#include <string>
#include <vector>

#include "eivgmm/study.hpp"

namespace eivgmm {

/// One pinned comparison inside a reproduction criterion.
struct Check {
  std::string name;
  double value = 0.0;
  double lo = 0.0;  // pass iff lo <= value <= hi
  double hi = 0.0;
  bool passed = false;
};

struct CriterionReport {
  int id = 0;
  std::string key;  // "naive", "heavy", "contam", "se"
  std::string title;
  std::vector<Check> checks;
  StudyResult study;
  bool passed = false;
};

struct ReproduceOptions {
  int m_reps = 100;
  int bootstrap_b = 100;
  std::uint64_t seed = 1;
  int workers = 1;
  std::vector<std::string> only;  // empty: all criteria
};

/// Keys accepted by ReproduceOptions::only, in run order.
const std::vector<std::string>& criterion_keys();

/// Runs the simulation-based reproduction grid:
///   naive   Setting I, rho 0.5, normal, n 1000: naive metric >= 10x MC and every GMM
///   heavy   Setting I, rho 0, t2.5, n 1000: GMM-MM <= 0.75 MC, both within 3x of 0.011 / 0.021
///   contam  simple model, contaminated normal, n 1000: GMM-QL <= 0.2 MC
///   se      Setting I, rho 0.5, normal, n 500, minimax: Avg-SE(beta1) within 30% of
///           MC-SE(beta1), both in [0.02, 0.045]
/// Throws Error{usage} for unknown keys in `only`.
std::vector<CriterionReport> run_reproduction(const ReproduceOptions& opt);

/// Builds the checks of one criterion from a finished study (exposed so the
/// pinned thresholds can be exercised on synthetic studies).
CriterionReport evaluate_criterion(const std::string& key, StudyResult study);

/// The study configuration behind each criterion key.
SimConfig criterion_config(const std::string& key, const ReproduceOptions& opt);
StudyOptions criterion_study_options(const std::string& key, const ReproduceOptions& opt);

}  // namespace eivgmm

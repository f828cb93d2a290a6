#include "eivgmm/reproduce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eivgmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Published reference values for the heavy-tail comparison and the SE band.
constexpr double kHeavyMc = 0.021;
constexpr double kHeavyGmmMm = 0.011;
constexpr double kMagnitudeFactor = 3.0;
constexpr double kSeLo = 0.02;
constexpr double kSeHi = 0.045;

Check make_check(std::string name, double value, double lo, double hi) {
  Check c{std::move(name), value, lo, hi, false};
  c.passed = std::isfinite(value) && value >= lo && value <= hi;
  return c;
}

double det_of(const StudyResult& s, const std::string& name) {
  const EstimatorRuns& r = s.get(name);
  return r.robust ? r.robust->det_metric : kNaN;
}

}  // namespace

const std::vector<std::string>& criterion_keys() {
  static const std::vector<std::string> keys{"naive", "heavy", "contam", "se"};
  return keys;
}

SimConfig criterion_config(const std::string& key, const ReproduceOptions& opt) {
  SimConfig cfg;
  if (key == "naive") {
    cfg = SimConfig::defaults(Setting::I);
    cfg.error_law = ErrorLaw::normal;
    cfg.rho = 0.5;
    cfg.n = 1000;
  } else if (key == "heavy") {
    cfg = SimConfig::defaults(Setting::I);
    cfg.error_law = ErrorLaw::t2_5;
    cfg.rho = 0.0;
    cfg.n = 1000;
  } else if (key == "contam") {
    cfg = SimConfig::defaults(Setting::simple);
    cfg.error_law = ErrorLaw::contaminated_normal;
    cfg.n = 1000;
  } else if (key == "se") {
    cfg = SimConfig::defaults(Setting::I);
    cfg.error_law = ErrorLaw::normal;
    cfg.rho = 0.5;
    cfg.n = 500;
  } else {
    throw Error(ErrorKind::usage, "unknown criterion '" + key + "' (naive, heavy, contam, se)");
  }
  cfg.n_rep = 2;
  cfg.m_reps = opt.m_reps;
  cfg.seed = opt.seed;
  return cfg;
}

StudyOptions criterion_study_options(const std::string& key, const ReproduceOptions& opt) {
  StudyOptions so;
  so.bootstrap_b = opt.bootstrap_b;
  so.workers = opt.workers;
  so.compute_se = key == "se";
  if (key == "heavy" || key == "se") {
    so.schemes = {WeightScheme::minimax};
  } else if (key == "contam") {
    so.schemes = {WeightScheme::quasi_likelihood};
  } else if (key != "naive") {
    throw Error(ErrorKind::usage, "unknown criterion '" + key + "'");
  }
  return so;
}

CriterionReport evaluate_criterion(const std::string& key, StudyResult study) {
  CriterionReport rep;
  rep.key = key;
  const StudyResult& s = study;
  if (key == "naive") {
    rep.id = 1;
    rep.title = "naive OLS metric >= 10x the corrected estimators (Setting I, rho 0.5, normal)";
    const double naive = det_of(s, "naive");
    for (const std::string name : {"mc", "gmm_equal", "gmm_mm", "gmm_ql"}) {
      rep.checks.push_back(make_check("naive/" + name, naive / det_of(s, name), 10.0, kInf));
    }
  } else if (key == "heavy") {
    rep.id = 2;
    rep.title = "GMM-MM beats MC under t2.5 errors (Setting I, rho 0)";
    const double mc = det_of(s, "mc");
    const double mm = det_of(s, "gmm_mm");
    rep.checks.push_back(make_check("gmm_mm/mc", mm / mc, 0.0, 0.75));
    rep.checks.push_back(make_check("mc magnitude", mc, kHeavyMc / kMagnitudeFactor,
                                    kHeavyMc * kMagnitudeFactor));
    rep.checks.push_back(make_check("gmm_mm magnitude", mm, kHeavyGmmMm / kMagnitudeFactor,
                                    kHeavyGmmMm * kMagnitudeFactor));
  } else if (key == "contam") {
    rep.id = 3;
    rep.title = "GMM-QL far below MC under contaminated normal errors (simple model)";
    rep.checks.push_back(make_check("gmm_ql/mc", det_of(s, "gmm_ql") / det_of(s, "mc"), 0.0, 0.2));
  } else if (key == "se") {
    rep.id = 4;
    rep.title = "bootstrap plug-in SE calibration for beta1 (Setting I, rho 0.5, normal, n 500)";
    const EstimatorRuns& r = s.get("gmm_mm");
    const double mc_se = r.se_summary ? r.se_summary->mc_se(0) : kNaN;
    const double avg_se = r.se_summary ? r.se_summary->avg_se(0) : kNaN;
    rep.checks.push_back(make_check("avg_se/mc_se", avg_se / mc_se, 0.7, 1.3));
    rep.checks.push_back(make_check("mc_se range", mc_se, kSeLo, kSeHi));
    rep.checks.push_back(make_check("avg_se range", avg_se, kSeLo, kSeHi));
  } else {
    throw Error(ErrorKind::usage, "unknown criterion '" + key + "'");
  }
  rep.passed = std::all_of(rep.checks.begin(), rep.checks.end(), [](const Check& c) { return c.passed; });
  rep.study = std::move(study);
  return rep;
}

std::vector<CriterionReport> run_reproduction(const ReproduceOptions& opt) {
  for (const auto& k : opt.only) {
    if (std::find(criterion_keys().begin(), criterion_keys().end(), k) == criterion_keys().end()) {
      throw Error(ErrorKind::usage, "unknown criterion '" + k + "' (naive, heavy, contam, se)");
    }
  }
  std::vector<CriterionReport> out;
  for (const auto& key : criterion_keys()) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), key) == opt.only.end()) {
      continue;
    }
    StudyResult study = run_study(criterion_config(key, opt), criterion_study_options(key, opt));
    out.push_back(evaluate_criterion(key, std::move(study)));
  }
  return out;
}

}  // namespace eivgmm

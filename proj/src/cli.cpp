#include "eivgmm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "eivgmm/data.hpp"
#include "eivgmm/gmm.hpp"
#include "eivgmm/moment_correction.hpp"
#include "eivgmm/parallel.hpp"
#include "eivgmm/reproduce.hpp"
#include "eivgmm/study.hpp"
#include "eivgmm/version.hpp"

namespace eivgmm::cli {

using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Shared helpers

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

json vec_json(const VectorXd& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) {
    arr.push_back(std::isfinite(v(i)) ? json(v(i)) : json(nullptr));
  }
  return arr;
}

json mat_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

json provenance(std::uint64_t seed) {
  return json{{"tool", "eivgmm"}, {"version", version()}, {"git_hash", git_hash()}, {"seed", seed}};
}

int exit_code_for(ErrorKind kind) { return kind == ErrorKind::usage ? kExitUsage : kExitFailure; }

void report_error(std::ostream& err, ErrorKind kind, const std::string& message) {
  err << json{{"error", {{"kind", to_string(kind)}, {"message", message}}}}.dump() << '\n';
}

// Writes JSON to `path` ("-" means the text stream).
void emit_json(const json& doc, const std::string& path, std::ostream& out) {
  if (path == "-") {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::validation, "cannot write JSON report to '" + path + "'");
  f << doc.dump(2) << '\n';
}

std::string fmt(double v, int prec = 4) {
  if (!std::isfinite(v)) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

std::vector<std::string> term_names(Index p, const std::string& prefix,
                                    const std::vector<std::string>& z) {
  std::vector<std::string> names;
  for (Index k = 1; k <= p; ++k) names.push_back(prefix + std::to_string(k));
  names.emplace_back("intercept");
  for (const auto& name : z) names.push_back(name);
  return names;
}

std::vector<WeightScheme> parse_schemes(const std::string& list) {
  std::vector<WeightScheme> schemes;
  for (const auto& item : split_list(list)) {
    if (item == "none") continue;
    const WeightScheme s = parse_weight_scheme(item);
    if (std::find(schemes.begin(), schemes.end(), s) == schemes.end()) schemes.push_back(s);
  }
  return schemes;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string data;
  std::string y;
  std::string z;
  std::string w_prefix = "w";
  std::string estimators = "naive,mc,gmm";
  std::string weights = "mm";
  int bootstrap = 100;
  std::uint64_t seed = 1;
  std::string json_path;
  int workers = 0;
  bool timing = false;
};

struct EstimatorRow {
  std::string name;
  VectorXd theta;
  VectorXd se;  // empty: not available
  json extra = json::object();
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::string> est = split_list(a.estimators);
  bool want_naive = false, want_mc = false, want_gmm = false;
  for (const auto& e : est) {
    if (e == "naive") want_naive = true;
    else if (e == "mc") want_mc = true;
    else if (e == "gmm") want_gmm = true;
    else throw Error(ErrorKind::usage, "unknown estimator '" + e + "' (naive, mc, gmm)");
  }
  const std::vector<WeightScheme> schemes = parse_schemes(a.weights);
  if (want_gmm && a.bootstrap < 1) {
    throw Error(ErrorKind::validation,
                "GMM needs the bootstrap covariance of its estimating equations: --bootstrap must be >= 1");
  }
  if (want_gmm && schemes.empty()) throw Error(ErrorKind::usage, "--weights lists no scheme");

  CsvSchema schema;
  schema.y = a.y;
  schema.z = split_list(a.z);
  schema.w_prefix = a.w_prefix;
  const Dataset d = load_csv(std::filesystem::path(a.data), schema);
  const std::vector<std::string> terms = term_names(d.p(), a.w_prefix, schema.z);

  std::vector<EstimatorRow> rows;
  json diagnostics = json::object();
  if (want_naive) {
    const MatrixXd v = regressors(average_replicates(d), d.z());
    EstimatorRow r{"naive", fit_ols(d.y(), v), {}, json::object()};
    r.se = ols_standard_errors(d.y(), v, r.theta);
    rows.push_back(std::move(r));
  }
  if (want_mc || want_gmm) {
    GmmOptions gopt;
    gopt.bootstrap_b = a.bootstrap;
    gopt.seed = a.seed;
    gopt.workers = a.workers > 0 ? a.workers : default_workers();
    const EstimationInputs in = prepare_inputs(d, gopt.phase);
    diagnostics["t_star"] = {{"value", in.ecf.t_star}, {"capped", in.ecf.capped}};
    const McFit mc = fit_mc(d, in.avg, in.cov);
    if (want_mc) {
      rows.push_back({"mc", mc.theta.stacked(), {}, json{{"sigma_eps_sq", mc.sigma_eps_sq}}});
    }
    if (want_gmm) {
      const std::vector<BootstrapOmega> omegas =
          bootstrap_omega(d, in, mc.theta.stacked(), gopt.bootstrap_b, gopt.seed, schemes,
                          gopt.phase, gopt.ql_gamma, gopt.workers, gopt.center_bootstrap);
      for (std::size_t s = 0; s < schemes.size(); ++s) {
        const WeightVector q = compute_weights(schemes[s], in.cov, in.avg, gopt.ql_gamma);
        const GmmFit fit = fit_gmm_given_omega(in, mc.theta.stacked(), q, omegas[s].omega, gopt);
        EstimatorRow r{estimator_name(schemes[s]), fit.theta.stacked(), fit.se, json::object()};
        r.extra["q_value"] = fit.q_value;
        r.extra["q_start"] = fit.q_start;
        r.extra["converged"] = fit.converged;
        r.extra["n_iter"] = fit.n_iter;
        r.extra["simplex_fallback"] = fit.used_simplex;
        r.extra["bootstrap"] = {{"b_used", omegas[s].b_used}, {"b_skipped", omegas[s].b_skipped}};
        r.extra["weights"] = {{"scheme", to_string(q.scheme)},
                              {"max_q_times_n", q.max_ratio()},
                              {"fell_back", q.fell_back},
                              {"n_clamped", q.n_clamped},
                              {"max_clamp", q.max_clamp},
                              {"clamp_warning", q.clamp_warning}};
        if (!fit.se_error.empty()) r.extra["se_error"] = fit.se_error;
        rows.push_back(std::move(r));
      }
    }
  }

  // Aligned text table: one row per coefficient, "estimate (se)" per estimator.
  out << "n = " << d.n() << ", p = " << d.p() << ", q = " << d.q() << '\n';
  out << std::left << std::setw(12) << "term";
  for (const auto& r : rows) out << std::right << std::setw(22) << r.name;
  out << '\n';
  for (std::size_t t = 0; t < terms.size(); ++t) {
    out << std::left << std::setw(12) << terms[t];
    for (const auto& r : rows) {
      const auto i = static_cast<Index>(t);
      std::string cell = fmt(r.theta(i));
      if (r.se.size() > 0) cell += " (" + fmt(r.se(i)) + ")";
      out << std::right << std::setw(22) << cell;
    }
    out << '\n';
  }

  if (!a.json_path.empty()) {
    json doc;
    doc["command"] = "fit";
    doc["provenance"] = provenance(a.seed);
    doc["config"] = {{"data", a.data},         {"y", a.y},
                     {"z", schema.z},          {"w_prefix", a.w_prefix},
                     {"estimators", est},      {"weights", split_list(a.weights)},
                     {"bootstrap", a.bootstrap}, {"seed", a.seed}};
    doc["data"] = {{"n", d.n()}, {"p", d.p()}, {"q", d.q()}};
    doc["diagnostics"] = diagnostics;
    json table = json::array();
    for (std::size_t t = 0; t < terms.size(); ++t) {
      json row{{"term", terms[t]}};
      for (const auto& r : rows) {
        const auto i = static_cast<Index>(t);
        row[r.name] = {{"estimate", r.theta(i)},
                       {"se", r.se.size() > 0 && std::isfinite(r.se(i)) ? json(r.se(i)) : json(nullptr)}};
      }
      table.push_back(row);
    }
    doc["coefficients"] = table;
    json details = json::object();
    for (const auto& r : rows) details[r.name] = r.extra;
    doc["estimators"] = details;
    if (a.timing) {
      doc["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    emit_json(doc, a.json_path, out);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string setting;
  std::string error = "normal";
  double rho = 0.0;
  Index n = 1000;
  int nrep = 2;
  int m = 100;
  std::uint64_t seed = 1;
  int bootstrap = 100;
  std::string weights = "equal,mm,ql";
  bool no_se = false;
  int workers = 0;
  std::string out_dir;
  int dump = 0;
  std::string json_path;
  bool timing = false;
};

json study_json(const StudyResult& s) {
  json ests = json::array();
  for (const auto& r : s.runs) {
    json e{{"name", r.name}, {"failures", r.failures}};
    if (r.robust) {
      e["det_metric"] = r.robust->det_metric;
      e["kept_rows"] = r.robust->kept_rows;
      e["scatter_fallback"] = r.robust->scatter_fallback;
      e["mse_rob"] = mat_json(r.robust->mse_rob);
    } else {
      e["det_metric"] = nullptr;
    }
    if (r.se_summary) {
      e["mc_se"] = vec_json(r.se_summary->mc_se);
      e["avg_se"] = vec_json(r.se_summary->avg_se);
    }
    if (!r.failure_messages.empty()) e["failure_messages"] = r.failure_messages;
    if (s.cfg.m_reps < 20) e["estimates"] = mat_json(r.estimates);
    ests.push_back(e);
  }
  return json{{"estimators", ests},
              {"diagnostics",
               {{"capped_t_star", s.capped_t_star},
                {"ql_fallbacks", s.ql_fallbacks},
                {"ql_clamp_warnings", s.ql_clamp_warnings},
                {"gmm_nonconverged", s.nonconverged}}}};
}

json sim_config_json(const SimConfig& c, const StudyOptions& o) {
  std::vector<std::string> w;
  for (const auto s : o.schemes) w.push_back(to_string(s));
  return json{{"setting", to_string(c.setting)},  {"error", to_string(c.error_law)},
              {"rho", c.rho},                       {"n", c.n},
              {"nrep", c.n_rep},                    {"M", c.m_reps},
              {"seed", c.seed},                     {"bootstrap", o.bootstrap_b},
              {"weights", w},                       {"standard_errors", o.compute_se},
              {"beta0", vec_json(c.beta0)},         {"gamma0", vec_json(c.gamma0)},
              {"sigma_eps_sq", c.sigma_eps_sq},     {"copula_corr", c.copula_corr}};
}

void print_study(const StudyResult& s, std::ostream& out) {
  out << std::left << std::setw(12) << "estimator" << std::right << std::setw(16)
      << "det(1000 MSE)" << std::setw(10) << "failures" << '\n';
  for (const auto& r : s.runs) {
    out << std::left << std::setw(12) << r.name << std::right << std::setw(16)
        << (r.robust ? fmt(r.robust->det_metric, 4) : std::string("skipped")) << std::setw(10)
        << r.failures << '\n';
  }
  bool header = false;
  for (const auto& r : s.runs) {
    if (!r.se_summary || !r.se_summary->avg_se.allFinite()) continue;
    if (!header) {
      out << "\nMC-SE / Avg-SE per coefficient\n";
      header = true;
    }
    out << std::left << std::setw(12) << r.name;
    for (Index i = 0; i < r.se_summary->mc_se.size(); ++i) {
      out << "  " << fmt(r.se_summary->mc_se(i)) << "/" << fmt(r.se_summary->avg_se(i));
    }
    out << '\n';
  }
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  SimConfig cfg = SimConfig::defaults(parse_setting(a.setting));
  cfg.error_law = parse_error_law(a.error);
  cfg.rho = a.rho;
  cfg.n = a.n;
  cfg.n_rep = a.nrep;
  cfg.m_reps = a.m;
  cfg.seed = a.seed;
  StudyOptions opt;
  opt.schemes = parse_schemes(a.weights);
  opt.bootstrap_b = a.bootstrap;
  opt.compute_se = !a.no_se;
  opt.workers = a.workers > 0 ? a.workers : default_workers();
  try {
    cfg.validate();
    if (!opt.schemes.empty() && opt.bootstrap_b < 1) {
      throw Error(ErrorKind::validation, "GMM needs --bootstrap >= 1");
    }
  } catch (const Error& e) {
    // Every field here comes from a flag, so an invalid design is a usage error.
    throw Error(ErrorKind::usage, e.what());
  }

  const StudyResult res = run_study(cfg, opt);
  out << "setting " << to_string(cfg.setting) << ", " << to_string(cfg.error_law)
      << " errors, rho " << cfg.rho << ", n " << cfg.n << ", nrep " << cfg.n_rep << ", M "
      << cfg.m_reps << ", seed " << cfg.seed << '\n';
  if (cfg.m_reps < 20) out << "note: robust MSE skipped (needs M >= 20); raw estimates reported\n";
  print_study(res, out);

  json doc;
  doc["command"] = "simulate";
  doc["provenance"] = provenance(cfg.seed);
  doc["config"] = sim_config_json(cfg, opt);
  doc["results"] = study_json(res);
  if (cfg.m_reps < 20) doc["notice"] = "robust_mse skipped: needs M >= 20";
  if (a.timing) {
    doc["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  if (!a.out_dir.empty()) {
    const std::filesystem::path dir(a.out_dir);
    std::filesystem::create_directories(dir);
    std::ofstream summary(dir / "results.csv");
    summary << "estimator,det_metric,kept_rows,failures\n";
    for (const auto& r : res.runs) {
      summary << r.name << ',' << (r.robust ? fmt(r.robust->det_metric, 10) : std::string()) << ','
              << (r.robust ? std::to_string(r.robust->kept_rows) : std::string()) << ','
              << r.failures << '\n';
    }
    std::ofstream est(dir / "estimates.csv");
    est << "estimator,rep";
    const Index k = cfg.p() + cfg.q() + 1;
    for (Index i = 0; i < k; ++i) est << ",theta" << i + 1;
    for (Index i = 0; i < k; ++i) est << ",se" << i + 1;
    est << '\n' << std::setprecision(17);
    for (const auto& r : res.runs) {
      for (Index m = 0; m < r.estimates.rows(); ++m) {
        est << r.name << ',' << m;
        for (Index i = 0; i < k; ++i) est << ',' << r.estimates(m, i);
        for (Index i = 0; i < k; ++i) est << ',' << r.se(m, i);
        est << '\n';
      }
    }
    CsvSchema schema;
    schema.y = "y";
    for (Index i = 1; i <= cfg.q(); ++i) schema.z.push_back("z" + std::to_string(i));
    for (int m = 0; m < std::min(a.dump, cfg.m_reps); ++m) {
      write_csv(dir / ("dataset_rep" + std::to_string(m) + ".csv"), gen_dataset(cfg, m).data, schema);
    }
    std::ofstream(dir / "report.json") << doc.dump(2) << '\n';
  }
  if (!a.json_path.empty()) emit_json(doc, a.json_path, out);

  if (res.failure_rate() > 0.05) {
    report_error(err, ErrorKind::estimation,
                 "more than 5% of replications failed for at least one estimator");
    return kExitFailure;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// reproduce

struct ReproduceArgs {
  int m = 100;
  int bootstrap = 100;
  std::uint64_t seed = 1;
  int workers = 0;
  std::string only;
  std::string json_path;
  bool timing = false;
};

int cmd_reproduce(const ReproduceArgs& a, std::ostream& out) {
  ReproduceOptions opt;
  opt.m_reps = a.m;
  opt.bootstrap_b = a.bootstrap;
  opt.seed = a.seed;
  opt.workers = a.workers > 0 ? a.workers : default_workers();
  opt.only = split_list(a.only);
  if (opt.m_reps < 20) throw Error(ErrorKind::usage, "reproduce needs --M >= 20");
  for (const auto& key : opt.only) {
    const auto& keys = criterion_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw Error(ErrorKind::usage, "unknown criterion '" + key + "' (naive, heavy, contam, se)");
    }
  }

  json crits = json::array();
  bool all_pass = true;
  for (const auto& key : criterion_keys()) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), key) == opt.only.end()) {
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    ReproduceOptions one = opt;
    one.only = {key};
    const CriterionReport rep = run_reproduction(one).front();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all_pass = all_pass && rep.passed;
    out << (rep.passed ? "PASS" : "FAIL") << "  criterion " << rep.id << " [" << rep.key << "] "
        << rep.title << '\n';
    json checks = json::array();
    for (const auto& c : rep.checks) {
      out << "      " << (c.passed ? "ok  " : "MISS") << ' ' << c.name << " = " << fmt(c.value, 4)
          << "  (required [" << fmt(c.lo, 4) << ", " << (std::isinf(c.hi) ? "inf" : fmt(c.hi, 4))
          << "])\n";
      checks.push_back({{"name", c.name},
                        {"value", std::isfinite(c.value) ? json(c.value) : json(nullptr)},
                        {"lo", c.lo},
                        {"hi", std::isinf(c.hi) ? json(nullptr) : json(c.hi)},
                        {"passed", c.passed}});
    }
    json entry{{"id", rep.id},
               {"key", rep.key},
               {"title", rep.title},
               {"passed", rep.passed},
               {"checks", checks},
               {"config", sim_config_json(rep.study.cfg, rep.study.opt)},
               {"results", study_json(rep.study)}};
    if (a.timing) entry["wall_seconds"] = secs;
    crits.push_back(entry);
  }
  if (!a.json_path.empty()) {
    json doc{{"command", "reproduce"},
             {"provenance", provenance(opt.seed)},
             {"config", {{"M", opt.m_reps}, {"bootstrap", opt.bootstrap_b}, {"seed", opt.seed},
                         {"only", opt.only}}},
             {"criteria", crits},
             {"all_passed", all_pass}};
    emit_json(doc, a.json_path, out);
  }
  return all_pass ? kExitOk : kExitAcceptance;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Errors-in-variables regression with heteroscedastic replicate measurement error"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "fit naive, moment-corrected and GMM estimators to a CSV");
  fit->add_option("--data", fa.data, "input CSV")->required();
  fit->add_option("--y", fa.y, "outcome column")->required();
  fit->add_option("--z", fa.z, "comma-separated error-free covariate columns");
  fit->add_option("--w-prefix", fa.w_prefix, "replicate column prefix (<prefix><k>_r<r>)");
  fit->add_option("--estimators", fa.estimators, "subset of naive,mc,gmm");
  fit->add_option("--weights", fa.weights, "GMM weight schemes: equal,mm,ql");
  fit->add_option("--bootstrap", fa.bootstrap, "bootstrap resamples B for the GMM covariance");
  fit->add_option("--seed", fa.seed, "random seed");
  fit->add_option("--json", fa.json_path, "write the JSON report here ('-' for stdout)");
  fit->add_option("--workers", fa.workers, "bootstrap threads (default: EIVGMM_WORKERS or cores)");
  fit->add_flag("--timing", fa.timing, "include wall time in the JSON report");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo study of one simulation configuration");
  sim->add_option("--setting", sa.setting, "simple, I, II or III")->required();
  sim->add_option("--error", sa.error, "normal, t2.5 or contnormal");
  sim->add_option("--rho", sa.rho, "measurement error correlation");
  sim->add_option("--n", sa.n, "sample size");
  sim->add_option("--nrep", sa.nrep, "replicates per observation");
  sim->add_option("--M", sa.m, "Monte Carlo replications");
  sim->add_option("--seed", sa.seed, "random seed");
  sim->add_option("--bootstrap", sa.bootstrap, "bootstrap resamples per GMM fit");
  sim->add_option("--weights", sa.weights, "GMM weight schemes: equal,mm,ql or none");
  sim->add_flag("--no-se", sa.no_se, "skip GMM standard errors");
  sim->add_option("--workers", sa.workers, "parallel replications (default: EIVGMM_WORKERS or cores)");
  sim->add_option("--out-dir", sa.out_dir, "write results.csv, estimates.csv and report.json here");
  sim->add_option("--dump-datasets", sa.dump, "also write the first N generated datasets as CSV");
  sim->add_option("--json", sa.json_path, "write the JSON report here ('-' for stdout)");
  sim->add_flag("--timing", sa.timing, "include wall time in the JSON report");

  ReproduceArgs ra;
  auto* rep = app.add_subcommand("reproduce", "run the reproduction criteria grid");
  rep->add_option("--M", ra.m, "Monte Carlo replications per criterion");
  rep->add_option("--bootstrap", ra.bootstrap, "bootstrap resamples per GMM fit");
  rep->add_option("--seed", ra.seed, "random seed");
  rep->add_option("--workers", ra.workers, "parallel replications");
  rep->add_option("--only", ra.only, "comma-separated subset of naive,heavy,contam,se");
  rep->add_option("--json", ra.json_path, "write the JSON report here ('-' for stdout)");
  rep->add_flag("--timing", ra.timing, "include wall time in the JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    report_error(err, ErrorKind::usage, e.what());
    err << (sub ? sub->help() : app.help());
    return kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(fa, out);
    if (sim->parsed()) return cmd_simulate(sa, out, err);
    if (rep->parsed()) return cmd_reproduce(ra, out);
  } catch (const Error& e) {
    report_error(err, e.kind(), e.what());
    // GMM without bootstrap resamples is a flag contract violation.
    if (e.kind() == ErrorKind::validation && fit->parsed() && fa.bootstrap < 1) return kExitUsage;
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    report_error(err, ErrorKind::estimation, e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace eivgmm::cli

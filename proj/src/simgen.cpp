#include "eivgmm/simgen.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace eivgmm {

std::string to_string(Setting s) {
  switch (s) {
    case Setting::simple: return "simple";
    case Setting::I: return "I";
    case Setting::II: return "II";
    case Setting::III: return "III";
  }
  return "?";
}

std::string to_string(ErrorLaw e) {
  switch (e) {
    case ErrorLaw::normal: return "normal";
    case ErrorLaw::t2_5: return "t2.5";
    case ErrorLaw::contaminated_normal: return "contnormal";
  }
  return "?";
}

Setting parse_setting(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "simple") return Setting::simple;
  if (s == "i" || s == "1") return Setting::I;
  if (s == "ii" || s == "2") return Setting::II;
  if (s == "iii" || s == "3") return Setting::III;
  throw Error(ErrorKind::usage, "unknown setting '" + name + "' (simple, I, II, III)");
}

ErrorLaw parse_error_law(const std::string& name) {
  if (name == "normal") return ErrorLaw::normal;
  if (name == "t2.5" || name == "t") return ErrorLaw::t2_5;
  if (name == "contnormal" || name == "contaminated") return ErrorLaw::contaminated_normal;
  throw Error(ErrorKind::usage, "unknown error law '" + name + "' (normal, t2.5, contnormal)");
}

SimConfig SimConfig::defaults(Setting setting) {
  SimConfig cfg;
  cfg.setting = setting;
  switch (setting) {
    case Setting::simple:
      cfg.beta0 = VectorXd::Constant(1, 1.0);
      cfg.gamma0 = VectorXd::Constant(1, 2.0);
      break;
    case Setting::I:
      cfg.beta0 = (VectorXd(2) << 1.0, 0.5).finished();
      cfg.gamma0 = VectorXd::Constant(1, 2.0);
      break;
    case Setting::II:
    case Setting::III:
      cfg.beta0 = (VectorXd(2) << 1.0, 0.5).finished();
      cfg.gamma0 = (VectorXd(3) << 2.0, 1.0, 0.5).finished();
      break;
  }
  return cfg;
}

VectorXd SimConfig::theta0() const {
  VectorXd t(beta0.size() + gamma0.size());
  t << beta0, gamma0;
  return t;
}

void SimConfig::validate() const {
  if (n < 4) throw Error(ErrorKind::validation, "simulation needs n >= 4");
  if (n_rep < 2) throw Error(ErrorKind::validation, "simulation needs n_rep >= 2");
  if (m_reps < 1) throw Error(ErrorKind::validation, "simulation needs M >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw Error(ErrorKind::validation, "rho must lie in [0, 1)");
  if (!(copula_corr > -1.0 && copula_corr < 1.0)) {
    throw Error(ErrorKind::validation, "copula correlation must lie in (-1, 1)");
  }
  if (!(sigma_eps_sq >= 0.0)) throw Error(ErrorKind::validation, "sigma_eps_sq must be >= 0");
  if (beta0.size() != p() || gamma0.size() != q() + 1) {
    throw Error(ErrorKind::validation, "true coefficients do not match the setting's dimensions");
  }
}

// ---------------------------------------------------------------------------
// Covariates

namespace {

MatrixXd equicorrelation(Index dim, double corr) {
  MatrixXd r = MatrixXd::Constant(dim, dim, corr);
  r.diagonal().setOnes();
  return r;
}

// Lower factor L with L L^T = a; a may be singular (rho-type matrices are PD
// for rho < 1, but Sigma estimates in tests can be PSD).
MatrixXd sqrt_factor(const MatrixXd& a) {
  const Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

MatrixXd standard_normal(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> norm;
  MatrixXd z(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index c = 0; c < cols; ++c) z(i, c) = norm(rng);
  }
  return z;
}

}  // namespace

MatrixXd gen_copula(Index n, double corr, const std::vector<bool>& half_normal, Rng& rng) {
  const auto dim = static_cast<Index>(half_normal.size());
  if (!(corr > -1.0 && corr < 1.0)) throw Error(ErrorKind::validation, "copula corr must be in (-1,1)");
  const MatrixXd l = sqrt_factor(equicorrelation(dim, corr));
  MatrixXd x = standard_normal(n, dim, rng) * l.transpose();
  const double scale = half_normal_scale();
  for (Index c = 0; c < dim; ++c) {
    if (!half_normal[static_cast<std::size_t>(c)]) continue;
    for (Index i = 0; i < n; ++i) {
      // Half-normal quantile at u = Phi(z): sqrt(2) erfc^{-1}(1 - u), with
      // 1 - u = erfc(z / sqrt 2) / 2 evaluated without cancellation.
      const double tail = 0.5 * std::erfc(x(i, c) / std::numbers::sqrt2);
      x(i, c) = scale * std::numbers::sqrt2 * boost::math::erfc_inv(tail);
    }
  }
  return x;
}

MatrixXd gen_half_normal_copula(Index n, Index dim, double corr, Rng& rng) {
  return gen_copula(n, corr, std::vector<bool>(static_cast<std::size_t>(dim), true), rng);
}

MatrixXd gen_half_normal_copula(Index n, Index dim, double corr, std::uint64_t seed) {
  Rng rng = make_stream({seed, tag(StreamTag::covariates)});
  return gen_half_normal_copula(n, dim, corr, rng);
}

// ---------------------------------------------------------------------------
// Measurement error

std::vector<MatrixXd> gen_error_matrices(Index n, int n_rep, Index p, double rho, Rng& rng) {
  if (p < 1) throw Error(ErrorKind::validation, "error covariances need p >= 1");
  const MatrixXd r = equicorrelation(p, rho);
  const double root_n = std::sqrt(static_cast<double>(n_rep));
  std::uniform_real_distribution<double> unif(std::sqrt(0.2), std::sqrt(1.5));
  std::vector<MatrixXd> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    VectorXd dj(p);
    for (Index c = 0; c < p; ++c) dj(c) = root_n * unif(rng);
    out.push_back(dj.asDiagonal() * r * dj.asDiagonal());
  }
  return out;
}

std::vector<MatrixXd> gen_error_matrices(Index n, int n_rep, Index p, double rho,
                                         std::uint64_t seed) {
  Rng rng = make_stream({seed, tag(StreamTag::error_cov)});
  return gen_error_matrices(n, n_rep, p, rho, rng);
}

MatrixXd draw_errors(ErrorLaw law, const MatrixXd& sigma, Index count, Rng& rng) {
  const Index p = sigma.rows();
  const MatrixXd l = sqrt_factor(sigma);
  MatrixXd out = standard_normal(count, p, rng) * l.transpose();
  switch (law) {
    case ErrorLaw::normal:
      break;
    case ErrorLaw::t2_5: {
      constexpr double nu = 2.5;
      std::chi_squared_distribution<double> chi(nu);
      const double base = std::sqrt((nu - 2.0) / nu);  // sqrt(0.2)
      for (Index i = 0; i < count; ++i) out.row(i) *= base / std::sqrt(chi(rng) / nu);
      break;
    }
    case ErrorLaw::contaminated_normal: {
      std::bernoulli_distribution heavy(0.1);
      const double base = 1.0 / std::sqrt(10.9);
      for (Index i = 0; i < count; ++i) out.row(i) *= heavy(rng) ? 10.0 * base : base;
      break;
    }
  }
  return out;
}

MatrixXd draw_errors(ErrorLaw law, const MatrixXd& sigma, Index count, std::uint64_t seed) {
  Rng rng = make_stream({seed, tag(StreamTag::meas_error)});
  return draw_errors(law, sigma, count, rng);
}

// ---------------------------------------------------------------------------
// Datasets

SimSample gen_dataset(const SimConfig& cfg, int rep_index) {
  cfg.validate();
  const auto key = [&](StreamTag t) {
    return make_stream({cfg.seed, static_cast<std::uint64_t>(cfg.setting),
                        static_cast<std::uint64_t>(rep_index), tag(t)});
  };
  const Index n = cfg.n;
  const Index p = cfg.p();
  const Index q = cfg.q();

  // Latent predictors.
  Rng cov_rng = key(StreamTag::covariates);
  MatrixXd x;
  MatrixXd z(n, q);
  if (cfg.setting == Setting::simple) {
    x = gen_half_normal_copula(n, 1, 0.0, cov_rng);
  } else {
    std::vector<bool> half(static_cast<std::size_t>(p + q), true);
    if (cfg.setting == Setting::III) {
      for (Index c = p; c < p + q; ++c) half[static_cast<std::size_t>(c)] = false;
    }
    const MatrixXd all = gen_copula(n, cfg.copula_corr, half, cov_rng);
    x = all.leftCols(p);
    z = all.rightCols(q);
  }

  // Error covariances.
  Rng sig_rng = key(StreamTag::error_cov);
  std::vector<MatrixXd> sigma;
  if (cfg.setting == Setting::simple) {
    std::uniform_real_distribution<double> unif(0.2, 1.5);
    sigma.reserve(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
      sigma.push_back(MatrixXd::Constant(1, 1, static_cast<double>(cfg.n_rep) * unif(sig_rng)));
    }
  } else {
    sigma = gen_error_matrices(n, cfg.n_rep, p, cfg.rho, sig_rng);
  }

  // Replicates.
  Rng u_rng = key(StreamTag::meas_error);
  std::vector<MatrixXd> reps;
  reps.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    MatrixXd w = draw_errors(cfg.error_law, sigma[static_cast<std::size_t>(j)], cfg.n_rep, u_rng);
    w.rowwise() += x.row(j);
    reps.push_back(std::move(w));
  }

  // Outcomes.
  Rng e_rng = key(StreamTag::outcome_error);
  const VectorXd eps =
      draw_errors(cfg.error_law, MatrixXd::Constant(1, 1, cfg.sigma_eps_sq), n, e_rng).col(0);
  VectorXd y = x * cfg.beta0 + eps;
  y.array() += cfg.gamma0(0);
  if (q > 0) y += z * cfg.gamma0.tail(q);

  return SimSample{Dataset(std::move(y), z, std::move(reps)), std::move(x), std::move(sigma)};
}

}  // namespace eivgmm

#pragma once

#include <random>
#include <vector>

#include "eivgmm/rng.hpp"
#include "eivgmm/types.hpp"

namespace eivgmm::fixture {

// Small heteroscedastic sample: y = 1 + beta^T x + eps, replicates
// W_jr = x_j + u_jr with per-observation error scales.
inline Dataset small_sample(Index n, Index p, Index q, std::uint64_t seed, int n_rep = 2,
                            double beta = 1.0) {
  Rng rng = make_stream({seed, 99});
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(0.3, 1.0);
  VectorXd y(n);
  MatrixXd z(n, q);
  std::vector<MatrixXd> reps;
  for (Index j = 0; j < n; ++j) {
    VectorXd x(p);
    for (Index k = 0; k < p; ++k) x(k) = nd(rng);
    double lin = 1.0 + beta * x.sum();
    for (Index c = 0; c < q; ++c) {
      z(j, c) = nd(rng);
      lin += 0.5 * z(j, c);
    }
    y(j) = lin + 0.5 * nd(rng);
    const double s = ud(rng);
    MatrixXd w(n_rep, p);
    for (int r = 0; r < n_rep; ++r) {
      for (Index k = 0; k < p; ++k) w(r, k) = x(k) + s * nd(rng);
    }
    reps.push_back(w);
  }
  return Dataset(y, z, reps);
}

}  // namespace eivgmm::fixture

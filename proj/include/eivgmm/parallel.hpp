#pragma once

#include <cstddef>
#include <functional>

namespace eivgmm {

/// Worker count from the EIVGMM_WORKERS environment variable, else the
/// hardware concurrency (at least 1).
int default_workers();

/// Runs body(i) for i in [0, count) on up to `workers` threads. Work is
/// handed out through an atomic counter; results must be written to
/// per-index slots so the outcome does not depend on scheduling. The first
/// exception thrown by any body is rethrown after all threads join.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

}  // namespace eivgmm

#include "eivgmm/version.hpp"

#ifndef EIVGMM_GIT_HASH
#define EIVGMM_GIT_HASH "unknown"
#endif

namespace eivgmm {

const char* version() noexcept { return "0.1.0"; }
const char* git_hash() noexcept { return EIVGMM_GIT_HASH; }

}  // namespace eivgmm

#pragma once

namespace eivgmm {

const char* version() noexcept;
/// Short commit hash recorded at configure time ("unknown" outside git).
const char* git_hash() noexcept;

}  // namespace eivgmm

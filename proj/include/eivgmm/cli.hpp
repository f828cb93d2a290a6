#pragma once

#include <iosfwd>

namespace eivgmm::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;     // data, estimation or simulation failure
inline constexpr int kExitUsage = 2;       // bad flags or flag combinations
inline constexpr int kExitAcceptance = 3;  // a reproduction criterion failed

/// Entry point behind the `eivgmm` tool: `fit`, `simulate`, `reproduce`.
/// Human-readable output goes to `out`; errors are written to `err` as a
/// one-line JSON object {"error": {"kind": ..., "message": ...}}.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eivgmm::cli

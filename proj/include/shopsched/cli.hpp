#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace shopsched {

// Process exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;       // bad flags, unknown preset, bad config
inline constexpr int kExitInfeasible = 3;  // artifact failed feasibility checks
inline constexpr int kExitDiverged = 4;    // numerical divergence during training

// Entry point used by both the `shopsched` binary and the in-process tests.
// `argv` excludes the program name. Writes human output to `out`, diagnostics
// to `err`.
int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err);

std::string cli_version();

}  // namespace shopsched

#pragma once

#include <ostream>

namespace clare::harness {

/// Exit codes of the command-line driver.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Parses flags, runs the selected experiment, writes the report and prints
/// the increment table to `out`. Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace clare::harness

#pragma once

#include <ostream>

namespace tvarch {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Parses the command line and runs one of the subcommands simulate, estimate, test, calibrate,
/// experiment. Reports go to `out`, single-line diagnostics to `err`. Returns the exit code:
/// 0 success, 1 usage or configuration error, 2 data or domain error, 3 numeric failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tvarch

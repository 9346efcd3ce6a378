#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace driftcast {

/// Exit codes returned by run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

/// Runs one `driftcast` invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace driftcast

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ranl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // data, config or check failure
inline constexpr int kExitUsage = 2;    // unknown subcommand or flag

// Runs one `ranl` subcommand. `args` excludes the program name. Failures are
// reported on `err` as a single line `error: <kind>: <message>`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ranl

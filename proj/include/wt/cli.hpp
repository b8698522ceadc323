#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wt {

// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

// Runs one subcommand. `args` excludes the program name. Reports go to `out`,
// diagnostics to `err`; the return value is the exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wt

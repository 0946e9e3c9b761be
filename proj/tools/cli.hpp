#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lsvd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Runs the lsvd command line. `args` excludes the program name. Reports go
// to `out`, the config echo and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lsvd::cli

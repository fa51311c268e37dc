#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dae::cli {

// Exit codes: 0 success, 1 usage or configuration error, 2 runtime or data error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Runs the `dae` command line; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dae::cli

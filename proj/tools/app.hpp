#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace newscnn::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `newscnn` executable: parses `args` (without the
// program name), runs one subcommand and returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace newscnn::app

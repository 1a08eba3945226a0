#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cvtail {

/// Process exit codes. 0, 2 and 3 are the verdict codes of `check`.
namespace exit_codes {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int not_met = 2;
inline constexpr int inconclusive = 3;
inline constexpr int config = 64;
inline constexpr int premise = 65;
inline constexpr int domain = 66;
inline constexpr int truncation = 67;
inline constexpr int infinite_mean = 68;
inline constexpr int negative_support = 69;
inline constexpr int unsupported_law = 70;
} // namespace exit_codes

/// Environment variable naming the default output directory.
inline constexpr char kOutDirEnv[] = "CVTAIL_OUT_DIR";

/// Entry point of the cvtail tool; args exclude the program name.
int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err);

} // namespace cvtail

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rrdps::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInvalid = 3;

// Parses `args` (without the program name), runs the requested command and
// writes its CSV to --out or, when absent, to `out`. Diagnostics go to `err`.
// Output files are written to a temporary and renamed into place, so a
// failing run never leaves a partial file.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rrdps::cli

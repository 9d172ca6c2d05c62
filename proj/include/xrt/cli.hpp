#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xrt {

/// Exit statuses of `dispatch`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // module errors
inline constexpr int kExitUsage = 2;    // unknown command, missing or bad flags
inline constexpr int kExitIo = 3;

/// Runs one command; `args[0]` is the command name. Errors are reported on
/// `err` and turned into a nonzero status.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xrt

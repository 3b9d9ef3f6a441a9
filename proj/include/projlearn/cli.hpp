#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace projlearn::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 1,
    kDataError = 2,
    kNumericalError = 3,
};

/// Entry point of the `projlearn` tool:
///   projlearn {prepare|train|evaluate|scan|render} [flags]
/// Every stage reads and updates <out>/manifest.json.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace projlearn::cli

#pragma once

#include <iosfwd>

namespace pamic::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kDataError = 2,
    kNumericalError = 3,
};

/// Runs one `pamicnet` subcommand. Normal output goes to `out`, diagnostics
/// and progress to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pamic::cli

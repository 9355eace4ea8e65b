#pragma once

#include <ostream>

namespace bmtf::cli {

/// Exit codes of every command.
enum ExitCode : int { ok = 0, runtime_failure = 1, usage_error = 2 };

/**
 * Runs the command line `argv` (argv[0] is the program name) and returns
 * its exit code. Normal output goes to `out`, errors and usage to `err`.
 */
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bmtf::cli

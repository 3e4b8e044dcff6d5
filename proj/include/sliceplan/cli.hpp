#pragma once

#include <ostream>

namespace sliceplan {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInconsistent = 1, kExitInputError = 2 };

/// Entry point of the `sliceplan` tool; writes to the given streams instead
/// of std::cout / std::cerr so the commands can be driven in-process.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sliceplan

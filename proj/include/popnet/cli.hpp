#pragma once

#include <ostream>

namespace popnet {

enum ExitCode { kExitOk = 0, kExitValidation = 2, kExitRuntime = 3 };

/// Entry point of the popnet command-line tool. Subcommands: synth, extract,
/// reduce, train, predict, eval, compare, report.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace popnet

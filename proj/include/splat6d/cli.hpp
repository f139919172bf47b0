#pragma once

#include <iosfwd>

namespace splat6d {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitIo = 2,
    kExitNumerical = 3,
};

/// The splat6d command line. Subcommands: phantom, init, render, finetune,
/// metrics, serve. Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace splat6d

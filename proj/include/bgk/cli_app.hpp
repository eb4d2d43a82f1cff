#pragma once

#include <ostream>

namespace bgk {

inline constexpr const char* kVersion = "1.0.0";

/// Exit codes of the command line front end.
enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_config = 2,
    exit_solver = 3,
    exit_io = 4,
};

/// Entry point of bgkmix. Errors are reported on `err` as one line "error[<category>]: <message>".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace bgk

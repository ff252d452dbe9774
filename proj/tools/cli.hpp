#pragma once

namespace amoc::cli {

// Parses argv and runs one subcommand. Returns the process exit code; errors
// are reported on stderr.
int run(int argc, char** argv);

}  // namespace amoc::cli

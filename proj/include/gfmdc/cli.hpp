#pragma once

#include <iosfwd>

namespace gfmdc {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitBadInput = 2,
  kExitSimulationFault = 3,
};

/// Entry point of the `gfmdc` tool. Honors GFMDC_OUT_DIR as the default
/// output directory.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gfmdc

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fluidprobe {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 1,
  kExitSimulation = 2,
  kExitCheck = 3,
};

/// Runs one command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace fluidprobe

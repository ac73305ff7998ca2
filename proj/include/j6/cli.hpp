#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace j6::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kUsage = 2,
  kNumericAbort = 3,
};

/// Entry point of the `j6` tool; args[0] is the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace j6::cli
